/** Message schema mirrored from the session service. */

export interface SessionMessage {
  v: number;
  kind: string;
  sessionId: string;
  seq: number;
  payload: Record<string, unknown>;
}

export interface DetectionPayload {
  token: number;
  class: string;
  color: string;
  bbox: [number, number, number, number];
  objectId?: string;
}

export interface ObservationPayload {
  frameId: number;
  room: string;
  heading: number;
  sceneDescriptor: string;
  detections: DetectionPayload[];
  agent?: AgentPose;
}

export interface AgentPose {
  room: string;
  position: [number, number];
  heading: number;
}

export interface ViewpointDoc {
  id: string;
  position: [number, number];
}

export interface RoomDoc {
  name: string;
  bounds: [number, number, number, number];
  viewpoints: ViewpointDoc[];
}

export interface MapObjectDoc {
  id: string;
  class: string;
  color: string;
  position: [number, number] | null;
  room: string | null;
}

export interface MapScene {
  rooms: RoomDoc[];
  objects: MapObjectDoc[];
  agent: AgentPose;
  inventory: string | null;
}

export interface ClarificationPayload {
  objectName: string;
  question: string;
  reason: string;
  candidates: DetectionPayload[];
}

export interface ClientMessage {
  kind: "createSession" | "instruction" | "clarificationAnswer" | "reset" | "loadMission";
  payload: Record<string, unknown>;
}
