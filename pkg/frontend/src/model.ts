/**
 * The console view model: a pure reducer over the server message stream.
 *
 * Every fact on screen originates in a message; replaying a captured stream
 * reproduces the final state exactly. A gap in the sequence numbers flips
 * `needsResync`, which the client answers by re-fetching the trajectory.
 */

import type {
  AgentPose,
  ClarificationPayload,
  MapScene,
  ObservationPayload,
  SessionMessage,
} from "./protocol.js";

export type ConnectionState = "idle" | "connecting" | "live" | "closed" | "error";

export interface DialogEntry {
  role: "commander" | "agent" | "system";
  text: string;
  seq: number;
}

export interface TimelineEntry {
  seq: number;
  summary: string;
  success: boolean;
}

export interface ViewState {
  connection: ConnectionState;
  sessionId: string | null;
  lastSeq: number;
  needsResync: boolean;
  mapScene: MapScene | null;
  agent: AgentPose | null;
  observation: ObservationPayload | null;
  dialog: DialogEntry[];
  pendingClarification: ClarificationPayload | null;
  highlightedTokens: number[];
  timeline: TimelineEntry[];
  lastStatus: { status: string; goalReached: boolean; robotActions: number } | null;
  lastRouting: string | null;
  inputLocked: boolean;
  missionInstructions: string[];
  errors: string[];
}

export function initialState(): ViewState {
  return {
    connection: "idle",
    sessionId: null,
    lastSeq: 0,
    needsResync: false,
    mapScene: null,
    agent: null,
    observation: null,
    dialog: [],
    pendingClarification: null,
    highlightedTokens: [],
    timeline: [],
    lastStatus: null,
    lastRouting: null,
    inputLocked: false,
    missionInstructions: [],
    errors: [],
  };
}

function describeCommand(command: Record<string, unknown>): string {
  const kind = String(command.kind ?? "?");
  if (command.target) return `${kind} ${command.target}`;
  if (command.ref && typeof command.ref === "object") {
    const ref = command.ref as { frame: number; visual: number };
    return `${kind} (frame ${ref.frame}, token ${ref.visual})`;
  }
  return kind;
}

/** Pure transition; unknown message kinds are ignored (logged as errors). */
export function reduce(state: ViewState, message: SessionMessage): ViewState {
  const next: ViewState = { ...state };
  if (message.seq > 0) {
    if (state.lastSeq > 0 && message.seq !== state.lastSeq + 1) {
      next.needsResync = true;
    }
    next.lastSeq = Math.max(state.lastSeq, message.seq);
  }
  const payload = message.payload ?? {};
  switch (message.kind) {
    case "sessionCreated": {
      next.sessionId = message.sessionId;
      next.connection = "live";
      if (payload.mapScene) next.mapScene = payload.mapScene as MapScene;
      if (next.mapScene) next.agent = next.mapScene.agent;
      const instructions = (payload.instructions as { text: string }[] | undefined) ?? [];
      next.missionInstructions = instructions.map((i) => i.text);
      break;
    }
    case "observation": {
      const obs = payload as unknown as ObservationPayload;
      next.observation = obs;
      if (obs.agent) next.agent = obs.agent;
      break;
    }
    case "crDecision": {
      next.lastRouting = String(payload.cr ?? "");
      next.dialog = [...state.dialog, { role: "agent", text: `routing: ${payload.cr}`, seq: message.seq }];
      break;
    }
    case "actionExecuted": {
      const command = (payload.command ?? {}) as Record<string, unknown>;
      const outcome = (payload.outcome ?? {}) as { success?: boolean };
      next.timeline = [
        ...state.timeline,
        { seq: message.seq, summary: describeCommand(command), success: outcome.success !== false },
      ];
      if (payload.agent) next.agent = payload.agent as AgentPose;
      break;
    }
    case "clarificationRequest": {
      const clarification = payload as unknown as ClarificationPayload;
      next.pendingClarification = clarification;
      next.highlightedTokens = clarification.candidates.map((c) => c.token);
      next.inputLocked = false;
      next.dialog = [...state.dialog, { role: "agent", text: clarification.question, seq: message.seq }];
      break;
    }
    case "missionStatus": {
      next.lastStatus = {
        status: String(payload.status ?? "?"),
        goalReached: Boolean(payload.goalReached),
        robotActions: Number(payload.robotActions ?? 0),
      };
      next.inputLocked = false;
      next.pendingClarification = null;
      next.highlightedTokens = [];
      next.dialog = [
        ...state.dialog,
        {
          role: "system",
          text: `instruction ${payload.status}; goal ${payload.goalReached ? "reached" : "not reached"}`,
          seq: message.seq,
        },
      ];
      break;
    }
    case "error": {
      next.errors = [...state.errors, `${payload.code}: ${payload.message}`];
      next.inputLocked = false;
      break;
    }
    default:
      next.errors = [...state.errors, `unknown message kind: ${message.kind}`];
  }
  return next;
}

export function replay(messages: SessionMessage[], start?: ViewState): ViewState {
  return messages.reduce(reduce, start ?? initialState());
}

/** Local echo when the commander submits text (not server-derived). */
export function commanderSpoke(state: ViewState, text: string): ViewState {
  return {
    ...state,
    dialog: [...state.dialog, { role: "commander", text, seq: state.lastSeq }],
    inputLocked: true,
  };
}
