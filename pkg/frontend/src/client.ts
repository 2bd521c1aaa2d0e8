/**
 * Session client: REST create, websocket channel, resync via trajectory.
 *
 * The WebSocket implementation is injected so the same client runs in the
 * browser (global WebSocket) and under node tests (the `ws` package).
 */

import type { SessionMessage } from "./protocol.js";

export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((event: { data: unknown }) => void) | null;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: ((err: unknown) => void) | null;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface ConnectOptions {
  serverUrl: string;
  layout?: Record<string, unknown>;
  layoutId?: string;
  missionId?: string;
  qaMode?: string;
  seed?: number;
  webSocketFactory?: WebSocketFactory;
  onMessage: (message: SessionMessage) => void;
  onStateChange?: (state: "connecting" | "live" | "closed" | "error") => void;
}

export interface SessionHandle {
  sessionId: string;
  sendInstruction(text: string): void;
  answerClarification(text: string): void;
  reset(): void;
  close(): void;
  resync(): Promise<number>;
}

function defaultFactory(url: string): WebSocketLike {
  return new (globalThis as { WebSocket: new (url: string) => WebSocketLike }).WebSocket(url);
}

export async function connect(options: ConnectOptions): Promise<SessionHandle> {
  const base = options.serverUrl.replace(/\/$/, "");
  options.onStateChange?.("connecting");
  const response = await fetch(`${base}/sessions`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({
      layout: options.layout,
      layoutId: options.layoutId,
      missionId: options.missionId,
      qaMode: options.qaMode ?? "interactive",
      seed: options.seed ?? 0,
    }),
  });
  if (!response.ok) {
    options.onStateChange?.("error");
    throw new Error(`createSession failed: ${response.status} ${await response.text()}`);
  }
  const body = (await response.json()) as { sessionId: string; messages: SessionMessage[] };
  for (const message of body.messages) {
    options.onMessage(message);
  }

  const wsUrl = `${base.replace(/^http/, "ws")}/sessions/${body.sessionId}/channel`;
  const factory = options.webSocketFactory ?? defaultFactory;
  const socket = factory(wsUrl);

  await new Promise<void>((resolve, reject) => {
    socket.onopen = () => resolve();
    socket.onerror = (err) => reject(err);
  });
  options.onStateChange?.("live");
  socket.onmessage = (event) => {
    try {
      options.onMessage(JSON.parse(String(event.data)) as SessionMessage);
    } catch (err) {
      console.warn("malformed server message ignored", err);
    }
  };
  socket.onclose = () => options.onStateChange?.("closed");
  socket.onerror = () => options.onStateChange?.("error");

  const send = (kind: string, payload: Record<string, unknown>) =>
    socket.send(JSON.stringify({ kind, payload }));

  return {
    sessionId: body.sessionId,
    sendInstruction: (text: string) => send("instruction", { text }),
    answerClarification: (text: string) => send("clarificationAnswer", { text }),
    reset: () => send("reset", {}),
    close: () => socket.close(),
    resync: async () => {
      const res = await fetch(`${base}/sessions/${body.sessionId}/trajectory`);
      const text = await res.text();
      return text.split("\n").filter(Boolean).length;
    },
  };
}
