/**
 * Live end-to-end check against the real session service:
 * instruction -> clarificationRequest -> answer -> success, within 10 s.
 *
 * Spawns `python3 -m chorebot.cli serve --agent oracle` and drives it through
 * the same client module the browser uses (WebSocket injected from `ws`).
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, type ChildProcess } from "node:child_process";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import WebSocket from "ws";

import { connect } from "../src/client.js";
import { initialState, reduce, type ViewState } from "../src/model.js";
import type { SessionMessage } from "../src/protocol.js";

const here = dirname(fileURLToPath(import.meta.url));
const layout = JSON.parse(readFileSync(join(here, "fixtures", "layout.json"), "utf-8"));

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;
let server: ChildProcess;

async function waitForServer(timeoutMs = 15000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${BASE}/sessions`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  server = spawn(
    "python3",
    ["-m", "chorebot.cli", "serve", "--agent", "oracle", "--port", String(PORT)],
    { cwd: join(here, "..", ".."), stdio: "ignore" },
  );
  await waitForServer();
}, 30000);

afterAll(() => {
  server?.kill();
});

describe("scripted interactive episode against the live service", () => {
  it("instruction -> clarification -> answer -> success within 10 s", async () => {
    const started = Date.now();
    let state: ViewState = initialState();
    const waiters: Array<(s: ViewState) => void> = [];
    const apply = (message: SessionMessage) => {
      state = reduce(state, message);
      for (const waiter of waiters.splice(0)) waiter(state);
    };
    const waitFor = (predicate: (s: ViewState) => boolean, what: string) =>
      new Promise<ViewState>((resolve, reject) => {
        const timer = setTimeout(() => reject(new Error(`timed out waiting for ${what}`)), 9000);
        const check = (s: ViewState) => {
          if (predicate(s)) {
            clearTimeout(timer);
            resolve(s);
          } else {
            waiters.push(check);
          }
        };
        check(state);
      });

    const handle = await connect({
      serverUrl: BASE,
      layout,
      qaMode: "interactive",
      webSocketFactory: (url) => new WebSocket(url) as never,
      onMessage: apply,
    });
    expect(state.sessionId).toBe(handle.sessionId);
    expect(state.mapScene?.objects.some((o) => o.class === "mug")).toBe(true);

    handle.sendInstruction("pick up the mug");
    await waitFor((s) => s.pendingClarification !== null, "clarificationRequest");
    expect(state.pendingClarification?.candidates.length).toBe(2);
    expect(state.highlightedTokens.length).toBe(2);

    handle.answerClarification("the red one");
    await waitFor((s) => s.lastStatus?.status === "completed", "missionStatus");
    expect(state.timeline.some((t) => t.summary.startsWith("PickUp"))).toBe(true);
    expect(state.errors).toStrictEqual([]);

    handle.close();
    expect(Date.now() - started).toBeLessThan(10_000);
  }, 15000);
});
