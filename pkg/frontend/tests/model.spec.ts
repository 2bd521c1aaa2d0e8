import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { commanderSpoke, initialState, reduce, replay } from "../src/model.js";
import type { SessionMessage } from "../src/protocol.js";

const here = dirname(fileURLToPath(import.meta.url));
const stream: SessionMessage[] = JSON.parse(
  readFileSync(join(here, "fixtures", "stream.json"), "utf-8"),
);

describe("view model reducer", () => {
  it("replaying the captured stream reproduces the rendered state", () => {
    const state = replay(stream);
    expect(state).toMatchSnapshot();
  });

  it("is a pure function of the message stream", () => {
    const a = replay(stream);
    const b = replay(stream);
    expect(a).toStrictEqual(b);
  });

  it("tracks the full episode shape", () => {
    const state = replay(stream);
    expect(state.connection).toBe("live");
    expect(state.sessionId).not.toBeNull();
    expect(state.mapScene?.rooms.length).toBeGreaterThan(0);
    expect(state.timeline.length).toBeGreaterThan(0);
    expect(state.lastStatus?.goalReached).toBe(false); // layout session has no goal
    expect(state.pendingClarification).toBeNull(); // resolved by the answer
    expect(state.errors).toStrictEqual([]);
  });

  it("clarification request highlights candidates and pauses actions", () => {
    const untilClarification = stream.slice(
      0,
      stream.findIndex((m) => m.kind === "clarificationRequest") + 1,
    );
    const state = replay(untilClarification);
    expect(state.pendingClarification).not.toBeNull();
    expect(state.highlightedTokens.length).toBe(2);
    expect(state.timeline).toStrictEqual([]);
  });

  it("seq gaps trigger a resync request", () => {
    const gappy = [stream[0], { ...stream[2], seq: stream[2].seq + 5 }];
    const state = replay(gappy as SessionMessage[]);
    expect(state.needsResync).toBe(true);
  });

  it("malformed kinds are recorded without crashing", () => {
    const state = reduce(initialState(), {
      v: 1, kind: "juggle", sessionId: "s1", seq: 1, payload: {},
    });
    expect(state.errors[0]).toContain("unknown message kind");
  });

  it("commander input locks the instruction box until resolution", () => {
    let state = replay(stream.slice(0, 2));
    state = commanderSpoke(state, "pick up the mug");
    expect(state.inputLocked).toBe(true);
    const status = stream.find((m) => m.kind === "missionStatus")!;
    state = reduce(state, status);
    expect(state.inputLocked).toBe(false);
  });
});
