/** Browser bootstrap: wire the client, reducer, and renderers together. */

import { connect, type SessionHandle } from "./client.js";
import { commanderSpoke, initialState, reduce, type ViewState } from "./model.js";
import { renderPanes } from "./render.js";

let state: ViewState = initialState();
let handle: SessionHandle | null = null;

function apply(updater: (s: ViewState) => ViewState): void {
  state = updater(state);
  if (state.needsResync && handle) {
    state = { ...state, needsResync: false };
    void handle.resync();
  }
  renderPanes(document, state);
  (window as unknown as { state: ViewState }).state = state; // for debugging
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const serverUrl = params.get("server") ?? `${window.location.protocol}//${window.location.host}`;
  const qaMode = params.get("qa") ?? "interactive";
  const missionId = params.get("mission") ?? undefined;
  const layoutId = params.get("layout") ?? undefined;
  const banner = document.getElementById("errors");
  try {
    handle = await connect({
      serverUrl,
      qaMode,
      missionId,
      layoutId,
      seed: Number(params.get("seed") ?? 0),
      onMessage: (message) => apply((s) => reduce(s, message)),
      onStateChange: (connection) => apply((s) => ({ ...s, connection })),
    });
  } catch (err) {
    if (banner) banner.textContent = `connection failed: ${err}. retry?`;
    const retry = document.getElementById("retry");
    if (retry) {
      retry.style.display = "inline";
      retry.onclick = () => window.location.reload();
    }
    return;
  }

  const input = document.getElementById("instruction-input") as HTMLInputElement;
  const send = document.getElementById("send") as HTMLButtonElement;
  const answerInput = document.getElementById("answer-input") as HTMLInputElement;
  const answerSend = document.getElementById("answer-send") as HTMLButtonElement;

  const submitInstruction = () => {
    const text = input.value.trim();
    if (!text || state.inputLocked || !handle) return;
    input.value = "";
    apply((s) => commanderSpoke(s, text));
    handle.sendInstruction(text);
  };
  const submitAnswer = () => {
    if (!handle || !state.pendingClarification) return;
    const text = answerInput.value.trim();
    answerInput.value = "";
    apply((s) => ({ ...commanderSpoke(s, text), pendingClarification: null, highlightedTokens: [] }));
    handle.answerClarification(text);
  };

  send.onclick = submitInstruction;
  input.onkeydown = (e) => e.key === "Enter" && submitInstruction();
  answerSend.onclick = submitAnswer;
  answerInput.onkeydown = (e) => e.key === "Enter" && submitAnswer();
  for (const chip of Array.from(document.querySelectorAll<HTMLButtonElement>(".hint-chip"))) {
    chip.onclick = () => {
      answerInput.value = chip.dataset.hint ?? "";
      answerInput.focus();
    };
  }
}

void boot();
