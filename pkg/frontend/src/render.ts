/** DOM + canvas renderers. Rendering is a pure function of the ViewState. */

import type { ViewState } from "./model.js";
import type { DetectionPayload } from "./protocol.js";

const CSS_COLORS: Record<string, string> = {
  red: "#d9534f", green: "#5cb85c", blue: "#428bca", yellow: "#e6c229",
  white: "#f4f4f4", black: "#333333", gray: "#9a9a9a", brown: "#8a6d3b",
  purple: "#9b59b6", orange: "#e67e22",
};

export function renderMap(canvas: HTMLCanvasElement, state: ViewState): void {
  const ctx = canvas.getContext("2d");
  if (!ctx || !state.mapScene) return;
  const scene = state.mapScene;
  ctx.clearRect(0, 0, canvas.width, canvas.height);

  let maxX = 1, maxY = 1;
  for (const room of scene.rooms) {
    maxX = Math.max(maxX, room.bounds[2]);
    maxY = Math.max(maxY, room.bounds[3]);
  }
  const scale = Math.min((canvas.width - 20) / maxX, (canvas.height - 20) / maxY);
  const px = (x: number) => 10 + x * scale;
  const py = (y: number) => canvas.height - 10 - y * scale;

  for (const room of scene.rooms) {
    const [x1, y1, x2, y2] = room.bounds;
    ctx.strokeStyle = "#888";
    ctx.lineWidth = 2;
    ctx.strokeRect(px(x1), py(y2), (x2 - x1) * scale, (y2 - y1) * scale);
    ctx.fillStyle = "#666";
    ctx.font = "12px sans-serif";
    ctx.fillText(room.name, px(x1) + 4, py(y2) + 14);
    for (const vp of room.viewpoints) {
      ctx.fillStyle = "#b9a0e8";
      ctx.beginPath();
      ctx.arc(px(vp.position[0]), py(vp.position[1]), 4, 0, Math.PI * 2);
      ctx.fill();
    }
  }
  for (const obj of scene.objects) {
    if (!obj.position) continue;
    ctx.fillStyle = CSS_COLORS[obj.color] ?? "#777";
    ctx.fillRect(px(obj.position[0]) - 3, py(obj.position[1]) - 3, 6, 6);
  }
  if (state.agent) {
    const [ax, ay] = state.agent.position;
    ctx.fillStyle = "#111";
    ctx.beginPath();
    ctx.arc(px(ax), py(ay), 6, 0, Math.PI * 2);
    ctx.fill();
    const rad = (state.agent.heading * Math.PI) / 180;
    ctx.strokeStyle = "#111";
    ctx.beginPath();
    ctx.moveTo(px(ax), py(ay));
    ctx.lineTo(px(ax + Math.sin(rad) * 0.8), py(ay + Math.cos(rad) * 0.8));
    ctx.stroke();
  }
}

export function renderObservation(canvas: HTMLCanvasElement, state: ViewState): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#fafafa";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (!state.observation) return;
  const highlighted = new Set(state.highlightedTokens);
  for (const det of state.observation.detections) {
    drawDetection(ctx, canvas, det, highlighted.has(det.token));
  }
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.fillText(state.observation.sceneDescriptor, 6, canvas.height - 6);
}

function drawDetection(
  ctx: CanvasRenderingContext2D,
  canvas: HTMLCanvasElement,
  det: DetectionPayload,
  highlight: boolean,
): void {
  const [x1, y1, x2, y2] = det.bbox;
  const w = canvas.width, h = canvas.height;
  ctx.strokeStyle = CSS_COLORS[det.color] ?? "#777";
  ctx.lineWidth = highlight ? 3 : 1.5;
  if (highlight) {
    ctx.fillStyle = "rgba(255, 230, 100, 0.25)";
    ctx.fillRect(x1 * w, y1 * h, (x2 - x1) * w, (y2 - y1) * h);
  }
  ctx.strokeRect(x1 * w, y1 * h, (x2 - x1) * w, (y2 - y1) * h);
  ctx.fillStyle = "#222";
  ctx.font = "11px monospace";
  ctx.fillText(`<visual_token_${det.token}> ${det.color} ${det.class}`, x1 * w + 2, y1 * h + 12);
}

export function renderPanes(root: Document, state: ViewState): void {
  const connection = root.getElementById("connection");
  if (connection) {
    connection.textContent = state.needsResync
      ? `${state.connection} (resyncing)`
      : `${state.connection}${state.sessionId ? " " + state.sessionId : ""}`;
    connection.className = state.connection;
  }
  const dialog = root.getElementById("dialog");
  if (dialog) {
    dialog.innerHTML = "";
    for (const entry of state.dialog) {
      const div = root.createElement("div");
      div.className = `turn ${entry.role}`;
      div.textContent = `${entry.role}: ${entry.text}`;
      dialog.appendChild(div);
    }
    dialog.scrollTop = dialog.scrollHeight;
  }
  const timeline = root.getElementById("timeline");
  if (timeline) {
    timeline.innerHTML = "";
    for (const entry of state.timeline) {
      const li = root.createElement("li");
      li.textContent = `#${entry.seq} ${entry.summary}`;
      li.className = entry.success ? "ok" : "failed";
      timeline.appendChild(li);
    }
    timeline.scrollTop = timeline.scrollHeight;
  }
  const status = root.getElementById("status");
  if (status) {
    const s = state.lastStatus;
    status.textContent = s
      ? `${s.status} | goal ${s.goalReached ? "reached" : "pending"} | ${s.robotActions} actions`
      : state.lastRouting ?? "";
  }
  const input = root.getElementById("instruction-input") as HTMLInputElement | null;
  const send = root.getElementById("send") as HTMLButtonElement | null;
  if (input && send) {
    input.disabled = state.inputLocked;
    send.disabled = state.inputLocked;
  }
  const clarification = root.getElementById("clarification");
  if (clarification) {
    clarification.style.display = state.pendingClarification ? "block" : "none";
    const question = root.getElementById("clarification-question");
    if (question && state.pendingClarification) {
      question.textContent = state.pendingClarification.question;
    }
    if (state.pendingClarification) {
      const answer = root.getElementById("answer-input") as HTMLInputElement | null;
      answer?.focus();
    }
  }
  const errors = root.getElementById("errors");
  if (errors) errors.textContent = state.errors.slice(-3).join(" | ");

  const map = root.getElementById("map") as HTMLCanvasElement | null;
  if (map) renderMap(map, state);
  const observation = root.getElementById("observation") as HTMLCanvasElement | null;
  if (observation) renderObservation(observation, state);
}
