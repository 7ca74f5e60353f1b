/** HTML fragments for the console; strings only, wired to the DOM in main. */

import { scatterSvg } from "./scatter.js";
import { Banner, ConsoleState, currentRequest } from "./state.js";
import { PendingRequest, SessionInfo } from "./types.js";

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderHints(req: PendingRequest): string {
  const badges = req.top3
    .map(
      (h, i) =>
        `<span class="hint${i === 0 ? " hint-top" : ""}">${esc(h.name)} ` +
        `${(100 * h.prob).toFixed(1)}%</span>`,
    )
    .join(" ");
  return `<div class="hints">model guesses: ${badges}</div>`;
}

export function renderClassButtons(session: SessionInfo, disabled: boolean): string {
  // one button per valid class index; no other label can ever be submitted
  return session.class_names
    .map(
      (name, c) =>
        `<button class="class-btn" data-label="${c}"${disabled ? " disabled" : ""}>` +
        `${esc(name)}</button>`,
    )
    .join("");
}

export function renderProgress(state: ConsoleState): string {
  if (state.batchTotal === 0) return "";
  return (
    `<span class="progress">batch ${state.batchIndex}: ` +
    `${state.labeled}/${state.batchTotal} labeled</span>` +
    `<span class="error-pct">online error ${state.errorPct.toFixed(2)}%</span>`
  );
}

export function renderQueue(state: ConsoleState): string {
  return state.pending
    .map(
      (r) =>
        `<button class="queue-item${r.sample_id === state.currentId ? " queue-current" : ""}" ` +
        `data-focus="${r.sample_id}">#${r.sample_id}</button>`,
    )
    .join("");
}

export function renderBanner(b: Banner): string {
  if (b === null) return "";
  return `<div class="banner banner-${b.kind}">${esc(b.text)}</div>`;
}

export function renderMain(state: ConsoleState, session: SessionInfo | null): string {
  const req = currentRequest(state);
  if (req === null || session === null) return "";
  const inline = state.inlineMessage
    ? `<div class="inline-message">${esc(state.inlineMessage)}</div>`
    : "";
  return (
    `<div class="sample-header">sample #${req.sample_id}</div>` +
    scatterSvg(req.background, req.point) +
    renderHints(req) +
    `<div class="buttons">${renderClassButtons(session, state.submitting)}</div>` +
    inline
  );
}
