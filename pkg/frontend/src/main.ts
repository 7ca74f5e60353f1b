/** DOM wiring: 1 Hz polling (with backoff after failures), click handling,
 * and a single in-flight POST at a time. */

import { ApiClient } from "./api.js";
import {
  applyPoll,
  applyPollError,
  banner,
  beginSubmit,
  ConsoleState,
  currentRequest,
  focusSample,
  initialState,
  pollDelay,
  resolveSubmit,
} from "./state.js";
import { renderBanner, renderMain, renderProgress, renderQueue } from "./view.js";
import { SessionInfo } from "./types.js";

const api = new ApiClient();
let state: ConsoleState = initialState();
let session: SessionInfo | null = null;

function render(): void {
  const title = document.getElementById("title")!;
  title.textContent = session
    ? `annotation console (session ${session.session_id})`
    : "annotation console";
  document.getElementById("banner")!.innerHTML = renderBanner(banner(state));
  document.getElementById("progress")!.innerHTML = renderProgress(state);
  document.getElementById("queue")!.innerHTML = renderQueue(state);
  document.getElementById("main")!.innerHTML = renderMain(state, session);
}

async function pollOnce(): Promise<void> {
  try {
    if (session === null) {
      session = await api.getSession();
    }
    const [pending, progress] = await Promise.all([api.getPending(), api.getProgress()]);
    state = applyPoll(state, pending, progress);
  } catch (err) {
    state = applyPollError(state, err instanceof Error ? err.message : String(err));
  }
  render();
  if (!state.finished) {
    window.setTimeout(pollOnce, pollDelay(state));
  }
}

async function submit(label: number): Promise<void> {
  const req = currentRequest(state);
  const started = beginSubmit(state);
  if (req === null || started === null) return; // POST already in flight
  state = started;
  render();
  const outcome = await api.postLabel(req.sample_id, label);
  state = resolveSubmit(state, req.sample_id, outcome);
  render();
}

document.addEventListener("click", (ev) => {
  const el = ev.target as HTMLElement;
  if (el.dataset.label !== undefined) {
    void submit(Number(el.dataset.label));
  } else if (el.dataset.focus !== undefined) {
    state = focusSample(state, Number(el.dataset.focus));
    render();
  }
});

render();
void pollOnce();
