/** Console state machine.
 *
 * The console is stateless across reloads: everything here is rebuilt from
 * what /api/pending and /api/progress report, so a reload mid-batch recovers
 * the correct queue. One label POST is in flight at a time; 202 and 409 both
 * advance to the next pending sample, 422 shows an inline message.
 */

import { PendingRequest, Progress, SubmitOutcome } from "./types.js";

export const POLL_MS = 1000;
export const BACKOFF_MAX_MS = 8000;
export const IDLE_BANNER = "waiting for next intervention batch";

export interface ConsoleState {
  pending: PendingRequest[];
  currentId: number | null;
  batchTotal: number;      // K of the open batch (labeled + pending)
  labeled: number;
  batchIndex: number;
  errorPct: number;
  finished: boolean;
  submitting: boolean;
  inlineMessage: string | null;
  networkError: string | null;
  backoffMs: number;
}

export function initialState(): ConsoleState {
  return {
    pending: [],
    currentId: null,
    batchTotal: 0,
    labeled: 0,
    batchIndex: -1,
    errorPct: 0,
    finished: false,
    submitting: false,
    inlineMessage: null,
    networkError: null,
    backoffMs: 0,
  };
}

export function currentRequest(state: ConsoleState): PendingRequest | null {
  return state.pending.find((r) => r.sample_id === state.currentId) ?? null;
}

/** Merge a successful poll; keeps focus on the same sample when possible. */
export function applyPoll(
  state: ConsoleState,
  pending: PendingRequest[],
  progress: Progress,
): ConsoleState {
  const stillThere = pending.some((r) => r.sample_id === state.currentId);
  return {
    ...state,
    pending,
    currentId: stillThere ? state.currentId : pending.length ? pending[0].sample_id : null,
    batchTotal: progress.labeled + progress.pending,
    labeled: progress.labeled,
    batchIndex: progress.batch_index,
    errorPct: progress.overall_error_so_far,
    finished: progress.finished,
    networkError: null,
    backoffMs: 0,
    inlineMessage: pending.length ? state.inlineMessage : null,
  };
}

export function applyPollError(state: ConsoleState, message: string): ConsoleState {
  const backoffMs = state.backoffMs === 0 ? 2 * POLL_MS : Math.min(2 * state.backoffMs, BACKOFF_MAX_MS);
  return { ...state, networkError: message, backoffMs };
}

export function pollDelay(state: ConsoleState): number {
  return state.backoffMs || POLL_MS;
}

/** Start a submission; refuses while another POST is in flight. */
export function beginSubmit(state: ConsoleState): ConsoleState | null {
  if (state.submitting || state.currentId === null) return null;
  return { ...state, submitting: true, inlineMessage: null };
}

export function resolveSubmit(
  state: ConsoleState,
  sampleId: number,
  outcome: SubmitOutcome,
): ConsoleState {
  const next = { ...state, submitting: false };
  switch (outcome.kind) {
    case "accepted":
    case "duplicate": {
      // the service owns the truth; drop locally and advance
      const pending = state.pending.filter((r) => r.sample_id !== sampleId);
      return {
        ...next,
        pending,
        labeled: outcome.kind === "accepted" ? state.labeled + 1 : state.labeled,
        currentId: pending.length ? pending[0].sample_id : null,
        inlineMessage: outcome.kind === "duplicate" ? "already labeled" : null,
      };
    }
    case "invalid":
      return { ...next, inlineMessage: outcome.message };
    case "failed":
      return { ...next, networkError: outcome.message };
  }
}

export function focusSample(state: ConsoleState, sampleId: number): ConsoleState {
  if (!state.pending.some((r) => r.sample_id === sampleId)) return state;
  return { ...state, currentId: sampleId, inlineMessage: null };
}

export type Banner = { kind: "error" | "idle" | "done"; text: string } | null;

export function banner(state: ConsoleState): Banner {
  if (state.networkError) {
    return { kind: "error", text: `service unreachable (${state.networkError}), retrying...` };
  }
  if (state.finished) {
    return { kind: "done", text: `run complete, overall error ${state.errorPct.toFixed(2)}%` };
  }
  if (state.pending.length === 0) {
    return { kind: "idle", text: IDLE_BANNER };
  }
  return null;
}
