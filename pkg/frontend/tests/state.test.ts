import { describe, expect, it } from "vitest";

import {
  applyPoll,
  applyPollError,
  banner,
  beginSubmit,
  currentRequest,
  focusSample,
  IDLE_BANNER,
  initialState,
  POLL_MS,
  pollDelay,
  resolveSubmit,
} from "../src/state.js";
import { PendingRequest, Progress } from "../src/types.js";

function req(id: number): PendingRequest {
  return {
    sample_id: id,
    point: [0, 0],
    background: [[1, 1]],
    top3: [{ label: 0, name: "class_0", prob: 0.7 }],
    batch_index: 3,
  };
}

function progress(labeled: number, pending: number, finished = false): Progress {
  return {
    labeled,
    pending,
    batch_index: 3,
    overall_error_so_far: 12.5,
    finished,
  };
}

describe("polling state", () => {
  it("shows the idle banner when nothing is pending", () => {
    const s = applyPoll(initialState(), [], progress(0, 0));
    expect(banner(s)).toEqual({ kind: "idle", text: IDLE_BANNER });
    expect(s.currentId).toBeNull();
  });

  it("focuses the first request of a fresh batch and tracks K", () => {
    const s = applyPoll(initialState(), [req(10), req(11), req(12)], progress(0, 3));
    expect(s.currentId).toBe(10);
    expect(s.batchTotal).toBe(3);
    expect(banner(s)).toBeNull();
  });

  it("keeps focus on the same sample across polls when still pending", () => {
    let s = applyPoll(initialState(), [req(10), req(11)], progress(0, 2));
    s = focusSample(s, 11);
    s = applyPoll(s, [req(10), req(11)], progress(0, 2));
    expect(s.currentId).toBe(11);
  });

  it("is rebuilt entirely from poll data (reload recovery)", () => {
    const pending = [req(5), req(6)];
    const a = applyPoll(initialState(), pending, progress(1, 2));
    const b = applyPoll(initialState(), pending, progress(1, 2));
    expect(a).toEqual(b);
  });

  it("reports the finished banner with the final error", () => {
    const s = applyPoll(initialState(), [], progress(0, 0, true));
    expect(banner(s)?.kind).toBe("done");
    expect(banner(s)?.text).toContain("12.50");
  });
});

describe("submission lifecycle", () => {
  it("advances to the next sample on 202 and counts the label", () => {
    let s = applyPoll(initialState(), [req(10), req(11)], progress(0, 2));
    s = beginSubmit(s)!;
    expect(s.submitting).toBe(true);
    s = resolveSubmit(s, 10, { kind: "accepted" });
    expect(s.submitting).toBe(false);
    expect(s.currentId).toBe(11);
    expect(s.labeled).toBe(1);
    expect(s.pending.map((r) => r.sample_id)).toEqual([11]);
  });

  it("treats 409 as already labeled and advances", () => {
    let s = applyPoll(initialState(), [req(10), req(11)], progress(0, 2));
    s = resolveSubmit(beginSubmit(s)!, 10, { kind: "duplicate" });
    expect(s.currentId).toBe(11);
    expect(s.inlineMessage).toBe("already labeled");
    expect(s.labeled).toBe(0);
  });

  it("keeps the sample and shows the message on 422", () => {
    let s = applyPoll(initialState(), [req(10)], progress(0, 1));
    s = resolveSubmit(beginSubmit(s)!, 10, { kind: "invalid", message: "label 9 outside 0..2" });
    expect(s.currentId).toBe(10);
    expect(s.inlineMessage).toContain("outside");
  });

  it("refuses a second submission while one is in flight", () => {
    const s = beginSubmit(applyPoll(initialState(), [req(10)], progress(0, 1)))!;
    expect(beginSubmit(s)).toBeNull();
  });

  it("progress reaches K/K after the last submission", () => {
    let s = applyPoll(initialState(), [req(1), req(2), req(3)], progress(0, 3));
    for (const id of [1, 2, 3]) {
      s = resolveSubmit(beginSubmit(s)!, id, { kind: "accepted" });
    }
    expect(s.labeled).toBe(3);
    expect(s.batchTotal).toBe(3);
    expect(s.currentId).toBeNull();
  });
});

describe("network failure handling", () => {
  it("doubles the retry delay up to the cap and shows the error banner", () => {
    let s = initialState();
    expect(pollDelay(s)).toBe(POLL_MS);
    s = applyPollError(s, "fetch failed");
    expect(banner(s)?.kind).toBe("error");
    expect(pollDelay(s)).toBe(2 * POLL_MS);
    s = applyPollError(s, "fetch failed");
    expect(pollDelay(s)).toBe(4 * POLL_MS);
    s = applyPollError(s, "fetch failed");
    s = applyPollError(s, "fetch failed");
    expect(pollDelay(s)).toBe(8000);
  });

  it("resets the backoff after a successful poll", () => {
    let s = applyPollError(initialState(), "down");
    s = applyPoll(s, [], progress(0, 0));
    expect(pollDelay(s)).toBe(POLL_MS);
    expect(s.networkError).toBeNull();
  });
});

describe("currentRequest", () => {
  it("returns null when the focused sample disappeared", () => {
    let s = applyPoll(initialState(), [req(10)], progress(0, 1));
    s = applyPoll(s, [], progress(1, 0));
    expect(currentRequest(s)).toBeNull();
  });
});
