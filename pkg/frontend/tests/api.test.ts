import { describe, expect, it } from "vitest";

import { ApiClient, FetchLike } from "../src/api.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function recordingFetch(status: number, body: unknown) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const impl: FetchLike = async (url, init) => {
    calls.push({ url, init });
    return jsonResponse(status, body);
  };
  return { calls, impl };
}

describe("ApiClient", () => {
  it("fetches session, pending and progress from the documented paths", async () => {
    const { calls, impl } = recordingFetch(200, []);
    const api = new ApiClient("http://host:1", impl);
    await api.getPending();
    const { impl: impl2, calls: calls2 } = recordingFetch(200, { finished: false });
    await new ApiClient("", impl2).getProgress();
    expect(calls[0].url).toBe("http://host:1/api/pending");
    expect(calls2[0].url).toBe("/api/progress");
  });

  it("posts the label with the documented body shape", async () => {
    const { calls, impl } = recordingFetch(202, { status: "accepted" });
    const api = new ApiClient("", impl);
    const outcome = await api.postLabel(42, 2);
    expect(outcome).toEqual({ kind: "accepted" });
    expect(calls[0].url).toBe("/api/labels");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ sample_id: 42, label: 2 });
  });

  it("maps 409 to duplicate and 422 to invalid with the service message", async () => {
    const dup = await new ApiClient("", recordingFetch(409, { error: "already labeled" }).impl).postLabel(1, 0);
    expect(dup).toEqual({ kind: "duplicate" });
    const bad = await new ApiClient("", recordingFetch(422, { error: "label 9 outside 0..2" }).impl).postLabel(1, 9);
    expect(bad.kind).toBe("invalid");
    if (bad.kind === "invalid") expect(bad.message).toContain("outside");
  });

  it("maps other statuses to failed", async () => {
    const out = await new ApiClient("", recordingFetch(500, { error: "boom" }).impl).postLabel(1, 0);
    expect(out.kind).toBe("failed");
  });

  it("throws on non-ok polls so the caller can back off", async () => {
    const api = new ApiClient("", async () => new Response("nope", { status: 503 }));
    await expect(api.getPending()).rejects.toThrow("503");
  });

  it("propagates network failures", async () => {
    const api = new ApiClient("", async () => {
      throw new Error("connection refused");
    });
    await expect(api.getProgress()).rejects.toThrow("connection refused");
  });
});
