/** Thin typed client over the service endpoints; fetch is injectable so the
 * tests can run without a network. */

import { PendingRequest, Progress, SessionInfo, SubmitOutcome } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const res = await this.fetchImpl(`${this.base}${path}`);
    if (!res.ok) {
      throw new Error(`${path} -> HTTP ${res.status}`);
    }
    return (await res.json()) as T;
  }

  getSession(): Promise<SessionInfo> {
    return this.getJson<SessionInfo>("/api/session");
  }

  getPending(): Promise<PendingRequest[]> {
    return this.getJson<PendingRequest[]>("/api/pending");
  }

  getProgress(): Promise<Progress> {
    return this.getJson<Progress>("/api/progress");
  }

  async postLabel(sampleId: number, label: number): Promise<SubmitOutcome> {
    const res = await this.fetchImpl(`${this.base}/api/labels`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ sample_id: sampleId, label }),
    });
    if (res.status === 202) return { kind: "accepted" };
    if (res.status === 409) return { kind: "duplicate" };
    const body = await res.json().catch(() => ({ error: `HTTP ${res.status}` }));
    const message = (body as { error?: string }).error ?? `HTTP ${res.status}`;
    if (res.status === 422) return { kind: "invalid", message };
    return { kind: "failed", message };
  }
}
