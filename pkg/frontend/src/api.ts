import type { PoolInfo, Report, SessionState, StartRequest } from "./types.js";

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = `${response.status}`;
  try {
    const body = await response.json();
    detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body);
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(detail, response.status);
}

/**
 * Thin client over the session service. `grade` is safe to retry: the step
 * index makes the mutation idempotent, and a 409 carrying the stored result
 * is unwrapped as success.
 */
export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
    private readonly retries: number = 2,
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  async listPools(): Promise<PoolInfo[]> {
    const body = await this.getJson<{ pools: PoolInfo[] }>("/pools");
    return body.pools;
  }

  async createSession(request: StartRequest): Promise<SessionState> {
    const response = await this.fetchFn(`${this.baseUrl}/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as SessionState;
  }

  async getSession(sessionId: string): Promise<SessionState> {
    return this.getJson<SessionState>(`/sessions/${sessionId}`);
  }

  async getReport(sessionId: string): Promise<Report> {
    return this.getJson<Report>(`/sessions/${sessionId}/report`);
  }

  /**
   * Submit the expert's verdict for one step. Retries on network failure
   * with the same step index; a duplicate submission returns the stored
   * result instead of advancing the session.
   */
  async grade(sessionId: string, step: number, correct: 0 | 1): Promise<SessionState> {
    let lastError: unknown;
    for (let attempt = 0; attempt <= this.retries; attempt++) {
      let response: Response;
      try {
        response = await this.fetchFn(`${this.baseUrl}/sessions/${sessionId}/grade`, {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify({ step, correct }),
        });
      } catch (error) {
        lastError = error; // connection loss: same idempotent step again
        continue;
      }
      if (response.status === 409) {
        const body = await response.json();
        if (body && typeof body.session_id === "string") {
          return body as SessionState; // stored result of a duplicate step
        }
        throw new ApiError(String(body.detail ?? "conflict"), 409);
      }
      if (!response.ok) await parseError(response);
      return (await response.json()) as SessionState;
    }
    throw lastError instanceof Error ? lastError : new Error(String(lastError));
  }

  async askExaminee(sessionId: string): Promise<string> {
    const response = await this.fetchFn(`${this.baseUrl}/sessions/${sessionId}/answer`, {
      method: "POST",
    });
    if (!response.ok) await parseError(response);
    const body = await response.json();
    return body.answer as string;
  }
}
