import type {
  QueryHit,
  QuestionsPayload,
  Reference,
  SessionResults,
  SessionSnapshot,
  Stage,
  SubmitResult,
} from "./types.js";

export type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

/** A non-2xx reply, carrying the server's error envelope. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
  }
}

function envelopeOf(body: unknown): { code: string; message: string } | null {
  if (typeof body !== "object" || body === null) return null;
  const error = (body as { error?: unknown }).error;
  if (typeof error !== "object" || error === null) return null;
  const { code, message } = error as { code?: unknown; message?: unknown };
  if (typeof code !== "string" || typeof message !== "string") return null;
  return { code, message };
}

export class QuizApi {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchFn;

  constructor(baseUrl: string, fetchFn?: FetchFn) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);

    let parsed: unknown = null;
    const raw = await response.text();
    if (raw) {
      try {
        parsed = JSON.parse(raw);
      } catch {
        parsed = null;
      }
    }

    if (!response.ok) {
      const envelope = envelopeOf(parsed);
      throw new ApiError(
        response.status,
        envelope?.code ?? "http_error",
        envelope?.message ?? `request failed with status ${response.status}`,
      );
    }
    return parsed as T;
  }

  createSession(participantId: string, seed?: number): Promise<SessionSnapshot> {
    const body: Record<string, unknown> = { participant_id: participantId };
    if (seed !== undefined) body.seed = seed;
    return this.request("POST", "/v1/quiz/sessions", body);
  }

  getSession(sessionId: string): Promise<SessionSnapshot> {
    return this.request("GET", `/v1/quiz/sessions/${sessionId}`);
  }

  getQuestions(sessionId: string): Promise<QuestionsPayload> {
    return this.request("GET", `/v1/quiz/sessions/${sessionId}/questions`);
  }

  getReference(
    sessionId: string,
    questionId: string,
  ): Promise<{ question_id: string; reference: Reference }> {
    return this.request(
      "GET",
      `/v1/quiz/sessions/${sessionId}/reference/${questionId}`,
    );
  }

  submitResponses(
    sessionId: string,
    stage: Stage,
    responses: Record<string, string>,
  ): Promise<SubmitResult> {
    return this.request("POST", `/v1/quiz/sessions/${sessionId}/responses`, {
      stage,
      responses,
    });
  }

  getResults(sessionId: string): Promise<SessionResults> {
    return this.request("GET", `/v1/quiz/sessions/${sessionId}/results`);
  }

  query(text: string, k: number): Promise<{ hits: QueryHit[] }> {
    return this.request("POST", "/v1/query", { text, k });
  }
}
