// In-memory stand-in for the quiz service, wired in through the client's
// fetch parameter. It enforces the same stage machine and error envelope
// as the real thing so the console's handling can be exercised offline.

import type { FetchFn } from "../src/api.js";
import type {
  McqOption,
  QueryHit,
  Reference,
  SessionResults,
  SessionSnapshot,
  StageRecord,
} from "../src/types.js";

export type PoolQuestion = {
  question_id: string;
  stem: string;
  options: McqOption[];
  gold_label: string;
  reference: Reference;
};

type MockSession = {
  session_id: string;
  participant_id: string;
  seed: number;
  stage: "pretest" | "posttest" | "completed";
  question_ids: string[];
  pretest: StageRecord | null;
  posttest: StageRecord | null;
};

export type LoggedRequest = { method: string; path: string; body: unknown };

const POINTS = 5;

export function buildPool(n: number): PoolQuestion[] {
  const labels = ["A", "B", "C", "D"];
  const words = ["alpha", "bravo", "charlie", "delta"];
  const pool: PoolQuestion[] = [];
  for (let i = 1; i <= n; i++) {
    const id = `q${String(i).padStart(2, "0")}`;
    const gold = (i - 1) % 4;
    pool.push({
      question_id: id,
      stem: `Sample question ${i} about the corpus.`,
      options: labels.map((label, j) => ({
        label,
        text: `${words[j] ?? ""} ${id}`,
      })),
      gold_label: labels[gold] ?? "A",
      reference: {
        text: `Reference paragraph ${i}: the recorded answer is ${words[gold] ?? ""} ${id}.`,
        cited_chunk_ids: [`doc#${i}`],
      },
    });
  }
  return pool;
}

export class MockQuizServer {
  readonly sessions = new Map<string, MockSession>();
  readonly requests: LoggedRequest[] = [];

  // Question ids whose reference lookups fail until cleared.
  failingReferences = new Set<string>();
  failQueries = false;
  queryHits: QueryHit[] = [];
  quizLength = 20;

  private readonly pool = new Map<string, PoolQuestion>();
  private readonly order: string[] = [];
  private counter = 0;

  constructor(pool: PoolQuestion[]) {
    for (const question of pool) {
      this.pool.set(question.question_id, question);
      this.order.push(question.question_id);
    }
  }

  fetch: FetchFn = async (url, init) => {
    const method = init?.method ?? "GET";
    const path = new URL(url, "http://mock.test").pathname;
    const body = typeof init?.body === "string" ? JSON.parse(init.body) : null;
    this.requests.push({ method, path, body });
    return this.route(method, path, body);
  };

  lastRequest(pathSuffix: string): LoggedRequest | undefined {
    for (let i = this.requests.length - 1; i >= 0; i--) {
      const request = this.requests[i];
      if (request && request.path.endsWith(pathSuffix)) return request;
    }
    return undefined;
  }

  question(qid: string): PoolQuestion {
    const question = this.pool.get(qid);
    if (!question) throw new Error(`no pool question ${qid}`);
    return question;
  }

  private route(method: string, path: string, body: unknown): Response {
    if (method === "POST" && path === "/v1/quiz/sessions") {
      return this.createSession(body as { participant_id?: string; seed?: number });
    }
    if (method === "POST" && path === "/v1/query") {
      return this.runQuery(body as { text?: string; k?: number });
    }

    let match = /^\/v1\/quiz\/sessions\/([^/]+)$/.exec(path);
    if (match && method === "GET") return this.snapshot(match[1] ?? "");
    match = /^\/v1\/quiz\/sessions\/([^/]+)\/questions$/.exec(path);
    if (match && method === "GET") return this.questions(match[1] ?? "");
    match = /^\/v1\/quiz\/sessions\/([^/]+)\/reference\/([^/]+)$/.exec(path);
    if (match && method === "GET") {
      return this.reference(match[1] ?? "", match[2] ?? "");
    }
    match = /^\/v1\/quiz\/sessions\/([^/]+)\/responses$/.exec(path);
    if (match && method === "POST") {
      return this.submit(match[1] ?? "", body as { stage?: string; responses?: Record<string, string> });
    }
    match = /^\/v1\/quiz\/sessions\/([^/]+)\/results$/.exec(path);
    if (match && method === "GET") return this.results(match[1] ?? "");

    return this.error(404, "not_found", `no route for ${method} ${path}`);
  }

  private json(status: number, payload: unknown): Response {
    return new Response(JSON.stringify(payload), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  private error(status: number, code: string, message: string): Response {
    return this.json(status, { error: { code, message } });
  }

  private snapshotOf(session: MockSession): SessionSnapshot {
    return {
      session_id: session.session_id,
      participant_id: session.participant_id,
      seed: session.seed,
      stage: session.stage,
      question_ids: [...session.question_ids],
      scores: {
        pretest: session.pretest?.score ?? null,
        posttest: session.posttest?.score ?? null,
      },
    };
  }

  private createSession(body: { participant_id?: string; seed?: number }): Response {
    const participantId = (body.participant_id ?? "").trim();
    if (!participantId) {
      return this.error(422, "invalid_request", "participant_id is blank");
    }
    if (this.order.length < this.quizLength) {
      return this.error(500, "error", "question pool is too small");
    }
    this.counter += 1;
    const session: MockSession = {
      session_id: `s${this.counter}`,
      participant_id: participantId,
      seed: body.seed ?? 12345,
      stage: "pretest",
      question_ids: this.order.slice(0, this.quizLength),
      pretest: null,
      posttest: null,
    };
    this.sessions.set(session.session_id, session);
    return this.json(201, this.snapshotOf(session));
  }

  private snapshot(sessionId: string): Response {
    const session = this.sessions.get(sessionId);
    if (!session) return this.error(404, "not_found", `no session '${sessionId}'`);
    return this.json(200, this.snapshotOf(session));
  }

  private questions(sessionId: string): Response {
    const session = this.sessions.get(sessionId);
    if (!session) return this.error(404, "not_found", `no session '${sessionId}'`);
    if (session.stage === "pretest") {
      return this.json(200, {
        stage: "pretest",
        questions: session.question_ids.map((qid) => {
          const question = this.question(qid);
          return {
            question_id: qid,
            stem: question.stem,
            options: question.options,
          };
        }),
      });
    }
    return this.json(200, {
      stage: session.stage,
      questions: session.question_ids.map((qid) => ({
        question_id: qid,
        stem: this.question(qid).stem,
        reference: this.failingReferences.has(qid)
          ? null
          : this.question(qid).reference,
      })),
    });
  }

  private reference(sessionId: string, qid: string): Response {
    const session = this.sessions.get(sessionId);
    if (!session) return this.error(404, "not_found", `no session '${sessionId}'`);
    if (!session.question_ids.includes(qid)) {
      return this.error(404, "not_found", `question '${qid}' not in session`);
    }
    if (session.stage === "pretest") {
      return this.error(
        409,
        "wrong_stage",
        "reference material is not available during the pretest",
      );
    }
    if (this.failingReferences.has(qid)) {
      return this.error(502, "upstream_failure", "reference generation failed");
    }
    return this.json(200, { question_id: qid, reference: this.question(qid).reference });
  }

  private submit(
    sessionId: string,
    body: { stage?: string; responses?: Record<string, string> },
  ): Response {
    const session = this.sessions.get(sessionId);
    if (!session) return this.error(404, "not_found", `no session '${sessionId}'`);
    const stage = body.stage ?? "";
    const responses = body.responses ?? {};
    if (stage !== "pretest" && stage !== "posttest") {
      return this.error(422, "invalid_request", `unknown stage '${stage}'`);
    }
    if (session.stage === "completed") {
      return this.error(409, "wrong_stage", "session is already completed");
    }
    if (stage !== session.stage) {
      return this.error(
        409,
        "wrong_stage",
        `session is in stage '${session.stage}', got a '${stage}' submission`,
      );
    }
    const unknown = Object.keys(responses).filter(
      (qid) => !session.question_ids.includes(qid),
    );
    if (unknown.length > 0) {
      return this.error(
        400,
        "invalid_request",
        `responses for questions outside the session: ${unknown.join(", ")}`,
      );
    }

    const predicted: Record<string, string> = {};
    for (const [qid, value] of Object.entries(responses)) {
      const question = this.question(qid);
      const labels = question.options.map((o) => o.label);
      if (stage === "pretest") {
        if (!labels.includes(value)) {
          return this.error(
            400,
            "invalid_request",
            `${qid}: '${value}' is not one of ${labels.join(", ")}`,
          );
        }
        predicted[qid] = value;
        continue;
      }
      const text = value.trim();
      if (!text) {
        return this.error(400, "invalid_request", `${qid}: empty answer text`);
      }
      if (labels.includes(text)) {
        predicted[qid] = text;
        continue;
      }
      const hit = question.options.find((o) => text.includes(o.text));
      predicted[qid] = hit ? hit.label : "A";
    }

    let correct = 0;
    for (const qid of session.question_ids) {
      if (predicted[qid] === this.question(qid).gold_label) correct += 1;
    }
    const score = correct * POINTS;
    const record: StageRecord = {
      responses: { ...responses },
      predicted,
      score,
      submitted_at: Date.now() / 1000,
    };
    if (stage === "pretest") {
      session.pretest = record;
      session.stage = "posttest";
    } else {
      session.posttest = record;
      session.stage = "completed";
    }
    return this.json(200, {
      session_id: sessionId,
      stage,
      score,
      correct_count: correct,
      max_score: this.quizLength * POINTS,
      next_stage: session.stage,
    });
  }

  private results(sessionId: string): Response {
    const session = this.sessions.get(sessionId);
    if (!session) return this.error(404, "not_found", `no session '${sessionId}'`);
    const payload: SessionResults = {
      session_id: session.session_id,
      participant_id: session.participant_id,
      stage: session.stage,
      scores: {
        pretest: session.pretest?.score ?? null,
        posttest: session.posttest?.score ?? null,
      },
      pretest: session.pretest,
      posttest: session.posttest,
    };
    return this.json(200, payload);
  }

  private runQuery(body: { text?: string; k?: number }): Response {
    const text = (body.text ?? "").trim();
    if (!text) return this.error(422, "invalid_request", "text is blank");
    if (this.failQueries) {
      return this.error(502, "upstream_failure", "embedding backend unreachable");
    }
    const k = body.k ?? 5;
    return this.json(200, { hits: this.queryHits.slice(0, k) });
  }
}
