import { describe, expect, it } from "vitest";

import { ApiError, QuizApi } from "../src/api.js";
import type { FetchFn } from "../src/api.js";

type Captured = { url: string; init: RequestInit | undefined };

function capture(
  status: number,
  body: string,
): { fetchFn: FetchFn; calls: Captured[] } {
  const calls: Captured[] = [];
  const fetchFn: FetchFn = async (url, init) => {
    calls.push({ url, init });
    return new Response(body, {
      status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { fetchFn, calls };
}

describe("QuizApi", () => {
  it("parses successful JSON bodies", async () => {
    const { fetchFn } = capture(200, '{"hits": []}');
    const api = new QuizApi("http://svc", fetchFn);
    expect(await api.query("tea", 5)).toEqual({ hits: [] });
  });

  it("unwraps the error envelope into an ApiError", async () => {
    const { fetchFn } = capture(
      409,
      '{"error": {"code": "wrong_stage", "message": "session is in stage \'posttest\'"}}',
    );
    const api = new QuizApi("http://svc", fetchFn);
    const failure = await api.getQuestions("s1").then(
      () => null,
      (error: unknown) => error,
    );
    expect(failure).toBeInstanceOf(ApiError);
    const apiError = failure as ApiError;
    expect(apiError.status).toBe(409);
    expect(apiError.code).toBe("wrong_stage");
    expect(apiError.message).toContain("posttest");
  });

  it("copes with non-JSON error bodies", async () => {
    const { fetchFn } = capture(500, "Internal Server Error");
    const api = new QuizApi("http://svc", fetchFn);
    const failure = await api.getSession("s1").then(
      () => null,
      (error: unknown) => error,
    );
    const apiError = failure as ApiError;
    expect(apiError.code).toBe("http_error");
    expect(apiError.message).toContain("500");
  });

  it("trims trailing slashes off the base url", async () => {
    const { fetchFn, calls } = capture(200, "{}");
    const api = new QuizApi("http://svc///", fetchFn);
    await api.getSession("s1");
    expect(calls[0]?.url).toBe("http://svc/v1/quiz/sessions/s1");
  });

  it("omits the seed unless one is given", async () => {
    const { fetchFn, calls } = capture(201, "{}");
    const api = new QuizApi("http://svc", fetchFn);
    await api.createSession("p-1");
    await api.createSession("p-1", 7);
    const first = JSON.parse(String(calls[0]?.init?.body));
    const second = JSON.parse(String(calls[1]?.init?.body));
    expect(first).toEqual({ participant_id: "p-1" });
    expect(second).toEqual({ participant_id: "p-1", seed: 7 });
  });

  it("posts responses with the stage attached", async () => {
    const { fetchFn, calls } = capture(200, "{}");
    const api = new QuizApi("http://svc", fetchFn);
    await api.submitResponses("s1", "pretest", { q1: "B" });
    expect(calls[0]?.url).toBe("http://svc/v1/quiz/sessions/s1/responses");
    expect(JSON.parse(String(calls[0]?.init?.body))).toEqual({
      stage: "pretest",
      responses: { q1: "B" },
    });
  });
});
