import { describe, expect, it } from "vitest";

import { parseHash } from "../src/app.js";

describe("parseHash", () => {
  it("routes session hashes", () => {
    expect(parseHash("#/session/abc123")).toEqual({
      kind: "session",
      sessionId: "abc123",
    });
  });

  it("routes the query panel", () => {
    expect(parseHash("#/query")).toEqual({ kind: "query" });
  });

  it("falls back to the start screen", () => {
    expect(parseHash("")).toEqual({ kind: "start" });
    expect(parseHash("#")).toEqual({ kind: "start" });
    expect(parseHash("#/")).toEqual({ kind: "start" });
    expect(parseHash("#/session/")).toEqual({ kind: "start" });
    expect(parseHash("#/session/a/b")).toEqual({ kind: "start" });
    expect(parseHash("#/nonsense")).toEqual({ kind: "start" });
  });
});
