import { describe, expect, it } from "vitest";

import { optionLine, progressLine, scoreBanner, stageTitle } from "../src/format.js";

describe("scoreBanner", () => {
  it("renders the server's numbers verbatim", () => {
    expect(scoreBanner(85, 100)).toBe("85 / 100");
    expect(scoreBanner(25, 100)).toBe("25 / 100");
    expect(scoreBanner(0, 100)).toBe("0 / 100");
  });

  it("does not assume a fixed maximum", () => {
    expect(scoreBanner(15, 50)).toBe("15 / 50");
  });
});

describe("optionLine", () => {
  it("prefixes the label in parentheses", () => {
    expect(optionLine("A", "ten thousand")).toBe("(A) ten thousand");
    expect(optionLine("D", "罰鍰")).toBe("(D) 罰鍰");
  });
});

describe("stageTitle", () => {
  it("names both stages and completion", () => {
    expect(stageTitle("pretest")).toContain("Stage 1");
    expect(stageTitle("posttest")).toContain("Stage 2");
    expect(stageTitle("completed")).toBe("Session complete");
  });

  it("passes unknown stages through", () => {
    expect(stageTitle("midtest")).toBe("midtest");
  });
});

describe("progressLine", () => {
  it("counts addressed questions", () => {
    expect(progressLine(0, 20)).toBe("0 of 20 answered");
    expect(progressLine(17, 20)).toBe("17 of 20 answered");
  });
});
