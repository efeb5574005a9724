import { describe, expect, it } from "vitest";

import { tokenize } from "../src/tokenize.js";

describe("tokenizer mirror", () => {
  it("lowercases and separates punctuation", () => {
    expect(tokenize("What is basalt?")).toEqual(["what", "is", "basalt", "?"]);
  });

  it("keeps hyphens inside tokens", () => {
    expect(tokenize("Mid-Ocean ridge.")).toEqual(["mid-ocean", "ridge", "."]);
  });

  it("keeps relation underscores intact", () => {
    expect(tokenize("basalt formed_by lava cooling")).toEqual([
      "basalt", "formed_by", "lava", "cooling",
    ]);
  });

  it("returns empty for empty input", () => {
    expect(tokenize("")).toEqual([]);
  });
});
