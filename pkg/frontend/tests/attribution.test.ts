import { describe, expect, it } from "vitest";

import { entryForCopyIndex, knowledgeEntrySpans } from "../src/attribution.js";

const KNOWLEDGE = [
  "basalt is_a igneous rock",        // source tokens 0..3
  "basalt formed_by lava cooling",   // separator at 4, tokens 5..8
];

describe("copy_index mapping", () => {
  it("computes entry spans with separator slots between entries", () => {
    expect(knowledgeEntrySpans(KNOWLEDGE)).toEqual([
      { entry: 0, start: 0, end: 4 },
      { entry: 1, start: 5, end: 9 },
    ]);
  });

  it("maps an index inside the first entry", () => {
    expect(entryForCopyIndex(2, KNOWLEDGE)).toBe(0);
  });

  it("maps an index inside the second entry", () => {
    expect(entryForCopyIndex(7, KNOWLEDGE)).toBe(1);
  });

  it("maps a hovered copy token to exactly one entry", () => {
    const hits = new Set<number | null>();
    for (let i = 0; i < 9; i += 1) {
      const entry = entryForCopyIndex(i, KNOWLEDGE);
      if (entry !== null) hits.add(entry);
    }
    expect(hits).toEqual(new Set([0, 1]));
  });

  it("separator and context indices map to no entry", () => {
    expect(entryForCopyIndex(4, KNOWLEDGE)).toBeNull();
    expect(entryForCopyIndex(9, KNOWLEDGE)).toBeNull(); // first context token
    expect(entryForCopyIndex(null, KNOWLEDGE)).toBeNull();
  });
});
