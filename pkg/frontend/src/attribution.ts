/**
 * Map a copy_index (position in the model's knowledge+context source token
 * sequence) back to the knowledge entry that contains it.
 *
 * The source sequence starts with the knowledge entries' tokens joined by a
 * single separator token between consecutive entries, followed by the
 * context tokens. Indices on a separator or beyond the knowledge region
 * (context copies) map to null.
 */
import { tokenize } from "./tokenize.js";

export interface EntrySpan {
  entry: number;
  start: number; // inclusive source-token index
  end: number;   // exclusive
}

export function knowledgeEntrySpans(knowledge: string[]): EntrySpan[] {
  const spans: EntrySpan[] = [];
  let offset = 0;
  knowledge.forEach((line, entry) => {
    if (entry > 0) offset += 1; // the separator token between entries
    const len = tokenize(line).length;
    spans.push({ entry, start: offset, end: offset + len });
    offset += len;
  });
  return spans;
}

export function entryForCopyIndex(
  copyIndex: number | null,
  knowledge: string[],
): number | null {
  if (copyIndex === null || copyIndex < 0) return null;
  for (const span of knowledgeEntrySpans(knowledge)) {
    if (copyIndex >= span.start && copyIndex < span.end) return span.entry;
  }
  return null; // separator slot or a context-token copy
}
