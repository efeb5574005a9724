/**
 * Mirror of the server tokenizer, needed only to compute knowledge-entry
 * token offsets for copy_index mapping: lowercase, whitespace split,
 * punctuation standalone, hyphens/apostrophes kept inside tokens.
 */
const TOKEN_RE = /[A-Za-z0-9_](?:[A-Za-z0-9_'-]*[A-Za-z0-9_])?|[^\sA-Za-z0-9_]/g;

export function tokenize(text: string): string[] {
  return text.toLowerCase().match(TOKEN_RE) ?? [];
}
