/** Pure HTML renderers; every displayed value traces to an API field. */

import { entryForCopyIndex } from "./attribution.js";
import { SwitchLogEntry, UiMessage } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderMessageHtml(message: UiMessage): string {
  if (message.role === "user" || message.tokens === null) {
    return `<div class="msg ${message.role}">${escapeHtml(message.text)}</div>`;
  }
  const body = message.tokens
    .map((tok) => {
      const text = escapeHtml(tok.text);
      if (tok.source === "copy" && tok.copy_index !== null) {
        return `<span class="tok copy" data-copy-index="${tok.copy_index}">${text}</span>`;
      }
      return `<span class="tok">${text}</span>`;
    })
    .join(" ");
  const score = message.tsScore === null
    ? ""
    : `<span class="score">match ${message.tsScore.toFixed(2)}</span>`;
  return `<div class="msg bot">${body}${score}</div>`;
}

export function renderSwitchBanner(entry: SwitchLogEntry): string {
  const from = entry.old_entity === null ? "no topic" : escapeHtml(entry.old_entity);
  return `<div class="banner switch">topic: ${from} &rarr; ` +
    `${escapeHtml(entry.new_entity)} (score ${entry.score.toFixed(2)})</div>`;
}

export function renderKnowledgePanel(knowledge: string[],
                                     highlightEntry: number | null = null): string {
  if (knowledge.length === 0) {
    return `<div class="kpanel empty">no active knowledge</div>`;
  }
  const rows = knowledge
    .map((line, i) => {
      const cls = i === highlightEntry ? "kentry highlight" : "kentry";
      return `<li class="${cls}" data-entry="${i}">${escapeHtml(line)}</li>`;
    })
    .join("");
  return `<ul class="kpanel">${rows}</ul>`;
}

/** Which knowledge entry a hovered copy token points at (null: none). */
export function highlightForHover(copyIndex: number | null,
                                  knowledge: string[]): number | null {
  return entryForCopyIndex(copyIndex, knowledge);
}
