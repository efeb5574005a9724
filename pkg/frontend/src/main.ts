/** DOM glue: transcript, composer, knowledge panel, hover highlighting. */

import { ApiClient, ApiError } from "./api.js";
import {
  applyBotResponse,
  applyUserMessage,
  initialState,
} from "./state.js";
import {
  highlightForHover,
  renderKnowledgePanel,
  renderMessageHtml,
  renderSwitchBanner,
} from "./render.js";
import { UiSessionState } from "./types.js";

const api = new ApiClient(
  new URLSearchParams(location.search).get("api") ?? "");

let state: UiSessionState | null = null;
let inFlight = false;

const transcript = document.getElementById("transcript") as HTMLElement;
const panel = document.getElementById("knowledge") as HTMLElement;
const input = document.getElementById("composer") as HTMLInputElement;
const send = document.getElementById("send") as HTMLButtonElement;
const status = document.getElementById("status") as HTMLElement;

function redrawPanel(highlightEntry: number | null = null): void {
  if (!state) return;
  panel.innerHTML = renderKnowledgePanel(state.knowledge, highlightEntry);
}

function appendHtml(html: string): void {
  transcript.insertAdjacentHTML("beforeend", html);
  transcript.scrollTop = transcript.scrollHeight;
}

function setBusy(busy: boolean): void {
  inFlight = busy;
  send.disabled = busy; // one in-flight request per session
}

async function submit(): Promise<void> {
  const text = input.value.trim();
  if (!text || inFlight || !state) return; // empty input blocked client-side
  input.value = "";
  state = applyUserMessage(state, text, Date.now());
  appendHtml(renderMessageHtml(state.messages[state.messages.length - 1]));
  setBusy(true);
  try {
    const body = await api.sendMessage(state.sessionId, text);
    const before = state.activeEntity;
    state = applyBotResponse(state, body, Date.now());
    if (body.topic_switched && body.entity !== null) {
      appendHtml(renderSwitchBanner({
        turn: 0, old_entity: before, new_entity: body.entity,
        score: body.ts_score,
      }));
    }
    appendHtml(renderMessageHtml(state.messages[state.messages.length - 1]));
    redrawPanel();
  } catch (err) {
    const detail = err instanceof ApiError ? err.message : String(err);
    appendHtml(
      `<div class="msg error">request failed: ${detail} ` +
      `<button class="retry">retry</button></div>`);
    const retry = transcript.querySelector(".msg.error:last-child .retry");
    retry?.addEventListener("click", () => {
      retry.closest(".msg.error")?.remove();
      input.value = text;
      void submit();
    }, { once: true });
  } finally {
    setBusy(false);
  }
}

transcript.addEventListener("mouseover", (event) => {
  const target = event.target as HTMLElement;
  if (!state || !target.classList.contains("copy")) return;
  const idx = Number(target.dataset.copyIndex);
  redrawPanel(highlightForHover(idx, state.knowledge));
});
transcript.addEventListener("mouseout", (event) => {
  const target = event.target as HTMLElement;
  if (target.classList.contains("copy")) redrawPanel(null);
});

send.addEventListener("click", () => void submit());
input.addEventListener("keydown", (event) => {
  if (event.key === "Enter") void submit();
});

async function boot(): Promise<void> {
  try {
    const health = await api.health();
    status.textContent =
      `connected (${health.kg_size} triples, ${health.checkpoint})`;
    const created = await api.createSession();
    state = initialState(created.id);
    redrawPanel();
  } catch (err) {
    status.textContent = `cannot reach the service: ${String(err)}`;
  }
}

void boot();
