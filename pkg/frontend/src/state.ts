/** Session state derived solely from API responses; no client-side inference. */

import {
  MessageResponse,
  SessionSnapshot,
  UiMessage,
  UiSessionState,
} from "./types.js";

export function initialState(sessionId: string): UiSessionState {
  return {
    sessionId,
    messages: [],
    activeEntity: null,
    knowledge: [],
    switchLog: [],
  };
}

export function applyUserMessage(state: UiSessionState, text: string,
                                 now: number): UiSessionState {
  const message: UiMessage = {
    role: "user", text, tokens: null, tsScore: null,
    topicSwitched: false, timestamp: now,
  };
  return { ...state, messages: [...state.messages, message] };
}

export function applyBotResponse(state: UiSessionState, body: MessageResponse,
                                 now: number): UiSessionState {
  const message: UiMessage = {
    role: "bot",
    text: body.response,
    tokens: body.tokens,
    tsScore: body.ts_score,
    topicSwitched: body.topic_switched,
    timestamp: now,
  };
  const switchLog = body.topic_switched && body.entity !== null
    ? [...state.switchLog, {
        turn: state.messages.filter((m) => m.role === "user").length - 1,
        old_entity: state.activeEntity,
        new_entity: body.entity,
        score: body.ts_score,
      }]
    : state.switchLog;
  return {
    ...state,
    messages: [...state.messages, message],
    activeEntity: body.entity,
    knowledge: body.knowledge,
    switchLog,
  };
}

/** Rebuild transcript state from a server snapshot (reload consistency). */
export function fromSnapshot(snapshot: SessionSnapshot): UiSessionState {
  return {
    sessionId: snapshot.id,
    messages: snapshot.history.map((turn) => ({
      role: turn.role,
      text: turn.text,
      tokens: null,
      tsScore: null,
      topicSwitched: false,
      timestamp: snapshot.updated,
    })),
    activeEntity: snapshot.active_entity,
    knowledge: snapshot.active_knowledge,
    switchLog: snapshot.switch_log,
  };
}
