/** Wire types mirroring the HTTP API exactly; the UI adds nothing of its own. */

export interface ApiToken {
  text: string;
  source: "vocab" | "copy";
  copy_index: number | null;
}

export interface MessageResponse {
  response: string;
  tokens: ApiToken[];
  topic_switched: boolean;
  ts_score: number;
  entity: string | null;
  knowledge: string[];
  fallback: boolean;
}

export interface SwitchLogEntry {
  turn: number;
  old_entity: string | null;
  new_entity: string;
  score: number;
}

export interface SessionSnapshot {
  id: string;
  history: { role: "user" | "bot"; text: string }[];
  active_entity: string | null;
  active_knowledge: string[];
  created: number;
  updated: number;
  switch_log: SwitchLogEntry[];
}

export interface UiMessage {
  role: "user" | "bot";
  text: string;
  tokens: ApiToken[] | null; // user bubbles carry no attribution
  tsScore: number | null;
  topicSwitched: boolean;
  timestamp: number;
}

export interface UiSessionState {
  sessionId: string;
  messages: UiMessage[];
  activeEntity: string | null;
  knowledge: string[];
  switchLog: SwitchLogEntry[];
}
