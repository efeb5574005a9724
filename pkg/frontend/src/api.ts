/** Thin fetch client for the chat service; base URL is the one setting. */

import { MessageResponse, SessionSnapshot } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const payload = await resp.json();
        if (payload && typeof payload.detail === "string") detail = payload.detail;
      } catch {
        /* keep the status text */
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  createSession(): Promise<{ id: string }> {
    return this.request("POST", "/api/sessions");
  }

  sendMessage(sessionId: string, text: string): Promise<MessageResponse> {
    return this.request("POST", `/api/sessions/${sessionId}/messages`, { text });
  }

  getSession(sessionId: string): Promise<SessionSnapshot> {
    return this.request("GET", `/api/sessions/${sessionId}`);
  }

  health(): Promise<{ status: string; checkpoint: string; kg_size: number }> {
    return this.request("GET", "/api/health");
  }
}
