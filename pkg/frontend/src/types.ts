export type EventKind =
  | "thinking"
  | "tool_call"
  | "tool_result"
  | "answer"
  | "sources"
  | "error"
  | "done";

/** One decoded SSE frame: the `event:` name plus its parsed `data:` JSON. */
export interface SseFrame {
  event: string;
  data: AgentEventData;
}

export interface AgentEventData {
  kind?: string;
  seq?: number;
  payload?: Record<string, unknown>;
}

export interface SourceLink {
  title: string;
  url: string;
  category?: string;
  chunk_id?: string;
}

export type MessageStatus = "pending" | "streaming" | "complete" | "error";

export interface UiMessage {
  author: "student" | "mentor";
  text: string;
  status: MessageStatus;
  toolBadges: string[];
  sources: SourceLink[];
}

export interface SessionTranscript {
  id: string;
  language_hint?: string | null;
  messages: Array<{ role: string; content: string }>;
}

export function studentMessage(text: string): UiMessage {
  return { author: "student", text, status: "complete", toolBadges: [], sources: [] };
}

export function pendingMentorMessage(): UiMessage {
  return { author: "mentor", text: "", status: "pending", toolBadges: [], sources: [] };
}
