import { readSseStream } from "./sse.js";
import type { SessionTranscript, SseFrame } from "./types.js";

// The page is served by the mentor service itself, so all paths are relative.

export class ApiError extends Error {
  status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.status = status;
  }
}

async function fail(response: Response): Promise<never> {
  let detail = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body, keep the status line
  }
  throw new ApiError(response.status, detail);
}

export async function createSession(languageHint: string | null = null): Promise<string> {
  const response = await fetch("/api/sessions", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ language_hint: languageHint }),
  });
  if (!response.ok) await fail(response);
  const body = await response.json();
  return body.session_id as string;
}

export async function fetchSession(sessionId: string): Promise<SessionTranscript> {
  const response = await fetch(`/api/sessions/${encodeURIComponent(sessionId)}`);
  if (!response.ok) await fail(response);
  return (await response.json()) as SessionTranscript;
}

/**
 * Send one student message and stream the mentor's event frames back.
 * EventSource cannot POST, so this reads the SSE body off a fetch stream.
 */
export async function sendMessage(
  sessionId: string,
  content: string,
  languageHint: string | null,
  onFrame: (frame: SseFrame) => void,
): Promise<void> {
  const response = await fetch(`/api/sessions/${encodeURIComponent(sessionId)}/messages`, {
    method: "POST",
    headers: { "content-type": "application/json", accept: "text/event-stream" },
    body: JSON.stringify({ content, language_hint: languageHint }),
  });
  if (!response.ok) await fail(response);
  await readSseStream(response, onFrame);
}
