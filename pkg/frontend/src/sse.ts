import type { SseFrame } from "./types.js";

/**
 * Split raw event-stream text into frames. Tolerates CRLF and multi-line
 * data fields; frames without a data line are dropped. Exposed separately
 * from the stream reader so recorded transcripts can be parsed directly.
 */
export function parseSseText(text: string): SseFrame[] {
  const frames: SseFrame[] = [];
  for (const block of text.split(/\r?\n\r?\n/)) {
    if (!block.trim()) continue;
    let event = "message";
    const dataLines: string[] = [];
    for (const rawLine of block.split(/\r?\n/)) {
      if (rawLine.startsWith("event:")) {
        event = rawLine.slice(6).trim();
      } else if (rawLine.startsWith("data:")) {
        dataLines.push(rawLine.slice(5).trim());
      }
    }
    if (dataLines.length === 0) continue;
    const raw = dataLines.join("\n");
    try {
      frames.push({ event, data: JSON.parse(raw) });
    } catch {
      frames.push({ event, data: { kind: event, payload: { raw } } });
    }
  }
  return frames;
}

/**
 * Read a streaming Response body and deliver each complete frame as it
 * arrives. POST responses cannot use EventSource, so this does the
 * buffering by hand: bytes are accumulated until a blank line closes a
 * frame, and a partial frame left at end of stream is flushed.
 */
export async function readSseStream(
  response: Response,
  onFrame: (frame: SseFrame) => void,
): Promise<void> {
  if (!response.body) throw new Error("response has no body to stream");
  const reader = response.body.getReader();
  const decoder = new TextDecoder("utf-8");
  let buffer = "";

  const drain = (flush: boolean) => {
    const parts = buffer.split(/\r?\n\r?\n/);
    buffer = flush ? "" : parts.pop() ?? "";
    for (const part of parts) {
      for (const frame of parseSseText(part + "\n\n")) onFrame(frame);
    }
  };

  for (;;) {
    const { done, value } = await reader.read();
    if (done) break;
    buffer += decoder.decode(value, { stream: true });
    drain(false);
  }
  buffer += decoder.decode();
  if (buffer.trim()) drain(true);
}
