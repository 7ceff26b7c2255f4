import { readFileSync } from "node:fs";
import type { AgentEventData, SseFrame } from "../src/types.js";

/** Recorded SSE transcripts shipped with the backend package. */
export function readTranscript(name: string): string {
  return readFileSync(new URL(`../../fixtures/transcripts/${name}`, import.meta.url), "utf-8");
}

export function frame(event: string, data: AgentEventData): SseFrame {
  return { event, data };
}
