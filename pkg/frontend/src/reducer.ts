import type { SourceLink, SseFrame, UiMessage } from "./types.js";
import { pendingMentorMessage } from "./types.js";

/**
 * State machine over the agent's event grammar:
 *
 *   thinking -> (tool_call -> tool_result)* -> answer -> sources -> done
 *
 * with `error` allowed anywhere before `done`. Anything else (a sequence
 * number gap, a kind the current phase does not admit, an event after the
 * stream closed) is a grammar violation and is surfaced as a visible
 * client error on the message. Events are never silently reordered or
 * dropped.
 */
export type Phase =
  | "idle"
  | "thinking"
  | "awaiting_result"
  | "answered"
  | "sourced"
  | "errored"
  | "done"
  | "failed";

export interface StreamState {
  phase: Phase;
  nextSeq: number;
  thinkingCount: number;
  pendingTool: string | null;
  clientError: string | null;
  message: UiMessage;
}

export function newStream(): StreamState {
  return {
    phase: "idle",
    nextSeq: 0,
    thinkingCount: 0,
    pendingTool: null,
    clientError: null,
    message: pendingMentorMessage(),
  };
}

function violate(state: StreamState, why: string): StreamState {
  state.phase = "failed";
  // keep the first violation: later frames hitting a failed stream are noise
  if (state.clientError === null) state.clientError = why;
  state.message.status = "error";
  return state;
}

export function reduce(state: StreamState, frame: SseFrame): StreamState {
  if (state.phase === "done" || state.phase === "failed") {
    return violate(state, `event '${frame.event}' arrived after the stream ended`);
  }

  if (frame.event === "done") {
    if (state.phase === "sourced") {
      state.phase = "done";
      state.message.status = "complete";
      return state;
    }
    if (state.phase === "errored") {
      state.phase = "done"; // the message keeps its error status
      return state;
    }
    return violate(state, `'done' arrived during phase '${state.phase}'`);
  }

  const { kind, seq, payload = {} } = frame.data;
  if (kind !== frame.event) {
    return violate(state, `frame name '${frame.event}' does not match payload kind '${kind}'`);
  }
  if (seq !== state.nextSeq) {
    return violate(
      state,
      `out-of-order event: expected seq ${state.nextSeq}, got ${seq} ('${frame.event}')`,
    );
  }
  state.nextSeq = seq + 1;

  switch (frame.event) {
    case "thinking":
      if (state.phase !== "idle") return violate(state, "second 'thinking' in one stream");
      state.phase = "thinking";
      state.thinkingCount += 1;
      state.message.status = "streaming";
      return state;

    case "tool_call": {
      if (state.phase !== "thinking") {
        return violate(state, `'tool_call' during phase '${state.phase}'`);
      }
      const tool = String(payload.tool ?? "");
      state.phase = "awaiting_result";
      state.pendingTool = tool;
      state.message.toolBadges.push(tool);
      return state;
    }

    case "tool_result":
      if (state.phase !== "awaiting_result") {
        return violate(state, "'tool_result' without a pending tool call");
      }
      if (payload.tool !== state.pendingTool) {
        return violate(
          state,
          `result for '${payload.tool}' while '${state.pendingTool}' was running`,
        );
      }
      state.phase = "thinking";
      state.pendingTool = null;
      return state;

    case "answer":
      if (state.phase !== "thinking") {
        return violate(state, `'answer' during phase '${state.phase}'`);
      }
      state.phase = "answered";
      state.message.text = String(payload.text ?? "");
      return state;

    case "sources":
      if (state.phase !== "answered") {
        return violate(state, `'sources' during phase '${state.phase}'`);
      }
      state.phase = "sourced";
      state.message.sources = (payload.sources as SourceLink[] | undefined) ?? [];
      return state;

    case "error":
      state.phase = "errored"; // only 'done' may follow
      state.message.status = "error";
      state.message.text = String(payload.message ?? "the mentor hit an internal error");
      return state;

    default:
      return violate(state, `unknown event kind '${frame.event}'`);
  }
}

/** Run a whole recorded stream through a fresh state machine. */
export function reduceAll(frames: SseFrame[]): StreamState {
  let state = newStream();
  for (const frame of frames) state = reduce(state, frame);
  return state;
}
