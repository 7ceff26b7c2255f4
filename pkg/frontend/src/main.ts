import { ApiError, createSession, sendMessage } from "./api.js";
import { newStream, reduce, type StreamState } from "./reducer.js";
import { renderTranscript } from "./render.js";
import { studentMessage, type UiMessage } from "./types.js";

// DOM shell. All view logic lives in render.ts; this file only wires
// events to state and swaps innerHTML.

interface App {
  sessionId: string | null;
  messages: UiMessage[];
  stream: StreamState | null;
  busy: boolean;
}

function init(): void {
  const transcriptEl = document.getElementById("transcript") as HTMLElement;
  const formEl = document.getElementById("composer") as HTMLFormElement;
  const inputEl = document.getElementById("question") as HTMLTextAreaElement;
  const sendEl = document.getElementById("send") as HTMLButtonElement;
  const languageEl = document.getElementById("language") as HTMLSelectElement;
  const statusEl = document.getElementById("status") as HTMLElement;

  const app: App = { sessionId: null, messages: [], stream: null, busy: false };

  function render(): void {
    transcriptEl.innerHTML = renderTranscript(app.messages, app.stream?.clientError ?? null);
    transcriptEl.scrollTop = transcriptEl.scrollHeight;
    // one in-flight exchange at a time
    inputEl.disabled = app.busy || app.sessionId === null;
    sendEl.disabled = app.busy || app.sessionId === null;
  }

  async function send(question: string): Promise<void> {
    if (app.busy || !app.sessionId) return;
    const hint = languageEl.value || null;
    const stream = newStream();
    app.messages.push(studentMessage(question));
    app.messages.push(stream.message);
    app.stream = stream;
    app.busy = true;
    inputEl.value = "";
    render();

    try {
      await sendMessage(app.sessionId, question, hint, (frame) => {
        reduce(stream, frame);
        render();
      });
    } catch (err) {
      stream.message.status = "error";
      if (!stream.message.text) {
        stream.message.text =
          err instanceof ApiError ? err.message : "Could not reach the mentor service.";
      }
    } finally {
      app.busy = false;
      if (stream.message.status === "error" && !inputEl.value) {
        inputEl.value = question; // retry affordance
      }
      render();
      inputEl.focus();
    }
  }

  formEl.addEventListener("submit", (event) => {
    event.preventDefault();
    const question = inputEl.value.trim();
    if (question) void send(question);
  });

  inputEl.addEventListener("keydown", (event) => {
    if (event.key === "Enter" && !event.shiftKey) {
      event.preventDefault();
      formEl.requestSubmit();
    }
  });

  render();
  createSession()
    .then((id) => {
      app.sessionId = id;
      statusEl.textContent = "connected";
      render();
    })
    .catch(() => {
      statusEl.textContent = "could not start a session; is the mentor service running?";
    });
}

if (typeof document !== "undefined") {
  init();
}
