import type { SessionTranscript, SourceLink, UiMessage } from "./types.js";

/**
 * Pure string rendering: every view is a function from state to HTML text.
 * Keeping the DOM out of this module lets tests assert on exact markup
 * without a browser.
 */

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

// Only plain web links become anchors; anything else stays inert text.
function safeUrl(url: string): string | null {
  return /^https?:\/\//i.test(url) ? url : null;
}

function renderSources(sources: SourceLink[]): string {
  if (sources.length === 0) return "";
  const items = sources.map((source) => {
    const title = escapeHtml(source.title || source.url);
    const url = safeUrl(source.url);
    const link = url
      ? `<a href="${escapeHtml(url)}" target="_blank" rel="noopener">${title}</a>`
      : `<span class="dead-link">${title}</span>`;
    const category = source.category ? ` <span class="category">${escapeHtml(source.category)}</span>` : "";
    return `<li>${link}${category}</li>`;
  });
  return `<section class="sources"><h4>Sources</h4><ul>${items.join("")}</ul></section>`;
}

function renderBadges(badges: string[]): string {
  if (badges.length === 0) return "";
  const spans = badges.map((name) => `<span class="tool-badge">${escapeHtml(name)}</span>`);
  return `<div class="badges">${spans.join("")}</div>`;
}

function renderText(text: string): string {
  if (!text) return "";
  return `<p class="text">${escapeHtml(text).replace(/\n/g, "<br>")}</p>`;
}

export function renderMessage(message: UiMessage, clientError: string | null = null): string {
  const author = message.author === "student" ? "You" : "Mentor";
  const busy =
    message.status === "pending" || message.status === "streaming"
      ? `<span class="thinking-indicator" aria-live="polite">thinking&hellip;</span>`
      : "";
  const errorNote = clientError
    ? `<p class="client-error" role="alert">${escapeHtml(clientError)}</p>`
    : "";
  return [
    `<article class="message ${message.author} ${message.status}">`,
    `<header>${author}</header>`,
    renderBadges(message.toolBadges),
    busy,
    renderText(message.text),
    errorNote,
    renderSources(message.sources),
    `</article>`,
  ]
    .filter(Boolean)
    .join("");
}

/**
 * Render the whole conversation. A client-side grammar violation always
 * belongs to the in-flight exchange, so `clientError` is attached to the
 * last message.
 */
export function renderTranscript(messages: UiMessage[], clientError: string | null = null): string {
  if (messages.length === 0) {
    return `<p class="empty-state">Ask the mentor a question to get started.</p>`;
  }
  return messages
    .map((message, i) => renderMessage(message, i === messages.length - 1 ? clientError : null))
    .join("");
}

/** Convert a persisted session into display messages, newest last. */
export function transcriptMessages(transcript: SessionTranscript): UiMessage[] {
  const out: UiMessage[] = [];
  for (const turn of transcript.messages) {
    if (turn.role === "student") {
      out.push({ author: "student", text: turn.content, status: "complete", toolBadges: [], sources: [] });
    } else if (turn.role === "assistant") {
      out.push({ author: "mentor", text: turn.content, status: "complete", toolBadges: [], sources: [] });
    }
    // system and tool turns are agent internals, not part of the chat view
  }
  return out;
}
