"""Question rephrasing, retrieval, and grounded answering."""
from __future__ import annotations

import logging
import textwrap
from dataclasses import dataclass, field

from .assets import load_prompt
from .gateway import ChatRequest, Gateway
from .index import EmbedderMismatch, ScoredHit, VectorIndex
from .model import DocumentCategory, Session, SourceRef, render_history

log = logging.getLogger(__name__)

DEFAULT_TOP_K = 4
PROMPT_CHAR_BUDGET = 12000
DEFAULT_HISTORY_WINDOW = 12

_REPHRASE_TEMPLATE = textwrap.dedent(
    """\
    Rewrite the student's latest question so it stands alone without the
    conversation. Resolve pronouns and vague references using the history.
    Return only the rewritten question.

    Conversation so far:
    {history}

    Latest question: {question}

    Standalone question:"""
)


def rephrase_question(
    question: str,
    session: Session,
    gateway: Gateway,
    max_turns: int = DEFAULT_HISTORY_WINDOW,
) -> str:
    """Fold conversation context into the question; identity when there is none."""
    history = render_history(session, max_turns)
    if not history:
        return question
    req = ChatRequest(
        model=gateway.config.model,
        messages=(("user", _REPHRASE_TEMPLATE.format(history=history, question=question)),),
    )
    rewritten = gateway.complete(req).content.strip()
    return rewritten or question


def retrieve(
    question: str,
    index: VectorIndex,
    embedder,
    k: int = DEFAULT_TOP_K,
    category: DocumentCategory | None = None,
) -> list[ScoredHit]:
    if index.embedder_tag is not None and embedder.tag != index.embedder_tag:
        raise EmbedderMismatch(
            f"index holds {index.embedder_tag!r} vectors but embedder produces {embedder.tag!r}"
        )
    return index.search(embedder.embed_text(question), k=k, category=category)


@dataclass
class RagAnswer:
    text: str
    sources: list[SourceRef] = field(default_factory=list)
    cited: bool = True


def _context_block(position: int, hit: ScoredHit) -> str:
    return f"[{position}] {hit.ref.title} ({hit.ref.url})\n{hit.text}"


def answer_with_documents(
    question: str,
    hits: list[ScoredHit],
    gateway: Gateway,
    *,
    persona_text: str | None = None,
    prompts_dir=None,
    char_budget: int = PROMPT_CHAR_BUDGET,
    language_hint: str | None = None,
) -> RagAnswer:
    """Answer from retrieved passages; cites exactly the passages it was shown.

    If the assembled prompt would blow the character budget, whole blocks are
    dropped lowest-score-first (hits arrive sorted descending). With no usable
    passage the prompt says so and the answer is flagged uncited.
    """
    persona = persona_text if persona_text is not None else load_prompt("persona_rag", prompts_dir)
    system = persona
    if language_hint:
        system += f"\n\nWrite your answer in the student's preferred language: {language_hint}."

    kept = list(hits)
    while True:
        if kept:
            blocks = "\n\n".join(_context_block(i + 1, h) for i, h in enumerate(kept))
            user = (
                "Context passages:\n\n"
                f"{blocks}\n\n"
                f"Question: {question}\n\n"
                "Answer using the passages above and name the passage numbers you relied on."
            )
        else:
            user = (
                "No relevant passages were found in the knowledge base for this "
                "question. Say that plainly, then give your best general guidance.\n\n"
                f"Question: {question}"
            )
        if len(system) + len(user) <= char_budget or not kept:
            break
        dropped = kept.pop()
        log.info("dropping lowest-scored context block %s to fit prompt budget", dropped.ref.chunk_id)

    req = ChatRequest(model=gateway.config.model, messages=(("system", system), ("user", user)))
    text = gateway.complete(req).content
    return RagAnswer(text=text, sources=[h.ref for h in kept], cited=bool(kept))
