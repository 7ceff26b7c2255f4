"""Tool-dispatching agent loop over a plain-text reasoning format.

The model writes `Thought` / `Action` / `Action Input` turns (or a
`Final Answer`), the loop executes the named tool and feeds the observation
back. Parsing is text-based on purpose: it works with any chat-completion
provider and replays deterministically from fixtures.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .assets import load_prompt
from .errors import InvalidArgument, MentorError
from .gateway import ChatRequest, FixtureMiss, Gateway, TransportError
from .model import FINAL, AgentStep, Role, Session, SourceRef

log = logging.getLogger(__name__)


class MalformedStep(MentorError):
    pass


class EmptyRegistry(MentorError):
    pass


_TOOL_NAME = re.compile(r"^[a-z][a-z0-9_]*$")

# Action value recorded when the model never produced a parseable step.
MALFORMED_ACTION = "malformed"

_FORMAT_REMINDER = (
    "Your last reply did not follow the required format. Reply with either an "
    "'Action:' line naming one tool plus an 'Action Input:' line, or a "
    "'Final Answer:' line with the complete answer."
)


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str
    input_hint: str
    executor: Callable[[str, "ToolContext"], "ToolOutcome"]

    def __post_init__(self) -> None:
        if not _TOOL_NAME.match(self.name):
            raise InvalidArgument(f"tool name {self.name!r} must match [a-z][a-z0-9_]*")


@dataclass
class ToolOutcome:
    observation: str
    sources: list[SourceRef] = field(default_factory=list)
    verified_values: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.observation or not self.observation.strip():
            raise InvalidArgument("tool observation must be non-empty")


@dataclass
class AgentConfig:
    max_steps: int = 8
    verify: bool = True
    parse_retries: int = 2

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise InvalidArgument("max_steps must be at least 1")
        if self.parse_retries < 0:
            raise InvalidArgument("parse_retries must be non-negative")


@dataclass
class ToolContext:
    """Run-scoped resources handed to tool executors."""

    gateway: Gateway
    prompts_dir: str | None = None
    language_hint: str | None = None


EVENT_KINDS = ("thinking", "tool_call", "tool_result", "answer", "sources", "error")


@dataclass(frozen=True)
class AgentEvent:
    kind: str
    payload: dict
    seq: int

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise InvalidArgument(f"unknown event kind {self.kind!r}")
        if self.seq < 0:
            raise InvalidArgument("seq must be non-negative")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "seq": self.seq, "payload": self.payload}

    @classmethod
    def from_dict(cls, data: dict) -> "AgentEvent":
        return cls(kind=data["kind"], payload=data["payload"], seq=data["seq"])


@dataclass(frozen=True)
class FinalAnswer:
    thought: str
    text: str


_THOUGHT = "Thought:"
_ACTION = "Action:"
_ACTION_INPUT = "Action Input:"
_FINAL_ANSWER = "Final Answer:"


def parse_react(text: str) -> AgentStep | FinalAnswer:
    """Parse one model turn.

    Grammar: an optional `Thought:` line, then either `Final Answer:` with
    the rest of the text, or `Action:` plus `Action Input:` whose payload
    runs to the end. The first directive found wins; text before it is
    treated as thought.
    """
    lines = text.strip().splitlines()
    directive_at = None
    directive = None
    for i, line in enumerate(lines):
        stripped = line.strip()
        if stripped.startswith(_FINAL_ANSWER):
            directive_at, directive = i, _FINAL_ANSWER
            break
        if stripped.startswith(_ACTION_INPUT):
            continue  # an input line is not a directive opener
        if stripped.startswith(_ACTION):
            directive_at, directive = i, _ACTION
            break
    if directive_at is None:
        raise MalformedStep("no Action or Final Answer directive found")

    thought_lines = [line.strip() for line in lines[:directive_at]]
    if thought_lines and thought_lines[0].startswith(_THOUGHT):
        thought_lines[0] = thought_lines[0][len(_THOUGHT):]
    thought = "\n".join(thought_lines).strip()

    head = lines[directive_at].strip()[len(directive):]
    tail = lines[directive_at + 1:]

    if directive == _FINAL_ANSWER:
        answer = "\n".join([head, *tail]).strip()
        if not answer:
            raise MalformedStep("empty final answer")
        return FinalAnswer(thought=thought, text=answer)

    action = head.strip()
    if not action:
        raise MalformedStep("Action line names no tool")
    payload_at = None
    for j, line in enumerate(tail):
        if line.strip().startswith(_ACTION_INPUT):
            payload_at = j
            break
    if payload_at is None:
        raise MalformedStep("Action without Action Input")
    payload_head = tail[payload_at].strip()[len(_ACTION_INPUT):]
    payload = "\n".join([payload_head, *tail[payload_at + 1:]]).strip()
    return AgentStep(thought=thought, action=action, action_input=payload)


def render_step(step: AgentStep) -> str:
    """Inverse of parse_react for well-formed steps."""
    if step.is_final:
        return f"{_THOUGHT} {step.thought}\n{_FINAL_ANSWER} {step.action_input}"
    return (
        f"{_THOUGHT} {step.thought}\n{_ACTION} {step.action}\n{_ACTION_INPUT} {step.action_input}"
    )


def agent_system_prompt(
    registry: Mapping[str, ToolSpec],
    language_hint: str | None = None,
    *,
    persona_text: str | None = None,
    prompts_dir: str | None = None,
) -> str:
    if not registry:
        raise EmptyRegistry("the agent needs at least one tool")
    persona = persona_text if persona_text is not None else load_prompt("persona_mentor", prompts_dir)
    roster = "\n".join(
        f"- {spec.name}: {spec.description} Input: {spec.input_hint}"
        for spec in sorted(registry.values(), key=lambda s: s.name)
    )
    parts = [
        persona,
        "You can call these tools:\n" + roster,
        (
            "Follow this exact format in every reply.\n"
            "To use a tool:\n"
            "Thought: your reasoning about what to do next\n"
            "Action: one tool name from the list\n"
            "Action Input: the input to hand that tool\n"
            "You will then receive an Observation line with the tool result.\n"
            "When you can answer the student:\n"
            "Thought: your reasoning\n"
            "Final Answer: the complete answer"
        ),
    ]
    if language_hint:
        parts.append(f"The student prefers answers in '{language_hint}'. Write the Final Answer in that language.")
    return "\n\n".join(parts)


@dataclass(frozen=True)
class VerifyOutcome:
    accept: bool
    reason: str = ""
    checked: bool = True  # False when the gate failed open


def verify_answer(
    question: str,
    draft: str,
    verified_values: list[tuple[str, str]],
    gateway: Gateway,
    *,
    prompts_dir: str | None = None,
) -> VerifyOutcome:
    """Two-stage gate: exact value check first, then one judge call.

    The deterministic stage needs no model: a draft that drops a
    tool-verified value is sent back immediately. Gateway failures fail
    open so a flaky judge cannot block an answer.
    """
    for label, value in verified_values:
        if value not in draft:
            return VerifyOutcome(accept=False, reason=f"missing verified value {label}")
    persona = load_prompt("persona_verifier", prompts_dir)
    facts = "\n".join(f"- {label}: {value}" for label, value in verified_values) or "(none)"
    user = (
        f"Question: {question}\n\n"
        f"Tool-verified values:\n{facts}\n\n"
        f"Draft answer:\n{draft}\n\n"
        "Reply ACCEPT or REVISE: <reason>."
    )
    try:
        reply = gateway.complete(
            ChatRequest(model=gateway.config.model, messages=(("system", persona), ("user", user)))
        ).content.strip()
    except (TransportError, FixtureMiss) as err:
        log.warning("verification failed open: %s", err)
        return VerifyOutcome(accept=True, checked=False)
    upper = reply.upper()
    if upper.startswith("ACCEPT"):
        return VerifyOutcome(accept=True)
    if upper.startswith("REVISE"):
        reason = reply.split(":", 1)[1].strip() if ":" in reply else "judge requested a revision"
        return VerifyOutcome(accept=False, reason=reason)
    log.warning("unparseable verification verdict %r; failing open", reply[:80])
    return VerifyOutcome(accept=True, checked=False)


@dataclass
class AgentResult:
    answer: str
    sources: list[SourceRef]
    trace: list[AgentStep]
    verified: bool
    budget_exhausted: bool = False
    revised: bool = False


def _history_messages(session: Session, window: int) -> list[tuple[str, str]]:
    turns = [m for m in session.messages if m.role in (Role.STUDENT, Role.ASSISTANT)]
    mapped = []
    for m in turns[-window:]:
        mapped.append(("user" if m.role is Role.STUDENT else "assistant", m.content))
    return mapped


def run_agent(
    session: Session,
    question: str,
    registry: Mapping[str, ToolSpec],
    config: AgentConfig,
    gateway: Gateway,
    event_sink: Callable[[AgentEvent], None] | None = None,
    *,
    context: ToolContext | None = None,
    history_window: int = 12,
) -> AgentResult:
    """Drive the reasoning loop until a final answer or the step budget ends.

    Emits thinking / tool_call / tool_result / answer / sources events in
    that grammar; malformed model output gets up to `parse_retries`
    corrective reminders per step before being recorded as a failed step.
    """
    if not registry:
        raise EmptyRegistry("the agent needs at least one tool")
    context = context or ToolContext(gateway=gateway, language_hint=session.language_hint)

    seq = 0

    def emit(kind: str, payload: dict) -> None:
        nonlocal seq
        if event_sink is not None:
            event_sink(AgentEvent(kind=kind, payload=payload, seq=seq))
        seq += 1

    emit("thinking", {})

    system = agent_system_prompt(
        registry, session.language_hint, prompts_dir=context.prompts_dir
    )
    messages: list[tuple[str, str]] = [("system", system)]
    messages.extend(_history_messages(session, history_window))
    messages.append(("user", question))

    trace: list[AgentStep] = []
    sources: list[SourceRef] = []
    seen_chunks: set[str] = set()
    verified_values: list[tuple[str, str]] = []
    retries_left = config.parse_retries
    revised = False

    def finish(answer: str, verified: bool, budget_exhausted: bool = False) -> AgentResult:
        emit("answer", {"text": answer, "verified": verified})
        emit("sources", {"sources": [ref.to_dict() for ref in sources]})
        return AgentResult(
            answer=answer,
            sources=list(sources),
            trace=trace,
            verified=verified,
            budget_exhausted=budget_exhausted,
            revised=revised,
        )

    while len(trace) < config.max_steps:
        reply = gateway.complete(
            ChatRequest(model=gateway.config.model, messages=tuple(messages))
        ).content
        try:
            parsed = parse_react(reply)
        except MalformedStep as err:
            messages.append(("assistant", reply))
            messages.append(("user", _FORMAT_REMINDER))
            if retries_left > 0:
                retries_left -= 1
                log.info("malformed step (%s); sending format reminder", err)
                continue
            # Retries exhausted: burn a step so a stuck model cannot loop forever.
            trace.append(
                AgentStep(
                    thought="",
                    action=MALFORMED_ACTION,
                    action_input=reply.strip(),
                    observation=_FORMAT_REMINDER,
                )
            )
            retries_left = config.parse_retries
            continue
        retries_left = config.parse_retries

        if isinstance(parsed, FinalAnswer):
            draft = parsed.text
            trace.append(
                AgentStep(thought=parsed.thought, action=FINAL, action_input=draft)
            )
            if not config.verify:
                return finish(draft, verified=False)
            if revised:
                # Second draft after the one allowed revision: returned as is,
                # with only the deterministic value check setting the flag.
                ok = all(value in draft for _, value in verified_values)
                return finish(draft, verified=ok)
            outcome = verify_answer(
                question, draft, verified_values, gateway, prompts_dir=context.prompts_dir
            )
            if outcome.accept:
                return finish(draft, verified=outcome.checked)
            revised = True
            log.info("draft rejected (%s); asking for one revision", outcome.reason)
            messages.append(("assistant", render_step(trace[-1])))
            messages.append(
                ("user", f"Your draft answer was rejected: {outcome.reason}. Produce a corrected Final Answer.")
            )
            continue

        # Tool step.
        step = parsed
        emit("tool_call", {"tool": step.action, "input": step.action_input})
        if step.action not in registry:
            observation = f"unknown tool {step.action}; available: {', '.join(sorted(registry))}"
        else:
            spec = registry[step.action]
            try:
                outcome = spec.executor(step.action_input, context)
            except (TransportError, FixtureMiss):
                raise
            except MentorError as err:
                observation = f"tool {step.action} failed: {err}"
                log.warning("tool %s failed: %s", step.action, err)
            else:
                observation = outcome.observation
                verified_values.extend(outcome.verified_values)
                for ref in outcome.sources:
                    if ref.chunk_id not in seen_chunks:
                        seen_chunks.add(ref.chunk_id)
                        sources.append(ref)
        emit("tool_result", {"tool": step.action, "observation": observation})
        step.observation = observation
        trace.append(step)
        messages.append(
            ("assistant", render_step(AgentStep(step.thought, step.action, step.action_input)))
        )
        messages.append(("user", f"Observation: {observation}"))

    log.warning("step budget exhausted after %d steps", len(trace))
    last_observation = next(
        (s.observation for s in reversed(trace) if s.observation and s.action != MALFORMED_ACTION),
        None,
    )
    if last_observation:
        answer = (
            "I ran out of reasoning steps before finishing. Here is what the tools "
            f"found so far:\n{last_observation}"
        )
    else:
        answer = "I ran out of reasoning steps before reaching an answer. Please rephrase or narrow the question."
    return finish(answer, verified=False, budget_exhausted=True)
