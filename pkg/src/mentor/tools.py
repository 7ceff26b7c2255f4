"""Skill tools the agent can dispatch to.

The crypto tool computes its number with the exact integer engine before any
text is generated; the coding tools run fixed multi-step prompt workflows;
the knowledge-base tools wrap category-filtered retrieval.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from enum import Enum

from . import rag
from .agent import ToolContext, ToolOutcome, ToolSpec
from .assets import load_prompt
from .errors import MentorError
from .gateway import ChatRequest
from .index import VectorIndex
from .model import DocumentCategory
from .numtheory import NotInvertible, egcd, mod_inverse, mod_pow

log = logging.getLogger(__name__)


class UnrecognizedTask(MentorError):
    pass


class MissingScriptBlock(MentorError):
    pass


class CryptoOp(Enum):
    MOD_INVERSE = "mod_inverse"
    MOD_POW = "mod_pow"
    GCD = "gcd"


@dataclass(frozen=True)
class CryptoTask:
    op: CryptoOp
    operands: tuple[int, ...]


_INVERSE = re.compile(r"(-?\d+)\s*\^\s*\(\s*-\s*1\s*\)\s*mod\s*(-?\d+)", re.IGNORECASE)
_POWER = re.compile(r"(-?\d+)\s*\^\s*\(?\s*(-?\d+)\s*\)?\s*mod\s*(-?\d+)", re.IGNORECASE)
_GCD = re.compile(r"gcd\s*\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)", re.IGNORECASE)


def parse_crypto_query(text: str) -> CryptoTask:
    """Recognize inverse / power / gcd questions written in plain text."""
    match = _INVERSE.search(text)
    if match:
        return CryptoTask(CryptoOp.MOD_INVERSE, (int(match[1]), int(match[2])))
    match = _POWER.search(text)
    if match:
        base, exponent, modulus = (int(g) for g in match.groups())
        if exponent >= 0:
            return CryptoTask(CryptoOp.MOD_POW, (base, exponent, modulus))
    match = _GCD.search(text)
    if match:
        return CryptoTask(CryptoOp.GCD, (int(match[1]), int(match[2])))
    raise UnrecognizedTask(f"no supported modular arithmetic pattern in {text!r}")


def _describe(task: CryptoTask) -> str:
    if task.op is CryptoOp.MOD_INVERSE:
        a, m = task.operands
        return f"the multiplicative inverse of {a} modulo {m}"
    if task.op is CryptoOp.MOD_POW:
        b, e, m = task.operands
        return f"{b}^{e} mod {m}"
    a, b = task.operands
    return f"gcd({a}, {b})"


def solve_crypto_task(task: CryptoTask) -> str:
    """Exact result as display text; non-invertible cases become teaching content."""
    try:
        if task.op is CryptoOp.MOD_INVERSE:
            return str(mod_inverse(*task.operands))
        if task.op is CryptoOp.MOD_POW:
            return str(mod_pow(*task.operands))
        return str(egcd(*task.operands)[0])
    except NotInvertible as err:
        return f"not invertible (gcd={err.gcd})"


CRYPTO_SECTIONS = ("Topic", "Key Concepts", "Why It Matters", "Step-by-Step Solution")


def crypto_solver_tool(input_text: str, ctx: ToolContext) -> ToolOutcome:
    task = parse_crypto_query(input_text)
    value = solve_crypto_task(task)
    headings = ", ".join(f"'{s}'" for s in CRYPTO_SECTIONS)
    user = (
        f"The student asked: {input_text.strip()}\n"
        f"The computation is {_describe(task)} and the exact verified result is: {value}\n\n"
        f"Write four sections with exactly these headings: {headings}.\n"
        "Identify the topic, explain the background concepts, say why the "
        "operation matters in cryptography, and walk through the algorithm "
        "(for inverses, the extended Euclidean steps). State the verified "
        "result unchanged; do not recompute it."
    )
    reply = ctx.gateway.complete(
        ChatRequest(
            model=ctx.gateway.config.model,
            messages=(
                ("system", load_prompt("persona_crypto_explainer", ctx.prompts_dir)),
                ("user", user),
            ),
        )
    ).content
    observation = f"{reply.strip()}\n\nVerified result: {value}"
    return ToolOutcome(observation=observation, verified_values=[("result", value)])


@dataclass
class WorkflowScript:
    """Output of a multi-step coding workflow."""

    steps: list[tuple[str, str]] = field(default_factory=list)
    final_artifact: str | None = None
    explanations: str = ""


_FENCE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


def extract_fenced_block(text: str) -> str:
    match = _FENCE.search(text)
    if not match:
        raise MissingScriptBlock("reply contains no fenced code block")
    return match.group(1).strip("\n")


def _chat_rounds(system: str, prompts: list[tuple[str, str]], ctx: ToolContext) -> list[tuple[str, str]]:
    """Run labeled prompts as one growing conversation; returns (label, reply) pairs."""
    messages: list[tuple[str, str]] = [("system", system)]
    steps = []
    for label, prompt in prompts:
        messages.append(("user", prompt))
        reply = ctx.gateway.complete(
            ChatRequest(model=ctx.gateway.config.model, messages=tuple(messages))
        ).content
        messages.append(("assistant", reply))
        steps.append((label, reply.strip()))
    return steps


def _workflow_outcome(workflow: WorkflowScript) -> ToolOutcome:
    observation = "\n\n".join(f"## {label}\n{content}" for label, content in workflow.steps)
    if workflow.final_artifact is None:
        observation += "\n\n[warning] the final step produced no fenced script block"
    return ToolOutcome(observation=observation)


SCRIPT_STEPS = ("Task Category", "Data Sources", "Script")


def run_script_coder(input_text: str, ctx: ToolContext) -> WorkflowScript:
    """Three-call workflow: classify the task, pin the data sources, write the script."""
    prompts = [
        (
            SCRIPT_STEPS[0],
            f"A student asks for help writing a script:\n{input_text.strip()}\n\n"
            "First, classify the scripting task: what kind of job is it and "
            "which language or tool fits best? Answer briefly.",
        ),
        (
            SCRIPT_STEPS[1],
            "Next, list the data sources, inputs, and outputs the script must "
            "handle: files, network targets, formats, and any assumptions.",
        ),
        (
            SCRIPT_STEPS[2],
            "Now write the complete script based on the classification and data "
            "sources above. Put the full program in one fenced code block and "
            "explain how to run it.",
        ),
    ]
    steps = _chat_rounds(load_prompt("persona_code_tutor", ctx.prompts_dir), prompts, ctx)
    workflow = WorkflowScript(steps=steps)
    try:
        workflow.final_artifact = extract_fenced_block(steps[-1][1])
    except MissingScriptBlock as err:
        log.warning("script workflow: %s", err)
    workflow.explanations = steps[-1][1]
    return workflow


def script_coder_tool(input_text: str, ctx: ToolContext) -> ToolOutcome:
    return _workflow_outcome(run_script_coder(input_text, ctx))


ML_STAGES = (
    "Categorization",
    "Data Loading",
    "Preprocessing",
    "Model Selection",
    "Training",
    "Prediction",
    "Evaluation",
)
_ML_BATCHES = (ML_STAGES[0:3], ML_STAGES[3:5], ML_STAGES[5:7])


def _split_sections(text: str, headings: tuple[str, ...]) -> list[tuple[str, str]]:
    """Split a reply into the expected sections; a heading the model skipped
    yields a placeholder so the workflow always has every stage."""
    positions = []
    for heading in headings:
        match = re.search(rf"^#*\s*{re.escape(heading)}\s*:?\s*$", text, re.IGNORECASE | re.MULTILINE)
        positions.append((heading, match))
    sections = []
    for i, (heading, match) in enumerate(positions):
        if match is None:
            sections.append((heading, "(not provided)"))
            continue
        start = match.end()
        end = len(text)
        for _, later in positions[i + 1:]:
            if later is not None and later.start() > match.start():
                end = later.start()
                break
        sections.append((heading, text[start:end].strip() or "(not provided)"))
    return sections


def run_ml_classifier(input_text: str, ctx: ToolContext) -> WorkflowScript:
    """Seven design stages batched into three calls, then one full-script call."""
    system = load_prompt("persona_code_tutor", ctx.prompts_dir)
    messages: list[tuple[str, str]] = [("system", system)]
    stage_sections: list[tuple[str, str]] = []
    intro = f"A student asks for a machine-learning classifier:\n{input_text.strip()}\n\n"
    for batch_no, batch in enumerate(_ML_BATCHES):
        headings = ", ".join(f"'{h}'" for h in batch)
        prompt = (
            (intro if batch_no == 0 else "Continue the design. ")
            + f"Work through these stages, one titled section each, with exactly these headings: {headings}."
        )
        if "Evaluation" in batch:
            prompt += " In 'Evaluation', measure accuracy, precision, and recall."
        messages.append(("user", prompt))
        reply = ctx.gateway.complete(
            ChatRequest(model=ctx.gateway.config.model, messages=tuple(messages))
        ).content
        messages.append(("assistant", reply))
        stage_sections.extend(_split_sections(reply, batch))

    messages.append(
        (
            "user",
            "Now produce the complete end-to-end Python script implementing all "
            "stages above, in one fenced code block.",
        )
    )
    script_reply = ctx.gateway.complete(
        ChatRequest(model=ctx.gateway.config.model, messages=tuple(messages))
    ).content
    workflow = WorkflowScript(steps=stage_sections + [("Full Script", script_reply.strip())])
    try:
        workflow.final_artifact = extract_fenced_block(script_reply)
    except MissingScriptBlock as err:
        log.warning("classifier workflow: %s", err)
    workflow.explanations = script_reply.strip()
    return workflow


def ml_classifier_tool(input_text: str, ctx: ToolContext) -> ToolOutcome:
    return _workflow_outcome(run_ml_classifier(input_text, ctx))


def refine_code_chain(
    question: str,
    test_cases: str | None,
    gateway,
    *,
    prompts_dir: str | None = None,
) -> WorkflowScript:
    """Iterative refinement: draft, pass the tests, then apply both guideline sets.

    The test round is skipped when no test cases are given, leaving three rounds.
    """
    ctx = ToolContext(gateway=gateway, prompts_dir=prompts_dir)
    prompts = [
        (
            "question",
            f"Write a Python 3 solution for this task:\n{question.strip()}\n"
            "Put the complete code in one fenced code block.",
        )
    ]
    if test_cases and test_cases.strip():
        prompts.append(
            ("test_cases", f"Revise the code so it also passes these test cases:\n{test_cases.strip()}")
        )
    prompts.append(
        (
            "general_guidelines",
            "Revise the code so it also follows this code quality checklist:\n"
            + load_prompt("guide_general", prompts_dir),
        )
    )
    prompts.append(
        (
            "specific_guidelines",
            "Revise the code once more so it also follows these task-specific guidelines:\n"
            + load_prompt("guide_specific", prompts_dir),
        )
    )
    steps = _chat_rounds(load_prompt("persona_code_tutor", prompts_dir), prompts, ctx)
    workflow = WorkflowScript(steps=steps)
    try:
        workflow.final_artifact = extract_fenced_block(steps[-1][1])
    except MissingScriptBlock as err:
        log.warning("refine chain: %s", err)
    workflow.explanations = steps[-1][1]
    return workflow


KB_TOOL_NAMES = {
    DocumentCategory.KNOWLEDGE_UNITS: "kb_knowledge_units",
    DocumentCategory.CAREER_PATHWAYS: "kb_career_pathways",
    DocumentCategory.PROGRAM_CATALOGS: "kb_catalog_advisor",
}

_KB_DESCRIPTIONS = {
    DocumentCategory.KNOWLEDGE_UNITS: "Looks up cybersecurity knowledge units and topic summaries from the curriculum knowledge base.",
    DocumentCategory.CAREER_PATHWAYS: "Looks up cybersecurity job roles, the skills they need, and career paths.",
    DocumentCategory.PROGRAM_CATALOGS: "Looks up program requirements and course offerings to advise what to take next.",
}


def kb_tool(
    category: DocumentCategory,
    index: VectorIndex,
    embedder,
    k: int = rag.DEFAULT_TOP_K,
) -> ToolSpec:
    """Retrieval tool bound to one corpus category."""

    def execute(input_text: str, ctx: ToolContext) -> ToolOutcome:
        hits = rag.retrieve(input_text, index, embedder, k=k, category=category)
        answer = rag.answer_with_documents(
            input_text,
            hits,
            ctx.gateway,
            prompts_dir=ctx.prompts_dir,
            language_hint=ctx.language_hint,
        )
        observation = answer.text
        if not answer.cited:
            observation += "\n\n[no knowledge-base passages matched this question]"
        return ToolOutcome(observation=observation, sources=answer.sources)

    return ToolSpec(
        name=KB_TOOL_NAMES[category],
        description=_KB_DESCRIPTIONS[category],
        input_hint="the student's question in plain words",
        executor=execute,
    )


def build_default_registry(index: VectorIndex, embedder, *, k: int = rag.DEFAULT_TOP_K) -> dict[str, ToolSpec]:
    specs = [
        ToolSpec(
            name="crypto_solver",
            description="Solves modular arithmetic exactly (inverses, powers, gcd) and explains the steps.",
            input_hint="the question containing the numbers, e.g. \"Find 213^(-1) mod 323\"",
            executor=crypto_solver_tool,
        ),
        ToolSpec(
            name="script_coder",
            description="Plans and writes a small script for a security task.",
            input_hint="a description of the script to write",
            executor=script_coder_tool,
        ),
        ToolSpec(
            name="ml_classifier",
            description="Designs a machine-learning classifier pipeline and writes the full training script.",
            input_hint="a description of the classification task and its data",
            executor=ml_classifier_tool,
        ),
        kb_tool(DocumentCategory.KNOWLEDGE_UNITS, index, embedder, k=k),
        kb_tool(DocumentCategory.CAREER_PATHWAYS, index, embedder, k=k),
        kb_tool(DocumentCategory.PROGRAM_CATALOGS, index, embedder, k=k),
    ]
    return {spec.name: spec for spec in specs}
