"""Answer grading harness.

Every answer is judged per metric by a model prompt whose last line must be
`VERDICT: PASS` or `VERDICT: FAIL`; scores are 1/0, judge failures count as
0 and are tallied rather than hidden. Means are folds over the persisted
verdict records, so question order never changes a number.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Callable

from .errors import MentorError
from .gateway import ChatRequest, Gateway, request_hash

log = logging.getLogger(__name__)

EVAL_CATEGORIES = ("cybersecurity", "cryptography", "coding")
METRICS = ("helpfulness", "correctness", "completeness")


class SchemaError(MentorError):
    pass


class DuplicateId(MentorError):
    pass


class JudgeParseError(MentorError):
    pass


class EmptyDataset(MentorError):
    pass


@dataclass(frozen=True)
class EvalQuestion:
    id: str
    category: str
    question: str
    reference_answer: str


@dataclass(frozen=True)
class MetricVerdict:
    metric: str
    score: int  # 1 pass, 0 fail
    rationale: str


def load_dataset(path: str | Path) -> list[EvalQuestion]:
    questions = []
    seen: set[str] = set()
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as err:
            raise SchemaError(f"line {n}: not valid JSON: {err}") from err
        for key in ("id", "category", "question", "reference_answer"):
            if not isinstance(row.get(key), str) or not row[key].strip():
                raise SchemaError(f"line {n}: missing or blank field {key!r}")
        if row["category"] not in EVAL_CATEGORIES:
            raise SchemaError(
                f"line {n}: category must be one of {EVAL_CATEGORIES}, got {row['category']!r}"
            )
        if row["id"] in seen:
            raise DuplicateId(f"line {n}: duplicate question id {row['id']!r}")
        seen.add(row["id"])
        questions.append(
            EvalQuestion(
                id=row["id"],
                category=row["category"],
                question=row["question"],
                reference_answer=row["reference_answer"],
            )
        )
    return questions


_METRIC_RUBRICS = {
    "helpfulness": (
        "Does the answer give the student useful, on-topic guidance for this "
        "question? An answer that dodges the question or is too vague to act on fails."
    ),
    "correctness": (
        "Is the answer technically correct? Judge it against the reference "
        "answer below; wrong facts, wrong numbers, or contradictions fail."
    ),
    "completeness": (
        "Does the answer cover every part the question asks for? Missing a "
        "requested part fails."
    ),
}

_VERDICT_LINE = re.compile(r"^\s*VERDICT:\s*(PASS|FAIL)\s*$", re.IGNORECASE | re.MULTILINE)
_RETRY_REMINDER = (
    "Your reply did not end with a verdict line. Repeat your judgment and end "
    "with exactly one final line: VERDICT: PASS or VERDICT: FAIL."
)


def _judge_prompt(question: EvalQuestion, answer: str, metric: str) -> str:
    parts = [
        "You are grading a mentor's answer to a student question.",
        f"Metric: {metric}. {_METRIC_RUBRICS[metric]}",
        f"Question: {question.question}",
    ]
    if metric == "correctness":
        parts.append(f"Reference answer: {question.reference_answer}")
    parts.append(f"Answer to grade:\n{answer}")
    parts.append(
        "Explain your reasoning in two or three sentences, then end with exactly "
        "one final line: VERDICT: PASS or VERDICT: FAIL."
    )
    return "\n\n".join(parts)


def _parse_verdict(reply: str) -> tuple[int, str] | None:
    matches = list(_VERDICT_LINE.finditer(reply))
    if not matches:
        return None
    last = matches[-1]
    score = 1 if last.group(1).upper() == "PASS" else 0
    rationale = reply[: last.start()].strip()
    return score, rationale


def judge_with_hash(
    question: EvalQuestion, answer: str, metric: str, gateway: Gateway
) -> tuple[MetricVerdict, str]:
    """Judge one metric; returns the verdict plus the hash of the request that
    produced it. One corrective retry, then JudgeParseError."""
    if metric not in METRICS:
        raise SchemaError(f"unknown metric {metric!r}")
    messages: list[tuple[str, str]] = [("user", _judge_prompt(question, answer, metric))]
    req = ChatRequest(model=gateway.config.model, messages=tuple(messages))
    h = request_hash(req)
    reply = gateway.complete(req).content
    parsed = _parse_verdict(reply)
    if parsed is None:
        log.info("judge verdict unparseable for %s/%s; retrying once", question.id, metric)
        messages.extend([("assistant", reply), ("user", _RETRY_REMINDER)])
        req = ChatRequest(model=gateway.config.model, messages=tuple(messages))
        h = request_hash(req)
        reply = gateway.complete(req).content
        parsed = _parse_verdict(reply)
        if parsed is None:
            raise JudgeParseError(
                f"no verdict line after retry for question {question.id}, metric {metric}"
            )
    score, rationale = parsed
    return MetricVerdict(metric=metric, score=score, rationale=rationale), h


def judge(question: EvalQuestion, answer: str, metric: str, gateway: Gateway) -> MetricVerdict:
    return judge_with_hash(question, answer, metric, gateway)[0]


@dataclass(frozen=True)
class CategoryScore:
    questions: int
    means: dict[str, float]


@dataclass
class EvalReport:
    rounds: int
    per_category: dict[str, CategoryScore]
    overall: dict[str, float]
    judge_failures: int
    generated_at: str
    records: list[dict] = field(default_factory=list)


def _aggregate(records: list[dict], dataset: list[EvalQuestion], rounds: int, failures: int) -> EvalReport:
    category_of = {q.id: q.category for q in dataset}
    sums: dict[tuple[str, str], float] = {}
    counts: dict[tuple[str, str], int] = {}
    for record in records:
        key = (category_of[record["question_id"]], record["metric"])
        sums[key] = sums.get(key, 0.0) + record["score"]
        counts[key] = counts.get(key, 0) + 1

    categories = [c for c in EVAL_CATEGORIES if any(q.category == c for q in dataset)]
    per_category = {}
    for cat in categories:
        n = sum(1 for q in dataset if q.category == cat)
        means = {m: sums.get((cat, m), 0.0) / counts[(cat, m)] for m in METRICS}
        per_category[cat] = CategoryScore(questions=n, means=means)

    total_questions = len(dataset)
    overall = {
        m: sum(per_category[c].questions * per_category[c].means[m] for c in categories) / total_questions
        for m in METRICS
    }
    return EvalReport(
        rounds=rounds,
        per_category=per_category,
        overall=overall,
        judge_failures=failures,
        generated_at=datetime.now(timezone.utc).isoformat(),
        records=records,
    )


def run_eval(
    dataset: list[EvalQuestion],
    agent_runner: Callable[[EvalQuestion], str],
    gateway: Gateway,
    *,
    rounds: int = 3,
    log_path: str | Path | None = None,
) -> EvalReport:
    """Answer every question each round, judge all three metrics, persist verdicts.

    A judge that cannot produce a verdict scores 0 for that record; the
    failure count is carried on the report instead of being swallowed.
    """
    if not dataset:
        raise EmptyDataset("evaluation needs at least one question")
    if rounds < 1:
        raise EmptyDataset("rounds must be at least 1")
    records: list[dict] = []
    failures = 0
    for round_no in range(1, rounds + 1):
        for question in dataset:
            answer = agent_runner(question)
            for metric in METRICS:
                try:
                    verdict, h = judge_with_hash(question, answer, metric, gateway)
                    score, rationale = verdict.score, verdict.rationale
                except JudgeParseError as err:
                    score, rationale, h = 0, f"judge failed: {err}", ""
                    failures += 1
                    log.warning("scoring 0 for %s/%s: %s", question.id, metric, err)
                records.append(
                    {
                        "round": round_no,
                        "question_id": question.id,
                        "metric": metric,
                        "score": score,
                        "rationale": rationale,
                        "request_hash": h,
                    }
                )
    if log_path is not None:
        path = Path(log_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
    return _aggregate(records, dataset, rounds, failures)


def format_score(value: float) -> str:
    """Two decimals, rounding half away from zero: 0.846 -> '0.85'."""
    return str(Decimal(str(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def render_report(report: EvalReport) -> str:
    """Markdown summary table: one row per category plus a totals row."""
    lines = [
        "# Evaluation Report",
        "",
        f"Rounds: {report.rounds}",
        "",
        "| Category | Questions | Helpfulness | Correctness | Completeness |",
        "| --- | ---: | ---: | ---: | ---: |",
    ]
    total_questions = 0
    for cat, score in report.per_category.items():
        total_questions += score.questions
        cells = " | ".join(format_score(score.means[m]) for m in METRICS)
        lines.append(f"| {cat} | {score.questions} | {cells} |")
    overall_cells = " | ".join(format_score(report.overall[m]) for m in METRICS)
    lines.append(f"| Total | {total_questions} | {overall_cells} |")
    if report.judge_failures:
        lines.extend(["", f"Judge failures scored as 0: {report.judge_failures}"])
    return "\n".join(lines) + "\n"
