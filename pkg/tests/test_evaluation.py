"""Judge parsing, score aggregation, and report rendering."""
import json

import pytest

from helpers import last_text, make_gateway
from mentor.evaluation import (
    METRICS,
    DuplicateId,
    EmptyDataset,
    EvalQuestion,
    JudgeParseError,
    SchemaError,
    format_score,
    judge,
    load_dataset,
    render_report,
    run_eval,
)
from mentor.report import render_csv, write_report_files


def question(qid="cyb-01", category="cybersecurity") -> EvalQuestion:
    return EvalQuestion(
        id=qid,
        category=category,
        question="What does a firewall do?",
        reference_answer="It filters network traffic by rule.",
    )


def write_dataset(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    return path


GOOD_ROW = {
    "id": "cyb-01",
    "category": "cybersecurity",
    "question": "What does a firewall do?",
    "reference_answer": "Filters traffic.",
}


class TestLoadDataset:
    def test_round_trip(self, tmp_path):
        rows = [
            GOOD_ROW,
            {**GOOD_ROW, "id": "cry-01", "category": "cryptography"},
            {**GOOD_ROW, "id": "cod-01", "category": "coding"},
        ]
        loaded = load_dataset(write_dataset(tmp_path / "d.jsonl", rows))
        assert [q.id for q in loaded] == ["cyb-01", "cry-01", "cod-01"]

    def test_unknown_category_names_the_line(self, tmp_path):
        rows = [GOOD_ROW, {**GOOD_ROW, "id": "x", "category": "philosophy"}]
        with pytest.raises(SchemaError) as excinfo:
            load_dataset(write_dataset(tmp_path / "d.jsonl", rows))
        assert "line 2" in str(excinfo.value)

    def test_missing_field_names_the_line(self, tmp_path):
        bad = {k: v for k, v in GOOD_ROW.items() if k != "reference_answer"}
        with pytest.raises(SchemaError) as excinfo:
            load_dataset(write_dataset(tmp_path / "d.jsonl", [bad]))
        assert "line 1" in str(excinfo.value)

    def test_duplicate_id_rejected(self, tmp_path):
        with pytest.raises(DuplicateId):
            load_dataset(write_dataset(tmp_path / "d.jsonl", [GOOD_ROW, GOOD_ROW]))

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text(json.dumps(GOOD_ROW) + "\n\n\n", encoding="utf-8")
        assert len(load_dataset(path)) == 1


class TestJudge:
    def test_pass_verdict(self):
        verdict = judge(
            question(), "an answer", "helpfulness",
            make_gateway(lambda m: "Clear and useful.\nVERDICT: PASS"),
        )
        assert verdict.score == 1
        assert verdict.rationale == "Clear and useful."

    def test_fail_verdict_case_insensitive(self):
        verdict = judge(
            question(), "an answer", "correctness",
            make_gateway(lambda m: "The number is wrong.\nverdict: fail"),
        )
        assert verdict.score == 0

    def test_last_verdict_line_wins(self):
        reply = "VERDICT: FAIL\nOn reflection the answer is fine.\nVERDICT: PASS"
        verdict = judge(question(), "a", "helpfulness", make_gateway(lambda m: reply))
        assert verdict.score == 1

    def test_reference_only_shown_for_correctness(self):
        seen = {}

        def brain(messages):
            seen.setdefault("prompts", []).append(last_text(messages, "user"))
            return "ok\nVERDICT: PASS"

        gateway = make_gateway(brain)
        judge(question(), "a", "helpfulness", gateway)
        judge(question(), "a", "correctness", gateway)
        helpfulness_prompt, correctness_prompt = seen["prompts"]
        assert "Reference answer" not in helpfulness_prompt
        assert "Reference answer" in correctness_prompt

    def test_one_corrective_retry_then_success(self):
        replies = iter(["I think it is good.", "Right.\nVERDICT: PASS"])
        reminders = []

        def brain(messages):
            user = last_text(messages, "user")
            if "did not end with a verdict line" in user:
                reminders.append(user)
            return next(replies)

        verdict = judge(question(), "a", "helpfulness", make_gateway(brain))
        assert verdict.score == 1
        assert len(reminders) == 1

    def test_two_unparseable_replies_raise(self):
        with pytest.raises(JudgeParseError):
            judge(question(), "a", "helpfulness", make_gateway(lambda m: "no verdict here"))

    def test_unknown_metric_rejected(self):
        with pytest.raises(SchemaError):
            judge(question(), "a", "eloquence", make_gateway(lambda m: "VERDICT: PASS"))


def all_pass_judge(messages):
    return "Fine.\nVERDICT: PASS"


class TestRunEval:
    def dataset(self):
        return [
            question("cyb-01", "cybersecurity"),
            question("cyb-02", "cybersecurity"),
            question("cry-01", "cryptography"),
        ]

    def test_record_grid_is_rounds_by_questions_by_metrics(self):
        report = run_eval(
            self.dataset(), lambda q: "answer", make_gateway(all_pass_judge), rounds=2
        )
        assert len(report.records) == 2 * 3 * 3
        assert report.rounds == 2
        assert {r["round"] for r in report.records} == {1, 2}
        assert report.overall == {m: 1.0 for m in METRICS}

    def test_means_are_per_category_and_weighted_overall(self):
        # cyb-01 fails correctness every round; 2 cybersecurity questions ->
        # category correctness 0.5; weighted overall (2*0.5 + 1*1.0)/3.
        def brain(messages):
            user = last_text(messages, "user")
            if "Metric: correctness" in user and "What does a firewall do?" in user and "FLAG" in user:
                return "Wrong.\nVERDICT: FAIL"
            return "Fine.\nVERDICT: PASS"

        def runner(q):
            return "FLAG" if q.id == "cyb-01" else "answer"

        report = run_eval(self.dataset(), runner, make_gateway(brain), rounds=3)
        assert report.per_category["cybersecurity"].means["correctness"] == pytest.approx(0.5)
        assert report.per_category["cryptography"].means["correctness"] == pytest.approx(1.0)
        assert report.overall["correctness"] == pytest.approx((2 * 0.5 + 1 * 1.0) / 3)
        assert report.overall["helpfulness"] == pytest.approx(1.0)

    def test_judge_failure_scores_zero_and_is_tallied(self):
        def brain(messages):
            user = last_text(messages, "user")
            if "Metric: completeness" in user or "did not end with a verdict" in user:
                return "shrug"
            return "ok\nVERDICT: PASS"

        report = run_eval(
            [question()], lambda q: "answer", make_gateway(brain), rounds=2
        )
        assert report.judge_failures == 2
        completeness = [r for r in report.records if r["metric"] == "completeness"]
        assert all(r["score"] == 0 for r in completeness)
        assert all(r["request_hash"] == "" for r in completeness)
        assert report.per_category["cybersecurity"].means["completeness"] == 0.0

    def test_verdict_log_is_written(self, tmp_path):
        log_path = tmp_path / "verdicts.jsonl"
        report = run_eval(
            [question()], lambda q: "answer", make_gateway(all_pass_judge),
            rounds=2, log_path=log_path,
        )
        rows = [json.loads(line) for line in log_path.read_text().splitlines()]
        assert len(rows) == len(report.records) == 6
        assert set(rows[0]) == {
            "round", "question_id", "metric", "score", "rationale", "request_hash",
        }
        assert all(len(r["request_hash"]) == 64 for r in rows)

    def test_empty_dataset_rejected(self):
        with pytest.raises(EmptyDataset):
            run_eval([], lambda q: "a", make_gateway(all_pass_judge))
        with pytest.raises(EmptyDataset):
            run_eval([question()], lambda q: "a", make_gateway(all_pass_judge), rounds=0)


class TestFormatting:
    @pytest.mark.parametrize(
        "value,text",
        [(0.846, "0.85"), (0.844, "0.84"), (0.845, "0.85"), (1.0, "1.00"), (0.0, "0.00"),
         (2 / 3, "0.67"), (0.675, "0.68")],
    )
    def test_format_score_rounds_half_up(self, value, text):
        assert format_score(value) == text

    def test_render_report_shape(self):
        report = run_eval(
            [question("cyb-01"), question("cry-01", "cryptography")],
            lambda q: "a",
            make_gateway(all_pass_judge),
            rounds=1,
        )
        text = render_report(report)
        lines = text.splitlines()
        assert lines[0] == "# Evaluation Report"
        assert lines[2] == "Rounds: 1"
        assert lines[4] == "| Category | Questions | Helpfulness | Correctness | Completeness |"
        assert lines[5] == "| --- | ---: | ---: | ---: | ---: |"
        assert lines[6] == "| cybersecurity | 1 | 1.00 | 1.00 | 1.00 |"
        assert lines[7] == "| cryptography | 1 | 1.00 | 1.00 | 1.00 |"
        assert lines[8] == "| Total | 2 | 1.00 | 1.00 | 1.00 |"
        assert text.endswith("\n")
        assert "Judge failures" not in text

    def test_render_report_mentions_failures(self):
        def brain(messages):
            return "no verdict"

        report = run_eval([question()], lambda q: "a", make_gateway(brain), rounds=1)
        assert f"Judge failures scored as 0: {report.judge_failures}" in render_report(report)


class TestReportFiles:
    def _report(self):
        return run_eval(
            [question("cyb-01"), question("cry-01", "cryptography")],
            lambda q: "a",
            make_gateway(all_pass_judge),
            rounds=1,
        )

    def test_csv_shape(self):
        lines = render_csv(self._report()).splitlines()
        assert lines[0] == "category,questions,helpfulness,correctness,completeness"
        assert lines[1] == "cybersecurity,1,1.0000,1.0000,1.0000"
        assert lines[-1] == "total,2,1.0000,1.0000,1.0000"

    def test_write_report_files_renders_all_three(self, tmp_path):
        out = tmp_path / "nested" / "report.md"
        paths = write_report_files(self._report(), out)
        md = (tmp_path / "nested" / "report.md").read_text()
        assert md.startswith("# Evaluation Report")
        csv_text = (tmp_path / "nested" / "report.csv").read_text()
        assert csv_text.startswith("category,questions,")
        png = (tmp_path / "nested" / "report.png").read_bytes()
        assert png[:8] == b"\x89PNG\r\n\x1a\n"
        assert set(paths) == {"markdown", "csv", "figure"}
