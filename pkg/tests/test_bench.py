from __future__ import annotations

import csv
import io
import json
import random

import httpx
import pytest

from tradetalk.bench import (
    DatasetParseError,
    DatasetRecord,
    EvalOutcome,
    InvariantViolation,
    MetricsCounts,
    MetricsReport,
    MisalignedOutcomes,
    ReportFormat,
    compute_metrics,
    emit_report,
    evaluate_record,
    load_dataset,
    outcome_from_reply,
    record_from_wire,
    render_csv,
    render_markdown,
    run_eval,
)
from tradetalk.dialogue import Intent
from tradetalk.extract import ExtractionPolicy
from tradetalk.gateway import ProviderConfig, ProviderKind
from tradetalk.orders import FieldName

CANONICAL = "src/tradetalk/data/canonical.jsonl"


class TestLoadDataset:
    def test_canonical_corpus(self):
        records = load_dataset(CANONICAL)
        assert len(records) == 40
        assert len({r.id for r in records}) == 40
        categories = {c: sum(1 for r in records if r.category is c) for c in Intent}
        assert categories[Intent.TRADE_INSTRUCTION] == 27
        assert categories[Intent.TRADE_RELATED] == 9
        assert categories[Intent.OTHER] == 4

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        assert load_dataset(path) == []

    def test_duplicate_id_rejected(self, tmp_path):
        record = json.dumps(
            {"id": "x", "input_text": "t", "category": "other", "gold": None,
             "gold_followups": []}
        )
        path = tmp_path / "dup.jsonl"
        path.write_text(record + "\n" + record + "\n", encoding="utf-8")
        with pytest.raises(DatasetParseError, match="duplicate"):
            load_dataset(path)

    def test_bad_json_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "input_text": "t", "category": "other", "gold": null}\nnot json\n')
        with pytest.raises(DatasetParseError, match="line 2"):
            load_dataset(path)

    def test_followup_invariant_enforced(self):
        wire = {
            "id": "bad",
            "input_text": "buy 200 shares of Moutai at 1800 with a limit order",
            "category": "trade_instruction",
            "gold": {"strategy": "limit order", "symbol": "600519", "order_type": "buy",
                     "price": 1800.0, "quantity": 200},
            "gold_followups": ["price"],  # gold has no missing fields
        }
        with pytest.raises(InvariantViolation):
            record_from_wire(wire)

    def test_goldless_record_cannot_require_followups(self):
        with pytest.raises(InvariantViolation):
            DatasetRecord(
                id="x", input_text="t", category=Intent.OTHER, gold=None,
                gold_followups=frozenset({FieldName.PRICE}),
            )


def record_for(text: str, record_id: str = "r1") -> DatasetRecord:
    from tradetalk.gateway import default_directory
    from tradetalk.orders import missing_fields
    from tradetalk.rulebot import rule_extract

    gold = rule_extract(text, default_directory()).order
    return DatasetRecord(
        id=record_id,
        input_text=text,
        category=Intent.TRADE_INSTRUCTION,
        gold=gold,
        gold_followups=frozenset(missing_fields(gold)),
    )


class TestEvaluateRecord:
    def test_complete_utterance_scores_clean(self):
        record = record_for(
            "If Moutai's stock price can fall to 1800, I will take the opportunity "
            "to stock up and plan to buy 200 shares of it."
        )
        outcome = evaluate_record(record, ProviderConfig())
        assert outcome.generated and outcome.diff.empty and outcome.asked == frozenset()

    def test_partial_utterance_asks_missing(self):
        record = record_for(
            "Looking at Vanke stocks to go up, I intend to sell 300 shares first, the "
            "bottom position in the hand will not move, and see whether there is room "
            "to rise behind"
        )
        outcome = evaluate_record(record, ProviderConfig())
        assert outcome.asked == frozenset({FieldName.STRATEGY, FieldName.PRICE})

    def test_provider_timeout_counts_as_non_generation(self, monkeypatch):
        import tradetalk.gateway as gateway

        monkeypatch.setenv("KEY", "k")
        monkeypatch.setattr(gateway.time, "sleep", lambda s: None)

        def handler(request: httpx.Request) -> httpx.Response:
            raise httpx.ReadTimeout("nope")

        cfg = ProviderConfig(
            kind=ProviderKind.REMOTE_CHAT, endpoint="https://x.test/v1", credential_env="KEY",
            max_retries=0,
        )
        record = record_for("Buy 100 shares of Tencent at market price.")
        outcome = evaluate_record(record, cfg, transport=httpx.MockTransport(handler))
        assert not outcome.generated and "provider error" in outcome.error

    def test_free_text_reply_questions_classified(self):
        record = record_for("Sell my Meituan shares at 115 if it gets there.")
        reply = (
            '{"strategy": "limit order", "symbol": "03690", "order_type": "sell", '
            '"price": 115.0, "quantity": null}\n'
            "How many shares would you like to trade? Also, shall I sing you a song?"
        )
        outcome = outcome_from_reply(record, reply)
        assert outcome.asked == frozenset({FieldName.QUANTITY})
        assert outcome.unclassified_questions == 1
        assert outcome.diff.empty


def fixture_outcomes():
    records = load_dataset("tests/data/metrics_fixture.jsonl")
    replies = {}
    with open("tests/data/metrics_fixture_replies.jsonl", encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            replies[obj["id"]] = obj["reply"]
    outcomes = [outcome_from_reply(r, replies[r.id], ExtractionPolicy.STRICT) for r in records]
    return records, outcomes


class TestComputeMetrics:
    def test_simple_generation_rate(self):
        records = [record_for(f"Buy {i+1} shares of Tencent at market price.", f"r{i}")
                   for i in range(8)]
        outcomes = [evaluate_record(r, ProviderConfig()) for r in records]
        outcomes[3] = EvalOutcome(records[3].id, generated=False, error="provider error: x")
        report = compute_metrics(outcomes, records)
        assert report.generation_rate.percent == 87.5

    def test_identity_scoring_and_undefined_followup_rate(self):
        records = [record_for(
            "I want to sell 200 shares of Tencent at $500 per share.", "only")]
        outcomome = evaluate_record(records[0], ProviderConfig())
        report = compute_metrics([outcomome], records)
        assert report.accuracy.percent == 100.0
        assert report.missing_rate.percent == 0.0
        assert not report.followup_rate.defined
        assert report.followup_rate.render() == "n/a"

    def test_hand_tabulated_fixture(self):
        records, outcomes = fixture_outcomes()
        report = compute_metrics(outcomes, records)
        expected = json.loads(open("tests/data/metrics_expected.json").read())
        for name, value in expected["counts"].items():
            assert getattr(report.counts, name) == value, name
        for name, rendered in expected["rates"].items():
            assert getattr(report, name).render() == rendered, name

    def test_permutation_invariance(self):
        records, outcomes = fixture_outcomes()
        base = compute_metrics(outcomes, records)
        shuffled = outcomes[:]
        random.Random(3).shuffle(shuffled)
        assert compute_metrics(shuffled, records) == base

    def test_misaligned_outcomes(self):
        records, outcomes = fixture_outcomes()
        with pytest.raises(MisalignedOutcomes):
            compute_metrics(outcomes[:-1], records)

    def test_counts_invariants(self):
        with pytest.raises(ValueError):
            MetricsCounts(total_inputs=1, json_outputs=2)
        with pytest.raises(ValueError):
            MetricsCounts(total_inputs=5, json_outputs=2, correct_json_outputs=3)


class TestRunEval:
    def test_rule_provider_on_canonical_corpus(self):
        records = load_dataset(CANONICAL)
        outcomes, report = run_eval(records, ProviderConfig())
        assert report.generation_rate.percent == 100.0
        assert report.accuracy.percent == 100.0
        assert report.missed_followup_rate.percent == 0.0
        assert report.extra_followup_rate.percent == 0.0
        assert [o.record_id for o in outcomes] == sorted(o.record_id for o in outcomes)

    def test_parallelism_does_not_change_report(self):
        records = load_dataset(CANONICAL)
        _, sequential = run_eval(records, ProviderConfig(), parallelism=1)
        _, parallel = run_eval(records, ProviderConfig(), parallelism=8)
        assert sequential == parallel

    def test_unavailable_remote_provider_degrades(self, monkeypatch):
        import tradetalk.gateway as gateway

        monkeypatch.setenv("KEY", "k")
        monkeypatch.setattr(gateway.time, "sleep", lambda s: None)
        cfg = ProviderConfig(
            kind=ProviderKind.REMOTE_CHAT, endpoint="https://down.test/v1",
            credential_env="KEY", max_retries=0,
        )
        records = load_dataset(CANONICAL)[:5]

        def handler(request: httpx.Request) -> httpx.Response:
            raise httpx.ConnectError("unreachable")

        outcomes, report = run_eval(records, cfg, transport=httpx.MockTransport(handler))
        assert report.generation_rate.percent == 0.0
        assert all(o.error for o in outcomes)


class TestReports:
    def test_markdown_single_row(self):
        records, outcomes = fixture_outcomes()
        report = compute_metrics(outcomes, records)
        text = emit_report(report, outcomes, ReportFormat.MARKDOWN, "fixture")
        lines = text.strip().splitlines()
        assert lines[0].startswith("| Provider | Generation Rate |")
        assert len(lines) == 3
        assert "| fixture | 70.00% | 28.57% | 14.29% | 40.00% | 75.00% | 25.00% | 50.00% |" in text

    def test_markdown_two_providers_stable_order(self):
        records, outcomes = fixture_outcomes()
        report = compute_metrics(outcomes, records)
        text = render_markdown({"zeta": report, "alpha": report})
        rows = text.strip().splitlines()[2:]
        assert rows[0].startswith("| alpha") and rows[1].startswith("| zeta")

    def test_csv_round_trip(self):
        records, outcomes = fixture_outcomes()
        report = compute_metrics(outcomes, records)
        text = render_csv({"fixture": report})
        rows = list(csv.DictReader(io.StringIO(text)))
        assert len(rows) == 1
        row = rows[0]
        for attr, _ in MetricsReport.RATE_FIELDS:
            rate = getattr(report, attr)
            assert float(row[attr]) == float(f"{rate.percent:.2f}")

    def test_undefined_rate_rendered_blank_in_csv(self):
        report = MetricsReport.from_counts(MetricsCounts(total_inputs=1, json_outputs=1,
                                                         correct_json_outputs=1))
        text = render_csv({"p": report})
        row = next(csv.DictReader(io.StringIO(text)))
        assert row["followup_rate"] == ""


def test_accuracy_never_exceeds_generation_rate():
    records, outcomes = fixture_outcomes()
    report = compute_metrics(outcomes, records)
    assert report.accuracy.percent <= report.generation_rate.percent
    assert report.counts.correct_json_outputs <= (
        report.counts.json_outputs - report.counts.missing_json_outputs
    )


def test_gold_scored_against_itself_is_perfect():
    """Self-scoring any corpus: accuracy 100%, missing and error 0%."""
    from tradetalk.extract import compare_drafts

    records = load_dataset(CANONICAL)
    outcomes = [
        EvalOutcome(
            record_id=r.id,
            generated=True,
            predicted=r.gold,
            diff=compare_drafts(r.gold, r.gold),
            asked=r.gold_followups,
            raw_reply="(gold)",
        )
        for r in records
    ]
    report = compute_metrics(outcomes, records)
    assert report.accuracy.percent == 100.0
    assert report.missing_rate.percent == 0.0
    assert report.error_rate.percent == 0.0
    assert report.missed_followup_rate.percent == 0.0
    assert report.extra_followup_rate.percent == 0.0
