"""Acceptance suite: one test per release criterion, each with its time
budget pinned.  Every test prints a PASS line so a -s run reads as a
checklist.  The whole module runs offline (socket guard in conftest) and
needs no frontend build."""

from __future__ import annotations

import json
import random
import time
from pathlib import Path

import pytest

from tradetalk.bench import (
    compute_metrics,
    load_dataset,
    outcome_from_reply,
    run_eval,
)
from tradetalk.dialogue import (
    AwaitClarification,
    AwaitInput,
    ConfirmExecute,
    Executed,
    FeedTick,
    IllegalEvent,
    MessageKind,
    ProviderReply,
    ReadyToExecute,
    Session,
    SessionConfig,
    UserMessage,
    step,
)
from tradetalk.exchange import (
    ExecutionReport,
    FillStatus,
    PriceFeed,
    Venue,
    submit,
)
from tradetalk.extract import (
    ExtractionPolicy,
    SchemaViolation,
    compare_drafts,
    parse_draft,
)
from tradetalk.forge import NoiseSpec, ProtectedTokens, inject_noise, slice_text
from tradetalk.gateway import ChatTurn, ProviderConfig, Role, complete, render_system_prompt
from tradetalk.orders import (
    ExecutableOrder,
    FieldName,
    Side,
    Strategy,
    TickerSymbol,
    draft_to_json,
    missing_fields,
    money,
)
from tradetalk.rulebot import rule_extract

DATA = Path(__file__).parent / "data"
CANONICAL = Path("src/tradetalk/data/canonical.jsonl")
DEMO_FEED = Path("src/tradetalk/data/demo_feed.csv")


class Budget:
    """Context manager asserting the criterion's stated runtime bound."""

    def __init__(self, seconds: float, label: str):
        self.seconds = seconds
        self.label = label

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            elapsed = time.perf_counter() - self.start
            assert elapsed < self.seconds, f"{self.label} took {elapsed:.2f}s"
            print(f"PASS {self.label} ({elapsed:.2f}s)")
        return False


def test_golden_schema_parity(directory):
    with Budget(1.0, "golden schema parity"):
        for n in (1, 2, 3):
            golden = (DATA / f"golden_row{n}.json").read_text("utf-8").rstrip("\n")
            draft = parse_draft(golden, ExtractionPolicy.STRICT)
            assert draft_to_json(draft) == golden, f"row {n} round-trip not bit-exact"
            assert compare_drafts(draft, draft).empty


def test_tristate_decision_table():
    from test_extract import _decode_rows, decode_one

    with Budget(1.0, "tri-state decision table"):
        rows = list(_decode_rows())
        assert len(rows) == 84
        for policy, field, context, token, outcome in rows:
            if outcome == "error":
                with pytest.raises(SchemaViolation):
                    decode_one(policy, field, context, token)
                continue
            state = decode_one(policy, field, context, token).field(FieldName(field))
            assert {
                "unknown": state.is_unknown,
                "na": state.is_na,
                "present": state.is_present,
            }[outcome], (policy, field, context, token)


def test_metric_engine_oracle():
    with Budget(1.0, "metric engine oracle"):
        records = load_dataset(DATA / "metrics_fixture.jsonl")
        replies = {
            json.loads(line)["id"]: json.loads(line)["reply"]
            for line in (DATA / "metrics_fixture_replies.jsonl").read_text("utf-8").splitlines()
        }
        outcomes = [
            outcome_from_reply(r, replies[r.id], ExtractionPolicy.STRICT) for r in records
        ]
        report = compute_metrics(outcomes, records)
        expected = json.loads((DATA / "metrics_expected.json").read_text("utf-8"))
        for name, value in expected["counts"].items():
            assert getattr(report.counts, name) == value, name
        for name, rendered in expected["rates"].items():
            assert getattr(report, name).render() == rendered, name


def test_rule_provider_end_to_end():
    with Budget(5.0, "rule-provider end-to-end"):
        records = load_dataset(CANONICAL)
        assert len(records) == 40
        outcomes, report = run_eval(records, ProviderConfig(), parallelism=4)
        assert report.generation_rate.percent == 100.0
        assert report.accuracy.percent == 100.0
        assert report.missed_followup_rate.percent == 0.0
        assert report.extra_followup_rate.percent == 0.0
        assert not any(o.error for o in outcomes)


def _fuzz_executor(order: ExecutableOrder) -> ExecutionReport:
    price = order.price if order.price is not None else money("10.00")
    return ExecutionReport(FillStatus.FILLED, order, fill_price=price, fill_tick=0)


def test_dialogue_safety_fuzz(directory):
    with Budget(30.0, "dialogue safety fuzz"):
        utterances = [
            "If Moutai's stock price can fall to 1800, I will buy 200 shares of it.",
            "KU Tech is going to be really popular, so I will buy 1000 shares of it "
            "with a limit order.",
            "Sell 400 shares of CATL.",
            "Buy some Gree stock for me when you can.",
            "The Skyworth figure in my hand has risen a lot.",
            "What's for lunch?",
            "hello there",
        ]
        reply_pool = [
            complete(
                [ChatTurn(Role.SYSTEM, render_system_prompt(directory)), ChatTurn(Role.USER, u)],
                ProviderConfig(),
            )
            for u in utterances
        ] + ['{"strategy": "limit order"}', "no json here at all", '{"order": 5}']
        answer_pool = ["$7", "limit order", "market", "300 shares", "Tencent",
                       "600519", "buy", "sell", "mumble", "whatever you think"]
        config = SessionConfig(max_turns=4)
        rng = random.Random(20240817)

        executions = 0
        for _ in range(10_000):
            state = AwaitInput()
            for _ in range(rng.randint(1, 8)):
                kind = rng.randrange(5)
                if kind == 0:
                    event = UserMessage(rng.choice(utterances))
                elif kind == 1:
                    event = UserMessage(rng.choice(answer_pool))
                elif kind == 2:
                    event = ProviderReply(rng.choice(reply_pool))
                elif kind == 3:
                    event = ConfirmExecute()
                else:
                    event = FeedTick()
                prev = state
                try:
                    state, messages = step(state, event, config, directory, _fuzz_executor)
                except IllegalEvent:
                    continue
                if isinstance(state, Executed) and not isinstance(prev, Executed):
                    assert isinstance(prev, ReadyToExecute), "Executed without ReadyToExecute"
                    order = state.report.order
                    assert (order.strategy is Strategy.MARKET) == (order.price is None)
                    executions += 1
                if isinstance(state, ReadyToExecute):
                    order = state.order
                    assert (order.strategy is Strategy.MARKET) == (order.price is None)
                for message in messages:
                    if message.kind is MessageKind.QUESTION:
                        assert isinstance(state, AwaitClarification)
                        assert message.field in missing_fields(state.draft)
                if isinstance(state, AwaitClarification):
                    assert state.turns_used <= config.max_turns
        assert executions > 0, "fuzz never reached Executed; pools too weak to count"


def test_limit_fill_oracle():
    with Budget(10.0, "limit-fill oracle"):
        rng = random.Random(7)
        for case in range(1000):
            feed = PriceFeed.random_walk(["600519"], start_price=100, ticks=120, seed=case)
            prices = [p.amount for _, p in feed.series["600519"]]
            side = Side.BUY if rng.random() < 0.5 else Side.SELL
            limit = money(round(float(rng.choice(prices)) * rng.uniform(0.96, 1.04), 2))
            order = ExecutableOrder(
                Strategy.LIMIT, TickerSymbol("600519"), side, limit, rng.randint(1, 500)
            )
            report = submit(order, feed)

            expected_tick = None
            for i, price in enumerate(prices):
                crossed = price <= limit.amount if side is Side.BUY else price >= limit.amount
                if crossed:
                    expected_tick = i
                    break
            if expected_tick is None:
                assert report.status is FillStatus.EXPIRED, case
            else:
                assert report.status is FillStatus.FILLED, case
                assert report.fill_tick == expected_tick, case
                assert report.fill_price.amount == prices[expected_tick], case
                if side is Side.BUY:
                    assert report.fill_price.amount <= limit.amount
                else:
                    assert report.fill_price.amount >= limit.amount


def test_forge_determinism_and_alignment(directory):
    with Budget(30.0, "forge determinism and alignment"):
        records = load_dataset(CANONICAL)
        protected = ProtectedTokens.from_directory(directory)
        for record in records:
            base = rule_extract(record.input_text, directory).order
            for seed in range(100):
                spec = NoiseSpec(seed=seed)
                noisy = inject_noise(record.input_text, spec, protected)
                assert noisy == inject_noise(record.input_text, spec, protected)
                assert len(noisy.split()) >= len(record.input_text.split())
                assert rule_extract(noisy, directory).order == base, (record.id, seed, noisy)
            segments = slice_text(record.input_text, 10)
            assert "".join(segments) == record.input_text
            assert all(len(s.split()) <= 12 for s in segments)


def test_fig4_session_replay(directory):
    with Budget(1.0, "fig-4 session replay"):
        venue = Venue(PriceFeed.from_csv(DEMO_FEED))
        session = Session(SessionConfig(), directory, executor=venue.execute)
        utterance = (
            "KU Tech is going to be really popular, so I will buy 1000 shares of it "
            "with a limit order."
        )
        session.step(UserMessage(utterance))
        reply = complete(
            [
                ChatTurn(Role.SYSTEM, render_system_prompt(directory)),
                ChatTurn(Role.USER, utterance),
            ],
            ProviderConfig(),
        )
        messages = session.step(ProviderReply(reply))
        assert messages[0].text == "Could you please tell me what the stock price is?"
        session.step(UserMessage("$7"))
        assert isinstance(session.state, ReadyToExecute)
        assert session.state.order.price == money(7)
        session.step(ConfirmExecute())
        assert isinstance(session.state, Executed)
        report = session.state.report
        assert report.status is FillStatus.FILLED
        assert report.fill_price.amount <= money(7).amount
        assert venue.portfolio.positions == {"03888": 1000}


def test_runs_offline_without_frontend():
    """The primary suite needs no network (socket guard is active for every
    test) and no frontend build artifacts."""
    import tradetalk

    package_dir = Path(tradetalk.__file__).parent
    assert not list(package_dir.rglob("*.js")), "python package must not ship frontend assets"
    import socket

    with pytest.raises(AssertionError, match="network access"):
        socket.create_connection(("127.0.0.1", 9))
    print("PASS offline, frontend-independent suite")
