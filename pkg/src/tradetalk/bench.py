"""Evaluation harness: dataset loading, single-shot provider runs, and the
seven structured-output metrics.

Rates with a zero denominator are undefined and stay undefined — they are
flagged and rendered as n/a, never as 0 or 100.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import httpx

from .dialogue import Intent
from .envelope import is_envelope_reply, parse_reply_envelope
from .extract import (
    ExtractionPolicy,
    FieldDiff,
    NoJsonFound,
    SchemaViolation,
    UnclassifiableQuestion,
    classify_followup_question,
    compare_drafts,
    extract_json_block,
    parse_draft,
)
from .gateway import (
    ChatTurn,
    GatewayError,
    ProviderConfig,
    Role,
    complete,
    default_directory,
    render_system_prompt,
)
from .orders import (
    FieldName,
    OrderDraft,
    SymbolDirectory,
    draft_to_wire,
    missing_fields,
)


class DatasetParseError(Exception):
    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class InvariantViolation(Exception):
    def __init__(self, record_id: str, message: str):
        self.record_id = record_id
        super().__init__(f"record {record_id}: {message}")


class MisalignedOutcomes(Exception):
    pass


@dataclass(frozen=True)
class DatasetRecord:
    """One benchmark item: an utterance plus its hand-verified alignment."""

    id: str
    input_text: str
    category: Intent
    gold: OrderDraft | None
    gold_followups: frozenset[FieldName] = frozenset()
    note: str = ""

    def __post_init__(self) -> None:
        if self.gold is not None:
            required = missing_fields(self.gold)
            if self.gold_followups != required:
                raise InvariantViolation(
                    self.id,
                    f"gold_followups {sorted(f.value for f in self.gold_followups)} "
                    f"!= missing fields {sorted(f.value for f in required)}",
                )
        elif self.gold_followups:
            raise InvariantViolation(self.id, "gold_followups without a gold draft")

    def to_wire(self) -> dict:
        return {
            "id": self.id,
            "input_text": self.input_text,
            "category": self.category.value,
            "gold": None if self.gold is None else draft_to_wire(self.gold),
            "gold_followups": sorted(f.value for f in self.gold_followups),
            "note": self.note,
        }


def record_from_wire(obj: dict) -> DatasetRecord:
    gold = None
    if obj.get("gold") is not None:
        gold = parse_draft(json.dumps(obj["gold"]), ExtractionPolicy.STRICT)
    return DatasetRecord(
        id=str(obj["id"]),
        input_text=obj["input_text"],
        category=Intent(obj["category"]),
        gold=gold,
        gold_followups=frozenset(FieldName(f) for f in obj.get("gold_followups", [])),
        note=obj.get("note", ""),
    )


def load_dataset(path: str | Path) -> list[DatasetRecord]:
    """Load a JSONL dataset, validating invariants and rejecting duplicate ids."""
    records: list[DatasetRecord] = []
    seen: set[str] = set()
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetParseError(line_no, f"invalid JSON: {exc}") from exc
        try:
            record = record_from_wire(obj)
        except InvariantViolation:
            raise
        except (KeyError, ValueError, SchemaViolation) as exc:
            raise DatasetParseError(line_no, str(exc)) from exc
        if record.id in seen:
            raise DatasetParseError(line_no, f"duplicate record id {record.id!r}")
        seen.add(record.id)
        records.append(record)
    return records


def save_dataset(records: Sequence[DatasetRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_wire(), ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class EvalOutcome:
    """Result of one single-shot evaluation call."""

    record_id: str
    generated: bool
    predicted: OrderDraft | None = None
    diff: FieldDiff | None = None
    asked: frozenset[FieldName] = frozenset()
    unclassified_questions: int = 0
    raw_reply: str = ""
    error: str | None = None


def _questions_outside_json(reply: str, json_text: str) -> list[str]:
    prose = reply.replace(json_text, " ")
    return [
        chunk.strip() + "?"
        for chunk in prose.replace("？", "?").split("?")[:-1]
        if chunk.strip()
    ]


def outcome_from_reply(
    record: DatasetRecord,
    reply: str,
    policy: ExtractionPolicy = ExtractionPolicy.STRICT,
) -> EvalOutcome:
    """Score one reply text against a record.

    An unparseable reply counts as non-generation.  Asked fields come from
    the envelope when present, else from classifying free-text question
    sentences around the JSON block.
    """
    try:
        if is_envelope_reply(reply):
            env = parse_reply_envelope(reply, policy)
            predicted = env.order
            asked = frozenset(env.follow_up)
            unclassified = 0
        else:
            json_text = extract_json_block(reply)
            predicted = parse_draft(json_text, policy)
            asked_fields: set[FieldName] = set()
            unclassified = 0
            for question in _questions_outside_json(reply, json_text):
                try:
                    asked_fields.add(classify_followup_question(question))
                except UnclassifiableQuestion:
                    unclassified += 1
            asked = frozenset(asked_fields)
    except (NoJsonFound, SchemaViolation) as exc:
        return EvalOutcome(record.id, generated=False, raw_reply=reply, error=str(exc))

    diff = compare_drafts(record.gold, predicted) if record.gold is not None else None
    return EvalOutcome(
        record_id=record.id,
        generated=True,
        predicted=predicted,
        diff=diff,
        asked=asked,
        unclassified_questions=unclassified,
        raw_reply=reply,
    )


def evaluate_record(
    record: DatasetRecord,
    provider_cfg: ProviderConfig,
    policy: ExtractionPolicy = ExtractionPolicy.STRICT,
    directory: SymbolDirectory | None = None,
    transport: httpx.BaseTransport | None = None,
) -> EvalOutcome:
    """Single-shot evaluation: one prompt, one reply, no clarification loop.

    Provider failures count as non-generation, with the reason recorded.
    """
    directory = directory or default_directory(provider_cfg.symbols_path or None)
    transcript = [
        ChatTurn(Role.SYSTEM, render_system_prompt(directory)),
        ChatTurn(Role.USER, record.input_text),
    ]
    try:
        reply = complete(transcript, provider_cfg, transport=transport)
    except GatewayError as exc:
        return EvalOutcome(record.id, generated=False, error=f"provider error: {exc}")
    return outcome_from_reply(record, reply, policy)


# -- Metrics ---------------------------------------------------------------------


@dataclass(frozen=True)
class MetricsCounts:
    total_inputs: int = 0
    json_outputs: int = 0
    missing_json_outputs: int = 0
    error_json_outputs: int = 0
    correct_json_outputs: int = 0
    total_required_followups: int = 0
    followups: int = 0
    missing_followups: int = 0
    extra_followups: int = 0

    def __post_init__(self) -> None:
        for name in self.__dataclass_fields__:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} cannot be negative")
        if self.json_outputs > self.total_inputs:
            raise ValueError("json_outputs cannot exceed total_inputs")
        if self.correct_json_outputs > self.json_outputs:
            raise ValueError("correct_json_outputs cannot exceed json_outputs")
        if self.missing_followups > self.total_required_followups:
            raise ValueError("missing_followups cannot exceed total_required_followups")


@dataclass(frozen=True)
class Rate:
    """Percentage with an explicit undefined state for zero denominators."""

    numerator: int
    denominator: int

    @property
    def defined(self) -> bool:
        return self.denominator > 0

    @property
    def percent(self) -> float | None:
        if not self.defined:
            return None
        return 100.0 * self.numerator / self.denominator

    def render(self) -> str:
        return "n/a" if self.percent is None else f"{self.percent:.2f}%"


@dataclass(frozen=True)
class MetricsReport:
    counts: MetricsCounts
    generation_rate: Rate
    missing_rate: Rate
    error_rate: Rate
    accuracy: Rate
    followup_rate: Rate
    missed_followup_rate: Rate
    extra_followup_rate: Rate

    RATE_FIELDS = (
        ("generation_rate", "Generation Rate"),
        ("missing_rate", "Missing Rate"),
        ("error_rate", "Error Rate"),
        ("accuracy", "Accuracy"),
        ("followup_rate", "Follow-up Rate"),
        ("missed_followup_rate", "Missed Follow-up Rate"),
        ("extra_followup_rate", "Extra Follow-up Rate"),
    )

    @classmethod
    def from_counts(cls, c: MetricsCounts) -> "MetricsReport":
        return cls(
            counts=c,
            generation_rate=Rate(c.json_outputs, c.total_inputs),
            missing_rate=Rate(c.missing_json_outputs, c.json_outputs),
            error_rate=Rate(c.error_json_outputs, c.json_outputs),
            accuracy=Rate(c.correct_json_outputs, c.total_inputs),
            followup_rate=Rate(c.followups, c.total_required_followups),
            missed_followup_rate=Rate(c.missing_followups, c.total_required_followups),
            extra_followup_rate=Rate(c.extra_followups, c.total_required_followups),
        )


def compute_metrics(
    outcomes: Sequence[EvalOutcome], records: Sequence[DatasetRecord]
) -> MetricsReport:
    """Fold outcomes into the seven rates.

    Per-output counting: a reply counts once toward the missing (error)
    numerator when at least one field is missing (wrong).  A record requires
    follow-up when its gold alignment has missing fields; it counts as
    followed-up when the reply asked about anything, as a missed follow-up
    when the asked set does not cover the required one, and as an extra
    follow-up when it asked about a field the gold already pins down.
    """
    by_id = {r.id: r for r in records}
    if len(by_id) != len(records):
        raise MisalignedOutcomes("duplicate record ids")
    if sorted(o.record_id for o in outcomes) != sorted(by_id):
        raise MisalignedOutcomes("outcomes and records do not align by id")

    total_inputs = len(records)
    json_outputs = missing_out = error_out = correct_out = 0
    required = followups = missed = extra = 0

    for outcome in outcomes:
        record = by_id[outcome.record_id]
        if outcome.generated:
            json_outputs += 1
            if outcome.diff is not None:
                if outcome.diff.missing:
                    missing_out += 1
                if outcome.diff.wrong:
                    error_out += 1
                if outcome.diff.empty:
                    correct_out += 1
        needs_followup = bool(record.gold_followups)
        if needs_followup:
            required += 1
            if outcome.asked:
                followups += 1
            if not record.gold_followups <= outcome.asked:
                missed += 1
        if outcome.asked - record.gold_followups:
            extra += 1

    counts = MetricsCounts(
        total_inputs=total_inputs,
        json_outputs=json_outputs,
        missing_json_outputs=missing_out,
        error_json_outputs=error_out,
        correct_json_outputs=correct_out,
        total_required_followups=required,
        followups=followups,
        missing_followups=missed,
        extra_followups=extra,
    )
    return MetricsReport.from_counts(counts)


def run_eval(
    records: Sequence[DatasetRecord],
    provider_cfg: ProviderConfig,
    parallelism: int = 1,
    policy: ExtractionPolicy = ExtractionPolicy.STRICT,
    directory: SymbolDirectory | None = None,
    transport: httpx.BaseTransport | None = None,
) -> tuple[list[EvalOutcome], MetricsReport]:
    """Evaluate every record with bounded parallelism.

    Outcome order is by record id regardless of completion order; a record
    that raises is folded in as generated=false, never aborting the run.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    directory = directory or default_directory(provider_cfg.symbols_path or None)

    def _eval(record: DatasetRecord) -> EvalOutcome:
        try:
            return evaluate_record(record, provider_cfg, policy, directory, transport)
        except Exception as exc:  # defensive: a record never kills the run
            return EvalOutcome(record.id, generated=False, error=f"internal error: {exc}")

    if parallelism == 1:
        outcomes = [_eval(r) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(_eval, records))
    outcomes.sort(key=lambda o: o.record_id)
    return outcomes, compute_metrics(outcomes, records)


# -- Report rendering --------------------------------------------------------------


class ReportFormat(Enum):
    MARKDOWN = "markdown"
    CSV = "csv"


def render_markdown(reports: Mapping[str, MetricsReport]) -> str:
    headers = ["Provider"] + [label for _, label in MetricsReport.RATE_FIELDS]
    lines = [
        "| " + " | ".join(headers) + " |",
        "|" + "|".join("---" for _ in headers) + "|",
    ]
    for provider in sorted(reports):
        report = reports[provider]
        cells = [provider] + [
            getattr(report, attr).render() for attr, _ in MetricsReport.RATE_FIELDS
        ]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def render_csv(reports: Mapping[str, MetricsReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["provider"] + [attr for attr, _ in MetricsReport.RATE_FIELDS])
    for provider in sorted(reports):
        report = reports[provider]
        row: list[str] = [provider]
        for attr, _ in MetricsReport.RATE_FIELDS:
            percent = getattr(report, attr).percent
            row.append("" if percent is None else f"{percent:.2f}")
        writer.writerow(row)
    return buf.getvalue()


def render_outcomes_csv(outcomes: Sequence[EvalOutcome]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        ["id", "generated", "missing_fields", "wrong_fields", "asked", "unclassified", "error"]
    )
    for o in outcomes:
        writer.writerow(
            [
                o.record_id,
                "yes" if o.generated else "no",
                " ".join(sorted(f.value for f in o.diff.missing)) if o.diff else "",
                " ".join(sorted(f.value for f in o.diff.wrong)) if o.diff else "",
                " ".join(sorted(f.value for f in o.asked)),
                o.unclassified_questions,
                o.error or "",
            ]
        )
    return buf.getvalue()


def emit_report(
    report: MetricsReport,
    outcomes: Sequence[EvalOutcome],
    format: ReportFormat = ReportFormat.MARKDOWN,
    provider_name: str = "provider",
) -> str:
    """Render a single provider's report in the chosen format."""
    if format is ReportFormat.MARKDOWN:
        return render_markdown({provider_name: report})
    return render_csv({provider_name: report})
