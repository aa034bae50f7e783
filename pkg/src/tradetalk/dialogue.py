"""Dialogue pipeline: classify input, draft an order, ask follow-up
questions one field at a time, then hand off to the venue.

States are immutable values and ``step`` is a pure transition function, so
a session can be replayed from its event log.  Provider calls happen
between steps; their replies enter as ProviderReply events.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Union

from .envelope import is_envelope_reply, parse_reply_envelope
from .exchange import ExecutionReport
from .extract import (
    ExtractionPolicy,
    NoJsonFound,
    SchemaViolation,
    extract_json_block,
    parse_draft,
)
from .lexicon import (
    MARKET_VOCAB,
    SHARES_WORDS,
    detect_side,
    find_numerals,
    first_match,
    parse_price_answer,
    parse_quantity_answer,
    parse_side_answer,
    parse_strategy_answer,
)
from .orders import (
    NOT_APPLICABLE,
    UNKNOWN,
    ExecutableOrder,
    FieldName,
    OrderDraft,
    Strategy,
    SymbolDirectory,
    TickerSymbol,
    finalize,
    missing_fields,
    pending_fields,
    present,
    resolve_symbol,
    UnknownSymbolError,
)


class Intent(Enum):
    TRADE_INSTRUCTION = "trade_instruction"
    TRADE_RELATED = "trade_related"
    OTHER = "other"


_INSTRUMENT_WORDS: tuple[str, ...] = ("stock", "stocks", "股票", "股") + tuple(SHARES_WORDS)


def classify_intent(utterance: str) -> Intent:
    """Rule triage: an actionable buy/sell verb with market context is an
    instruction; market vocabulary alone is trade-related; the rest is other."""
    lowered = utterance.casefold()
    has_verb = detect_side(utterance) is not None
    has_context = (
        first_match(_INSTRUMENT_WORDS, lowered) is not None
        or first_match(MARKET_VOCAB, lowered) is not None
        or bool(find_numerals(utterance))
    )
    if has_verb and has_context:
        return Intent.TRADE_INSTRUCTION
    if has_verb or first_match(MARKET_VOCAB, lowered) is not None:
        return Intent.TRADE_RELATED
    return Intent.OTHER


# -- States and events ----------------------------------------------------------


@dataclass(frozen=True)
class AwaitInput:
    pass


@dataclass(frozen=True)
class Drafting:
    utterance: str


@dataclass(frozen=True)
class AwaitClarification:
    draft: OrderDraft
    pending: tuple[FieldName, ...]
    turns_used: int


@dataclass(frozen=True)
class ReadyToExecute:
    order: ExecutableOrder


@dataclass(frozen=True)
class Executed:
    report: ExecutionReport


@dataclass(frozen=True)
class Rejected:
    intent: Intent


@dataclass(frozen=True)
class Failed:
    reason: str


SessionState = Union[
    AwaitInput, Drafting, AwaitClarification, ReadyToExecute, Executed, Rejected, Failed
]

TERMINAL_STATES = (Executed, Rejected, Failed)


@dataclass(frozen=True)
class UserMessage:
    text: str


@dataclass(frozen=True)
class ProviderReply:
    text: str


@dataclass(frozen=True)
class ConfirmExecute:
    pass


@dataclass(frozen=True)
class FeedTick:
    ticks: int = 1


SessionEvent = Union[UserMessage, ProviderReply, ConfirmExecute, FeedTick]


class MessageKind(Enum):
    QUESTION = "question"
    NOTICE = "notice"
    REPORT = "report"


@dataclass(frozen=True)
class OutboundMessage:
    kind: MessageKind
    text: str
    field: FieldName | None = None


@dataclass(frozen=True)
class SessionConfig:
    max_turns: int = 5
    auto_execute: bool = False
    policy: ExtractionPolicy = ExtractionPolicy.LENIENT

    def __post_init__(self) -> None:
        if self.max_turns < 1:
            raise ValueError("max_turns must be >= 1")


Executor = Callable[[ExecutableOrder], ExecutionReport]


class IllegalEvent(Exception):
    """Event not legal in the current state.  The session is preserved —
    step never returns a partially applied transition."""

    def __init__(self, state: SessionState, event: SessionEvent):
        self.state = state
        self.event = event
        super().__init__(f"{type(event).__name__} is not legal in {type(state).__name__}")


class Unparseable(Exception):
    """Clarification answer did not contain a usable value for the field."""

    def __init__(self, field_name: FieldName, answer: str):
        self.field = field_name
        self.answer = answer
        super().__init__(f"could not read a {field_name.value} from {answer!r}")


# -- Question templates ----------------------------------------------------------

QUESTION_TEMPLATES: dict[FieldName, str] = {
    FieldName.STRATEGY: "Would you like to use a market or limit order?",
    FieldName.SYMBOL: "Which stock are you referring to? Could you specify the stock symbol?",
    FieldName.ORDER_TYPE: "Would you like to buy or sell?",
    FieldName.QUANTITY: "How many shares would you like to trade?",
    FieldName.PRICE: "Could you please tell me what the stock price is?",
}

REJECT_NOTICES: dict[Intent, str] = {
    Intent.TRADE_RELATED: (
        "Happy to chat about the market, but I only place orders from a concrete "
        "trade instruction. No order was created."
    ),
    Intent.OTHER: (
        "That does not look like a trade instruction, so no order was created."
    ),
}


def render_question(field_name: FieldName) -> str:
    """Fixed per-field clarification question."""
    return QUESTION_TEMPLATES[field_name]


# -- Answer merging ----------------------------------------------------------------


def merge_answer(
    draft: OrderDraft,
    field_name: FieldName,
    answer: str,
    directory: SymbolDirectory,
) -> OrderDraft:
    """Fill one missing field from a clarification answer.

    Only the named field changes, with one coupling: answering
    strategy=market marks the price not-applicable, and strategy=limit
    re-opens a not-applicable price as unknown.  Raises Unparseable when
    the answer carries no usable value (the question is re-asked).
    """
    if field_name not in missing_fields(draft):
        raise ValueError(f"{field_name.value} is not a missing field of this draft")

    if field_name is FieldName.STRATEGY:
        strategy = parse_strategy_answer(answer)
        if strategy is None:
            raise Unparseable(field_name, answer)
        updated = draft
        # adjust price first so no intermediate draft breaks an invariant
        if strategy is Strategy.MARKET:
            updated = updated.with_field(FieldName.PRICE, NOT_APPLICABLE)
        elif updated.price.is_na:
            updated = updated.with_field(FieldName.PRICE, UNKNOWN)
        return updated.with_field(FieldName.STRATEGY, present(strategy))

    if field_name is FieldName.SYMBOL:
        try:
            symbol = resolve_symbol(answer, directory)
        except UnknownSymbolError:
            code = _bare_code(answer)
            if code is None:
                raise Unparseable(field_name, answer) from None
            symbol = code
        return draft.with_field(FieldName.SYMBOL, present(symbol))

    if field_name is FieldName.ORDER_TYPE:
        side = parse_side_answer(answer)
        if side is None:
            raise Unparseable(field_name, answer)
        return draft.with_field(FieldName.ORDER_TYPE, present(side))

    if field_name is FieldName.QUANTITY:
        quantity = parse_quantity_answer(answer)
        if quantity is None:
            raise Unparseable(field_name, answer)
        return draft.with_field(FieldName.QUANTITY, present(quantity))

    price = parse_price_answer(answer)
    if price is None:
        raise Unparseable(field_name, answer)
    return draft.with_field(FieldName.PRICE, present(price))


def _bare_code(answer: str) -> TickerSymbol | None:
    for token in answer.split():
        cleaned = token.strip(".,!?;:()[]{}\"'")
        if cleaned.isdigit() and 5 <= len(cleaned) <= 6:
            return TickerSymbol(cleaned)
    return None


# -- Transition function ----------------------------------------------------------


def step(
    state: SessionState,
    event: SessionEvent,
    config: SessionConfig | None = None,
    directory: SymbolDirectory | None = None,
    executor: Executor | None = None,
) -> tuple[SessionState, list[OutboundMessage]]:
    """Total transition function over session states.

    Returns the next state plus any outbound messages (questions, notices,
    reports).  Raises IllegalEvent for event/state pairs outside the
    transition table; the caller's state value is untouched.
    """
    config = config or SessionConfig()
    if directory is None:
        from .gateway import default_directory

        directory = default_directory()

    if isinstance(event, FeedTick):
        return state, []

    if isinstance(state, AwaitInput) and isinstance(event, UserMessage):
        intent = classify_intent(event.text)
        if intent is not Intent.TRADE_INSTRUCTION:
            notice = OutboundMessage(MessageKind.NOTICE, REJECT_NOTICES[intent])
            return Rejected(intent), [notice]
        return Drafting(utterance=event.text), []

    if isinstance(state, Drafting) and isinstance(event, ProviderReply):
        try:
            draft = _draft_from_reply(event.text, config.policy)
        except (NoJsonFound, SchemaViolation) as exc:
            return Failed(f"provider reply unusable: {exc}"), [
                OutboundMessage(MessageKind.NOTICE, "The order could not be read back; giving up.")
            ]
        return _advance(draft, turns_used=0, config=config, executor=executor)

    if isinstance(state, AwaitClarification) and isinstance(event, UserMessage):
        field_name = state.pending[0]
        turns = state.turns_used + 1
        if turns > config.max_turns:
            return Failed("max clarification turns exceeded"), []
        try:
            merged = merge_answer(state.draft, field_name, event.text, directory)
        except Unparseable:
            question = OutboundMessage(
                MessageKind.QUESTION, render_question(field_name), field=field_name
            )
            return AwaitClarification(state.draft, state.pending, turns), [question]
        return _advance(merged, turns_used=turns, config=config, executor=executor)

    if isinstance(state, ReadyToExecute) and isinstance(event, ConfirmExecute):
        return _execute(state.order, executor)

    raise IllegalEvent(state, event)


def _advance(
    draft: OrderDraft,
    turns_used: int,
    config: SessionConfig,
    executor: Executor | None,
) -> tuple[SessionState, list[OutboundMessage]]:
    pending = pending_fields(draft)
    if not pending:
        order = finalize(draft)
        if config.auto_execute:
            return _execute(order, executor)
        return ReadyToExecute(order), []
    question = OutboundMessage(MessageKind.QUESTION, render_question(pending[0]), field=pending[0])
    return AwaitClarification(draft, pending, turns_used), [question]


def _execute(
    order: ExecutableOrder, executor: Executor | None
) -> tuple[SessionState, list[OutboundMessage]]:
    if executor is None:
        raise ValueError("no executor wired; cannot execute")
    report = executor(order)
    text = json.dumps(report.to_wire(), ensure_ascii=False)
    return Executed(report), [OutboundMessage(MessageKind.REPORT, text)]


def _draft_from_reply(reply_text: str, policy: ExtractionPolicy) -> OrderDraft:
    if is_envelope_reply(reply_text):
        return parse_reply_envelope(reply_text, policy).order
    return parse_draft(extract_json_block(reply_text), policy)


# -- Session wrapper with transcript log -------------------------------------------


def _event_to_wire(event: SessionEvent) -> dict:
    if isinstance(event, UserMessage):
        return {"type": "user_message", "text": event.text}
    if isinstance(event, ProviderReply):
        return {"type": "provider_reply", "text": event.text}
    if isinstance(event, ConfirmExecute):
        return {"type": "confirm_execute"}
    return {"type": "feed_tick", "ticks": event.ticks}


def event_from_wire(obj: dict) -> SessionEvent:
    kind = obj.get("type")
    if kind == "user_message":
        return UserMessage(obj["text"])
    if kind == "provider_reply":
        return ProviderReply(obj["text"])
    if kind == "confirm_execute":
        return ConfirmExecute()
    if kind == "feed_tick":
        return FeedTick(obj.get("ticks", 1))
    raise ValueError(f"unknown event type: {kind!r}")


class Session:
    """Owns one session's state and appends every event to a JSONL log."""

    def __init__(
        self,
        config: SessionConfig | None = None,
        directory: SymbolDirectory | None = None,
        executor: Executor | None = None,
        log_path: str | Path | None = None,
    ):
        self.state: SessionState = AwaitInput()
        self.config = config or SessionConfig()
        self.directory = directory
        self.executor = executor
        self.log_path = Path(log_path) if log_path else None

    @property
    def terminal(self) -> bool:
        return isinstance(self.state, TERMINAL_STATES)

    def step(self, event: SessionEvent) -> list[OutboundMessage]:
        new_state, messages = step(
            self.state, event, self.config, self.directory, self.executor
        )
        self._log(event, new_state, messages)
        self.state = new_state
        return messages

    def _log(
        self, event: SessionEvent, new_state: SessionState, messages: list[OutboundMessage]
    ) -> None:
        if self.log_path is None:
            return
        entry = {
            "ts": time.time(),
            "event": _event_to_wire(event),
            "state": type(new_state).__name__,
            "messages": [m.text for m in messages],
        }
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")


def replay_transcript(
    log_path: str | Path,
    config: SessionConfig | None = None,
    directory: SymbolDirectory | None = None,
    executor: Executor | None = None,
) -> SessionState:
    """Re-run a session's logged events through the pure transition function."""
    state: SessionState = AwaitInput()
    for line in Path(log_path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        event = event_from_wire(json.loads(line)["event"])
        state, _ = step(state, event, config, directory, executor)
    return state
