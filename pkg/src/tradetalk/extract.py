"""Turn raw model reply text into order drafts, and score predictions.

The wire schema is small but models are sloppy about it, especially the
tri-state spellings (JSON null vs the strings "null"/"NULL"/"None"/"none").
Strict policy accepts only the canonical wire form; lenient policy maps the
usual misspellings back onto the tri-state they plainly meant.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any

from .orders import (
    NOT_APPLICABLE,
    UNKNOWN,
    FieldName,
    Money,
    OrderDraft,
    Side,
    Strategy,
    TickerSymbol,
    present,
)


class ExtractionPolicy(Enum):
    STRICT = "strict"
    LENIENT = "lenient"


class NoJsonFound(Exception):
    """Reply text contains no parseable JSON object."""


class SchemaViolation(Exception):
    """Reply JSON does not fit the five-field order schema."""

    def __init__(self, detail: str):
        self.detail = detail
        super().__init__(detail)


class UnclassifiableQuestion(Exception):
    """Follow-up question text matched no field keyword."""


# -- JSON block extraction ----------------------------------------------------


def extract_json_block(reply_text: str) -> str:
    """Return the first balanced-brace JSON object embedded in reply text.

    Markdown fences and surrounding prose are irrelevant: we scan for the
    first '{' that opens a brace-balanced span parsing as a JSON object.
    Raises NoJsonFound otherwise.
    """
    start = reply_text.find("{")
    while start != -1:
        end = _balanced_end(reply_text, start)
        if end is not None:
            candidate = reply_text[start : end + 1]
            try:
                if isinstance(json.loads(candidate), dict):
                    return candidate
            except json.JSONDecodeError:
                pass
        start = reply_text.find("{", start + 1)
    raise NoJsonFound("no JSON object found in reply")


def _balanced_end(text: str, start: int) -> int | None:
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i
    return None


# -- Draft parsing ------------------------------------------------------------

_NULLISH_SPELLINGS = frozenset({"null", "none"})

_WIRE_KEYS = frozenset(f.value for f in FieldName)


def _is_nullish_string(value: str) -> bool:
    return value.strip().casefold() in _NULLISH_SPELLINGS


def parse_draft(
    json_text: str,
    policy: ExtractionPolicy = ExtractionPolicy.STRICT,
    strategy_hint: Strategy | None = None,
    warnings: list[str] | None = None,
) -> OrderDraft:
    """Decode wire JSON into an OrderDraft under the given policy.

    Absent keys decode to unknown.  The price decode depends on strategy
    context: the object's own strategy when present, else strategy_hint.
    Lenient demotions (e.g. a present price on a market order becoming
    not-applicable) are appended to ``warnings`` when a list is passed.

    Raises SchemaViolation for unknown enum values, malformed numbers,
    non-canonical tri-state spellings (strict), or unexpected keys (strict).
    """
    if warnings is None:
        warnings = []
    try:
        obj = json.loads(json_text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"reply is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise SchemaViolation(f"expected a JSON object, got {type(obj).__name__}")

    if policy is ExtractionPolicy.STRICT:
        unexpected = sorted(set(obj) - _WIRE_KEYS)
        if unexpected:
            raise SchemaViolation(f"unexpected keys: {', '.join(unexpected)}")

    strategy_state = _parse_enum_field(obj, FieldName.STRATEGY, Strategy, policy)
    context = strategy_state.value if strategy_state.is_present else strategy_hint

    symbol_state = _parse_symbol(obj, policy)
    side_state = _parse_enum_field(obj, FieldName.ORDER_TYPE, Side, policy)
    quantity_state = _parse_quantity(obj, policy)
    price_state = _parse_price(obj, policy, context, warnings)

    try:
        return OrderDraft(
            strategy=strategy_state,
            symbol=symbol_state,
            side=side_state,
            price=price_state,
            quantity=quantity_state,
        )
    except ValueError as exc:
        raise SchemaViolation(str(exc)) from exc


def _tristate_or_none(value: Any, field: FieldName, policy: ExtractionPolicy) -> Any:
    """Resolve null/nullish-string spellings for non-price fields.

    Returns UNKNOWN, or None when the value is an actual payload the caller
    must decode.  Strict rejects every string spelling (the canonical
    unknown is JSON null, and only price may be "None").
    """
    if value is None:
        return UNKNOWN
    if isinstance(value, str) and _is_nullish_string(value):
        if policy is ExtractionPolicy.LENIENT:
            return UNKNOWN
        raise SchemaViolation(
            f'{field.value}: string {value!r} is not a legal spelling (use JSON null)'
        )
    return None


def _parse_enum_field(
    obj: dict, field: FieldName, enum_type: type, policy: ExtractionPolicy
) -> Any:
    if field.value not in obj:
        return UNKNOWN
    value = obj[field.value]
    resolved = _tristate_or_none(value, field, policy)
    if resolved is not None:
        return resolved
    if not isinstance(value, str):
        raise SchemaViolation(f"{field.value}: expected a string, got {value!r}")
    text = value if policy is ExtractionPolicy.STRICT else value.strip().casefold()
    for member in enum_type:
        if text == member.value:
            return present(member)
    raise SchemaViolation(f"{field.value}: unknown value {value!r}")


def _parse_symbol(obj: dict, policy: ExtractionPolicy) -> Any:
    if "symbol" not in obj:
        return UNKNOWN
    value = obj["symbol"]
    resolved = _tristate_or_none(value, FieldName.SYMBOL, policy)
    if resolved is not None:
        return resolved
    if not isinstance(value, str):
        raise SchemaViolation(f"symbol: expected a digit string, got {value!r}")
    try:
        return present(TickerSymbol(value.strip()))
    except ValueError as exc:
        raise SchemaViolation(str(exc)) from exc


def _parse_quantity(obj: dict, policy: ExtractionPolicy) -> Any:
    if "quantity" not in obj:
        return UNKNOWN
    value = obj["quantity"]
    resolved = _tristate_or_none(value, FieldName.QUANTITY, policy)
    if resolved is not None:
        return resolved
    count = _as_int(value)
    if count is None:
        raise SchemaViolation(f"quantity: not an integer: {value!r}")
    if count < 1:
        raise SchemaViolation(f"quantity: must be >= 1, got {count}")
    return present(count)


def _as_int(value: Any) -> int | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, Decimal):
        return int(value) if value == value.to_integral_value() else None
    if isinstance(value, str):
        try:
            dec = Decimal(value.strip())
        except InvalidOperation:
            return None
        return int(dec) if dec == dec.to_integral_value() else None
    return None


def _parse_price(
    obj: dict,
    policy: ExtractionPolicy,
    context: Strategy | None,
    warnings: list[str],
) -> Any:
    if "price" not in obj:
        return UNKNOWN
    value = obj["price"]
    if value is None:
        return UNKNOWN

    if isinstance(value, str) and _is_nullish_string(value):
        exact_na = value == "None"
        if policy is ExtractionPolicy.STRICT:
            if exact_na:
                return NOT_APPLICABLE
            raise SchemaViolation(
                f'price: string {value!r} is not a legal spelling (use JSON null or "None")'
            )
        # Lenient: exact "None" means not-applicable only in a market-order
        # context; every other nullish spelling reads as unknown.
        if exact_na and context is Strategy.MARKET:
            return NOT_APPLICABLE
        if exact_na and context is Strategy.LIMIT:
            warnings.append('price: "None" on a limit order demoted to unknown')
        return UNKNOWN

    amount = _as_decimal(value)
    if amount is None:
        raise SchemaViolation(f"price: not a number: {value!r}")
    try:
        price = Money(amount)
    except ValueError as exc:
        raise SchemaViolation(f"price: {exc}") from exc

    if context is Strategy.MARKET:
        if policy is ExtractionPolicy.STRICT:
            raise SchemaViolation("price: market order cannot carry a present price")
        warnings.append(f"price: {amount} on a market order demoted to not-applicable")
        return NOT_APPLICABLE
    return present(price)


def _as_decimal(value: Any) -> Decimal | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, Decimal):
        return value
    if isinstance(value, int):
        return Decimal(value)
    if isinstance(value, str):
        try:
            return Decimal(value.strip())
        except InvalidOperation:
            return None
    return None


# -- Draft comparison ---------------------------------------------------------


@dataclass(frozen=True)
class FieldDiff:
    """Per-record comparison of predicted vs gold drafts.

    missing: gold has a value the prediction left unknown.
    wrong:   the prediction asserts something the gold contradicts.
    """

    missing: frozenset[FieldName] = frozenset()
    wrong: frozenset[FieldName] = frozenset()

    def __post_init__(self) -> None:
        if self.missing & self.wrong:
            raise ValueError("a field cannot be both missing and wrong")

    @property
    def empty(self) -> bool:
        return not self.missing and not self.wrong


def compare_drafts(gold: OrderDraft, predicted: OrderDraft) -> FieldDiff:
    """Classify each field of the prediction against the gold draft.

    Money compares numerically (1800 == 1800.0); enums and symbols compare
    exactly.  A hallucinated value (gold unknown, predicted present) counts
    as wrong, not missing.
    """
    missing: set[FieldName] = set()
    wrong: set[FieldName] = set()
    for name in FieldName:
        g = gold.field(name)
        p = predicted.field(name)
        if g.is_present:
            if p.is_unknown:
                missing.add(name)
            elif p.is_na or p.value != g.value:
                wrong.add(name)
        else:
            # gold unknown or not-applicable: only a fabricated value is wrong
            if p.is_present:
                wrong.add(name)
    return FieldDiff(missing=frozenset(missing), wrong=frozenset(wrong))


# -- Follow-up question classification ----------------------------------------

_DEFAULT_LEXICON_FILE = "followup_lexicon.tsv"


def load_followup_lexicon(path: str | Path | None = None) -> tuple[tuple[str, FieldName], ...]:
    """Load field<TAB>keyword lines, longest keyword first.

    With no path, the packaged bilingual lexicon is used.
    """
    if path is None:
        text = resources.files("tradetalk.data").joinpath(_DEFAULT_LEXICON_FILE).read_text("utf-8")
        source = _DEFAULT_LEXICON_FILE
    else:
        text = Path(path).read_text(encoding="utf-8")
        source = str(path)
    entries: list[tuple[str, FieldName]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{source}:{lineno}: expected 'field<TAB>keyword', got {raw!r}")
        field_text, keyword = parts[0].strip(), parts[1].strip().casefold()
        try:
            field = FieldName(field_text)
        except ValueError:
            raise ValueError(f"{source}:{lineno}: unknown field {field_text!r}") from None
        if not keyword:
            raise ValueError(f"{source}:{lineno}: empty keyword")
        entries.append((keyword, field))
    entries.sort(key=lambda e: (-len(e[0]), e[0]))
    return tuple(entries)


_default_lexicon: tuple[tuple[str, FieldName], ...] | None = None


def _keyword_hits(keyword: str, text: str) -> bool:
    # Single ASCII words match on word boundaries; phrases and CJK keywords
    # match as substrings (\b is useless between CJK characters).
    if keyword.isascii() and " " not in keyword:
        return re.search(rf"\b{re.escape(keyword)}\b", text) is not None
    return keyword in text


def classify_followup_question(
    question_text: str,
    lexicon: tuple[tuple[str, FieldName], ...] | None = None,
) -> FieldName:
    """Map a free-text clarification question to the field it asks about.

    Longest matching keyword wins.  Raises UnclassifiableQuestion when no
    keyword matches — callers count those separately as off-target asks.
    """
    global _default_lexicon
    if lexicon is None:
        if _default_lexicon is None:
            _default_lexicon = load_followup_lexicon()
        lexicon = _default_lexicon
    text = question_text.casefold()
    for keyword, field in lexicon:
        if _keyword_hits(keyword, text):
            return field
    raise UnclassifiableQuestion(f"no field keyword in question: {question_text!r}")
