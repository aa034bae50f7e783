"""Deterministic rule-based order extractor.

This is the offline reference provider: a fixed grammar over cue lexicons
that turns an utterance into a reply envelope.  Its follow-up list is always
exactly the draft's missing fields, which makes it the zero-noise baseline
for the evaluation harness and the corpus-authoring oracle.
"""

from __future__ import annotations

import re


from .envelope import ReplyEnvelope
from .lexicon import (
    CURRENCY_SIGNS,
    LIMIT_CUES,
    MARKET_CUES,
    PRICE_MARKERS,
    SHARES_WORDS,
    detect_side,
    find_numerals,
    first_match,
)
from .orders import (
    NOT_APPLICABLE,
    UNKNOWN,
    FieldName,
    Money,
    OrderDraft,
    Strategy,
    SymbolDirectory,
    TickerSymbol,
    pending_fields,
    present,
)

_CJK_PRICE_SUFFIX_MARKERS = ("跌到", "涨到", "到", "价格")
_CODE_RE = re.compile(r"\d{5,6}")
_PUNCT_STRIP = ".,!?;:()[]{}\"'，。！？；：（）"


def _next_token(text: str, pos: int) -> str:
    m = re.match(r"\s*(\S+)", text[pos:])
    return m.group(1) if m else ""


def _prev_token(text: str, pos: int) -> str:
    m = re.search(r"(\S+)\s*$", text[:pos])
    return m.group(1) if m else ""


def _clean(token: str) -> str:
    return token.strip(_PUNCT_STRIP).casefold()


def _is_quantity_numeral(text: str, num: dict) -> bool:
    if num["currency"]:
        return False
    if text[num["end"] : num["end"] + 1] == "股":
        return True
    nxt = _clean(_next_token(text, num["end"]))
    return nxt in SHARES_WORDS


def _is_price_numeral(text: str, num: dict) -> bool:
    if num["currency"]:
        return True
    prev = _clean(_prev_token(text, num["start"]))
    if prev in PRICE_MARKERS or prev.rstrip(CURRENCY_SIGNS) in PRICE_MARKERS:
        return True
    # CJK markers attach without whitespace: 跌到1800
    head = text[: num["start"]]
    return any(head.endswith(marker) for marker in _CJK_PRICE_SUFFIX_MARKERS)


def _find_symbol(
    text: str, directory: SymbolDirectory, leftover_numerals: list[dict]
) -> TickerSymbol | None:
    lowered = text.casefold()
    candidates: list[tuple[int, TickerSymbol]] = []
    claimed: list[tuple[int, int]] = []
    for alias in directory.aliases():
        if alias.isascii():
            pattern = re.compile(rf"\b{re.escape(alias)}\b")
        else:
            pattern = re.compile(re.escape(alias))
        for m in pattern.finditer(lowered):
            span = (m.start(), m.end())
            if any(s < span[1] and span[0] < e for s, e in claimed):
                continue  # inside a longer alias already matched
            claimed.append(span)
            candidates.append((m.start(), directory.entries[alias]))
    for num in leftover_numerals:
        raw = num["raw"].replace(",", "")
        if not num["currency"] and _CODE_RE.fullmatch(raw):
            candidates.append((num["start"], TickerSymbol(raw)))
    if not candidates:
        return None
    candidates.sort(key=lambda c: c[0])
    return candidates[0][1]


def rule_extract(utterance: str, directory: SymbolDirectory) -> ReplyEnvelope:
    """Run the fixed grammar over an utterance.

    Slot heuristics: side from the buy/sell verb lexicon; quantity from a
    numeral adjacent to a shares-word; price from a currency-signed numeral
    or one following a price marker; strategy is market on a market cue,
    limit when a target price (or explicit limit cue) appears, otherwise
    unknown; symbol by directory alias scan plus bare 5-6 digit codes.
    Always returns an envelope whose follow_up equals the draft's missing
    fields.
    """
    lowered = utterance.casefold()
    numerals = find_numerals(utterance)

    quantity: int | None = None
    price: Money | None = None
    used: set[int] = set()

    for i, num in enumerate(numerals):
        if quantity is None and _is_quantity_numeral(utterance, num):
            value = num["value"]
            if value == value.to_integral_value() and value >= 1:
                quantity = int(value)
                used.add(i)
    for i, num in enumerate(numerals):
        if i in used:
            continue
        if price is None and _is_price_numeral(utterance, num):
            try:
                price = Money(num["value"])
            except ValueError:
                continue  # not a representable price; never abort extraction
            used.add(i)

    leftover = [num for i, num in enumerate(numerals) if i not in used]
    symbol = _find_symbol(utterance, directory, leftover)
    side = detect_side(utterance)

    market_cue = first_match(MARKET_CUES, lowered)
    limit_cue = first_match(LIMIT_CUES, lowered)
    if market_cue is not None and (limit_cue is None or market_cue[0] <= limit_cue[0]):
        strategy: Strategy | None = Strategy.MARKET
    elif limit_cue is not None or price is not None:
        strategy = Strategy.LIMIT
    else:
        strategy = None

    if strategy is Strategy.MARKET:
        price_state = NOT_APPLICABLE
    elif price is not None:
        price_state = present(price)
    else:
        price_state = UNKNOWN

    draft = OrderDraft(
        strategy=present(strategy) if strategy is not None else UNKNOWN,
        symbol=present(symbol) if symbol is not None else UNKNOWN,
        side=present(side) if side is not None else UNKNOWN,
        price=price_state,
        quantity=present(quantity) if quantity is not None else UNKNOWN,
    )

    non_trade = all(draft.field(name).is_unknown for name in FieldName)
    return ReplyEnvelope(
        order=draft,
        follow_up=pending_fields(draft),
        question_texts=None,
        non_trade=non_trade,
    )
