"""Bilingual cue lexicons and small text parsers shared by the rule-based
extractor and the clarification dialogue.

The dataset style is code-mixed English/Chinese, so every cue list carries
both languages.  Matching is deterministic: phrase cues are checked longest
first, single ASCII words on word boundaries, CJK cues as substrings.
"""

from __future__ import annotations

import re
from decimal import Decimal, InvalidOperation

from .orders import Money, Side, Strategy, money

BUY_WORDS: tuple[str, ...] = (
    "buy", "buying", "bought", "purchase", "purchasing", "acquire",
    "stock up", "add to my position", "加仓", "买入", "购入", "买",
)

SELL_WORDS: tuple[str, ...] = (
    "sell", "selling", "sold", "offload", "unload", "liquidate", "dump",
    "清仓", "抛售", "卖出", "卖", "抛",
)

MARKET_CUES: tuple[str, ...] = (
    "market order", "market price", "current price", "current stock price",
    "at market", "at the market", "best available price", "prevailing price",
    "市价单", "市价", "现价",
)

LIMIT_CUES: tuple[str, ...] = (
    "limit order", "限价单", "限价",
)

# Words that put a following numeral in price position ("falls to 1800",
# "at $500").  Kept to single tokens so noise injection can protect the
# marker+numeral bigram.
PRICE_MARKERS: frozenset[str] = frozenset(
    {"at", "to", "@", "reaches", "hits", "touches", "under", "below", "above", "price", "到", "跌到", "涨到", "价格"}
)

SHARES_WORDS: frozenset[str] = frozenset({"share", "shares", "lot", "lots", "股"})

CURRENCY_SIGNS = "$¥￥"

# Market vocabulary for intent triage: enough to call a sentence
# trade-related even when no actionable verb appears.
MARKET_VOCAB: tuple[str, ...] = (
    "stock", "stocks", "share", "shares", "market", "price", "prices",
    "position", "portfolio", "trading", "trade", "ticker", "dividend",
    "dividends", "risen", "rise", "fell", "fall", "fallen", "dropped", "rally", "bull",
    "bear", "exchange", "invest", "investment", "股票", "股价", "大盘",
    "行情", "涨", "跌", "持仓", "分红",
)

_NUMERAL_RE = re.compile(rf"(?P<cur>[{CURRENCY_SIGNS}])?(?P<num>\d[\d,]*(?:\.\d+)?)")


def match_phrase(phrase: str, text: str) -> int:
    """Position of a cue phrase in casefolded text, or -1.

    ASCII phrases respect word boundaries; CJK phrases match anywhere.
    """
    if phrase.isascii():
        m = re.search(rf"\b{re.escape(phrase)}\b", text)
        return m.start() if m else -1
    return text.find(phrase)


def first_match(cues: tuple[str, ...], text: str) -> tuple[int, str] | None:
    """Earliest-position match over a cue list; longer cue wins ties."""
    best: tuple[int, str] | None = None
    for cue in cues:
        pos = match_phrase(cue, text)
        if pos < 0:
            continue
        if best is None or pos < best[0] or (pos == best[0] and len(cue) > len(best[1])):
            best = (pos, cue)
    return best


def detect_side(text: str) -> Side | None:
    """Earliest buy/sell verb wins; None when neither appears."""
    lowered = text.casefold()
    buy = first_match(BUY_WORDS, lowered)
    sell = first_match(SELL_WORDS, lowered)
    if buy is None and sell is None:
        return None
    if sell is None or (buy is not None and buy[0] <= sell[0]):
        return Side.BUY
    return Side.SELL


def parse_strategy_answer(text: str) -> Strategy | None:
    """Strategy from a short clarification answer ("market order please")."""
    lowered = text.casefold()
    market = first_match(MARKET_CUES + ("market",), lowered)
    limit = first_match(LIMIT_CUES + ("limit",), lowered)
    if market is None and limit is None:
        return None
    if limit is None or (market is not None and market[0] <= limit[0]):
        return Strategy.MARKET
    return Strategy.LIMIT


def parse_side_answer(text: str) -> Side | None:
    return detect_side(text)


def parse_quantity_answer(text: str) -> int | None:
    """First positive integer numeral in a clarification answer."""
    for m in _NUMERAL_RE.finditer(text):
        if m.group("cur"):
            continue
        raw = m.group("num").replace(",", "")
        try:
            dec = Decimal(raw)
        except InvalidOperation:
            continue
        if dec == dec.to_integral_value() and dec >= 1:
            return int(dec)
    return None


def parse_price_answer(text: str) -> Money | None:
    """First positive numeral in a clarification answer, currency sign or not."""
    for m in _NUMERAL_RE.finditer(text):
        raw = m.group("num").replace(",", "")
        try:
            return money(raw)
        except ValueError:
            continue
    return None


def find_numerals(text: str) -> list[dict]:
    """All numeral occurrences with span and currency info, left to right.

    Each entry: {start, end, raw, value: Decimal, currency: bool}.
    """
    found = []
    for m in _NUMERAL_RE.finditer(text):
        raw = m.group("num").replace(",", "")
        try:
            value = Decimal(raw)
        except InvalidOperation:
            continue
        found.append(
            {
                "start": m.start(),
                "end": m.end(),
                "raw": m.group("num"),
                "value": value,
                "currency": bool(m.group("cur")),
            }
        )
    return found
