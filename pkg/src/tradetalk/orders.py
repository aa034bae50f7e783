"""Core order domain: five-field drafts with tri-state slots.

An order draft tracks five slots (strategy, symbol, order_type, price,
quantity).  Each slot is Present with a typed value, Unknown (the utterance
never said), or NotApplicable (meaningless for this order — legal only for
the price of a market order).  Drafts are immutable values; completeness
checks and finalization are pure functions.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from decimal import Decimal, InvalidOperation
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping


class Strategy(Enum):
    """Order strategy.  Values are the wire spellings."""

    MARKET = "market order"
    LIMIT = "limit order"


class Side(Enum):
    """Trade direction.  Wire key is ``order_type``."""

    BUY = "buy"
    SELL = "sell"


class FieldName(str, Enum):
    """The five wire keys of an order draft."""

    STRATEGY = "strategy"
    SYMBOL = "symbol"
    ORDER_TYPE = "order_type"
    PRICE = "price"
    QUANTITY = "quantity"


# Clarification questions are asked in this order: strategy first, because it
# decides whether a price is needed at all.
ASK_ORDER: tuple[FieldName, ...] = (
    FieldName.STRATEGY,
    FieldName.SYMBOL,
    FieldName.ORDER_TYPE,
    FieldName.QUANTITY,
    FieldName.PRICE,
)

_SYMBOL_RE = re.compile(r"\d{5,6}")


@dataclass(frozen=True)
class TickerSymbol:
    """Exchange listing code: 6 digits for mainland, 5 for HKEX."""

    code: str

    def __post_init__(self) -> None:
        if not _SYMBOL_RE.fullmatch(self.code):
            raise ValueError(f"ticker symbol must be 5-6 ASCII digits, got {self.code!r}")

    def __str__(self) -> str:
        return self.code


@dataclass(frozen=True)
class Money:
    """Positive exact decimal amount, at most 2 fractional digits, unitless."""

    amount: Decimal

    def __post_init__(self) -> None:
        if not isinstance(self.amount, Decimal):
            raise TypeError("Money.amount must be a Decimal; use money() to coerce")
        if not self.amount.is_finite():
            raise ValueError(f"money amount must be finite, got {self.amount}")
        if self.amount <= 0:
            raise ValueError(f"money amount must be positive, got {self.amount}")
        if -self.amount.as_tuple().exponent > 2:
            raise ValueError(f"money amount has more than 2 fractional digits: {self.amount}")

    def __str__(self) -> str:
        return str(self.amount)


def money(value: int | float | str | Decimal | Money) -> Money:
    """Coerce a numeric value to Money.  Floats go through str() so the
    shortest decimal repr is preserved (1800.0 -> Decimal('1800.0'))."""
    if isinstance(value, Money):
        return value
    if isinstance(value, Decimal):
        return Money(value)
    if isinstance(value, bool):
        raise ValueError("money amount cannot be a bool")
    if isinstance(value, (int, float)):
        return Money(Decimal(str(value)))
    try:
        return Money(Decimal(value.strip()))
    except InvalidOperation as exc:
        raise ValueError(f"not a numeric amount: {value!r}") from exc


def validate_share_count(quantity: int) -> int:
    """Share counts are integers >= 1."""
    if isinstance(quantity, bool) or not isinstance(quantity, int):
        raise ValueError(f"share count must be an integer, got {quantity!r}")
    if quantity < 1:
        raise ValueError(f"share count must be >= 1, got {quantity}")
    return quantity


class FieldKind(Enum):
    PRESENT = "present"
    UNKNOWN = "unknown"
    NOT_APPLICABLE = "not_applicable"


@dataclass(frozen=True)
class FieldState:
    """Tri-state slot: a value, unknown (wire null), or not applicable
    (wire string "None")."""

    kind: FieldKind
    value: Any = None

    def __post_init__(self) -> None:
        if self.kind is FieldKind.PRESENT and self.value is None:
            raise ValueError("present field needs a value")
        if self.kind is not FieldKind.PRESENT and self.value is not None:
            raise ValueError(f"{self.kind.value} field cannot carry a value")

    @property
    def is_present(self) -> bool:
        return self.kind is FieldKind.PRESENT

    @property
    def is_unknown(self) -> bool:
        return self.kind is FieldKind.UNKNOWN

    @property
    def is_na(self) -> bool:
        return self.kind is FieldKind.NOT_APPLICABLE


def present(value: Any) -> FieldState:
    return FieldState(FieldKind.PRESENT, value)


UNKNOWN = FieldState(FieldKind.UNKNOWN)
NOT_APPLICABLE = FieldState(FieldKind.NOT_APPLICABLE)

_FIELD_TYPES: dict[FieldName, type] = {
    FieldName.STRATEGY: Strategy,
    FieldName.SYMBOL: TickerSymbol,
    FieldName.ORDER_TYPE: Side,
    FieldName.PRICE: Money,
    FieldName.QUANTITY: int,
}


@dataclass(frozen=True)
class OrderDraft:
    """Partially filled five-field order.

    Invariants enforced on construction:
      - NotApplicable is legal only for price, and only while strategy is
        market or still unknown.
      - A market order never carries a present price; a limit order never
        carries a not-applicable price.
    """

    strategy: FieldState = UNKNOWN
    symbol: FieldState = UNKNOWN
    side: FieldState = UNKNOWN
    price: FieldState = UNKNOWN
    quantity: FieldState = UNKNOWN

    def __post_init__(self) -> None:
        for name in (FieldName.STRATEGY, FieldName.SYMBOL, FieldName.ORDER_TYPE, FieldName.QUANTITY):
            state = self.field(name)
            if state.is_na:
                raise ValueError(f"{name.value} cannot be not-applicable; only price can")
            if state.is_present and not isinstance(state.value, _FIELD_TYPES[name]):
                raise ValueError(
                    f"{name.value} value must be {_FIELD_TYPES[name].__name__}, got {state.value!r}"
                )
        if self.quantity.is_present:
            validate_share_count(self.quantity.value)
        if self.price.is_present and not isinstance(self.price.value, Money):
            raise ValueError(f"price value must be Money, got {self.price.value!r}")
        if self.strategy.is_present:
            if self.strategy.value is Strategy.MARKET and self.price.is_present:
                raise ValueError("market order cannot carry a present price")
            if self.strategy.value is Strategy.LIMIT and self.price.is_na:
                raise ValueError("limit order price cannot be not-applicable")

    def field(self, name: FieldName) -> FieldState:
        return getattr(self, _ATTR_BY_FIELD[name])

    def with_field(self, name: FieldName, state: FieldState) -> "OrderDraft":
        return replace(self, **{_ATTR_BY_FIELD[name]: state})


_ATTR_BY_FIELD: dict[FieldName, str] = {
    FieldName.STRATEGY: "strategy",
    FieldName.SYMBOL: "symbol",
    FieldName.ORDER_TYPE: "side",
    FieldName.PRICE: "price",
    FieldName.QUANTITY: "quantity",
}


@dataclass(frozen=True)
class ExecutableOrder:
    """Fully resolved order ready for the venue.  price is None exactly when
    the strategy is a market order (not applicable)."""

    strategy: Strategy
    symbol: TickerSymbol
    side: Side
    price: Money | None
    quantity: int

    def __post_init__(self) -> None:
        validate_share_count(self.quantity)
        if (self.strategy is Strategy.MARKET) != (self.price is None):
            raise ValueError("price must be absent for market orders and present for limit orders")


class IncompleteOrderError(Exception):
    """Raised by finalize() when required fields are still unknown."""

    def __init__(self, fields: set[FieldName]):
        self.fields = frozenset(fields)
        names = ", ".join(sorted(f.value for f in fields))
        super().__init__(f"order draft incomplete: missing {names}")


def missing_fields(draft: OrderDraft) -> set[FieldName]:
    """Fields that still need an answer before the draft can execute.

    Price is special: never needed for a market order, needed for a limit
    order when unknown, and provisionally needed while the strategy itself
    is unknown (asking strategy first lets price be dropped if market).
    """
    missing = {
        name
        for name in (FieldName.STRATEGY, FieldName.SYMBOL, FieldName.ORDER_TYPE, FieldName.QUANTITY)
        if draft.field(name).is_unknown
    }
    strategy = draft.strategy
    if strategy.is_present and strategy.value is Strategy.MARKET:
        pass  # price never required
    elif draft.price.is_unknown:
        missing.add(FieldName.PRICE)
    return missing


def pending_fields(draft: OrderDraft) -> tuple[FieldName, ...]:
    """missing_fields in the fixed clarification order."""
    missing = missing_fields(draft)
    return tuple(name for name in ASK_ORDER if name in missing)


def finalize(draft: OrderDraft) -> ExecutableOrder:
    """Promote a complete draft to an executable order.

    Raises IncompleteOrderError listing exactly missing_fields(draft) when
    anything is still unknown.  A market order's price slot (unknown or
    not-applicable) resolves to None.
    """
    missing = missing_fields(draft)
    if missing:
        raise IncompleteOrderError(missing)
    strategy: Strategy = draft.strategy.value
    price = draft.price.value if strategy is Strategy.LIMIT else None
    return ExecutableOrder(
        strategy=strategy,
        symbol=draft.symbol.value,
        side=draft.side.value,
        price=price,
        quantity=draft.quantity.value,
    )


# -- Symbol directory ---------------------------------------------------------

_BUILTIN_PAIRS: tuple[tuple[str, str], ...] = (
    ("Kweichow Moutai", "600519"),
    ("Moutai", "600519"),
    ("Vanke", "000002"),
    ("Tencent", "00700"),
)


class UnknownSymbolError(Exception):
    """Alias not found in the directory; caller should ask a follow-up."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown symbol alias: {name!r}")


def normalize_alias(name: str) -> str:
    return " ".join(name.casefold().split())


@dataclass(frozen=True)
class SymbolDirectory:
    """Alias -> listing code lookup, keyed by normalized alias."""

    entries: Mapping[str, TickerSymbol]

    @classmethod
    def builtins(cls) -> "SymbolDirectory":
        return cls.from_pairs(_BUILTIN_PAIRS)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "SymbolDirectory":
        entries: dict[str, TickerSymbol] = {}
        for alias, code in pairs:
            key = normalize_alias(alias)
            if not key:
                raise ValueError("empty alias")
            symbol = TickerSymbol(code)
            if key in entries and entries[key] != symbol:
                raise ValueError(f"alias {alias!r} maps to both {entries[key]} and {code}")
            entries[key] = symbol
        return cls(entries=entries)

    @classmethod
    def from_file(cls, path: str | Path, include_builtins: bool = True) -> "SymbolDirectory":
        """Load alias<TAB>code lines; '#' starts a comment.  Built-in pairs
        are merged in unless disabled."""
        pairs: list[tuple[str, str]] = list(_BUILTIN_PAIRS) if include_builtins else []
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'alias<TAB>code', got {raw!r}")
            pairs.append((parts[0].strip(), parts[1].strip()))
        return cls.from_pairs(pairs)

    def aliases(self) -> tuple[str, ...]:
        """Normalized aliases, longest first (for greedy text scanning)."""
        return tuple(sorted(self.entries, key=lambda a: (-len(a), a)))

    def lookup(self, name: str) -> TickerSymbol:
        key = normalize_alias(name)
        try:
            return self.entries[key]
        except KeyError:
            raise UnknownSymbolError(name) from None


def resolve_symbol(name: str, directory: SymbolDirectory) -> TickerSymbol:
    """Normalized alias lookup.  Raises UnknownSymbolError when absent —
    callers must treat the symbol as unknown, never guess a code."""
    return directory.lookup(name)


# -- Wire form ----------------------------------------------------------------
#
# Keys: strategy, symbol, order_type, price, quantity.
# Unknown encodes as JSON null; a market order's price encodes as the
# string "None".  Prices are JSON numbers, quantities JSON integers.

WIRE_NA_TOKEN = "None"


def _encode_state(state: FieldState, name: FieldName) -> Any:
    if state.is_unknown:
        return None
    if state.is_na:
        return WIRE_NA_TOKEN
    value = state.value
    if name in (FieldName.STRATEGY, FieldName.ORDER_TYPE):
        return value.value
    if name is FieldName.SYMBOL:
        return value.code
    if name is FieldName.PRICE:
        return float(value.amount)
    return value


def draft_to_wire(draft: OrderDraft) -> dict[str, Any]:
    """Wire-form dict, keys in canonical order."""
    return {name.value: _encode_state(draft.field(name), name) for name in FieldName}


def draft_to_json(draft: OrderDraft, indent: int | None = 2) -> str:
    return json.dumps(draft_to_wire(draft), indent=indent, ensure_ascii=False)


def order_to_wire(order: ExecutableOrder) -> dict[str, Any]:
    return {
        "strategy": order.strategy.value,
        "symbol": order.symbol.code,
        "order_type": order.side.value,
        "price": WIRE_NA_TOKEN if order.price is None else float(order.price.amount),
        "quantity": order.quantity,
    }
