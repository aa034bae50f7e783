"""Deterministic simulated venue with a scripted per-symbol price feed.

A market order fills at the current tick's price.  A limit order scans
forward and fills at the first tick whose price satisfies the limit
condition, at that tick's market price — which can improve on the limit,
never worsen it.  No partial fills, no book depth, no fees.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from .orders import ExecutableOrder, Money, Side, Strategy, money, order_to_wire

DEFAULT_HORIZON = 1000


class FillStatus(Enum):
    FILLED = "filled"
    RESTING = "resting"
    EXPIRED = "expired"
    REJECTED = "rejected"


class UnknownSymbolFeed(Exception):
    """Feed carries no ticks for the order's symbol at or after the cursor."""


class OversellRejected(Exception):
    def __init__(self, symbol: str, position: int, quantity: int):
        self.symbol = symbol
        self.position = position
        self.quantity = quantity
        super().__init__(f"cannot sell {quantity} of {symbol}: position is {position}")


@dataclass(frozen=True)
class ExecutionReport:
    status: FillStatus
    order: ExecutableOrder
    fill_price: Money | None = None
    fill_tick: int | None = None
    reason: str | None = None

    def __post_init__(self) -> None:
        if self.status is FillStatus.FILLED:
            if self.fill_price is None or self.fill_tick is None:
                raise ValueError("filled report needs fill_price and fill_tick")
            limit = self.order.price
            if limit is not None:
                if self.order.side is Side.BUY and self.fill_price.amount > limit.amount:
                    raise ValueError("limit buy filled above the limit price")
                if self.order.side is Side.SELL and self.fill_price.amount < limit.amount:
                    raise ValueError("limit sell filled below the limit price")
        elif self.fill_price is not None or self.fill_tick is not None:
            raise ValueError(f"{self.status.value} report cannot carry fill details")

    def to_wire(self) -> dict:
        return {
            "status": self.status.value,
            "order": order_to_wire(self.order),
            "fill_price": None if self.fill_price is None else float(self.fill_price.amount),
            "fill_tick": self.fill_tick,
            "reason": self.reason,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_wire(), ensure_ascii=False)


@dataclass(frozen=True)
class PriceFeed:
    """Per-symbol ordered (tick, price) series, ticks strictly increasing."""

    series: Mapping[str, tuple[tuple[int, Money], ...]]

    def __post_init__(self) -> None:
        for symbol, points in self.series.items():
            last = -1
            for tick, price in points:
                if tick <= last:
                    raise ValueError(f"{symbol}: ticks must be strictly increasing")
                if price.amount <= 0:
                    raise ValueError(f"{symbol}: prices must be positive")
                last = tick

    @classmethod
    def from_points(cls, points: Iterable[tuple[str, int, object]]) -> "PriceFeed":
        series: dict[str, list[tuple[int, Money]]] = {}
        for symbol, tick, price in points:
            series.setdefault(symbol, []).append((int(tick), money(price)))
        return cls(series={s: tuple(p) for s, p in series.items()})

    @classmethod
    def from_csv(cls, path: str | Path) -> "PriceFeed":
        """Load a symbol,tick,price CSV (header optional)."""
        rows: list[tuple[str, int, str]] = []
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                if row[0].strip().lower() == "symbol":
                    continue
                symbol, tick, price = (cell.strip() for cell in row[:3])
                rows.append((symbol, int(tick), price))
        return cls.from_points(rows)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["symbol", "tick", "price"])
            for symbol in sorted(self.series):
                for tick, price in self.series[symbol]:
                    writer.writerow([symbol, tick, str(price.amount)])

    @classmethod
    def random_walk(
        cls,
        symbols: Iterable[str],
        start_price: float = 100.0,
        ticks: int = 1000,
        seed: int = 0,
    ) -> "PriceFeed":
        """Seeded multiplicative walk, per-step factor uniform in [0.99, 1.01]."""
        rng = random.Random(seed)
        series: dict[str, tuple[tuple[int, Money], ...]] = {}
        for symbol in symbols:
            price = start_price
            points = []
            for tick in range(ticks):
                points.append((tick, money(round(price, 2))))
                price = max(0.01, price * rng.uniform(0.99, 1.01))
            series[symbol] = tuple(points)
        return cls(series=series)

    def ticks_from(self, symbol: str, start_tick: int) -> tuple[tuple[int, Money], ...]:
        points = self.series.get(symbol, ())
        return tuple(p for p in points if p[0] >= start_tick)


def _limit_crossed(side: Side, limit: Money, tick_price: Money) -> bool:
    if side is Side.BUY:
        return tick_price.amount <= limit.amount
    return tick_price.amount >= limit.amount


def submit(
    order: ExecutableOrder,
    feed: PriceFeed,
    horizon: int | None = DEFAULT_HORIZON,
    start_tick: int = 0,
) -> ExecutionReport:
    """Run one order against the feed from start_tick.

    Market orders fill at the first available tick.  Limit orders scan at
    most ``horizon`` ticks for the first crossing and fill at that tick's
    market price; with no crossing they expire (or rest when horizon is
    None, i.e. unbounded).
    """
    points = feed.ticks_from(order.symbol.code, start_tick)
    if not points:
        raise UnknownSymbolFeed(f"no feed ticks for {order.symbol} at or after tick {start_tick}")

    if order.strategy is Strategy.MARKET:
        tick, price = points[0]
        return ExecutionReport(FillStatus.FILLED, order, fill_price=price, fill_tick=tick)

    limit = order.price
    assert limit is not None  # ExecutableOrder invariant
    scan = points if horizon is None else points[:horizon]
    for tick, price in scan:
        if _limit_crossed(order.side, limit, price):
            return ExecutionReport(FillStatus.FILLED, order, fill_price=price, fill_tick=tick)
    if horizon is None:
        return ExecutionReport(FillStatus.RESTING, order, reason="limit never crossed; resting")
    return ExecutionReport(
        FillStatus.EXPIRED, order, reason=f"limit not crossed within {len(scan)} ticks"
    )


@dataclass(frozen=True)
class Portfolio:
    """Signed positions per symbol plus the ordered trade log."""

    positions: Mapping[str, int] = field(default_factory=dict)
    trade_log: tuple[ExecutionReport, ...] = ()
    oversell_protection: bool = True


def apply_fill(portfolio: Portfolio, report: ExecutionReport) -> Portfolio:
    """Fold a filled report into the portfolio, returning the new value.

    With oversell protection on (default), a sell fill larger than the
    current position raises OversellRejected instead of going negative.
    """
    if report.status is not FillStatus.FILLED:
        raise ValueError(f"can only apply filled reports, got {report.status.value}")
    order = report.order
    code = order.symbol.code
    held = portfolio.positions.get(code, 0)
    delta = order.quantity if order.side is Side.BUY else -order.quantity
    if portfolio.oversell_protection and order.side is Side.SELL and held < order.quantity:
        raise OversellRejected(code, held, order.quantity)
    positions = dict(portfolio.positions)
    positions[code] = held + delta
    return Portfolio(
        positions=positions,
        trade_log=portfolio.trade_log + (report,),
        oversell_protection=portfolio.oversell_protection,
    )


def write_trade_log(reports: Iterable[ExecutionReport], path: str | Path) -> None:
    """Append execution reports to a JSONL trade log."""
    with open(path, "a", encoding="utf-8") as fh:
        for report in reports:
            fh.write(report.to_json() + "\n")


class Venue:
    """Single-owner wrapper: one feed, one portfolio, a tick cursor.

    Sells are pre-checked against the position before submission so an
    oversell never reaches the feed scan.
    """

    def __init__(
        self,
        feed: PriceFeed,
        horizon: int | None = DEFAULT_HORIZON,
        oversell_protection: bool = True,
    ):
        self.feed = feed
        self.horizon = horizon
        self.portfolio = Portfolio(oversell_protection=oversell_protection)
        self.clock = 0

    def execute(self, order: ExecutableOrder) -> ExecutionReport:
        held = self.portfolio.positions.get(order.symbol.code, 0)
        if (
            self.portfolio.oversell_protection
            and order.side is Side.SELL
            and held < order.quantity
        ):
            raise OversellRejected(order.symbol.code, held, order.quantity)
        report = submit(order, self.feed, self.horizon, start_tick=self.clock)
        if report.status is FillStatus.FILLED:
            self.portfolio = apply_fill(self.portfolio, report)
        return report

    def advance(self, ticks: int = 1) -> None:
        self.clock += ticks
