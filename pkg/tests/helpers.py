"""Shared draft builders and hypothesis strategies."""

from __future__ import annotations

from hypothesis import strategies as st

from tradetalk.orders import (
    NOT_APPLICABLE,
    UNKNOWN,
    Money,
    OrderDraft,
    Side,
    Strategy,
    TickerSymbol,
    money,
    present,
)


def vanke_draft() -> OrderDraft:
    return OrderDraft(
        symbol=present(TickerSymbol("000002")),
        side=present(Side.SELL),
        quantity=present(300),
    )


def moutai_market_draft() -> OrderDraft:
    return OrderDraft(
        strategy=present(Strategy.MARKET),
        symbol=present(TickerSymbol("600519")),
        side=present(Side.BUY),
        price=NOT_APPLICABLE,
        quantity=present(100),
    )


def moutai_limit_draft() -> OrderDraft:
    return OrderDraft(
        strategy=present(Strategy.LIMIT),
        symbol=present(TickerSymbol("600519")),
        side=present(Side.BUY),
        price=present(money("1800.0")),
        quantity=present(200),
    )


_symbols = st.sampled_from(["600519", "000002", "00700", "03888", "12345"])
_moneys = st.decimals(
    min_value="0.01", max_value="99999.99", places=2, allow_nan=False, allow_infinity=False
).map(Money)
_quantities = st.integers(min_value=1, max_value=1_000_000)


@st.composite
def drafts(draw) -> OrderDraft:
    strategy = draw(st.sampled_from([None, Strategy.MARKET, Strategy.LIMIT]))
    if strategy is Strategy.MARKET:
        price = draw(st.sampled_from(["na", "unknown"]))
    elif strategy is Strategy.LIMIT:
        price = draw(st.sampled_from(["present", "unknown"]))
    else:
        price = draw(st.sampled_from(["present", "unknown", "na"]))
    return OrderDraft(
        strategy=present(strategy) if strategy else UNKNOWN,
        symbol=draw(st.one_of(st.just(UNKNOWN), _symbols.map(lambda c: present(TickerSymbol(c))))),
        side=draw(st.one_of(st.just(UNKNOWN), st.sampled_from(list(Side)).map(present))),
        price={
            "na": NOT_APPLICABLE,
            "unknown": UNKNOWN,
            "present": present(draw(_moneys)),
        }[price],
        quantity=draw(st.one_of(st.just(UNKNOWN), _quantities.map(present))),
    )
