"""Per-subject task cost: paid human time plus language-model API calls.

Money is carried as exact rationals (:class:`fractions.Fraction`) so that the
cost model is exactly linear; round only when reporting.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from numbers import Real
from typing import Union

from .errors import DomainError

Money = Union[Fraction, Decimal, int, float, str]

__all__ = ["CostParams", "CostRecord", "per_call_cost", "subject_cost", "to_cents", "format_money"]


def _exact(value: Money) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # go through the shortest repr so 16.28 means 16.28, not its binary neighbour
        return Fraction(repr(value))
    if isinstance(value, (int, Decimal, str)):
        return Fraction(value)
    if isinstance(value, Real):
        return Fraction(str(value))
    raise TypeError(f"cannot use {type(value).__name__} as money")


@dataclass(frozen=True)
class CostParams:
    """Language-model API pricing: price per 1000 tokens and tokens per call."""

    token_price: Money = "0.06"  # dollars per 1000 tokens
    tokens_per_call: int = 66
    prompt_tokens: int = 578

    def __post_init__(self):
        if _exact(self.token_price) < 0 or self.tokens_per_call < 0 or self.prompt_tokens < 0:
            raise DomainError("cost parameters must be non-negative")


@dataclass(frozen=True)
class CostRecord:
    hourly_rate: Money
    minutes: Money
    api_calls: int = 0

    def __post_init__(self):
        if _exact(self.minutes) < 0:
            raise DomainError("minutes must be non-negative")
        if self.api_calls < 0:
            raise DomainError("api_calls must be non-negative")


def per_call_cost(params: CostParams = CostParams()) -> Fraction:
    tokens = params.tokens_per_call + params.prompt_tokens
    return tokens * _exact(params.token_price) / 1000


def subject_cost(rec: CostRecord, params: CostParams = CostParams()) -> Fraction:
    """Exact cost of one subject on one task, in dollars."""
    human = _exact(rec.hourly_rate) * _exact(rec.minutes) / 60
    return human + rec.api_calls * per_call_cost(params)


def to_cents(amount: Money) -> Decimal:
    """Round half-up to whole cents."""
    q = _exact(amount)
    return (Decimal(q.numerator) / Decimal(q.denominator)).quantize(
        Decimal("0.01"), rounding=ROUND_HALF_UP
    )


def format_money(amount: Money) -> str:
    return f"${to_cents(amount)}"
