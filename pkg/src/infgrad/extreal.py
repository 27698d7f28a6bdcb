"""Extended-real arithmetic.

Values live in R ∪ {±∞} with the conventions used throughout the rest of
the package:

* ``a + b = +∞`` whenever either operand is ``+∞`` -- even if the other is
  ``-∞``.  Otherwise an infinite operand wins over a finite one.
* ``λ · (±∞) = ±∞`` for ``λ > 0`` and ``∓∞`` for ``λ < 0``; the product
  ``0 · (±∞)`` is not defined and raises :class:`EvaluationError`.
* ``inf`` of an empty collection is ``+∞``; ``sup`` of an empty collection
  is ``-∞``.
* The order is total: ``-∞ < r < +∞`` for every finite ``r``.
"""

from __future__ import annotations

import math
from functools import total_ordering
from typing import Iterable, Union

from .errors import EvaluationError

Real = Union[int, float]


@total_ordering
class ExtendedReal:
    """An immutable real number or ±∞."""

    __slots__ = ("_v",)

    def __init__(self, value: Real):
        v = float(value)
        if math.isnan(v):
            raise ValueError("NaN is not an extended real")
        object.__setattr__(self, "_v", v)

    def __setattr__(self, name, value):
        raise AttributeError("ExtendedReal is immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def pos_inf(cls) -> "ExtendedReal":
        return cls(math.inf)

    @classmethod
    def neg_inf(cls) -> "ExtendedReal":
        return cls(-math.inf)

    # -- predicates ----------------------------------------------------

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self._v)

    @property
    def is_pos_inf(self) -> bool:
        return self._v == math.inf

    @property
    def is_neg_inf(self) -> bool:
        return self._v == -math.inf

    @property
    def value(self) -> float:
        """The underlying float; ``math.inf`` / ``-math.inf`` for the infinities."""
        return self._v

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other) -> "ExtendedReal":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        # +inf always wins, even against -inf.
        if self.is_pos_inf or other.is_pos_inf:
            return ExtendedReal.pos_inf()
        if self.is_neg_inf or other.is_neg_inf:
            return ExtendedReal.neg_inf()
        return ExtendedReal(self._v + other._v)

    __radd__ = __add__

    def __neg__(self) -> "ExtendedReal":
        return ExtendedReal(-self._v)

    def __sub__(self, other) -> "ExtendedReal":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "ExtendedReal":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other) -> "ExtendedReal":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.is_finite and other.is_finite:
            return ExtendedReal(self._v * other._v)
        # At least one infinite factor: 0 * inf has no convention.
        if self._v == 0.0 or other._v == 0.0:
            raise EvaluationError("0 * inf is not defined")
        sign = (1 if self._v > 0 else -1) * (1 if other._v > 0 else -1)
        return ExtendedReal.pos_inf() if sign > 0 else ExtendedReal.neg_inf()

    __rmul__ = __mul__

    def __truediv__(self, other) -> "ExtendedReal":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not other.is_finite:
            if not self.is_finite:
                raise EvaluationError("inf / inf is not defined")
            return ExtendedReal(0.0)
        if other._v == 0.0:
            raise EvaluationError("division by zero")
        return self * ExtendedReal(1.0 / other._v)

    # -- ordering ------------------------------------------------------

    def __eq__(self, other) -> bool:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._v == other._v

    def __lt__(self, other) -> bool:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._v < other._v

    def __hash__(self) -> int:
        return hash(self._v)

    # -- misc ------------------------------------------------------------

    def __float__(self) -> float:
        return self._v

    def __repr__(self) -> str:
        if self.is_pos_inf:
            return "ExtendedReal(+inf)"
        if self.is_neg_inf:
            return "ExtendedReal(-inf)"
        return f"ExtendedReal({self._v!r})"

    # -- JSON ------------------------------------------------------------

    def to_json(self):
        """number | "+inf" | "-inf"."""
        if self.is_pos_inf:
            return "+inf"
        if self.is_neg_inf:
            return "-inf"
        return self._v

    @classmethod
    def from_json(cls, obj) -> "ExtendedReal":
        if obj == "+inf":
            return cls.pos_inf()
        if obj == "-inf":
            return cls.neg_inf()
        return cls(float(obj))


POS_INF = ExtendedReal.pos_inf()
NEG_INF = ExtendedReal.neg_inf()


def _coerce(x):
    if isinstance(x, ExtendedReal):
        return x
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return ExtendedReal(x)
    return NotImplemented


def ext(x: Union[Real, ExtendedReal]) -> ExtendedReal:
    """Coerce a number to :class:`ExtendedReal`."""
    c = _coerce(x)
    if c is NotImplemented:
        raise TypeError(f"cannot interpret {x!r} as an extended real")
    return c


def ext_add(a, b) -> ExtendedReal:
    """Total addition; ``(+inf) + (-inf) = +inf``."""
    return ext(a) + ext(b)


def ext_mul(a, b) -> ExtendedReal:
    """Multiplication; ``0 * inf`` raises :class:`EvaluationError`."""
    return ext(a) * ext(b)


def ext_inf(values: Iterable) -> ExtendedReal:
    """Infimum with ``inf ∅ = +∞``."""
    best = POS_INF
    for v in values:
        v = ext(v)
        if v < best:
            best = v
    return best


def ext_sup(values: Iterable) -> ExtendedReal:
    """Supremum with ``sup ∅ = -∞``."""
    best = NEG_INF
    for v in values:
        v = ext(v)
        if v > best:
            best = v
    return best
