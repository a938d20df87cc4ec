"""Expressions graded by powers of eps, truncated at a fixed order."""

from __future__ import annotations

from typing import Callable, Sequence

import sympy as sp

from .errors import TruncationMismatch
from .expr import EPS, normalize


def eps_degree(term) -> int:
    """Power of eps in a single (expanded) product term."""
    return int(term.as_powers_dict().get(EPS, 0))


def split_grades(expr, order: int) -> list:
    """Coefficients of eps^0..eps^order of an expression polynomial in eps."""
    expr = sp.expand(sp.sympify(expr))
    buckets: list[list] = [[] for _ in range(order + 1)]
    for term in sp.Add.make_args(expr):
        if term == 0:
            continue
        d = eps_degree(term)
        if d < 0:
            raise ValueError(f"negative power of eps in {term}")
        if d <= order:
            buckets[d].append(term / EPS**d if d else term)
    return [sp.Add(*b) for b in buckets]


def truncate(expr, order: int):
    """Drop every term of eps-degree above ``order``."""
    expr = sp.expand(sp.sympify(expr))
    return sp.Add(*[t for t in sp.Add.make_args(expr) if eps_degree(t) <= order])


class EpsSeries:
    """``c0 + eps*c1 + ... + eps^K*cK`` with arithmetic modulo eps^(K+1)."""

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs: Sequence = (0,), order: int = 1):
        if order < 0:
            raise ValueError("truncation order must be nonnegative")
        cs = [sp.sympify(c) for c in list(coeffs)[: order + 1]]
        cs += [sp.S.Zero] * (order + 1 - len(cs))
        for c in cs:
            if c.has(EPS):
                raise ValueError(f"eps inside a series coefficient: {c}")
        self.coeffs = tuple(cs)
        self.order = order

    @classmethod
    def from_expr(cls, expr, order: int = 1) -> "EpsSeries":
        return cls(split_grades(expr, order), order)

    @classmethod
    def zero(cls, order: int = 1) -> "EpsSeries":
        return cls((), order)

    def to_expr(self):
        return sp.Add(*[c * EPS**k for k, c in enumerate(self.coeffs)])

    def grade(self, k: int):
        return self.coeffs[k] if 0 <= k <= self.order else sp.S.Zero

    def with_order(self, order: int) -> "EpsSeries":
        return EpsSeries(self.coeffs, order)

    def map(self, fn: Callable) -> "EpsSeries":
        return EpsSeries([fn(c) for c in self.coeffs], self.order)

    def normalize(self) -> "EpsSeries":
        return self.map(lambda c: normalize(c, cap=None))

    def is_zero(self) -> bool:
        return all(normalize(c, cap=None) == 0 for c in self.coeffs)

    def lowest_nonzero_grade(self):
        for k, c in enumerate(self.coeffs):
            if normalize(c, cap=None) != 0:
                return k
        return None

    def _coerce(self, other) -> "EpsSeries":
        if isinstance(other, EpsSeries):
            if other.order != self.order:
                raise TruncationMismatch(
                    f"truncation orders differ: {self.order} vs {other.order}")
            return other
        return EpsSeries.from_expr(other, self.order)

    def __add__(self, other):
        other = self._coerce(other)
        return EpsSeries([sp.expand(a + b) for a, b in zip(self.coeffs, other.coeffs)], self.order)

    __radd__ = __add__

    def __neg__(self):
        return EpsSeries([-c for c in self.coeffs], self.order)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out = []
        for k in range(self.order + 1):
            out.append(sp.expand(sp.Add(*[self.coeffs[i] * other.coeffs[k - i] for i in range(k + 1)])))
        return EpsSeries(out, self.order)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, EpsSeries) or other.order != self.order:
            return NotImplemented if not isinstance(other, EpsSeries) else False
        return (self - other).is_zero()

    def __hash__(self):
        return hash((self.order, tuple(normalize(c, cap=None) for c in self.coeffs)))

    def __repr__(self):
        return f"EpsSeries({list(self.coeffs)!r}, order={self.order})"


def eps_arith(a: EpsSeries, b: EpsSeries, op: str) -> EpsSeries:
    if a.order != b.order:
        raise TruncationMismatch(f"truncation orders differ: {a.order} vs {b.order}")
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def as_series(value, order: int) -> EpsSeries:
    if isinstance(value, EpsSeries):
        return value.with_order(order) if value.order != order else value
    return EpsSeries.from_expr(value, order)
