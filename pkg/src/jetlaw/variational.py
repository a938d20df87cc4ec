"""Formal Lagrangians, Euler and higher Euler operators, adjoint systems."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import factorial

import sympy as sp

from .expr import DEFAULT_JET_CAP, JetSymbol, MultiIndex, jets_in, normalize
from .jet import PdeSystem, total_derivative_multi
from .series import EpsSeries, truncate


@dataclass(frozen=True)
class AdjointVarSet:
    """One fresh dependent name per equation."""

    names: tuple

    @classmethod
    def fresh(cls, sys: PdeSystem, perturbed: bool | None = None, base: str | None = None) -> "AdjointVarSet":
        if perturbed is None:
            perturbed = sys.eps_order >= 1
        stem = base or ("w" if perturbed else "v")
        taken = set(sys.dependents) | {str(x) for x in sys.independents}
        taken |= {f.name for f in sys.functions} | {str(c) for c in sys.constants}
        while True:
            if sys.m == 1:
                names = (stem,)
            else:
                names = tuple(f"{stem}{k}" for k in range(1, sys.m + 1))
            if not taken.intersection(names):
                return cls(names)
            stem += "_"

    def align(self, images: dict) -> dict:
        """Rename images keyed by another stem (v1 for w1, say) onto these names."""
        images = {str(k): v for k, v in images.items()}
        if set(images) <= set(self.names):
            return images
        if len(images) == len(self.names):
            return dict(zip(self.names, (images[k] for k in sorted(images))))
        raise ValueError(f"cannot match substitution for {sorted(images)} to adjoint variables {list(self.names)}")

    def symbols(self) -> list[JetSymbol]:
        return [JetSymbol(n) for n in self.names]

    def __iter__(self):
        return iter(self.names)

    def __len__(self):
        return len(self.names)


@dataclass(frozen=True)
class FormalLagrangian:
    value: EpsSeries
    adjoint_vars: AdjointVarSet
    system: PdeSystem

    def expr(self):
        return self.value.to_expr()


def formal_lagrangian(sys: PdeSystem, adjoint_vars: AdjointVarSet | None = None) -> FormalLagrangian:
    """sum_beta w^beta (E0_beta + eps E1_beta), truncated at the system's order."""
    av = adjoint_vars or AdjointVarSet.fresh(sys)
    K = sys.eps_order
    total = EpsSeries.zero(K)
    for name, eq in zip(av.names, sys.equations):
        total = total + EpsSeries([JetSymbol(name)], K) * eq.full(K)
    return FormalLagrangian(total, av, sys)


def _as_expr(L):
    return L.to_expr() if isinstance(L, EpsSeries) else sp.sympify(L)


def _wrap(result, L, order):
    if isinstance(L, EpsSeries):
        return EpsSeries.from_expr(result, L.order)
    if order is not None:
        return EpsSeries.from_expr(result, order)
    return normalize(result, cap=None)


def _multisets(variables, size):
    return [MultiIndex.from_vars(c) for c in combinations_with_replacement(variables, size)]


def _orderings(index: MultiIndex) -> int:
    n = factorial(index.order)
    for _, c in index.counts:
        n //= factorial(c)
    return n


def weighted_partial(L, dep: str, index: MultiIndex):
    """dL/du_J for an ordered index with multiset J, split evenly over its orderings."""
    s = JetSymbol(dep, index)
    return sp.diff(L, s) / _orderings(index)


def higher_euler_operator(L, jv: JetSymbol | str, independents=None, cap: int | None = DEFAULT_JET_CAP,
                          order: int | None = None):
    """delta L / delta u_I, summed over ordered continuation indices.

    For order-0 ``jv`` this is the ordinary Euler operator. The result is an
    EpsSeries when L is one (or when ``order`` is given).
    """
    if isinstance(jv, str):
        jv = JetSymbol(jv)
    expr = sp.expand(_as_expr(L))
    if independents is None:
        independents = sorted({n for s in jets_in(expr) for n, _ in s.index.counts} | set(jv.index.letters()))
    independents = [str(x) for x in independents]
    top = max((s.order for s in jets_in(expr) if s.dep == jv.dep and s.index.contains(jv.index)), default=-1)
    terms = []
    for size in range(0, top - jv.order + 1):
        for K in _multisets(independents, size):
            target = JetSymbol(jv.dep, jv.index + K)
            if target not in expr.free_symbols:
                continue
            p = weighted_partial(expr, jv.dep, jv.index + K) * _orderings(jv.index)
            # sum over ordered K of D_K P_{I+K}; P depends only on the multiset I+K,
            # and each ordered I+K shares weight with the fixed prefix I
            weight = sp.Integer(_orderings(K))
            terms.append((-1) ** size * weight * total_derivative_multi(p, K, cap))
    result = sp.Add(*terms)
    if isinstance(L, EpsSeries):
        order = L.order
    if order is not None:
        result = truncate(result, order)
    return _wrap(result, L, order)


def euler_operator(L, dep: str, independents=None, cap: int | None = DEFAULT_JET_CAP, order: int | None = None):
    """delta L / delta u for the dependent ``dep``."""
    return higher_euler_operator(L, JetSymbol(str(dep)), independents, cap, order)


def adjoint_system(sys: PdeSystem, lagrangian: FormalLagrangian | None = None) -> list[EpsSeries]:
    """Adjoint equations F*_sigma = delta L / delta u^sigma, one per dependent."""
    lag = lagrangian or formal_lagrangian(sys)
    indep = [str(x) for x in sys.independents]
    return [euler_operator(lag.value, d, indep, sys.jet_cap).normalize() for d in sys.dependents]


def adjoint_degree_ok(expr, adjoint_names) -> bool:
    """True when every term is of degree exactly one in the adjoint jets."""
    names = set(adjoint_names)
    for term in sp.Add.make_args(sp.expand(expr)):
        if term == 0:
            continue
        deg = sum(int(e) for b, e in term.as_powers_dict().items()
                  if isinstance(b, JetSymbol) and b.dep in names)
        if deg != 1:
            return False
    return True
