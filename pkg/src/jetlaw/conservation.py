"""Conserved vectors from symmetries plus self-adjointness, and their verification."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Mapping

import sympy as sp

from .errors import InternalInconsistency, PreconditionFailed
from .expr import (DEFAULT_JET_CAP, EPS, JetSymbol, MultiIndex, jets_in, normalize,
                   random_function_table, random_rational)
from .jet import (Generator, OnShell, PdeSystem, _DerivativeCache, characteristic,
                  substitute_dependent, total_derivative)
from .series import EpsSeries, split_grades, truncate
from .variational import AdjointVarSet, _orderings, higher_euler_operator

EXACT_ZERO = "exact-zero"
FAILED = "failed"


def order_zero_verdict(k: int) -> str:
    return f"order-{k}-zero"


@dataclass
class ConservedVector:
    components: dict
    provenance: dict = field(default_factory=dict)
    order: int = 1

    def component(self, x) -> EpsSeries:
        return self.components[sp.Symbol(str(x))]

    def variables(self):
        return list(self.components)

    def map(self, fn) -> "ConservedVector":
        return ConservedVector({x: fn(c) for x, c in self.components.items()}, dict(self.provenance), self.order)

    def __sub__(self, other: "ConservedVector") -> "ConservedVector":
        keys = list(dict.fromkeys(list(self.components) + list(other.components)))
        zero = EpsSeries.zero(self.order)
        return ConservedVector({x: self.components.get(x, zero) - other.components.get(x, zero) for x in keys},
                               {}, self.order)


@dataclass
class VerificationReport:
    residual: EpsSeries
    verdict: str
    numeric_samples: list = field(default_factory=list)
    exact: bool = False
    k: int = 1

    @property
    def ok(self) -> bool:
        return self.verdict != FAILED


# -- the flux formula --------------------------------------------------------

def flux(L, xi: Mapping, W: Mapping, independents, cap: int | None = DEFAULT_JET_CAP,
         keep_xi_L: bool = True) -> dict:
    """C^i = xi^i L + sum_sigma sum_J D_J(W^sigma) * delta L / delta u^sigma_{iJ}.

    J runs over ordered index tuples; grouped by multiset, each group carries
    its number of orderings and the ordered higher Euler operator.
    """
    L = sp.expand(sp.sympify(L))
    names = [str(x) for x in independents]
    out = {}
    for x in independents:
        x = sp.Symbol(str(x))
        terms = []
        if keep_xi_L and xi.get(x, 0) != 0:
            terms.append(xi[x] * L)
        for dep, w in W.items():
            if w == 0:
                continue
            top = max((s.order for s in jets_in(L) if s.dep == dep), default=0)
            cache = _DerivativeCache(w, cap)
            for size in range(0, top):
                for combo in combinations_with_replacement(names, size):
                    J = MultiIndex.from_vars(combo)
                    full = J.raised(x)
                    if not any(s.dep == dep and s.index.contains(full) for s in jets_in(L)):
                        continue
                    he = higher_euler_operator(L, JetSymbol(dep, full), names, cap)
                    if he == 0:
                        continue
                    weight = sp.Rational(_orderings(J), _orderings(full))
                    terms.append(weight * cache(J) * he)
        out[x] = sp.expand(sp.Add(*terms))
    return out


def _grade_parts(X: Generator, k: int, sys: PdeSystem):
    xi = {x: X.xi_of(x).grade(k) for x in sys.independents}
    W = {d: w.grade(k) for d, w in characteristic(X, sys.independents, sys.dependents).items()}
    return xi, W


def _substitute_adjoint(e, images: Mapping, cap):
    for name, img in images.items():
        e = substitute_dependent(e, name, img, cap)
    return e


def _side_conditions(subst) -> tuple:
    return tuple(getattr(subst, "side_conditions", ()))


def _unperturbed_lagrangian(sys: PdeSystem, names):
    return sp.expand(sp.Add(*[JetSymbol(n) * eq.e0 for n, eq in zip(names, sys.equations)]))


def _image_map(subst, names) -> dict:
    from .selfadjoint import SubstitutionAnsatz
    if isinstance(subst, SubstitutionAnsatz):
        return AdjointVarSet(tuple(names)).align(subst.images)
    if isinstance(subst, Mapping):
        return AdjointVarSet(tuple(names)).align(subst)
    if len(names) == 1:
        return {names[0]: subst}
    raise ValueError("substitution must map each adjoint variable")


def conserved_vector(sys: PdeSystem, X: Generator, subst, keep_xi_L: bool = True,
                     check: bool = True) -> ConservedVector:
    """Exact conserved vector of the unperturbed system from X and v = phi."""
    base = sys.unperturbed()
    av = AdjointVarSet.fresh(base, perturbed=False)
    images = _image_map(subst, av.names)
    images = {k: (v.to_expr() if isinstance(v, EpsSeries) else sp.sympify(v)) for k, v in images.items()}
    if check:
        from .jet import is_exact_symmetry
        from .selfadjoint import check_nsa
        if not is_exact_symmetry(X, base):
            raise PreconditionFailed(f"{X.name} is not a symmetry of the unperturbed system")
        if not check_nsa(base, images, _side_conditions(subst)).holds:
            raise PreconditionFailed("substitution is not nonlinearly self-adjoint")
    X0 = X.grade(0).with_order(0)
    xi, W = _grade_parts(X0, 0, base)
    L = _unperturbed_lagrangian(base, av.names)
    C = flux(L, xi, W, base.independents, base.jet_cap, keep_xi_L)
    comps = {x: EpsSeries.from_expr(_substitute_adjoint(c, images, base.jet_cap), 0) for x, c in C.items()}
    return ConservedVector(comps, {"generator": X.name, "substitution": images, "keep_xi_L": keep_xi_L}, 0)


def approx_conserved_vector(sys: PdeSystem, X: Generator, subst, keep_xi_L: bool = True,
                            keep_xi1_L2: bool = True, check: bool = True,
                            exact_substitution: bool = False) -> ConservedVector:
    """First-order approximate conserved vector from X0 + eps X1 and w = psi + eps phi.

    The grade-0 flux of the unperturbed Lagrangian is evaluated at the full
    substitution; the eps correction applies the flux formula to
    w0*E1 with X0 and to w0*E0 with X1, then sets w0 = psi.

    With ``exact_substitution`` the full w = psi + eps*phi is inserted in
    both parts and nothing is truncated; the vector's order is raised to
    the highest grade that occurs.
    """
    K = 1
    av = AdjointVarSet.fresh(sys, perturbed=True)
    images = _image_map(subst, av.names)
    images = {k: (v if isinstance(v, EpsSeries) else EpsSeries.from_expr(v, K)).with_order(K)
              for k, v in images.items()}
    if check:
        from .jet import check_approx_symmetry
        from .selfadjoint import check_ansa
        if not check_approx_symmetry(X, sys.with_eps_order(K)).holds:
            raise PreconditionFailed(f"{X.name} is not an approximate symmetry")
        if not check_ansa(sys.with_eps_order(K), images, _side_conditions(subst)).holds:
            raise PreconditionFailed("substitution is not approximately nonlinearly self-adjoint")
    X = X.with_order(K)
    xi0, W0 = _grade_parts(X, 0, sys)
    xi1, W1 = _grade_parts(X, 1, sys)
    cap = sys.jet_cap
    L0 = _unperturbed_lagrangian(sys, av.names)
    L1 = sp.expand(sp.Add(*[JetSymbol(n) * eq.e1 for n, eq in zip(av.names, sys.equations)]))
    C = flux(L0, xi0, W0, sys.independents, cap, keep_xi_L)
    A = flux(L1, xi0, W0, sys.independents, cap, keep_xi_L)
    B = flux(L0, xi1, W1, sys.independents, cap, keep_xi1_L2)
    full = {k: v.to_expr() for k, v in images.items()}
    psi = {k: v.grade(0) for k, v in images.items()}
    raw = {}
    for x in sys.independents:
        main = _substitute_adjoint(C[x], full, cap)
        corr = _substitute_adjoint(A[x] + B[x], full if exact_substitution else psi, cap)
        raw[x] = sp.expand(main + EPS * corr)
    order = K
    if exact_substitution:
        order = max([K] + [int(sp.degree(e, EPS)) for e in raw.values() if e.has(EPS)])
    comps = {x: EpsSeries.from_expr(e, order) for x, e in raw.items()}
    prov = {"generator": X.name, "substitution": {k: v.to_expr() for k, v in images.items()},
            "keep_xi_L": keep_xi_L, "keep_xi1_L2": keep_xi1_L2, "exact_substitution": exact_substitution}
    return ConservedVector(comps, prov, order)


# -- divergence and verification ---------------------------------------------

def divergence(T: ConservedVector, cap: int | None = DEFAULT_JET_CAP) -> EpsSeries:
    """sum_i D_i T^i, carried one grade beyond the vector's order."""
    order = T.order + 1
    total = sp.Add(*[total_derivative(c.to_expr(), x, cap) for x, c in T.components.items()])
    return EpsSeries.from_expr(total, order)


_EXACT_HEADROOM = 64


def _reduce_exact(expr, sys: PdeSystem):
    return OnShell(sys.with_eps_order(1), _EXACT_HEADROOM).reduce_expr(expr)


def _numeric_samples(div_expr, reduced_expr, sys: PdeSystem, k: int, exact: bool, samples: int, seed: int):
    shell = OnShell(sys.with_eps_order(1), _EXACT_HEADROOM)
    principal = [s for s in jets_in(div_expr) if shell.is_principal(s)]
    resolved = {s: shell.resolved(s) for s in principal}
    support = sp.Add(div_expr, reduced_expr, *resolved.values())
    rng = random.Random(seed)
    out = []
    for _ in range(samples):
        funcs = random_function_table(support, rng)
        free = [s for s in support.free_symbols if s != EPS and not shell.is_principal(s)]
        point = {s: random_rational(rng) for s in free}

        def ev(e):
            from .expr import replace_functions
            e = replace_functions(e, funcs) if funcs else e
            return sp.expand(e.xreplace(point))

        jet_values = {s: ev(v) for s, v in resolved.items()}
        direct = sp.expand(ev(div_expr).xreplace(jet_values))
        symbolic = ev(reduced_expr)
        diff = sp.expand(direct - symbolic)
        grades = split_grades(diff, max(k, sp.degree(diff, EPS) if diff.has(EPS) else 0))
        if any(abs(sp.N(g, 30)) > sp.Float("1e-18") for g in grades):
            raise InternalInconsistency("on-shell reduction disagrees with pointwise evaluation")
        if exact and any(abs(sp.N(g, 30)) > sp.Float("1e-18") for g in split_grades(direct, _EXACT_HEADROOM)):
            raise InternalInconsistency("symbolic zero but numeric residual nonzero")
        value_grades = split_grades(direct, k)
        out.append(({str(s): str(v) for s, v in point.items()}, [str(g) for g in value_grades]))
    return out


def verify_conservation(T: ConservedVector, sys: PdeSystem, k: int = 1, samples: int = 10,
                        seed: int = 0) -> VerificationReport:
    """Reduce div T on the solution manifold; exact-zero, order-k-zero or failed."""
    if k > max(sys.eps_order, T.order):
        raise ValueError(f"order {k} exceeds the truncation order")
    div_expr = sum((total_derivative(c.to_expr(), x, sys.jet_cap) for x, c in T.components.items()),
                   sp.S.Zero)
    div_expr = sp.expand(div_expr)
    reduced = normalize(_reduce_exact(div_expr, sys), cap=None)
    exact = reduced == 0
    residual = EpsSeries.from_expr(reduced, k + 1)
    low = all(normalize(residual.grade(j), cap=None) == 0 for j in range(k + 1))
    verdict = EXACT_ZERO if exact else (order_zero_verdict(k) if low else FAILED)
    numeric = _numeric_samples(div_expr, reduced, sys, k, exact, samples, seed) if samples else []
    return VerificationReport(residual, verdict, numeric, exact, k)


def vector_from_exprs(components: Mapping, order: int = 1, provenance: Mapping | None = None) -> ConservedVector:
    comps = {sp.Symbol(str(x)): (c if isinstance(c, EpsSeries) else EpsSeries.from_expr(c, order))
             for x, c in components.items()}
    return ConservedVector(comps, dict(provenance or {}), order)


# -- presentation ------------------------------------------------------------

def on_shell_components(T: ConservedVector, sys: PdeSystem) -> ConservedVector:
    shell = OnShell(sys.with_eps_order(T.order) if T.order else sys.unperturbed(), T.order)
    return T.map(lambda c: EpsSeries.from_expr(normalize(shell.reduce_expr(c.to_expr()), cap=None), T.order))


def _integrate_by_parts_once(T: dict, time, spatial, order: int, cap):
    density = T[time]
    cands = sorted((s for s in jets_in(density) if s.order >= 2 and s.index.count(spatial) >= 1),
                   key=lambda s: (-s.order, s.dep, s.index.counts))
    for s in cands:
        A = sp.expand(sp.diff(density, s))
        if A.has(s):
            continue
        low = s.lowered(spatial)
        if any(j.dep == s.dep and j != low and j.index.contains(s.index) for j in jets_in(A)):
            continue
        poly = sp.Poly(A, low) if A.has(low) else None
        coeffs = poly.all_coeffs()[::-1] if poly is not None else [A]
        Q = sp.Add(*[c * low ** (n + 1) / (n + 1) for n, c in enumerate(coeffs)])
        T[time] = truncate(sp.expand(density - total_derivative(Q, spatial, cap)), order)
        T[spatial] = truncate(sp.expand(T.get(spatial, 0) + total_derivative(Q, time, cap)), order)
        return True
    return False


def cosmetic(T: ConservedVector, sys: PdeSystem, max_rounds: int = 12) -> ConservedVector:
    """Display form: drop on-shell-vanishing terms and move spatial derivatives out of the density.

    Each integration by parts adds the trivial vector (-D_y Q, D_t Q), so the
    divergence is unchanged.
    """
    base = on_shell_components(T, sys)
    time = sys.time
    shell = OnShell(sys.with_eps_order(T.order) if T.order else sys.unperturbed(), T.order)
    comps = {x: c.to_expr() for x, c in base.components.items()}
    for y in sys.independents[1:]:
        for _ in range(max_rounds):
            if not _integrate_by_parts_once(comps, time, y, T.order, sys.jet_cap):
                break
            comps = {x: normalize(shell.reduce_expr(c), cap=None) for x, c in comps.items()}
    out = {x: EpsSeries.from_expr(c, T.order) for x, c in comps.items()}
    return ConservedVector(out, dict(T.provenance, cosmetic=True), T.order)


@dataclass
class Comparison:
    identical: bool
    gauge_equivalent: bool
    difference: ConservedVector
    divergence_residual: EpsSeries


def compare_vectors(T: ConservedVector, R: ConservedVector, sys: PdeSystem, k: int = 1) -> Comparison:
    """Canonical equality, or equality up to a difference whose divergence vanishes at grades <= k."""
    D = T - R
    identical = all(c.is_zero() for c in D.components.values())
    if identical:
        return Comparison(True, True, D, EpsSeries.zero(k + 1))
    div = sp.expand(sp.Add(*[total_derivative(c.to_expr(), x, sys.jet_cap) for x, c in D.components.items()]))
    red = EpsSeries.from_expr(normalize(_reduce_exact(div, sys), cap=None), k + 1)
    gauge = all(normalize(red.grade(j), cap=None) == 0 for j in range(k + 1))
    return Comparison(False, gauge, D, red)
