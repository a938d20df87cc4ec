"""Nonlinear and approximate nonlinear self-adjointness.

A substitution ``w = psi + eps*phi`` makes the adjoint system hold when the
substituted adjoint equals ``(lambda + eps*mu) E0 + eps*lambda E1`` modulo
eps^2, with multipliers depending on independents and dependents only.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import sympy as sp
from sympy.core.function import AppliedUndef
from sympy.polys.matrices import DomainMatrix

from .errors import (CollectionIncomplete, InvalidSubstitution, LiftRejected, NonlinearInUnknowns,
                     TrivialSubstitution)
from .expr import JetSymbol, normalize, positive_jets, random_rational
from .jet import FunctionSig, OnShell, PdeSystem, substitute_dependent
from .series import EpsSeries
from .variational import AdjointVarSet, adjoint_system, formal_lagrangian


# -- ansatz and side conditions ----------------------------------------------

@dataclass
class SubstitutionAnsatz:
    """Images for the adjoint variables, possibly with unknown constants and functions."""

    images: dict
    constants: tuple = ()
    functions: tuple = ()
    side_conditions: tuple = ()
    order: int = 1

    def __post_init__(self):
        imgs = {}
        for k, v in dict(self.images).items():
            s = v if isinstance(v, EpsSeries) else EpsSeries.from_expr(v, self.order)
            for c in s.coeffs:
                bad = positive_jets(c)
                if bad:
                    raise InvalidSubstitution(f"substitution image contains the derivative {sorted(map(str, bad))[0]}")
            imgs[str(k)] = s.with_order(self.order)
        self.images = imgs
        self.constants = tuple(sp.Symbol(str(c)) for c in self.constants)
        self.side_conditions = tuple(sp.sympify(c) for c in self.side_conditions)

    def is_trivial(self) -> bool:
        return all(s.is_zero() for s in self.images.values())

    def exprs(self) -> dict:
        return {k: s.to_expr() for k, s in self.images.items()}

    def grade(self, k: int) -> dict:
        return {n: s.grade(k) for n, s in self.images.items()}

    def scaled(self, c) -> "SubstitutionAnsatz":
        return SubstitutionAnsatz({k: s * EpsSeries([c], self.order) for k, s in self.images.items()},
                                  self.constants, self.functions, self.side_conditions, self.order)

    def subs(self, mapping) -> "SubstitutionAnsatz":
        return SubstitutionAnsatz({k: s.map(lambda c: sp.expand(c.xreplace(mapping))) for k, s in self.images.items()},
                                  tuple(c for c in self.constants if c not in mapping),
                                  self.functions, self.side_conditions, self.order)


def _derivative_counts(d, variables) -> tuple:
    if isinstance(d, sp.Derivative):
        counts = dict((str(v), int(n)) for v, n in d.variable_count)
        return tuple(counts.get(str(v), 0) for v in variables)
    return tuple(0 for _ in variables)


def _function_derivatives(e, name: str):
    out = set()
    for a in sp.sympify(e).atoms(sp.Derivative):
        if isinstance(a.expr, AppliedUndef) and a.expr.func.__name__ == name:
            out.add(a)
    return out


class SideConditions:
    """Rewrite rules f_LEAD -> rhs obtained by solving each linear side condition.

    The solved-for derivative is the one of highest order, ties going to the
    larger multiplicity of the earlier argument (time first for f(t, x)).
    """

    def __init__(self, conditions: Sequence, independents: Sequence):
        self.independents = [sp.Symbol(str(x)) for x in independents]
        self.rules = []
        for cond in conditions:
            cond = sp.expand(sp.sympify(cond))
            if isinstance(cond, sp.Equality):
                cond = sp.expand(cond.lhs - cond.rhs)
            derivs = [a for a in cond.atoms(sp.Derivative) if isinstance(a.expr, AppliedUndef)]
            if not derivs:
                continue

            def rank(d):
                args = list(d.expr.args)
                counts = _derivative_counts(d, args)
                return (sum(counts), counts, d.expr.func.__name__)

            lead = max(derivs, key=rank)
            coeff = sp.diff(cond, lead)
            if coeff.has(lead) or coeff == 0:
                continue
            rhs = sp.expand(-(cond - coeff * lead) / coeff)
            self.rules.append((lead, rhs))

    def _match(self, d):
        for lead, rhs in self.rules:
            if not isinstance(d, sp.Derivative) or d.expr != lead.expr:
                continue
            args = list(lead.expr.args)
            have = _derivative_counts(d, args)
            need = _derivative_counts(lead, args)
            if all(h >= n for h, n in zip(have, need)):
                extra = []
                for a, h, n in zip(args, have, need):
                    extra += [a] * (h - n)
                return sp.diff(rhs, *extra) if extra else rhs
        return None

    def reduce(self, e, rounds: int = 32):
        e = sp.expand(sp.sympify(e))
        if not self.rules:
            return e
        for _ in range(rounds):
            table = {}
            for d in e.atoms(sp.Derivative):
                r = self._match(d)
                if r is not None:
                    table[d] = r
            if not table:
                return e
            e = sp.expand(e.xreplace(table))
        return e


# -- multipliers by division ---------------------------------------------------

@dataclass
class SelfAdjointReport:
    holds: bool
    multipliers: dict
    residual: dict
    substituted: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)


def _clean(e, side: SideConditions | None):
    e = sp.sympify(e)
    if e.is_Add or e.is_Mul or e.is_Pow:
        e = sp.cancel(sp.together(e))
    num, den = sp.fraction(e)
    num = sp.expand(num)
    if side is not None:
        num = side.reduce(num)
    return normalize(num / den, cap=None) if den != 1 else normalize(num, cap=None)


def _divide(S: Sequence, sys: PdeSystem, side: SideConditions | None):
    """Multipliers M with S_a = sum_b M[a][b] E0_b, read off the leading derivatives."""
    leads = [eq.leading for eq in sys.equations]
    A = sp.Matrix([[sp.diff(eq.e0, lead) for eq in sys.equations] for lead in leads])
    Ainv = A.inv() if sys.m > 1 else sp.Matrix([[1 / A[0, 0]]])
    mult, resid = [], []
    for s in S:
        rhs = sp.Matrix([sp.diff(s, lead) for lead in leads])
        lam = [sp.cancel(v) for v in (Ainv * rhs)]
        r = s - sum((l * eq.e0 for l, eq in zip(lam, sys.equations)), sp.S.Zero)
        mult.append(lam)
        resid.append(_clean(r, side))
    return mult, resid


def _jet_free(e) -> bool:
    return not positive_jets(e)


def _image_map(subst, names) -> dict:
    if isinstance(subst, SubstitutionAnsatz):
        return AdjointVarSet(tuple(names)).align(subst.exprs())
    if isinstance(subst, Mapping):
        return AdjointVarSet(tuple(names)).align(subst)
    if len(names) == 1:
        return {names[0]: subst}
    raise ValueError("substitution must map each adjoint variable")


def _substituted_adjoint(sys: PdeSystem, images: Mapping, order: int, perturbed: bool):
    av = AdjointVarSet.fresh(sys, perturbed=perturbed)
    unknown = set(images) - set(av.names)
    if unknown:
        raise ValueError(f"unknown adjoint variable(s) {sorted(unknown)}; expected {list(av.names)}")
    lag = formal_lagrangian(sys, av)
    adj = adjoint_system(sys, lag)
    out = []
    for F in adj:
        e = F.to_expr()
        for n in av.names:
            img = images.get(n, 0)
            img = img.to_expr() if isinstance(img, EpsSeries) else sp.sympify(img)
            e = substitute_dependent(e, n, img, sys.jet_cap)
        out.append(EpsSeries.from_expr(e, order))
    return out, av


def check_nsa(sys: PdeSystem, subst, side_conditions: Sequence = ()) -> SelfAdjointReport:
    """Nonlinear self-adjointness of the unperturbed system under v = phi(x, u)."""
    base = sys.unperturbed()
    names = AdjointVarSet.fresh(base, perturbed=False).names
    images = _image_map(subst, names)
    images = {k: (v.to_expr() if isinstance(v, EpsSeries) else sp.sympify(v)) for k, v in images.items()}
    if isinstance(subst, SubstitutionAnsatz) and not side_conditions:
        side_conditions = subst.side_conditions
    if all(normalize(v, cap=None) == 0 for v in images.values()):
        raise TrivialSubstitution("every adjoint image is zero")
    side = SideConditions(side_conditions, base.independents) if side_conditions else None
    S, av = _substituted_adjoint(base, images, 0, perturbed=False)
    mult, resid = _divide([s.grade(0) for s in S], base, side)
    lam = {(a, b): mult[a][b] for a in range(base.m) for b in range(base.m)}
    holds = all(r == 0 for r in resid) and all(_jet_free(v) for v in lam.values())
    if side is not None:
        lam = {k: side.reduce(v) for k, v in lam.items()}
    return SelfAdjointReport(holds, {"lambda": lam},
                             {eq.name: r for eq, r in zip(base.equations, resid)},
                             {n: s.grade(0) for n, s in zip(base.dependents, S)})


def check_ansa(sys: PdeSystem, subst, side_conditions: Sequence = ()) -> SelfAdjointReport:
    """Approximate nonlinear self-adjointness under w = psi + eps*phi, modulo eps^2."""
    if sys.eps_order < 1:
        raise ValueError("approximate self-adjointness needs eps order >= 1")
    K = 1
    sys1 = sys.with_eps_order(K)
    names = AdjointVarSet.fresh(sys1, perturbed=True).names
    images = _image_map(subst, names)
    if isinstance(subst, SubstitutionAnsatz) and not side_conditions:
        side_conditions = subst.side_conditions
    series = {k: (v if isinstance(v, EpsSeries) else EpsSeries.from_expr(v, K)).with_order(K)
              for k, v in images.items()}
    if all(s.is_zero() for s in series.values()):
        raise TrivialSubstitution("psi and phi are both zero")
    side = SideConditions(side_conditions, sys.independents) if side_conditions else None
    S, av = _substituted_adjoint(sys1, series, K, perturbed=True)
    lam_rows, r0 = _divide([s.grade(0) for s in S], sys1, side)
    grade1 = []
    for a, s in enumerate(S):
        g = s.grade(1) - sum((lam_rows[a][b] * eq.e1 for b, eq in enumerate(sys1.equations)), sp.S.Zero)
        grade1.append(g)
    mu_rows, r1 = _divide(grade1, sys1, side)
    m = sys1.m
    lam = {(a, b): lam_rows[a][b] for a in range(m) for b in range(m)}
    mu = {(a, b): mu_rows[a][b] for a in range(m) for b in range(m)}
    if side is not None:
        lam = {k: side.reduce(v) for k, v in lam.items()}
        mu = {k: side.reduce(v) for k, v in mu.items()}
    holds = (all(r == 0 for r in r0 + r1)
             and all(_jet_free(v) for v in list(lam.values()) + list(mu.values())))
    residual = {eq.name: EpsSeries([a, b], K) for eq, a, b in zip(sys1.equations, r0, r1)}
    return SelfAdjointReport(holds, {"lambda": lam, "mu": mu}, residual,
                             {n: s for n, s in zip(sys1.dependents, S)})


# -- determining systems -----------------------------------------------------

@dataclass
class DeterminingSystem:
    equations: list
    unknown_functions: tuple
    multipliers: tuple = ()
    constants: tuple = ()
    grades: list = field(default_factory=list)
    ansatz: SubstitutionAnsatz | None = None

    def __len__(self):
        return len(self.equations)


def generic_ansatz(sys: PdeSystem, names=("psi", "phi"), perturbed: bool = True) -> SubstitutionAnsatz:
    """w = psi(x, t, u) + eps*phi(x, t, u) with unknown functions for every adjoint variable."""
    args = tuple(sys.independents) + tuple(JetSymbol(d) for d in sys.dependents)
    av = AdjointVarSet.fresh(sys, perturbed=perturbed)
    images, funcs = {}, []
    for k, n in enumerate(av.names):
        suffix = "" if len(av) == 1 else str(k + 1)
        f0 = FunctionSig(names[0] + suffix, args)
        funcs.append(f0)
        if perturbed:
            f1 = FunctionSig(names[1] + suffix, args)
            funcs.append(f1)
            images[n] = EpsSeries([f0(), f1()], 1)
        else:
            images[n] = EpsSeries([f0()], 1)
    return SubstitutionAnsatz(images, functions=tuple(funcs), order=1)


def _collect(expr, label: str):
    expr = sp.expand(expr)
    if expr == 0:
        return []
    gens = sorted(positive_jets(expr), key=str)
    for a in expr.atoms(AppliedUndef, sp.Derivative):
        if any(positive_jets(arg) for arg in a.args):
            raise CollectionIncomplete(f"{label}: jet variable inside {a}")
    if not gens:
        return [expr]
    try:
        poly = sp.Poly(expr, *gens)
    except sp.PolynomialError as exc:
        raise CollectionIncomplete(f"{label}: not polynomial in the jet variables ({exc})") from None
    out = []
    for c in poly.coeffs():
        c = sp.expand(c)
        if positive_jets(c):
            raise CollectionIncomplete(f"{label}: coefficient {c} still involves jets")
        out.append(c)
    return out


def _primitive(e):
    e = sp.expand(e)
    if e == 0:
        return e
    content, prim = sp.factor_terms(e).as_coeff_Mul()
    return sp.expand(prim) if content != 0 else e


def determining_system(sys: PdeSystem, ansatz: SubstitutionAnsatz | None = None,
                       eliminate: bool = False, perturbed: bool | None = None) -> DeterminingSystem:
    """Coefficients of the self-adjointness identity over jet monomials.

    Default: the identity with unknown multipliers lambda, mu of (x, u), all
    jets independent. With ``eliminate`` the substituted adjoint is instead
    reduced on the solution manifold and no multipliers appear.
    """
    if perturbed is None:
        perturbed = sys.eps_order >= 1
    if ansatz is None:
        ansatz = generic_ansatz(sys, perturbed=perturbed)
    K = 1 if perturbed else 0
    work = sys.with_eps_order(1) if perturbed else sys.unperturbed()
    S, av = _substituted_adjoint(work, ansatz.images, K, perturbed=perturbed)
    args = tuple(work.independents) + tuple(JetSymbol(d) for d in work.dependents)
    m = work.m
    mults = []
    grades_out, eqs = [], []
    if eliminate:
        shell = OnShell(work, K)
        for a, s in enumerate(S):
            red = shell(s)
            for k in range(K + 1):
                for c in _collect(red.grade(k), f"grade {k}"):
                    eqs.append(_primitive(c))
                    grades_out.append(k)
    else:
        lam = [[sp.Function(f"lambda{a + 1}{b + 1}" if m > 1 else "lambda")(*args) for b in range(m)]
               for a in range(m)]
        mu = [[sp.Function(f"mu{a + 1}{b + 1}" if m > 1 else "mu")(*args) for b in range(m)]
              for a in range(m)]
        mults = [x for row in lam for x in row] + ([x for row in mu for x in row] if perturbed else [])
        for a, s in enumerate(S):
            g0 = s.grade(0) - sum((lam[a][b] * eq.e0 for b, eq in enumerate(work.equations)), sp.S.Zero)
            parts = [g0]
            if perturbed:
                g1 = s.grade(1) - sum((mu[a][b] * eq.e0 + lam[a][b] * eq.e1
                                       for b, eq in enumerate(work.equations)), sp.S.Zero)
                parts.append(g1)
            for k, g in enumerate(parts):
                for c in _collect(g, f"grade {k}"):
                    eqs.append(_primitive(c))
                    grades_out.append(k)
    seen, uniq, ug = set(), [], []
    for e, g in zip(eqs, grades_out):
        key = (g, sp.srepr(e))
        nkey = (g, sp.srepr(sp.expand(-e)))
        if e == 0 or key in seen or nkey in seen:
            continue
        seen.add(key)
        uniq.append(e)
        ug.append(g)
    return DeterminingSystem(uniq, tuple(ansatz.functions), tuple(mults), tuple(ansatz.constants), ug, ansatz)


# -- equivalence of linear determining systems -------------------------------

def _unknown_atoms(e, unknown_names):
    out = set()
    for a in sp.sympify(e).atoms(AppliedUndef, sp.Derivative):
        base = a.expr if isinstance(a, sp.Derivative) else a
        if isinstance(base, AppliedUndef) and base.func.__name__ in unknown_names:
            out.add(a)
    return out


def _prolong(eqs, variables):
    out = list(eqs)
    for e in eqs:
        for v in variables:
            out.append(sp.expand(sp.diff(e, v)))
    return out


def _rows_at_point(eqs, atoms, point, known_values):
    rows = []
    for e in eqs:
        row = []
        for a in atoms:
            c = sp.diff(e, a) if e.has(a) else sp.S.Zero
            c = c.xreplace(known_values).xreplace(point)
            row.append(sp.Rational(sp.nsimplify(sp.expand(c))))
        rows.append(row)
    return rows


def _known_function_values(exprs, unknown_names, rng):
    atoms = set()
    for e in exprs:
        for a in sp.sympify(e).atoms(AppliedUndef, sp.Derivative):
            base = a.expr if isinstance(a, sp.Derivative) else a
            if isinstance(base, AppliedUndef) and base.func.__name__ not in unknown_names:
                atoms.add(a)
    # derivatives first so that xreplace does not break them apart
    ordered = sorted(atoms, key=lambda a: -len(sp.srepr(a)))
    return {a: random_rational(rng) for a in ordered}


def _span_contains(big_rows, small_rows):
    if not small_rows:
        return True
    if not big_rows:
        return all(all(x == 0 for x in r) for r in small_rows)
    A = DomainMatrix.from_list_sympy(len(big_rows), len(big_rows[0]), big_rows).convert_to(sp.QQ)
    B = DomainMatrix.from_list_sympy(len(big_rows) + len(small_rows), len(big_rows[0]),
                                     big_rows + small_rows).convert_to(sp.QQ)
    return A.rank() == B.rank()


def equivalent_systems(first: Sequence, second: Sequence, unknown_names: Sequence, variables: Sequence,
                       points: int = 3, seed: int = 0) -> bool:
    """Mutual containment of two linear determining systems.

    Every equation of one system must lie in the span of the other system
    and its first derivatives, pointwise at random rational points with
    the known arbitrary functions and their derivatives treated as
    independent generic values.
    """
    names = set(unknown_names)
    rng = random.Random(seed)
    first = [sp.expand(sp.sympify(e)) for e in first]
    second = [sp.expand(sp.sympify(e)) for e in second]
    pf, ps = _prolong(first, variables), _prolong(second, variables)
    atoms = set()
    for e in pf + ps:
        atoms |= _unknown_atoms(e, names)
    atoms = sorted(atoms, key=sp.srepr)
    for e in pf + ps:
        rest = e.xreplace({a: 0 for a in sorted(atoms, key=lambda a: -len(sp.srepr(a)))})
        if sp.expand(rest) != 0:
            raise NonlinearInUnknowns(f"inhomogeneous or nonlinear determining equation {e}")
    for _ in range(points):
        known = _known_function_values(pf + ps, names, rng)
        point = {sp.Symbol(str(v)) if not isinstance(v, sp.Symbol) else v: random_rational(rng) for v in variables}
        rows_pf = _rows_at_point(pf, atoms, point, known)
        rows_ps = _rows_at_point(ps, atoms, point, known)
        rows_f = rows_pf[: len(first)]
        rows_s = rows_ps[: len(second)]
        if not (_span_contains(rows_ps, rows_f) and _span_contains(rows_pf, rows_s)):
            return False
    return True


# -- finite-dimensional solving ----------------------------------------------

@dataclass
class AnsatzFamily:
    ansatz: SubstitutionAnsatz
    parameters: tuple
    side_conditions: tuple
    coefficient_solution: dict

    @property
    def dimension(self) -> int:
        return len(self.parameters)


def _fresh_params(count: int, taken, stem: str = "c"):
    out, k = [], 1
    while len(out) < count:
        s = sp.Symbol(f"{stem}{k}")
        if str(s) not in taken:
            out.append(s)
        k += 1
    return out


def solve_finite_ansatz(ds: DeterminingSystem, basis: Mapping, param_stem: str = "c") -> AnsatzFamily:
    """Expand unknown functions over monomial bases and solve the linear system.

    ``basis`` maps function names to lists of monomials in that function's
    arguments. Unknown functions without a basis stay free; equations still
    containing them come back as side conditions.
    """
    ansatz = ds.ansatz
    if ansatz is None:
        raise ValueError("determining system carries no ansatz")
    sigs = {f.name: f for f in ansatz.functions}
    for m in ds.multipliers:
        sigs.setdefault(m.func.__name__, FunctionSig(m.func.__name__, tuple(m.args)))
    coeffs, table = [], {}
    for name, monos in basis.items():
        if name not in sigs:
            raise ValueError(f"no unknown function named {name}")
        sig = sigs[name]
        syms = [sp.Symbol(f"_a_{name}_{k}") for k in range(len(monos))]
        coeffs += syms
        table[name] = (sig, sp.Add(*[a * sp.sympify(mn) for a, mn in zip(syms, monos)]))
    missing = [m.func.__name__ for m in ds.multipliers if m.func.__name__ not in table]
    if missing:
        raise ValueError(f"multipliers {missing} need a basis; use an eliminated determining system")
    unknowns = list(ansatz.constants) + coeffs

    def expand_unknowns(e):
        e = sp.sympify(e)
        for name, (sig, body) in table.items():
            lam = sp.Lambda(sig.args, body)
            e = e.replace(lambda a, name=name: isinstance(a, AppliedUndef) and a.func.__name__ == name,
                          lambda a, lam=lam: lam(*a.args))
        return sp.expand(e.doit())

    free_names = {f.name for f in ansatz.functions} - set(table)
    linear, side = [], []
    for e in ds.equations:
        e = expand_unknowns(e)
        if e == 0:
            continue
        if any(a.func.__name__ in free_names for a in e.atoms(AppliedUndef)):
            side.append(e)
            continue
        linear.append(e)
    rows = []
    for e in linear:
        known = sorted(e.atoms(AppliedUndef, sp.Derivative), key=lambda a: -len(sp.srepr(a)))
        rep = {a: sp.Dummy("k") for a in known}
        e2 = e.xreplace(rep)
        vars_ = sorted(e2.free_symbols - set(unknowns), key=str)
        poly = sp.Poly(e2, *vars_) if vars_ else sp.Poly(e2, sp.Dummy())
        for c in poly.coeffs():
            c = sp.expand(c)
            if unknowns and any(sp.diff(c, a).has(*unknowns) for a in unknowns):
                raise NonlinearInUnknowns(f"coefficient {c} is nonlinear in the unknowns")
            if c.free_symbols - set(unknowns):
                raise NonlinearInUnknowns(f"coefficient {c} does not separate")
            rows.append([sp.diff(c, a) for a in unknowns])
    if rows:
        M = sp.Matrix(rows)
        null = M.nullspace()
    else:
        null = [sp.Matrix([1 if i == j else 0 for i in range(len(unknowns))]) for j in range(len(unknowns))]
    taken = {str(s) for s in unknowns} | {f.name for f in ansatz.functions}
    params = _fresh_params(len(null), taken, param_stem) if null else []
    vec = sp.zeros(len(unknowns), 1)
    for p, v in zip(params, null):
        vec += p * v
    sol = {a: sp.expand(vec[i]) for i, a in enumerate(unknowns)}
    images = {}
    for n, s in ansatz.images.items():
        images[n] = s.map(lambda c: sp.expand(expand_unknowns(c).xreplace(sol)))
    side = [sp.expand(e.xreplace(sol)) for e in side]
    side = [e for e in side if e != 0]
    fam = SubstitutionAnsatz(images, tuple(params), tuple(f for f in ansatz.functions if f.name in free_names),
                             tuple(side) + tuple(ansatz.side_conditions), ansatz.order)
    return AnsatzFamily(fam, tuple(params), tuple(side), sol)


def family_span(images: Mapping, parameters: Sequence, order: int = 1) -> list:
    """Basis vectors (one per parameter) of a family linear in its parameters."""
    out = []
    for p in parameters:
        out.append({n: (s if isinstance(s, EpsSeries) else EpsSeries.from_expr(s, order))
                    .map(lambda c: sp.expand(sp.diff(c, p))) for n, s in images.items()})
    return out


def same_family(first: Mapping, first_params: Sequence, second: Mapping, second_params: Sequence,
                order: int = 1) -> bool:
    """Equal linear spans of two parametrized substitution families."""
    a = family_span(first, first_params, order)
    b = family_span(second, second_params, order)
    keys = sorted(set(first) | set(second))

    def flatten(members):
        exprs = []
        for mbr in members:
            exprs.append(sp.Add(*[sp.Symbol(f"_slot_{k}_{g}") * mbr[k].grade(g)
                                  for k in keys if k in mbr for g in range(order + 1)]))
        return exprs

    fa, fb = flatten(a), flatten(b)
    allexprs = [sp.expand(e) for e in fa + fb]
    gens = sorted(set().union(*[e.free_symbols for e in allexprs]) if allexprs else set(), key=str)
    monos = set()
    polys = []
    for e in allexprs:
        p = sp.Poly(e, *gens) if gens else sp.Poly(e, sp.Dummy())
        polys.append(dict(p.terms()))
        monos |= set(polys[-1])
    monos = sorted(monos)
    rows = [[d.get(mn, 0) for mn in monos] for d in polys]
    ra, rb = rows[: len(fa)], rows[len(fa):]
    rank = lambda r: sp.Matrix(r).rank() if r else 0
    return rank(ra) == rank(rb) == rank(ra + rb)


# -- lifting and shortcut discrimination -------------------------------------

def lift_substitution(sys: PdeSystem, phi, side_conditions: Sequence = ()) -> SubstitutionAnsatz:
    """Turn an unperturbed substitution v = phi into w = eps*phi."""
    base = sys.unperturbed()
    names = AdjointVarSet.fresh(base, perturbed=False).names
    images = _image_map(phi, names)
    try:
        rep = check_nsa(base, images, side_conditions)
    except TrivialSubstitution as exc:
        raise LiftRejected(str(exc)) from None
    if not rep.holds:
        raise LiftRejected("substitution is not nonlinearly self-adjoint for the unperturbed system")
    w_names = AdjointVarSet.fresh(sys.with_eps_order(1), perturbed=True).names
    lifted = {w: EpsSeries([0, images[v]], 1) for v, w in zip(names, w_names)}
    return SubstitutionAnsatz(lifted, side_conditions=tuple(side_conditions))


def _monomials(e):
    return {t.as_coeff_Mul()[1] for t in sp.Add.make_args(sp.expand(e)) if t != 0}


def distinct_term_criterion(sys: PdeSystem) -> bool:
    """Each E0_beta owns a monomial that no other unperturbed equation contains."""
    if sys.m == 1:
        return True
    monos = [_monomials(eq.e0) for eq in sys.equations]
    for b, mine in enumerate(monos):
        others = set().union(*[m for g, m in enumerate(monos) if g != b])
        if not (mine - others):
            return False
    return True


@dataclass
class NsaStatus:
    holds: bool
    phi: dict | None = None
    family: str = ""
    side_conditions: tuple = ()


@dataclass
class ShortcutVerdict:
    verdict: str
    lifted: SubstitutionAnsatz | None = None
    reason: str = ""


ANSA_YES = "ANSA-yes"
ANSA_NO = "ANSA-no-within-family"
INCONCLUSIVE = "inconclusive"


def shortcut_discriminate(sys: PdeSystem, status: NsaStatus) -> ShortcutVerdict:
    """Decide approximate self-adjointness from the unperturbed verdict."""
    if status.holds:
        lifted = lift_substitution(sys, status.phi, status.side_conditions)
        return ShortcutVerdict(ANSA_YES, lifted, "unperturbed system is nonlinearly self-adjoint; lifted w = eps*phi")
    if sys.m == 1 or distinct_term_criterion(sys):
        return ShortcutVerdict(ANSA_NO, None,
                               f"unperturbed system fails within {status.family or 'the family'}; "
                               "grade-0 identity has only zero multipliers")
    return ShortcutVerdict(INCONCLUSIVE, None, "distinct-term criterion fails for a non-scalar system")


def nsa_status_over_basis(sys: PdeSystem, basis: Sequence, family: str = "") -> NsaStatus:
    """Search v = phi over a polynomial basis; report the first nonzero solution if any."""
    base = sys.unperturbed()
    ans = generic_ansatz(base, names=("phi", "phi1"), perturbed=False)
    ds = determining_system(base, ans, eliminate=True, perturbed=False)
    fam = solve_finite_ansatz(ds, {f.name: list(basis) for f in ans.functions})
    if not fam.parameters:
        return NsaStatus(False, None, family or f"{len(basis)}-monomial polynomial basis")
    images = {n: s.grade(0) for n, s in fam.ansatz.images.items()}
    pick = {p: (1 if k == 0 else 0) for k, p in enumerate(fam.parameters)}
    phi = {n: sp.expand(e.xreplace(pick)) for n, e in images.items()}
    return NsaStatus(True, phi, family, fam.side_conditions)
