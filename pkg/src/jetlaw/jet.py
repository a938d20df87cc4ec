"""Jet-space calculus: total derivatives, prolongation, on-shell reduction."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import sympy as sp

from .errors import (InvalidSubstitution, NotASymmetryCandidate,
                     ReductionDiverged, ReductionFailure)
from .expr import (DEFAULT_JET_CAP, EPS, JetSymbol, MultiIndex, jets_in,
                   max_jet_order, normalize)
from .series import EpsSeries, as_series, truncate


@dataclass(frozen=True)
class FunctionSig:
    """Arbitrary function with its formal argument list, e.g. F(u) or f(x, t)."""

    name: str
    args: tuple

    @property
    def func(self):
        return sp.Function(self.name)

    def __call__(self, *args):
        return self.func(*(args or self.args))


@dataclass(frozen=True)
class PdeEquation:
    name: str
    e0: sp.Expr
    e1: sp.Expr
    leading: JetSymbol

    def full(self, order: int = 1) -> EpsSeries:
        return EpsSeries([self.e0, self.e1], order)

    def leading_coefficient(self):
        return normalize(sp.diff(self.e0, self.leading), cap=None)


@dataclass(frozen=True)
class PdeSystem:
    """Declarations plus equations ``E0 + eps*E1 = 0``."""

    independents: tuple
    dependents: tuple
    equations: tuple
    functions: tuple = ()
    constants: tuple = ()
    eps_order: int = 1
    jet_cap: int = DEFAULT_JET_CAP

    def __post_init__(self):
        object.__setattr__(self, "independents", tuple(sp.Symbol(str(x)) for x in self.independents))
        object.__setattr__(self, "dependents", tuple(str(d) for d in self.dependents))
        eqs = []
        for eq in self.equations:
            eqs.append(replace(eq, e0=normalize(eq.e0, cap=self.jet_cap),
                               e1=normalize(eq.e1, cap=self.jet_cap)))
        object.__setattr__(self, "equations", tuple(eqs))
        self.validate()

    def validate(self):
        if not self.equations:
            raise ValueError("a system needs at least one equation")
        leads = [eq.leading for eq in self.equations]
        if len(set(leads)) != len(leads):
            raise ValueError("leading derivatives must be pairwise distinct")
        for eq in self.equations:
            if eq.e0.has(EPS) or eq.e1.has(EPS):
                raise ValueError(f"eps inside the E0/E1 slots of {eq.name}")
            if eq.leading.dep not in self.dependents:
                raise ValueError(f"leading derivative {eq.leading} is not a jet of a dependent")
            if eq.leading not in eq.e0.free_symbols:
                raise ValueError(f"leading derivative {eq.leading} absent from equation {eq.name}")
            c = eq.leading_coefficient()
            if c == 0 or eq.leading in c.free_symbols or c.has(EPS):
                raise ValueError(f"{eq.leading} does not occur linearly in {eq.name}")
            for s in jets_in(c):
                if s.dep == eq.leading.dep and s.index.contains(eq.leading.index):
                    raise ValueError(f"leading coefficient of {eq.name} involves {s}")

    @property
    def m(self) -> int:
        return len(self.equations)

    @property
    def time(self) -> sp.Symbol:
        return self.independents[0]

    def dependent_symbols(self) -> list[JetSymbol]:
        return [JetSymbol(d) for d in self.dependents]

    def unperturbed(self) -> "PdeSystem":
        eqs = tuple(replace(eq, e1=sp.S.Zero) for eq in self.equations)
        return replace(self, equations=eqs, eps_order=0)

    def with_eps_order(self, order: int) -> "PdeSystem":
        return replace(self, eps_order=order)

    def specialize(self, table: Mapping) -> "PdeSystem":
        """Replace arbitrary functions by concrete ones (e.g. F -> exp)."""
        from .expr import replace_functions
        names = {str(getattr(k, "__name__", k)) for k in table}
        eqs = tuple(replace(eq, e0=replace_functions(eq.e0, table), e1=replace_functions(eq.e1, table))
                    for eq in self.equations)
        funcs = tuple(f for f in self.functions if f.name not in names)
        return replace(self, equations=eqs, functions=funcs)


# -- total derivatives -------------------------------------------------------

def _diff_term(term, s):
    """d term / d s; power rule when s only occurs as a plain power base."""
    k = 0
    for f in sp.Mul.make_args(term):
        if f == s:
            k += 1
        elif f.is_Pow and f.base == s and f.exp.is_Integer:
            k += int(f.exp)
        elif s in f.free_symbols:
            return term.diff(s)
    return k * term / s


def total_derivative(e, x, cap: int | None = DEFAULT_JET_CAP):
    """D_x e: explicit x-dependence plus the chain through every jet coordinate."""
    if isinstance(e, EpsSeries):
        return e.map(lambda c: total_derivative(c, x, cap))
    x = sp.Symbol(str(x))
    e = sp.expand(sp.sympify(e))
    raised = {}
    out = []
    # term by term, so each monomial is differentiated only by the jets it holds
    for term in sp.Add.make_args(e):
        free = term.free_symbols
        if x in free:
            out.append(_diff_term(term, x))
        for s in free:
            if isinstance(s, JetSymbol):
                if s not in raised:
                    raised[s] = s.raised(x, cap)
                out.append(_diff_term(term, s) * raised[s])
    return sp.expand(sp.Add(*out))


def total_derivative_multi(e, variables, cap: int | None = DEFAULT_JET_CAP):
    """D_{x1} ... D_{xk} e for a MultiIndex or a sequence of variables."""
    if isinstance(variables, MultiIndex):
        variables = variables.variables()
    for v in variables:
        e = total_derivative(e, v, cap)
    return e


class _DerivativeCache:
    """D_J(image) for all multi-indices J, built incrementally."""

    def __init__(self, image, cap):
        self.cap = cap
        self.table = {MultiIndex(): sp.sympify(image)}

    def __call__(self, index: MultiIndex):
        if index in self.table:
            return self.table[index]
        var = index.counts[-1][0]
        lower = self(index.lowered(var))
        value = total_derivative(lower, var, self.cap)
        self.table[index] = value
        return value


def substitute_dependent(e, dep: str, image, cap: int | None = DEFAULT_JET_CAP):
    """Replace dep and every derivative dep_J by D_J(image)."""
    if isinstance(e, EpsSeries):
        img = image.to_expr() if isinstance(image, EpsSeries) else image
        return EpsSeries.from_expr(substitute_dependent(e.to_expr(), dep, img, cap), e.order)
    if isinstance(image, EpsSeries):
        image = image.to_expr()
    image = sp.sympify(image)
    for s in jets_in(image):
        if s.order > 0:
            raise InvalidSubstitution(f"image of {dep} contains the derivative {s}")
        if s.dep == dep:
            raise InvalidSubstitution(f"image of {dep} contains {dep} itself")
    e = sp.sympify(e)
    targets = [s for s in jets_in(e) if s.dep == dep]
    if not targets:
        return sp.expand(e)
    cache = _DerivativeCache(image, cap)
    return sp.expand(e.xreplace({s: cache(s.index) for s in targets}))


# -- generators --------------------------------------------------------------

@dataclass(frozen=True)
class Generator:
    """Point generator ``xi^i d/dx^i + eta^s d/du^s``, components graded in eps."""

    xi: Mapping
    eta: Mapping
    order: int = 1
    name: str = "X"

    def __post_init__(self):
        xi = {sp.Symbol(str(k)): as_series(v, self.order) for k, v in dict(self.xi).items()}
        eta = {str(k): as_series(v, self.order) for k, v in dict(self.eta).items()}
        for comp in list(xi.values()) + list(eta.values()):
            for c in comp.coeffs:
                bad = [s for s in jets_in(c) if s.order > 0]
                if bad:
                    raise ValueError(f"point generators cannot depend on {bad[0]}")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "eta", eta)

    @classmethod
    def from_exprs(cls, xi: Mapping, eta: Mapping, order: int = 1, name: str = "X") -> "Generator":
        return cls({k: EpsSeries.from_expr(v, order) for k, v in xi.items()},
                   {k: EpsSeries.from_expr(v, order) for k, v in eta.items()}, order, name)

    def grade(self, k: int) -> "Generator":
        """The eps^k part as a generator (same truncation order)."""
        return Generator({x: EpsSeries([s.grade(k)], self.order) for x, s in self.xi.items()},
                         {d: EpsSeries([s.grade(k)], self.order) for d, s in self.eta.items()},
                         self.order, f"{self.name}{k}")

    def with_order(self, order: int) -> "Generator":
        return Generator({x: s.with_order(order) for x, s in self.xi.items()},
                         {d: s.with_order(order) for d, s in self.eta.items()}, order, self.name)

    def xi_of(self, x) -> EpsSeries:
        return self.xi.get(sp.Symbol(str(x)), EpsSeries.zero(self.order))

    def eta_of(self, dep: str) -> EpsSeries:
        return self.eta.get(str(dep), EpsSeries.zero(self.order))

    def is_zero(self) -> bool:
        return all(s.is_zero() for s in list(self.xi.values()) + list(self.eta.values()))


def characteristic(X: Generator, independents: Sequence, dependents: Sequence) -> dict:
    """W^s = eta^s - xi^j u^s_j for every dependent, graded in eps."""
    out = {}
    for d in dependents:
        w = X.eta_of(d)
        for x in independents:
            w = w - X.xi_of(x) * EpsSeries([JetSymbol(d).raised(x)], X.order)
        out[str(d)] = w
    return out


def prolonged_action(X: Generator, e, sys: PdeSystem) -> EpsSeries:
    """pr X(e) = xi^i D_i e + sum_J D_J(W) de/du_J, in characteristic form."""
    order = X.order
    e_expr = e.to_expr() if isinstance(e, EpsSeries) else sp.sympify(e)
    W = {d: w.to_expr() for d, w in characteristic(X, sys.independents, sys.dependents).items()}
    terms = []
    for x in sys.independents:
        xi = X.xi_of(x).to_expr()
        if xi != 0:
            terms.append(xi * total_derivative(e_expr, x, sys.jet_cap))
    for d, w in W.items():
        if w == 0:
            continue
        cache = _DerivativeCache(w, sys.jet_cap)
        for s in jets_in(e_expr):
            if s.dep == d:
                terms.append(cache(s.index) * sp.diff(e_expr, s))
    return EpsSeries.from_expr(sp.Add(*terms), order)


# -- on-shell reduction ------------------------------------------------------

class OnShell:
    """Rewrites leading derivatives and their consequences by the solved equations."""

    def __init__(self, sys: PdeSystem, order: int | None = None):
        self.sys = sys
        self.order = sys.eps_order if order is None else order
        self.rules = []
        for eq in sys.equations:
            c = eq.leading_coefficient()
            if c == 0:
                raise ReductionFailure(f"zero leading coefficient in {eq.name}")
            full = eq.e0 + EPS * eq.e1 if self.order >= 1 else eq.e0
            rest = sp.expand(full).xreplace({eq.leading: 0})
            rhs = sp.expand(-rest / c)
            self.rules.append((eq.leading, rhs))
        self._cache: dict = {}

    def principal_rule(self, s: JetSymbol):
        for lead, rhs in self.rules:
            if s.dep == lead.dep and s.index.contains(lead.index):
                return lead, rhs
        return None

    def is_principal(self, s) -> bool:
        return isinstance(s, JetSymbol) and self.principal_rule(s) is not None

    def consequence(self, s: JetSymbol):
        """D_{J - L}(rhs) for a principal jet s = u_J with leading derivative u_L."""
        if s in self._cache:
            return self._cache[s]
        lead, rhs = self.principal_rule(s)
        value = truncate(total_derivative_multi(rhs, s.index - lead.index, self.sys.jet_cap), self.order)
        self._cache[s] = value
        return value

    def reduce_expr(self, expr):
        expr = truncate(expr, self.order)
        bound = max(2 * max_jet_order(expr), self.order + 2, 2)
        for _ in range(bound + 1):
            principal = [s for s in jets_in(expr) if self.is_principal(s)]
            if not principal:
                return expr
            expr = truncate(expr.xreplace({s: self.consequence(s) for s in principal}), self.order)
        if any(self.is_principal(s) for s in jets_in(expr)):
            raise ReductionDiverged(f"no fixpoint within {bound} rounds")
        return expr

    def resolved(self, s: JetSymbol):
        """Fully reduced value of a principal jet (free of principal jets)."""
        return self.reduce_expr(s)

    def __call__(self, e) -> EpsSeries:
        if isinstance(e, EpsSeries):
            order = e.order
            red = OnShell(self.sys, order) if order != self.order else self
            return EpsSeries.from_expr(red.reduce_expr(e.to_expr()), order)
        return EpsSeries.from_expr(self.reduce_expr(e), self.order)


def on_shell_reduce(e, sys: PdeSystem, order: int | None = None) -> EpsSeries:
    """Evaluate on the solution manifold of sys, truncated at the series order."""
    if isinstance(e, EpsSeries):
        order = e.order
    return OnShell(sys, order)(e if isinstance(e, EpsSeries) else EpsSeries.from_expr(e, order or sys.eps_order))


# -- approximate symmetry ----------------------------------------------------

@dataclass
class SymmetryReport:
    holds: bool
    residual: dict
    H: dict
    H_alternate: dict = field(default_factory=dict)
    readings_agree: bool = True
    notes: list = field(default_factory=list)


def is_exact_symmetry(X: Generator, sys: PdeSystem) -> bool:
    """pr X(E0) vanishes on the unperturbed solution manifold."""
    base = sys.unperturbed()
    shell = OnShell(base, 0)
    for eq in sys.equations:
        act = prolonged_action(X.grade(0).with_order(0), eq.e0, base)
        if normalize(shell.reduce_expr(act.grade(0)), cap=None) != 0:
            return False
    return True


def check_approx_symmetry(X: Generator, sys: PdeSystem) -> SymmetryReport:
    """First-order approximate symmetry test X1(E0)|_{E0=0} + H = 0.

    H is (1/eps) X0(E)|_{E=0}; its grade-0 part must vanish, otherwise X0 is
    not an exact symmetry of the unperturbed system.
    """
    if sys.eps_order < 1:
        raise ValueError("approximate symmetry needs eps order >= 1")
    X = X.with_order(sys.eps_order)
    X0, X1 = X.grade(0), X.grade(1)
    full_shell = OnShell(sys)
    base = sys.unperturbed()
    base_shell = OnShell(base, 0)
    residual, H, H_alt = {}, {}, {}
    holds, agree = True, True
    notes = []
    for eq in sys.equations:
        act0 = prolonged_action(X0, eq.full(sys.eps_order), sys)
        red = full_shell(act0)
        if normalize(red.grade(0), cap=None) != 0:
            raise NotASymmetryCandidate(
                f"grade-0 generator is not a symmetry of the unperturbed {eq.name}")
        h = normalize(red.grade(1), cap=None)
        alt = normalize(base_shell.reduce_expr(prolonged_action(X0, eq.e1, sys).grade(0)), cap=None)
        x1e0 = base_shell.reduce_expr(prolonged_action(X1, eq.e0, sys).grade(0))
        r1 = normalize(x1e0 + h, cap=None)
        residual[eq.name] = EpsSeries([0, r1], sys.eps_order)
        H[eq.name] = h
        H_alt[eq.name] = alt
        if r1 != 0:
            holds = False
        if normalize(h - alt, cap=None) != 0:
            agree = False
            alt_ok = normalize(x1e0 + alt, cap=None) == 0
            notes.append(f"{eq.name}: H on E=0 is {h}, on E0=0 it is {alt}; "
                         f"the E0=0 reading {'also holds' if alt_ok else 'fails'}")
    return SymmetryReport(holds, residual, H, H_alt, agree, notes)
