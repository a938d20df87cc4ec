"""Expression kernel: jet variables, canonical form, differentiation, evaluation.

Expressions are ordinary sympy trees over four kinds of atoms:

* independent variables and undetermined constants (plain ``sympy.Symbol``),
* jet variables ``u_J`` (:class:`JetSymbol`), one per dependent variable and
  multi-index, with ``u_xt`` and ``u_tx`` being the same object,
* applications of arbitrary functions such as ``F(u)`` or ``f(x, t)``
  (undefined sympy functions); formal derivatives ``F'(u)`` are
  ``Derivative(F(u), u)``,
* the small parameter :data:`EPS`.

The canonical form is sympy's fully expanded form with exact rational
coefficients. Two polynomial expressions over these atoms are equal exactly
when their expanded forms are structurally identical.
"""

from __future__ import annotations

import enum
import random
from fractions import Fraction
from typing import Iterable, Mapping

import sympy as sp
from sympy.core.function import AppliedUndef, UndefinedFunction

from .errors import CapExceeded, CycleError, InvalidSubstitution, UnboundSymbol

EPS = sp.Symbol("eps")
DEFAULT_JET_CAP = 8


class SymbolKind(enum.Enum):
    INDEPENDENT = "independent-variable"
    DEPENDENT = "dependent-variable"
    FUNCTION = "arbitrary-function"
    CONSTANT = "undetermined-constant"
    EPS = "eps-parameter"


class MultiIndex:
    """Order-insensitive differentiation multiplicities, keyed by variable name."""

    __slots__ = ("counts",)

    def __init__(self, counts: Mapping[str, int] | Iterable[tuple[str, int]] = ()):
        if isinstance(counts, Mapping):
            counts = counts.items()
        merged: dict[str, int] = {}
        for name, n in counts:
            if n < 0:
                raise ValueError(f"negative multiplicity for {name}")
            if n:
                merged[str(name)] = merged.get(str(name), 0) + int(n)
        self.counts = tuple(sorted(merged.items()))

    @classmethod
    def from_letters(cls, letters: str) -> "MultiIndex":
        out: dict[str, int] = {}
        for ch in letters:
            out[ch] = out.get(ch, 0) + 1
        return cls(out)

    @classmethod
    def from_vars(cls, variables: Iterable) -> "MultiIndex":
        out: dict[str, int] = {}
        for v in variables:
            out[str(v)] = out.get(str(v), 0) + 1
        return cls(out)

    @property
    def order(self) -> int:
        return sum(n for _, n in self.counts)

    def count(self, var) -> int:
        return dict(self.counts).get(str(var), 0)

    def letters(self) -> str:
        return "".join(name * n for name, n in self.counts)

    def variables(self) -> list[sp.Symbol]:
        """Expand into a sorted list of independent-variable symbols."""
        return [sp.Symbol(name) for name, n in self.counts for _ in range(n)]

    def raised(self, var) -> "MultiIndex":
        return MultiIndex(list(self.counts) + [(str(var), 1)])

    def lowered(self, var) -> "MultiIndex":
        d = dict(self.counts)
        if d.get(str(var), 0) == 0:
            raise ValueError(f"cannot lower {self} in {var}")
        d[str(var)] -= 1
        return MultiIndex(d)

    def contains(self, other: "MultiIndex") -> bool:
        mine = dict(self.counts)
        return all(mine.get(k, 0) >= n for k, n in other.counts)

    def __sub__(self, other: "MultiIndex") -> "MultiIndex":
        if not self.contains(other):
            raise ValueError(f"{other} is not contained in {self}")
        d = dict(self.counts)
        for k, n in other.counts:
            d[k] -= n
        return MultiIndex(d)

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        return MultiIndex(list(self.counts) + list(other.counts))

    def __eq__(self, other):
        return isinstance(other, MultiIndex) and self.counts == other.counts

    def __hash__(self):
        return hash(self.counts)

    def __lt__(self, other):
        return (self.order, self.counts) < (other.order, other.counts)

    def __repr__(self):
        return f"MultiIndex({self.letters()!r})"


class JetSymbol(sp.Symbol):
    """Jet coordinate ``dep_J``; order 0 is the dependent variable itself."""

    def __new__(cls, dep: str, index: MultiIndex | None = None, cap: int | None = None):
        index = index if index is not None else MultiIndex()
        if cap is not None and index.order > cap:
            raise CapExceeded(f"jet order {index.order} of {dep} exceeds cap {cap}")
        name = f"{dep}_{index.letters()}" if index.order else dep
        obj = super().__new__(cls, name)
        obj.dep = dep
        obj.index = index
        return obj

    def __getnewargs_ex__(self):
        return ((self.dep, self.index), {})

    def __reduce_ex__(self, protocol):
        return (JetSymbol, (self.dep, self.index))

    @property
    def order(self) -> int:
        return self.index.order

    def raised(self, var, cap: int | None = DEFAULT_JET_CAP) -> "JetSymbol":
        return JetSymbol(self.dep, self.index.raised(var), cap)

    def lowered(self, var) -> "JetSymbol":
        return JetSymbol(self.dep, self.index.lowered(var))


def jet(dep: str, letters: str = "", cap: int | None = DEFAULT_JET_CAP) -> JetSymbol:
    """``jet("u", "xt")`` is the jet variable u_xt."""
    return JetSymbol(dep, MultiIndex.from_letters(letters), cap)


def jets_in(e) -> set[JetSymbol]:
    return {s for s in sp.sympify(e).free_symbols if isinstance(s, JetSymbol)}


def positive_jets(e) -> set[JetSymbol]:
    return {s for s in jets_in(e) if s.order > 0}


def max_jet_order(e) -> int:
    return max((s.order for s in jets_in(e)), default=0)


def function_atoms(e) -> set:
    return sp.sympify(e).atoms(AppliedUndef)


def jet_sort_key(s: JetSymbol):
    return (s.dep, s.order, s.index.counts)


def _check_cap(e, cap):
    if cap is None:
        return
    for s in jets_in(e):
        if s.order > cap:
            raise CapExceeded(f"{s} has order {s.order} > cap {cap}")


def _evaluate_concrete_derivatives(e):
    if not e.has(sp.Derivative):
        return e
    return e.replace(
        lambda a: isinstance(a, sp.Derivative) and not isinstance(a.expr, AppliedUndef),
        lambda a: a.doit(),
    )


def normalize(e, cap: int | None = DEFAULT_JET_CAP):
    """Canonical (fully expanded) form; idempotent."""
    e = _evaluate_concrete_derivatives(sp.sympify(e))
    _check_cap(e, cap)
    return sp.expand(e)


def is_zero(e) -> bool:
    return normalize(e, cap=None) == 0


def diff_partial(e, wrt):
    """Partial derivative with every jet coordinate treated as independent."""
    if not isinstance(wrt, sp.Symbol):
        raise TypeError(f"cannot differentiate with respect to {wrt!r}")
    return normalize(sp.diff(sp.sympify(e), wrt), cap=None)


# -- concrete functions ------------------------------------------------------

_CONCRETE: dict[str, object] = {
    "exp": sp.exp,
    "sin": sp.sin,
    "cos": sp.cos,
    "log": sp.log,
}


def register_concrete(name: str, fn) -> None:
    """Register a closed-form function usable as a replacement for F, G, ..."""
    _CONCRETE[name] = fn


def concrete(name: str):
    try:
        return _CONCRETE[name]
    except KeyError:
        raise KeyError(f"no concrete function registered as {name!r}") from None


def _function_name(f) -> str:
    if isinstance(f, str):
        return f
    if isinstance(f, UndefinedFunction):
        return f.__name__
    if isinstance(f, AppliedUndef):
        return f.func.__name__
    raise TypeError(f"not a function symbol: {f!r}")


def replace_functions(e, table: Mapping):
    """Replace arbitrary functions by concrete callables (names or sympy callables)."""
    e = sp.sympify(e)
    for f, fn in table.items():
        if isinstance(fn, str):
            fn = concrete(fn)
        name = _function_name(f)
        e = e.replace(lambda a, name=name: isinstance(a, AppliedUndef) and a.func.__name__ == name,
                      lambda a, fn=fn: fn(*a.args))
    return _evaluate_concrete_derivatives(e)


def substitute(e, target, replacement):
    """Replace a symbol, jet variable or arbitrary function.

    Replacing a base dependent variable is refused when derivatives of it
    occur; use :func:`jetlaw.jet.substitute_dependent` for that.
    """
    e = sp.sympify(e)
    if isinstance(target, (UndefinedFunction, str)) and not isinstance(target, sp.Symbol):
        return normalize(replace_functions(e, {target: replacement}), cap=None)
    replacement = sp.sympify(replacement)
    if target in replacement.free_symbols:
        raise CycleError(f"replacement for {target} contains {target}")
    if isinstance(target, JetSymbol) and target.order == 0:
        clash = [s for s in jets_in(e) if s.dep == target.dep and s.order > 0]
        if clash:
            raise InvalidSubstitution(
                f"{target} occurs differentiated ({sorted(map(str, clash))[0]}); "
                "use substitute_dependent")
    return normalize(e.xreplace({target: replacement}), cap=None)


def eval_numeric(e, assignment: Mapping, func_table: Mapping | None = None):
    """Evaluate at a point. Exact when the result is rational, else a 30-digit float."""
    e = sp.sympify(e)
    if func_table:
        e = replace_functions(e, func_table)
    missing = function_atoms(e)
    if missing:
        raise UnboundSymbol(f"no evaluator for {sorted(map(str, missing))[0]}")
    subs = {}
    for k, v in assignment.items():
        key = sp.Symbol(k) if isinstance(k, str) else k
        subs[key] = sp.Rational(v) if isinstance(v, (int, Fraction, str)) else sp.sympify(v)
    value = e.xreplace(subs)
    free = value.free_symbols
    if free:
        raise UnboundSymbol(f"unbound symbol {sorted(map(str, free))[0]}")
    value = sp.expand(value)
    if value.is_Rational:
        return value
    return sp.N(value, 30)


def random_rational(rng: random.Random, lo: int = -5, hi: int = 5, den: int = 7) -> sp.Rational:
    """Nonzero-biased random rational used by every randomized check."""
    return sp.Rational(rng.randint(lo * den, hi * den), rng.randint(1, den))


def random_assignment(e, rng: random.Random) -> dict:
    """Random rational values for every free symbol of e except eps."""
    return {s: random_rational(rng) for s in sp.sympify(e).free_symbols if s != EPS}


def random_function_table(e, rng: random.Random, degree: int = 2) -> dict:
    """Random polynomial stand-ins for each arbitrary function occurring in e."""
    table = {}
    for app in function_atoms(e):
        name = app.func.__name__
        if name in table:
            continue
        slots = sp.symbols(f"_a0:{len(app.args)}")
        body = sum(random_rational(rng) * m for m in sp.itermonomials(slots, degree))
        table[name] = sp.Lambda(slots, body)
    return table
