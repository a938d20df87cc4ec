"""Systems shared by the test modules."""

import sympy as sp

from jetlaw.expr import EPS, jet
from jetlaw.jet import FunctionSig, Generator, PdeEquation, PdeSystem

t, x = sp.symbols("t x")
u = jet("u")
ut, ux, utt, uxx, utx = (jet("u", s) for s in ("t", "x", "tt", "xx", "tx"))
F, G = sp.Function("F"), sp.Function("G")
f, g, h = sp.Function("f"), sp.Function("g"), sp.Function("h")
c = sp.symbols("c1:9")
R = sp.Rational
ONE = sp.Lambda(sp.Symbol("z"), 1)

WAVE_E0 = utt - F(u) * uxx - sp.diff(F(u), u) * ux ** 2


def wave_family() -> PdeSystem:
    """u_tt = (F(u) u_x)_x - eps G(u) u_t."""
    return PdeSystem((t, x), ("u",), (PdeEquation("W", WAVE_E0, G(u) * ut, utt),),
                     (FunctionSig("F", (u,)), FunctionSig("G", (u,))))


def linear_wave() -> PdeSystem:
    return PdeSystem((t, x), ("u",), (PdeEquation("W", utt - uxx, 0, utt),), eps_order=0)


def damped_linear_wave() -> PdeSystem:
    return PdeSystem((t, x), ("u",), (PdeEquation("W", utt - uxx, ut, utt),))


def quadratic_perturbation() -> PdeSystem:
    return PdeSystem((t, x), ("u",), (PdeEquation("W", utt - uxx, u * ut + t * ut ** 2 / 2 - t * ux ** 2 / 2, utt),))


def variable_damping() -> PdeSystem:
    return PdeSystem((t, x), ("u",), (PdeEquation("W", utt - uxx, G(u) * ut, utt),), (FunctionSig("G", (u,)),))


def quadratic_wave() -> PdeSystem:
    return PdeSystem((t, x), ("u",), (PdeEquation("W", utt - u * uxx - ux ** 2, u * ut, utt),))


def exponential_wave() -> PdeSystem:
    return wave_family().specialize({"F": "exp", "G": ONE})


def exponential_wave_generator() -> Generator:
    return Generator.from_exprs({x: x, t: t + EPS * t ** 2 / 2}, {"u": -2 * EPS * t})


def short_pulse() -> PdeSystem:
    e0 = utx - u - sp.expand(R(1, 6) * (3 * u ** 2 * uxx + 6 * u * ux ** 2))
    return PdeSystem((t, x), ("u",), (PdeEquation("S", e0, 0, utx),), eps_order=0)


def wave_side(fn):
    """fn_tt - fn_xx for an unknown f(x, t)."""
    return sp.diff(fn(x, t), t, 2) - sp.diff(fn(x, t), x, 2)
