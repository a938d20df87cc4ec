"""Randomized algebraic identities, 200 seeded cases each."""

import random

import sympy as sp

from jetlaw.conservation import flux
from jetlaw.expr import (EPS, eval_numeric, jet, normalize, random_assignment, random_function_table,
                         random_rational)
from jetlaw.jet import (Generator, PdeEquation, PdeSystem, characteristic, prolonged_action, substitute_dependent,
                        total_derivative)
from jetlaw.series import EpsSeries
from jetlaw.variational import euler_operator

CASES = 200
SEED = 20240917
t, x = sp.symbols("t x")
u = jet("u")
F = sp.Function("F")

JETS = {0: [u], 1: [jet("u", "t"), jet("u", "x")], 2: [jet("u", s) for s in ("tt", "tx", "xx")]}
# dummy system supplying independents and dependents to prolonged_action
DUMMY = PdeSystem((t, x), ("u",), (PdeEquation("E", jet("u", "tt"), 0, jet("u", "tt")),), eps_order=0)


def rand_poly(rng, order=2, terms=3, with_functions=False):
    pool = [t, x] + [s for k in range(order + 1) for s in JETS[k]]
    out = sp.S.Zero
    for _ in range(rng.randint(1, terms)):
        m = random_rational(rng)
        for _ in range(rng.randint(0, 3)):
            m *= rng.choice(pool)
        if with_functions and rng.random() < 0.3:
            m *= rng.choice([F(u), sp.exp(u), sp.Derivative(F(u), u)])
        out += m
    return sp.expand(out)


def rand_point_coeff(rng):
    return sp.expand(sum(random_rational(rng) * m for m in rng.sample([1, t, x, u, t * x, x * u, u ** 2, t * u], 3)))


def test_euler_annihilates_divergences():
    rng = random.Random(SEED)
    for _ in range(CASES):
        P, Q = rand_poly(rng, 1, with_functions=True), rand_poly(rng, 1, with_functions=True)
        div = total_derivative(P, t) + total_derivative(Q, x)
        assert normalize(euler_operator(div, "u"), cap=None) == 0


def test_total_derivatives_commute():
    rng = random.Random(SEED + 1)
    for _ in range(CASES):
        e = rand_poly(rng, 2, with_functions=True)
        a = total_derivative(total_derivative(e, t), x)
        b = total_derivative(total_derivative(e, x), t)
        assert normalize(a - b, cap=None) == 0


def test_substitute_commutes_with_total_derivative():
    rng = random.Random(SEED + 2)
    v_jets = [jet("v"), jet("v", "t"), jet("v", "x"), jet("v", "tx")]
    for _ in range(CASES):
        e = sp.expand(rand_poly(rng, 1, 2) * rng.choice(v_jets) + rand_poly(rng, 1, 1) * rng.choice(v_jets))
        phi = rand_point_coeff(rng)
        for d in (t, x):
            lhs = substitute_dependent(total_derivative(e, d), "v", phi)
            rhs = total_derivative(substitute_dependent(e, "v", phi), d)
            assert normalize(lhs - rhs, cap=None) == 0


def test_noether_identity():
    # D_i C^i = pr X(L) + L D_i xi^i - W E(L) for point generators
    rng = random.Random(SEED + 3)
    for _ in range(CASES):
        L = rand_poly(rng, 2, terms=2)
        xi = {t: rand_point_coeff(rng), x: rand_point_coeff(rng)}
        X = Generator.from_exprs(xi, {"u": rand_point_coeff(rng)}, order=0)
        W = characteristic(X, (t, x), ("u",))["u"].to_expr()
        C = flux(L, xi, {"u": W}, (t, x))
        lhs = total_derivative(C[t], t) + total_derivative(C[x], x)
        rhs = (prolonged_action(X, L, DUMMY).to_expr() + L * (total_derivative(xi[t], t) + total_derivative(xi[x], x))
               - W * euler_operator(L, "u"))
        assert normalize(lhs - rhs, cap=None) == 0


def rand_series(rng, order):
    return EpsSeries([rand_poly(rng, 1, 2) for _ in range(order + 1)], order)


def same_series(a, b):
    return (a - b).is_zero()


def test_eps_series_ring_laws():
    rng = random.Random(SEED + 4)
    for _ in range(CASES):
        K = rng.randint(0, 2)
        a, b, c = (rand_series(rng, K) for _ in range(3))
        assert same_series(a + b, b + a)
        assert same_series(a * b, b * a)
        assert same_series((a * b) * c, a * (b * c))
        assert same_series(a * (b + c), a * b + a * c)
        assert same_series(a + EpsSeries.zero(K), a)
        assert same_series(a * EpsSeries([1], K), a)
        # truncation is a ring map: agrees with expanding and cutting
        full = sp.expand(a.to_expr() * b.to_expr())
        assert same_series(a * b, EpsSeries.from_expr(full, K))


def test_normalize_idempotent_and_sound():
    rng = random.Random(SEED + 5)
    for _ in range(CASES):
        e = rand_poly(rng, 2, terms=4, with_functions=True)
        e = e * rand_poly(rng, 1, 2) + EPS * rand_poly(rng, 1, 2) - sp.Rational(1, 3) * (u + t) ** 2
        n = normalize(e, cap=None)
        assert normalize(n, cap=None) == n
        table = random_function_table(e, rng)
        point = random_assignment(e, rng)
        point[EPS] = random_rational(rng)
        a, b = eval_numeric(e, point, table), eval_numeric(n, point, table)
        assert a == b
