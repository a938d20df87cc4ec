import sympy as sp

from jetlaw.expr import EPS, MultiIndex, jet, normalize
from jetlaw.jet import total_derivative
from jetlaw.series import EpsSeries
from jetlaw.variational import (AdjointVarSet, adjoint_degree_ok, adjoint_system, euler_operator,
                                formal_lagrangian, higher_euler_operator)

from wave_systems import (F, G, WAVE_E0, linear_wave, quadratic_perturbation, t, u, ut, utt, ux, uxx,
                          wave_family, x)

w, v = jet("w"), jet("v")
wt, wx, wtt, wxx = (jet("w", s) for s in ("t", "x", "tt", "xx"))


def same(a, b):
    a = a.to_expr() if isinstance(a, EpsSeries) else a
    b = b.to_expr() if isinstance(b, EpsSeries) else b
    return normalize(a - b, cap=None) == 0


def test_adjoint_names():
    assert AdjointVarSet.fresh(wave_family()).names == ("w",)
    assert AdjointVarSet.fresh(linear_wave()).names == ("v",)


def test_adjoint_names_avoid_collisions():
    from jetlaw.jet import PdeEquation, PdeSystem
    sys = PdeSystem((t, x), ("u", "w"), (PdeEquation("A", ut - jet("w", "x"), 0, ut),
                                         PdeEquation("B", jet("w", "t") - ux, 0, jet("w", "t"))))
    names = AdjointVarSet.fresh(sys).names
    assert names == ("w1", "w2")
    assert AdjointVarSet(("w1", "w2")).align({"v2": 1, "v1": 0}) == {"w1": 0, "w2": 1}


def test_formal_lagrangians():
    assert same(formal_lagrangian(wave_family()).value, w * (WAVE_E0 + EPS * G(u) * ut))
    assert same(formal_lagrangian(linear_wave()).value, v * (utt - uxx))
    quadratic = w * (utt - uxx + EPS * (u * ut + t * ut ** 2 / 2 - t * ux ** 2 / 2))
    assert same(formal_lagrangian(quadratic_perturbation()).value, quadratic)


def test_euler_operator_examples():
    assert same(euler_operator(w * WAVE_E0, "u"), wtt - F(u) * wxx)
    assert euler_operator(total_derivative(u ** 2, x), "u") == 0
    assert same(euler_operator(ut ** 2 / 2 - ux ** 2 / 2, "u"), -utt + uxx)


def test_higher_euler_operator_examples():
    assert same(higher_euler_operator(v * utt, jet("u", "t")), -jet("v", "t"))
    assert same(higher_euler_operator(v * utt, jet("u", "tt")), v)
    got = higher_euler_operator(w * F(u) * uxx, jet("u", "x"))
    assert same(got, -(wx * F(u) + w * sp.diff(F(u), u) * ux))


def test_mixed_partial_normalization():
    # multiset-normalized: delta/delta u_tx [v u_tx] = v
    utx = jet("u", "tx")
    assert same(higher_euler_operator(v * utx, utx), v)


def test_adjoint_systems():
    assert same(adjoint_system(wave_family())[0], wtt - F(u) * wxx - EPS * G(u) * wt)
    assert same(adjoint_system(linear_wave())[0], jet("v", "tt") - jet("v", "xx"))
    D = total_derivative
    expected = wtt - wxx - EPS * (D(u * w, t) + t * D(ut * w, t) - t * D(ux * w, x))
    assert same(adjoint_system(quadratic_perturbation())[0], expected)


def test_adjoint_is_linear_in_adjoint_variable():
    for sys in (wave_family(), quadratic_perturbation()):
        assert adjoint_degree_ok(adjoint_system(sys)[0].to_expr(), ["w"])


def test_euler_operator_returns_series_for_series_input():
    L = formal_lagrangian(wave_family()).value
    out = euler_operator(L, "u")
    assert isinstance(out, EpsSeries) and out.order == 1


def test_weighted_partial_shares_mixed_derivatives():
    from jetlaw.variational import weighted_partial
    utx = jet("u", "tx")
    assert weighted_partial(utx ** 2, "u", MultiIndex.from_letters("tx")) == utx
