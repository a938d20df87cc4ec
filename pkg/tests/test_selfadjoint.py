import pytest
import sympy as sp

from jetlaw.errors import InvalidSubstitution, LiftRejected, NonlinearInUnknowns, TrivialSubstitution
from jetlaw.expr import EPS, jet, normalize
from jetlaw.jet import FunctionSig, PdeEquation, PdeSystem
from jetlaw.selfadjoint import (ANSA_NO, ANSA_YES, INCONCLUSIVE, NsaStatus, SideConditions, SubstitutionAnsatz,
                                check_ansa, check_nsa, determining_system, distinct_term_criterion,
                                equivalent_systems, generic_ansatz, lift_substitution, nsa_status_over_basis,
                                same_family, shortcut_discriminate, solve_finite_ansatz)

from wave_systems import (ONE, R, F, G, c, damped_linear_wave, f, g, h, linear_wave, quadratic_perturbation,
                          short_pulse, t, u, ux, variable_damping, wave_family, wave_side, x)

UNIT_DAMPING_FAMILY = (c[0] * t * x + c[1] * x + c[2] * t + c[3]
             + EPS * (c[0] * t ** 2 * x / 2 + c[4] * t * x + c[5] * x + c[2] * t ** 2 / 2 + c[6] * t + c[7]))
EQUAL_COEFFICIENT_FAMILY = (c[0] * t * x + c[1] * x + c[2] * t + c[3]
             + EPS * (c[4] * x * t + c[5] * t - c[0] * x ** 3 / 6 - c[2] * x ** 2 / 2 + c[6] * x + c[7]))
LINEAR_TX = c[0] * t * x + c[1] * x + c[2] * t + c[3]


# -- checkNSA / checkANSA ----------------------------------------------------

def test_nsa_wave_family_linear_substitution():
    rep = check_nsa(wave_family(), LINEAR_TX)
    assert rep.holds and rep.multipliers["lambda"][(0, 0)] == 0


def test_nsa_linear_wave_with_u():
    rep = check_nsa(linear_wave(), u)
    assert rep.holds
    assert rep.multipliers["lambda"][(0, 0)] == 1


def test_nsa_trivial_substitution():
    with pytest.raises(TrivialSubstitution):
        check_nsa(linear_wave(), 0)


def test_nsa_fails_for_nonlinear_F():
    rep = check_nsa(wave_family(), u)
    assert not rep.holds


def test_ansa_unit_damping_family():
    assert check_ansa(wave_family().specialize({"G": ONE}), UNIT_DAMPING_FAMILY).holds


def test_ansa_damped_linear_wave():
    rep = check_ansa(damped_linear_wave(), u + EPS * t * u)
    assert rep.holds
    assert rep.multipliers["lambda"][(0, 0)] == 1
    assert rep.multipliers["mu"][(0, 0)] == t


def test_ansa_any_F_G():
    w = c[0] * x + c[1] + EPS * (c[2] * t * x + c[3] * x + c[4] * t + c[5])
    assert check_ansa(wave_family(), w).holds


def test_ansa_equal_coefficients():
    assert check_ansa(wave_family().specialize({"G": F}), EQUAL_COEFFICIENT_FAMILY).holds


def test_ansa_quadratic_perturbation_family():
    w = c[0] * u + f(x, t) + EPS * (R(3, 4) * c[0] * t * u ** 2 + t * f(x, t) * u / 2 + g(x, t))
    rep = check_ansa(quadratic_perturbation(), w, [wave_side(f), wave_side(g)])
    assert rep.holds
    assert rep.multipliers["lambda"][(0, 0)] == c[0]
    assert normalize(rep.multipliers["mu"][(0, 0)] - (c[0] * t * u / 2 - t * f(x, t) / 2)) == 0


def test_ansa_residual_reported():
    rep = check_ansa(damped_linear_wave(), c[0] * u + f(x, t) + EPS * (c[0] * t * u + c[1] * u + g(x, t)),
                     [wave_side(f), wave_side(g)])
    assert not rep.holds
    assert normalize(rep.residual["W"].grade(1) + sp.diff(f(x, t), t)) == 0


def test_ansa_side_condition_coupled():
    side = [wave_side(f), wave_side(g) - sp.diff(f(x, t), t)]
    assert check_ansa(damped_linear_wave(), c[0] * u + f(x, t) + EPS * (c[0] * t * u + c[1] * u + g(x, t)), side).holds


def test_ansa_variable_damping_families():
    side = [wave_side(h)]
    printed = f(x) * t + g(x) + EPS * (c[1] * u + h(x, t))
    rep = check_ansa(variable_damping(), printed, side)
    assert not rep.holds
    r = rep.residual["W"]
    assert normalize(r.grade(0) + t * sp.diff(f(x), x, 2) + sp.diff(g(x), x, 2)) == 0
    assert normalize(r.grade(1) + G(u) * f(x)) == 0
    assert check_ansa(variable_damping(), c[2] * x + c[3] + EPS * (c[1] * u + h(x, t)), side).holds


def test_substitution_rejects_derivatives():
    with pytest.raises(InvalidSubstitution):
        SubstitutionAnsatz({"w": ux})


def test_side_conditions_rewrite_highest_derivative():
    # ties go to the first argument of f(x, t)
    sc = SideConditions([wave_side(f)], (t, x))
    assert sc.reduce(sp.diff(f(x, t), x, 2)) == sp.diff(f(x, t), t, 2)
    assert sc.reduce(sp.diff(f(x, t), x, 3)) == sp.diff(f(x, t), t, t, x)
    assert sc.reduce(sp.diff(f(x, t), t, 2)) == sp.diff(f(x, t), t, 2)


# -- determining systems ------------------------------------------------------

def _printed_wave_system():
    a = (t, x, u)
    psi, phi, lam, mu = (sp.Function(n)(*a) for n in ("psi", "phi", "lambda", "mu"))
    d = sp.diff
    Fu, Gu = F(u), G(u)
    return [lam * d(Fu, u), mu * d(Fu, u), d(psi, u, 2), d(psi, t, u), d(psi, x, u), d(phi, u) - mu,
            d(phi, u, 2), d(phi, x, u), d(psi, u) - lam, d(psi, t, 2) - Fu * d(psi, x, 2),
            d(phi, t, u) - lam * Gu, d(phi, t, 2) - Fu * d(phi, x, 2) - Gu * d(psi, t)]


UNKNOWNS = ["psi", "phi", "lambda", "mu"]


def test_determining_system_wave_family():
    ds = determining_system(wave_family())
    assert equivalent_systems(ds.equations, _printed_wave_system(), UNKNOWNS, [t, x, u])


def test_determining_system_detects_difference():
    printed = _printed_wave_system()
    broken = printed[:-1] + [sp.diff(sp.Function("phi")(t, x, u), t, 2)]
    ds = determining_system(wave_family())
    assert not equivalent_systems(ds.equations, broken, UNKNOWNS, [t, x, u])


def test_determining_system_linear_wave():
    psi = FunctionSig("psi", (t, x))
    ans = SubstitutionAnsatz({"v": psi()}, functions=(psi,), order=1)
    ds = determining_system(linear_wave(), ans, eliminate=True, perturbed=False)
    assert len(ds.equations) == 1
    expected = sp.diff(psi(), t, 2) - sp.diff(psi(), x, 2)
    assert normalize(ds.equations[0] - expected) == 0 or normalize(ds.equations[0] + expected) == 0
    ds = determining_system(linear_wave(), ans, perturbed=False)
    assert set(map(str, ds.multipliers)) == {"lambda(t, x, u)"}
    assert len(ds.equations) == 2


def test_solve_finite_ansatz_recovers_unit_damping_family():
    sys = wave_family().specialize({"G": ONE})
    ans = generic_ansatz(sys)
    ds = determining_system(sys, ans, eliminate=True)
    basis = [1, x, t, t * x, t ** 2, t ** 2 * x]
    fam = solve_finite_ansatz(ds, {"psi": basis, "phi": basis})
    assert fam.dimension == 8
    assert same_family(fam.ansatz.images, fam.parameters, {"w": UNIT_DAMPING_FAMILY}, c)


def test_solve_finite_ansatz_recovers_equal_coefficient_family():
    sys = wave_family().specialize({"G": F})
    ds = determining_system(sys, generic_ansatz(sys), eliminate=True)
    basis = [1, x, t, t * x, x ** 2, x ** 3]
    fam = solve_finite_ansatz(ds, {"psi": basis, "phi": basis})
    assert same_family(fam.ansatz.images, fam.parameters, {"w": EQUAL_COEFFICIENT_FAMILY}, c)


def test_solve_finite_ansatz_constants_on_linear_wave():
    status = nsa_status_over_basis(linear_wave(), [1])
    assert status.holds and status.phi == {"v": 1}


def test_same_family_detects_different_span():
    assert not same_family({"w": c[0] * x}, [c[0]], {"w": c[0] * t}, [c[0]])


def test_solve_finite_ansatz_needs_multiplier_basis():
    ds = determining_system(linear_wave(), perturbed=False)
    with pytest.raises(ValueError):
        solve_finite_ansatz(ds, {"psi": [1]})


def test_solve_finite_ansatz_nonlinear():
    psi = FunctionSig("psi", (t, x, u))
    k = sp.Symbol("k")
    ans = SubstitutionAnsatz({"v": k * psi()}, constants=(k,), functions=(psi,), order=1)
    ds = determining_system(linear_wave(), ans, eliminate=True, perturbed=False)
    with pytest.raises(NonlinearInUnknowns):
        solve_finite_ansatz(ds, {"psi": [t ** 2, x ** 2]})


# -- lifting and the shortcut ------------------------------------------------

def test_lift_substitution():
    lifted = lift_substitution(wave_family(), LINEAR_TX)
    assert lifted.images["w"].grade(0) == 0
    assert lifted.images["w"].grade(1) == LINEAR_TX
    assert check_ansa(wave_family(), lifted).holds


def test_lift_linear_wave_u():
    lifted = lift_substitution(damped_linear_wave(), u)
    assert lifted.images["w"].to_expr() == EPS * u
    assert check_ansa(damped_linear_wave(), lifted).holds


def test_lift_rejects():
    with pytest.raises(LiftRejected):
        lift_substitution(wave_family(), 0)
    with pytest.raises(LiftRejected):
        lift_substitution(wave_family(), u)


def _three_component(identical: bool) -> PdeSystem:
    U, V = jet("u"), jet("v")
    common = V * jet("u", "x") + U * jet("w", "x")
    if identical:
        eqs = (PdeEquation("E1", jet("u", "t") + common, 0, jet("u", "t")),
               PdeEquation("E2", jet("u", "t") + common, 0, jet("u", "x")),
               PdeEquation("E3", jet("u", "t") + common, 0, jet("w", "x")))
    else:
        eqs = (PdeEquation("E1", jet("u", "t") + common, 0, jet("u", "t")),
               PdeEquation("E2", jet("v", "t") + common, 0, jet("v", "t")),
               PdeEquation("E3", jet("w", "t") + common, 0, jet("w", "t")))
    return PdeSystem((t, x), ("u", "v", "w"), eqs, eps_order=0)


def test_distinct_term_criterion():
    assert distinct_term_criterion(_three_component(False))
    assert not distinct_term_criterion(_three_component(True))
    assert distinct_term_criterion(wave_family())


def test_shortcut_verdicts():
    yes = shortcut_discriminate(wave_family(), NsaStatus(True, {"v": LINEAR_TX}))
    assert yes.verdict == ANSA_YES and check_ansa(wave_family(), yes.lifted).holds
    no = shortcut_discriminate(short_pulse().with_eps_order(1), NsaStatus(False, family="phi(x, t, u)"))
    assert no.verdict == ANSA_NO
    guard = shortcut_discriminate(_three_component(True), NsaStatus(False))
    assert guard.verdict == INCONCLUSIVE


def test_short_pulse_is_not_self_adjoint_over_polynomials():
    basis = [x ** i * t ** j * u ** k for i in range(3) for j in range(3) for k in range(3)]
    status = nsa_status_over_basis(short_pulse(), basis)
    assert not status.holds
