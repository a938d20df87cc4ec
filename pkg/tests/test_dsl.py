import json

import pytest
import sympy as sp

from jetlaw.conservation import approx_conserved_vector, verify_conservation
from jetlaw.errors import DslError, InvalidSubstitution
from jetlaw.expr import EPS, jet, normalize
from jetlaw.dsl import (SCHEMA, declarations_of, deserialize_vector, dumps_vector, parse_ansatz, parse_document,
                        parse_expression, parse_generator, parse_system, print_ansatz, print_expression,
                        print_generator, print_system, serialize_vector)
from jetlaw.variational import adjoint_system

from wave_systems import (F, G, c, exponential_wave, exponential_wave_generator, f, g, t, u, ux, uxx,
                          wave_family, x)

WAVE_DECLS = "indep t x; dep u; func F(u), G(u); eps order 1;"
WAVE_TEXT = WAVE_DECLS + " eq W: u_tt - F'(u)*u_x^2 - F(u)*u_xx + eps*G(u)*u_t = 0 lead u_tt;"
LINEAR_DECLS = "indep t x; dep u; eps order 1;"


def test_parse_wave_family():
    sys = parse_system(WAVE_TEXT)
    ref = wave_family()
    assert sys.equations[0].e0 == ref.equations[0].e0
    assert sys.equations[0].e1 == ref.equations[0].e1
    assert [fn.name for fn in sys.functions] == ["F", "G"]


def test_parse_linear_wave():
    sys = parse_system(LINEAR_DECLS + " eq L: u_tt - u_xx = 0 lead u_tt;")
    assert sys.equations[0].e0 == jet("u", "tt") - uxx
    assert sys.equations[0].e1 == 0


def test_derivative_letters_are_order_insensitive():
    d = parse_document(LINEAR_DECLS).decls
    assert parse_expression("u_xt", d) == parse_expression("u_tx", d) == jet("u", "tx")


def test_leading_derivative_must_appear():
    with pytest.raises(DslError) as exc:
        parse_system(LINEAR_DECLS + "\neq B: u_t = 0 lead u_x;")
    assert exc.value.line == 2
    assert "absent" in str(exc.value)


@pytest.mark.parametrize("text, fragment", [
    ("indep t x; dep u; eq A: u_tt - q = 0 lead u_tt;", "undeclared"),
    ("indep t x; dep u; eq A: u_tt - u_xx = 0 lead u_tt; eq B: u_tt = 0 lead u_tt;", "duplicate"),
    ("indep t x; dep u; eps order 1; eq A: u_tt + eps^2*u = 0 lead u_tt;", "eps"),
    ("indep t x; dep u; eq A: u_tt - 0.5*u = 0 lead u_tt;", ""),
    ("indep t x; dep u; eq A: u_tt - (u = 0 lead u_tt;", ""),
    ("indep t x; dep u, u;", "twice"),
])
def test_errors_carry_position(text, fragment):
    with pytest.raises(DslError) as exc:
        parse_system(text)
    assert fragment in str(exc.value)
    assert exc.value.line is not None and exc.value.column is not None


def test_parse_generator():
    X = parse_generator("gen X: xi(x)=x, xi(t)=t + eps*(1/2)*t^2, eta(u)=eps*(-2*t);", LINEAR_DECLS)
    ref = exponential_wave_generator()
    for k in ref.xi:
        assert normalize(X.xi[k].to_expr() - ref.xi[k].to_expr()) == 0
    assert normalize(X.eta["u"].to_expr() + 2 * EPS * t) == 0


def test_parse_ansatz_with_side_conditions():
    decls = "indep t x; dep u; func f(x, t), g(x, t); const c1, c2; eps order 1;"
    a = parse_ansatz("subst w = c1*u + f(x,t) + eps*(c1*t*u + c2*u + g(x,t)) "
                     "satisfying f_tt - f_xx = 0, g_tt - g_xx = 0;", decls)
    expected = c[0] * u + f(x, t) + EPS * (c[0] * t * u + c[1] * u + g(x, t))
    assert normalize(a.images["w"].to_expr() - expected) == 0
    assert len(a.side_conditions) == 2
    assert {fn.name for fn in a.functions} == {"f", "g"}


def test_zero_ansatz_parses():
    assert parse_ansatz("subst w = 0;", LINEAR_DECLS).images["w"].is_zero()


def test_ansatz_rejects_derivatives():
    with pytest.raises((DslError, InvalidSubstitution)):
        parse_ansatz("subst w = u_x;", LINEAR_DECLS)


def test_print_expression():
    assert print_expression(normalize(ux * 2 + ux)) == "3*u_x"
    assert print_expression(0) == "0"
    adj = adjoint_system(parse_system(WAVE_TEXT))[0]
    assert print_expression(adj) == "w_tt - F(u)*w_xx - eps*G(u)*w_t"


def test_print_is_deterministic_and_reparses():
    d = declarations_of(wave_family())
    e = sp.Rational(3, 4) * t * u ** 2 - sp.diff(F(u), u) * ux ** 2 + EPS * G(u) * jet("u", "tx") - 7
    s = print_expression(e)
    assert s == print_expression(sp.expand(e))
    assert normalize(parse_expression(s, d) - e) == 0


def test_system_round_trip():
    sys = parse_system(WAVE_TEXT)
    again = parse_system(print_system(sys))
    assert print_system(again) == print_system(sys)
    assert again.equations[0].e0 == sys.equations[0].e0


def test_generator_and_ansatz_round_trip():
    X = exponential_wave_generator()
    Y = parse_generator(print_generator(X), LINEAR_DECLS)
    assert print_generator(Y) == print_generator(X)
    decls = "indep t x; dep u; const c1; eps order 1;"
    a = parse_ansatz("subst w = c1*t*x + eps*(1/2*c1*t^2*x);", decls)
    assert print_ansatz(parse_ansatz(print_ansatz(a), decls)) == print_ansatz(a)


def test_serialization_round_trip_and_verdict():
    sys = exponential_wave()
    T = approx_conserved_vector(sys, exponential_wave_generator(), x)
    rep = verify_conservation(T, sys, 1, seed=0)
    doc = serialize_vector(T, sys, rep, exponential_wave_generator())
    assert doc["schema"] == SCHEMA
    assert doc["verdict"] == "order-1-zero"
    text = dumps_vector(doc)
    assert text == dumps_vector(json.loads(text))
    T2, sys2 = deserialize_vector(json.loads(text))
    for k in T.components:
        assert normalize(T2.components[k].to_expr() - T.components[k].to_expr(), cap=None) == 0
    assert verify_conservation(T2, sys2, 1).verdict == "order-1-zero"


def test_serialization_rejects_unknown_schema():
    with pytest.raises(DslError):
        deserialize_vector({"schema": "other"})
