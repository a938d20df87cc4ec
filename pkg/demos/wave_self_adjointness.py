"""Adjoint and self-adjointness tests for the perturbed wave family

    u_tt = (F(u) u_x)_x - eps G(u) u_t

Run:  python demos/wave_self_adjointness.py
"""

import sympy as sp

from jetlaw import (adjoint_system, check_ansa, check_nsa, lift_substitution, nsa_status_over_basis,
                    parse_ansatz, parse_system, print_ansatz, print_expression, shortcut_discriminate)

DECLS = "indep t x; dep u; func F(u), G(u); const c1, c2, c3, c4; eps order 1;"
wave = parse_system(DECLS + " eq W: u_tt - F'(u)*u_x^2 - F(u)*u_xx + eps*G(u)*u_t = 0 lead u_tt;")

# the adjoint is linear in w and does not involve F'
for F in adjoint_system(wave):
    print("adjoint:", print_expression(F), "= 0")

# unperturbed problem: any v linear in t, x and tx works
v = parse_ansatz("subst v = c1*t*x + c2*x + c3*t + c4;", DECLS)
print("NSA with", print_ansatz(v), "->", check_nsa(wave, v).holds)

# shifting it to the eps slot gives an ANSA substitution for free
lifted = lift_substitution(wave, v)
print("lifted:", print_ansatz(lifted), "-> ANSA", check_ansa(wave, lifted).holds)

# a family that also uses the zeroth slot
w = parse_ansatz("subst w = c1*x + c2 + eps*(c3*t*x + c4*x);", DECLS)
rep = check_ansa(wave, w)
print("ANSA with", print_ansatz(w), "->", rep.holds)
for name, table in rep.multipliers.items():
    print(f"  {name} = {print_expression(table[(0, 0)])}")

# the shortcut decides ANSA from the unperturbed analysis alone
t, x = sp.symbols("t x")
status = nsa_status_over_basis(wave, [1, x, t, t * x])
verdict = shortcut_discriminate(wave, status)
print("shortcut verdict:", verdict.verdict, "with", print_ansatz(verdict.lifted))
