"""Approximate conservation law for u_tt = (e^u u_x)_x - eps u_t.

The scaling X0 = t d/dt + x d/dx is a symmetry of the unperturbed equation.
Its eps-correction X1 is found from the auxiliary function H, and the pair
together with the substitution w = x yields a conserved vector whose
divergence vanishes up to eps^2.

Run:  python demos/exponential_wave_law.py
"""

from jetlaw import (approx_conserved_vector, check_approx_symmetry, cosmetic, parse_document, print_expression,
                    verify_conservation)

doc = parse_document("""
indep t x; dep u; eps order 1;
eq W: u_tt - exp(u)*u_x^2 - exp(u)*u_xx + eps*u_t = 0 lead u_tt;
gen X: xi(x)=x, xi(t)=t + eps*(1/2)*t^2, eta(u)=eps*(-2*t);
subst w = x;
""")
sys, X, w = doc.system(), doc.generator(), doc.substitution()

sym = check_approx_symmetry(X, sys)
print("approximate symmetry:", sym.holds)
print("  H =", print_expression(sym.H["W"]))
for note in sym.notes:
    print("  note:", note)

T = approx_conserved_vector(sys, X, w)
rep = verify_conservation(T, sys, 1, seed=0)
print("verdict:", rep.verdict)
print("  divergence on solutions:", print_expression(rep.residual))

# on-shell cleanup and integration by parts bring it to a short form
for var, comp in cosmetic(T, sys).components.items():
    print(f"T^{var} =", print_expression(comp))
