"""Numerical drift of the approximate energy of u_tt - u_xx + eps u_t = 0.

The density 1/2 u_t^2 + 1/2 u_x^2 + 1/2 eps (t u_t^2 + u u_t + t u_x^2) has a
divergence of order eps^2, so halving eps should cut the drift of its integral
by about 4. That holds while eps*t is small. By t = 10 the neglected terms,
which grow like (eps t)^2, are no longer small for eps = 0.2 and the ratios
drop. Dropping the u u_t term gives an O(eps) law with ratios near 2.

Run:  python demos/damped_energy_drift.py
"""

from jetlaw.numcheck import DAMPED_CONTROL_TEXT, DAMPED_ENERGY_TEXT, SimConfig, drift_scaling

EPS_LIST = (0.2, 0.1, 0.05)

for t_final in (1.0, 10.0):
    cfg = SimConfig(N=512, t_final=t_final)
    for label, density in (("law", DAMPED_ENERGY_TEXT), ("control", DAMPED_CONTROL_TEXT)):
        rec = drift_scaling(density, cfg, EPS_LIST)
        drifts = ", ".join(f"{d:.2e}" for d in rec.drifts)
        ratios = ", ".join(f"{r:.2f}" for r in rec.ratios)
        window = "inside" if rec.passed else "outside"
        print(f"t_final={t_final:<5} {label:8} drift [{drifts}]  ratios {ratios}  ({window} [3, 5])")
