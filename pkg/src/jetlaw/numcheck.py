"""Finite-difference drift test for approximate conservation laws of the wave family.

Solves u_tt = (F(u) u_x)_x - eps*G(u)*u_t on a periodic grid over [0, 2*pi]
with a second-order leapfrog scheme and tracks Q(t) = integral of a density.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from .dsl import Declarations, parse_expression
from .errors import InconclusiveRefine, Unstable
from .expr import EPS, jet

_T, _X = sp.symbols("t x")


def _one(u):
    return np.ones_like(u)


INITIAL_DATA = {
    "sine": (lambda x: np.sin(x), lambda x: np.zeros_like(x)),
    "gaussian": (lambda x: np.exp(-4.0 * (x - np.pi) ** 2), lambda x: np.zeros_like(x)),
}


@dataclass
class SimConfig:
    F: Callable = _one
    G: Callable = _one
    eps: float = 0.0
    N: int = 512
    cfl: float = 0.5
    t_final: float = 10.0
    u0: Callable = INITIAL_DATA["sine"][0]
    v0: Callable = INITIAL_DATA["sine"][1]
    nonlinear: bool = False

    def __post_init__(self):
        if self.N < 4 or self.N & (self.N - 1):
            raise ValueError("N must be a power of two")
        if self.nonlinear and self.cfl > 0.5:
            raise Unstable(f"cfl factor {self.cfl} exceeds 0.5 for a nonlinear flux")

    def with_(self, **kw) -> "SimConfig":
        d = dict(self.__dict__)
        d.update(kw)
        return SimConfig(**d)


@dataclass
class Simulation:
    x: np.ndarray
    dx: float
    dt: float
    times: np.ndarray
    levels: list

    def u_t(self, n: int) -> np.ndarray:
        return (self.levels[n + 1] - self.levels[n - 1]) / (2 * self.dt)

    def u_x(self, n: int) -> np.ndarray:
        u = self.levels[n]
        return (np.roll(u, -1) - np.roll(u, 1)) / (2 * self.dx)


def _flux_divergence(u, F, dx):
    up = np.roll(u, -1)
    flux = F(0.5 * (u + up)) * (up - u) / dx
    return (flux - np.roll(flux, 1)) / dx


def simulate(cfg: SimConfig) -> Simulation:
    """Leapfrog with periodic boundaries; the damping term is treated semi-implicitly."""
    N = cfg.N
    dx = 2 * np.pi / N
    x = dx * np.arange(N)
    u0, v0 = cfg.u0(x), cfg.v0(x)
    speed = np.sqrt(np.max(np.abs(cfg.F(u0))))
    if cfg.cfl > 1:
        raise Unstable(f"cfl factor {cfg.cfl} > 1")
    dt = cfg.cfl * dx / max(speed, 1e-12)
    steps = int(np.ceil(cfg.t_final / dt))
    dt = cfg.t_final / steps
    eps = cfg.eps
    prev = u0
    g0 = cfg.G(u0)
    cur = u0 + dt * v0 + 0.5 * dt ** 2 * (_flux_divergence(u0, cfg.F, dx) - eps * g0 * v0)
    levels = [prev, cur]
    for _ in range(steps):
        c = np.max(np.abs(cfg.F(cur))) * dt ** 2 / dx ** 2
        if c > 1:
            raise Unstable(f"CFL number {np.sqrt(c):.3f} exceeded 1 during the run")
        damp = 0.5 * eps * cfg.G(cur) * dt
        nxt = (2 * cur - prev * (1 - damp) + dt ** 2 * _flux_divergence(cur, cfg.F, dx)) / (1 + damp)
        if not np.all(np.isfinite(nxt)):
            raise Unstable("solution blew up")
        prev, cur = cur, nxt
        levels.append(cur)
    times = dt * np.arange(len(levels))
    return Simulation(x, dx, dt, times, levels)


def density_function(density, dep: str = "u"):
    """Vectorized evaluator of a density in (t, x, u, u_t, u_x, eps)."""
    u, ut, ux = jet(dep), jet(dep, "t"), jet(dep, "x")
    if isinstance(density, str):
        expr = parse_expression(density, Declarations(["t", "x"], [dep], {}, [], 1))
    elif hasattr(density, "to_expr"):
        expr = density.to_expr()
    else:
        expr = sp.sympify(density)
    extra = {s for s in expr.free_symbols} - {_T, _X, u, ut, ux, EPS}
    if extra:
        raise ValueError(f"density depends on {sorted(map(str, extra))}; only t, x, u, u_t, u_x allowed")
    f = sp.lambdify((_T, _X, u, ut, ux, EPS), expr, "numpy")
    return lambda t, x, uu, uut, uux, eps: np.broadcast_to(f(t, x, uu, uut, uux, eps), x.shape)


def conserved_quantity(sim: Simulation, density, eps: float, flux=None) -> tuple[np.ndarray, np.ndarray]:
    """Q(t) on the grid; with a flux, adds the time integral of T^x(2*pi) - T^x(0).

    The correction matters only when T^x depends explicitly on x, so that the
    periodic grid no longer cancels it.
    """
    f = density_function(density) if not callable(density) else density
    g = None if flux is None else (density_function(flux) if not callable(flux) else flux)
    ends = np.array([0.0, 2 * np.pi])
    ts, qs, bs = [], [], []
    for n in range(1, len(sim.levels) - 1):
        t = sim.times[n]
        uu, uut, uux = sim.levels[n], sim.u_t(n), sim.u_x(n)
        at = (np.array([uu[0], uu[0]]), np.array([uut[0], uut[0]]), np.array([uux[0], uux[0]]))
        # trapezoid end correction; zero when the density is periodic in x
        fe = f(t, ends, *at, eps)
        ts.append(t)
        qs.append((np.sum(f(t, sim.x, uu, uut, uux, eps)) + 0.5 * (fe[1] - fe[0])) * sim.dx)
        if g is not None:
            b = g(t, ends, *at, eps)
            bs.append(b[1] - b[0])
    q = np.array(qs)
    if g is not None:
        bs = np.array(bs)
        q = q + np.concatenate([[0.0], np.cumsum(0.5 * (bs[1:] + bs[:-1]) * sim.dt)])
    return np.array(ts), q


def drift(sim: Simulation, density, eps: float, flux=None) -> float:
    _, q = conserved_quantity(sim, density, eps, flux)
    return float(np.max(np.abs(q - q[0])))


@dataclass
class DriftRecord:
    eps_values: list
    drifts: list
    ratios: list
    grid: list
    discretization_error: list
    passed: bool
    window: tuple = (3.0, 5.0)
    notes: list = field(default_factory=list)


def measured_drift(cfg: SimConfig, density, max_grid: int = 4096, floor_factor: float = 0.1, flux=None):
    """Drift at the coarsest grid whose Richardson error estimate is below floor_factor * eps^2."""
    f = density_function(density)
    g = None if flux is None else density_function(flux)
    N = cfg.N
    coarse = drift(simulate(cfg.with_(N=N // 2)), f, cfg.eps, g)
    while True:
        fine = drift(simulate(cfg.with_(N=N)), f, cfg.eps, g)
        err = abs(fine - coarse) / 3.0
        if err < floor_factor * cfg.eps ** 2:
            return fine, err, N
        if N * 2 > max_grid:
            raise InconclusiveRefine(
                f"discretization error {err:.3g} above {floor_factor} eps^2 = {floor_factor * cfg.eps ** 2:.3g} "
                f"at N = {N}")
        coarse, N = fine, N * 2


def drift_scaling(density, template: SimConfig, eps_list: Sequence[float] = (0.2, 0.1, 0.05),
                  window=(3.0, 5.0), max_grid: int = 4096, flux=None) -> DriftRecord:
    """Drift for successive halvings of eps; an O(eps^2) law gives ratios near 4."""
    drifts, errs, grids = [], [], []
    for e in eps_list:
        d, err, N = measured_drift(template.with_(eps=e), density, max_grid, flux=flux)
        drifts.append(d)
        errs.append(err)
        grids.append(N)
    ratios = [drifts[k] / drifts[k + 1] if drifts[k + 1] > 0 else float("inf") for k in range(len(drifts) - 1)]
    ok = all(window[0] <= r <= window[1] for r in ratios)
    return DriftRecord(list(eps_list), drifts, ratios, grids, errs, ok, tuple(window))


def drift_floor(density, template: SimConfig, eps_list: Sequence[float] = (0.2, 0.1, 0.05), flux=None) -> list:
    """(eps, drift at N, drift at N/2) triples for laws expected to hold exactly."""
    f = density_function(density)
    g = None if flux is None else density_function(flux)
    out = []
    for e in eps_list:
        cfg = template.with_(eps=e)
        out.append((e, drift(simulate(cfg), f, e, g), drift(simulate(cfg.with_(N=cfg.N // 2)), f, e, g)))
    return out


def energy_drift(cfg: SimConfig) -> float:
    """Relative change of the discrete energy for the linear undamped wave."""
    sim = simulate(cfg)
    ut, ux = jet("u", "t"), jet("u", "x")
    _, q = conserved_quantity(sim, ut ** 2 / 2 + ux ** 2 / 2, cfg.eps)
    return float(np.max(np.abs(q - q[0])) / abs(q[0]))


DAMPED_ENERGY_TEXT = "1/2*u_t^2 + 1/2*u_x^2 + 1/2*eps*(t*u_t^2 + u*u_t + t*u_x^2)"
DAMPED_CONTROL_TEXT = "1/2*u_t^2 + 1/2*u_x^2 + 1/2*eps*(t*u_t^2 + t*u_x^2)"
