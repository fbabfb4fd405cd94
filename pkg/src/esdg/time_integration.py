"""Explicit time stepping: five-stage fourth-order low-storage Runge-Kutta.

The step size follows the CFL rule

    dt = CFL * min_k (dx_k/2)(dy_k/2) / ((N_max + 1) * lambda_max)

with lambda_max the largest directional wave speed over every node of the
domain, recomputed every step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import SolutionField
from .physics import PhysicsError

__all__ = ["LSRK54_A", "LSRK54_B", "LSRK54_C", "IntegrationError",
           "ObserverRecord", "cfl_dt", "lsrk54_step", "make_rhs", "integrate"]

# Carpenter-Kennedy 2N-storage coefficients (five stages, fourth order)
LSRK54_A = (
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
)
LSRK54_B = (
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
)
LSRK54_C = (
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363962896.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0,
)

_MIN_DT = 1e-14


class IntegrationError(Exception):
    """A time step failed; carries the simulation time and step index."""

    def __init__(self, message, time, step, stage=None):
        self.time = time
        self.step = step
        self.stage = stage
        super().__init__(f"{message} (t={time:.6g}, step {step})")


@dataclass
class ObserverRecord:
    step: int
    time: float
    total_entropy: float
    primary_growth: np.ndarray
    entropy_growth: float


def cfl_dt(disc, field: SolutionField, cfl: float) -> float:
    """Time step from the CFL rule; rejects quiescent (zero-speed) fields."""
    layout = field.layout
    lam_max = 0.0
    for n in layout.orders:
        lam_max = max(lam_max, float(np.max(
            disc.law.max_wave_speed(field.data[n]))))
    if not np.isfinite(lam_max) or lam_max <= 0.0:
        raise PhysicsError("wave speed vanished; CFL step undefined")
    min_cell = min(0.25 * e.dx * e.dy for e in disc.mesh.elements)
    return cfl * min_cell / ((disc.max_order + 1) * lam_max)


def lsrk54_step(field: SolutionField, dt: float, rhs, t: float = 0.0
                ) -> SolutionField:
    """Advance one step of u' = rhs(u, t) with the low-storage scheme.

    ``rhs(field, t)`` returns per-group arrays shaped like the field data.
    Uses exactly two field-sized registers (the state and the accumulator).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    u = field.copy()
    k = {n: np.zeros_like(a) for n, a in u.data.items()}
    for s in range(5):
        try:
            r = rhs(u, t + LSRK54_C[s] * dt)
        except PhysicsError as err:
            err.stage = s
            raise
        a, b = LSRK54_A[s], LSRK54_B[s]
        for n in u.data:
            ks = k[n]
            ks *= a
            ks += dt * r[n]
            u.data[n] += b * ks
    return u


def make_rhs(disc, coupling: str):
    """du/dt callback: -R/J nodewise for the chosen coupling."""
    inv_j = {n: -1.0 / disc.layout.jac[n][:, None, None, None]
             for n in disc.layout.orders}

    def rhs(field, t):
        res = disc.residual(field, coupling=coupling, t=t)
        return {n: res.data[n] * inv_j[n] for n in res.data}

    return rhs


def integrate(disc, field: SolutionField, t_end: float, cfl: float,
              coupling: str = "ec", observe_every: int = 0, observers=()):
    """March to ``t_end``, recomputing dt each step from the current field.

    Observer records are taken between steps (never inside stages) every
    ``observe_every`` steps plus at t = 0 and t_end; each record holds the
    instantaneous conservation diagnostics of the chosen coupling. A physics
    failure aborts with IntegrationError carrying the crash time.

    Returns:
        (final field, list of ObserverRecord).
    """
    from . import diagnostics

    if t_end < 0.0:
        raise ValueError("t_end must be non-negative")
    rhs = make_rhs(disc, coupling)
    records = []

    def observe(step, t, f):
        res = disc.residual(f, coupling=coupling, t=t)
        rec = ObserverRecord(
            step=step, time=t,
            total_entropy=diagnostics.total_entropy(disc.law, f),
            primary_growth=diagnostics.primary_growth(res),
            entropy_growth=diagnostics.entropy_growth(disc.law, f, res))
        records.append(rec)
        for cb in observers:
            cb(rec, f)

    t = 0.0
    step = 0
    observe(step, t, field)
    while t < t_end * (1.0 - 1e-14):
        try:
            dt = cfl_dt(disc, field, cfl)
        except PhysicsError as err:
            raise IntegrationError(str(err), time=t, step=step) from err
        dt = min(dt, t_end - t)
        if dt < _MIN_DT:
            raise IntegrationError("time step collapsed", time=t, step=step)
        try:
            field = lsrk54_step(field, dt, rhs, t)
        except PhysicsError as err:
            raise IntegrationError(str(err), time=t, step=step,
                                   stage=err.stage) from err
        t += dt
        step += 1
        if observe_every and step % observe_every == 0 and t < t_end:
            observe(step, t, field)
    if not records or records[-1].step != step:
        observe(step, t, field)
    return field, records
