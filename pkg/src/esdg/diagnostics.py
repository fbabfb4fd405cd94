"""Measured quantities: conservation growth rates, entropy, errors, EOC.

Growth diagnostics contract the instantaneous spatial residual; they never
difference states in time. Reductions run in a fixed group/element order so
machine-precision-scale reports are reproducible.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dg import InterfaceFluxSet
from .field import Residual, SolutionField
from .quadrature import lgl_rule

__all__ = [
    "primary_growth",
    "entropy_growth",
    "total_entropy",
    "l2_error",
    "interface_entropy_balance",
    "interface_primary_balance",
    "EOCTable",
    "eoc_table",
    "write_timeseries_csv",
    "write_eoc_csv",
    "write_ensemble_csv",
    "ensemble_rms",
]


def primary_growth(res: Residual) -> np.ndarray:
    """Domain growth rate of each conserved quantity, -sum w_i w_j R_ij.

    The element Jacobians cancel against the residual definition, so the
    result approximates d/dt of the conserved integrals directly.
    """
    layout = res.layout
    out = np.zeros(layout.n_vars)
    for n in layout.orders:
        w = lgl_rule(n).weights
        out -= np.einsum("i,j,kijq->q", w, w, res.data[n])
    return out


def entropy_growth(law, field: SolutionField, res: Residual) -> float:
    """Domain entropy growth rate, -sum w_i w_j V_ij . R_ij."""
    layout = res.layout
    total = 0.0
    for n in layout.orders:
        w = lgl_rule(n).weights
        v = law.entropy_vars(field.data[n])
        total -= float(np.einsum("i,j,kijq,kijq->", w, w, v, res.data[n]))
    return total


def total_entropy(law, field: SolutionField) -> float:
    """Quadrature of the entropy function over the domain."""
    layout = field.layout
    total = 0.0
    for n in layout.orders:
        w = lgl_rule(n).weights
        s = law.entropy(field.data[n])
        total += float(np.einsum("k,i,j,kij->", layout.jac[n], w, w, s))
    return total


def l2_error(law, field: SolutionField, exact_fn, t: float) -> float:
    """Discrete L2 error against ``exact_fn(x, y, t)``, all variables pooled."""
    layout = field.layout
    total = 0.0
    for n in layout.orders:
        w = lgl_rule(n).weights
        ref = exact_fn(layout.node_x[n], layout.node_y[n], t)
        diff = field.data[n] - ref
        total += float(np.einsum("k,i,j,kijq->",
                                 layout.jac[n], w, w, diff * diff))
    return float(np.sqrt(total))


def _side_sign(side) -> float:
    # plus-side edges enter the global growth with +, minus-side with -
    return 1.0 if side.plus_side else -1.0


def interface_entropy_balance(law, flux_set: InterfaceFluxSet) -> float:
    """Entropy growth rate attributed to a single interface.

    Sums (extent/2) * (<V, f*> - <1, psi>) over the touching edges, signed by
    the side each element occupies. Zero for entropy-conservative couplings,
    non-positive for the dissipative one.
    """
    total = 0.0
    for side in flux_set.sides:
        w = lgl_rule(side.order).weights
        v = law.entropy_vars(side.trace)
        psi = law.flux_potential(side.trace, flux_set.axis)
        val = float(np.einsum("j,jq,jq->", w, v, side.flux)
                    - np.einsum("j,j->", w, psi))
        total += _side_sign(side) * 0.5 * side.extent * val
    return total


def interface_primary_balance(law, flux_set: InterfaceFluxSet) -> np.ndarray:
    """Per-equation growth attributed to one interface (zero when conservative)."""
    total = np.zeros(law.n_vars)
    for side in flux_set.sides:
        w = lgl_rule(side.order).weights
        val = np.einsum("j,jq->q", w, side.flux)
        total += _side_sign(side) * 0.5 * side.extent * val
    return total


@dataclass
class EOCTable:
    """Rows of (degrees of freedom, L2 error, experimental order)."""

    dofs: list
    errors: list
    rates: list

    def rows(self):
        return list(zip(self.dofs, self.errors, self.rates))


def eoc_table(dofs, errors) -> EOCTable:
    """Convergence rates from successive refinements.

    The rate between rows uses the DOF count, scaled by the spatial dimension:
    rate = 2 log(e_prev / e) / log(dofs / dofs_prev), matching quadrisection
    level conventions. Scale-invariant in the errors.
    """
    dofs = [int(d) for d in dofs]
    errors = [float(e) for e in errors]
    if any(b <= a for a, b in zip(dofs, dofs[1:])):
        raise ValueError("DOF counts must increase strictly")
    rates = [float("nan")]
    for k in range(1, len(errors)):
        rates.append(2.0 * np.log(errors[k - 1] / errors[k])
                     / np.log(dofs[k] / dofs[k - 1]))
    return EOCTable(dofs=dofs, errors=errors, rates=rates)


def _write_csv(path, header, rows, metadata=None):
    with open(path, "w", newline="") as fh:
        for key, value in (metadata or {}).items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_timeseries_csv(path, records, metadata=None):
    """Time series of total entropy and growth rates from observer records."""
    if records:
        n_vars = len(records[0].primary_growth)
    else:
        n_vars = 0
    header = ["step", "t", "total_entropy"] \
        + [f"primary_growth_{q + 1}" for q in range(n_vars)] \
        + ["entropy_growth"]
    rows = [[r.step, repr(r.time), repr(r.total_entropy)]
            + [repr(float(g)) for g in r.primary_growth]
            + [repr(r.entropy_growth)] for r in records]
    _write_csv(path, header, rows, metadata)


def write_eoc_csv(path, table: EOCTable, metadata=None):
    rows = [[d, repr(e), "" if np.isnan(r) else f"{r:.3f}"]
            for d, e, r in table.rows()]
    _write_csv(path, ["dofs", "l2_error", "eoc"], rows, metadata)


def write_ensemble_csv(path, trials, metadata=None):
    """Per-trial conservation diagnostics plus closing RMS rows.

    ``trials`` is a list of (seed, primary_growth vector, entropy_growth).
    """
    n_vars = len(trials[0][1]) if trials else 0
    header = ["seed"] + [f"primary_growth_{q + 1}" for q in range(n_vars)] \
        + ["entropy_growth"]
    rows = [[seed] + [repr(float(g)) for g in pg] + [repr(float(sg))]
            for seed, pg, sg in trials]
    _write_csv(path, header, rows, metadata)


def ensemble_rms(trials):
    """(RMS primary growth per equation, RMS entropy growth) of an ensemble."""
    pg = np.array([t[1] for t in trials])
    sg = np.array([t[2] for t in trials])
    return np.sqrt(np.mean(pg * pg, axis=0)), float(np.sqrt(np.mean(sg * sg)))
