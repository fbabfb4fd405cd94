"""Legendre-Gauss-Lobatto quadrature and diagonal-norm SBP operators.

Every element of the solver collocates on LGL nodes, so the mass/derivative
matrix pair (M, D) satisfies the summation-by-parts identity
``Q + Q^T = B`` with ``Q = M D`` and ``B = diag(-1, 0, ..., 0, 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "LGLRule",
    "SBPOperators",
    "lgl_rule",
    "lagrange_eval",
    "interpolation_matrix",
    "build_sbp",
    "sbp_operators",
    "gauss_legendre_rule",
    "dump_operators_csv",
]


@dataclass(frozen=True)
class LGLRule:
    """One-dimensional LGL quadrature rule on [-1, 1].

    Attributes:
        order: polynomial degree N (the rule has N+1 nodes).
        nodes: ascending nodes, nodes[0] = -1 and nodes[-1] = +1.
        weights: positive quadrature weights summing to 2.
        bary_weights: barycentric interpolation weights for the nodes.
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray
    bary_weights: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.order + 1


def _legendre_and_derivative(n: int, x: np.ndarray):
    """Evaluate P_n and P_n' with the three-term recurrence."""
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    # P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1); endpoints handled by callers
    with np.errstate(divide="ignore", invalid="ignore"):
        dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


def _barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / np.prod(diff, axis=1)
    # normalize to tame the dynamic range; barycentric formulas are scale-free
    return w / np.max(np.abs(w))


@lru_cache(maxsize=None)
def lgl_rule(order: int) -> LGLRule:
    """Build the LGL rule of degree ``order``.

    Interior nodes are the roots of P_N', found by Newton iteration from
    Chebyshev-Gauss-Lobatto initial guesses and converged to 1e-15; nodes and
    weights are symmetrized afterwards. The rule integrates polynomials of
    degree <= 2N-1 exactly.

    Raises:
        ValueError: if order < 1 (a single-node rule has no Lobatto structure).
    """
    if order < 1:
        raise ValueError(f"LGL rule requires order >= 1, got {order}")
    n = order
    if n == 1:
        nodes = np.array([-1.0, 1.0])
        weights = np.array([1.0, 1.0])
    else:
        nodes = -np.cos(np.pi * np.arange(n + 1) / n)
        for _ in range(100):
            p, dp = _legendre_and_derivative(n, nodes)
            # Newton on g = P_n'; g' from the Legendre ODE:
            # (1-x^2) P'' = 2 x P' - n(n+1) P
            interior = slice(1, n)
            xi = nodes[interior]
            ddp = (2 * xi * dp[interior] - n * (n + 1) * p[interior]) / (1 - xi * xi)
            step = dp[interior] / ddp
            nodes[interior] -= step
            if np.max(np.abs(step)) < 1e-15:
                break
        p, _ = _legendre_and_derivative(n, nodes)
        weights = 2.0 / (n * (n + 1) * p * p)
        nodes[0], nodes[-1] = -1.0, 1.0
        nodes = 0.5 * (nodes - nodes[::-1])
        weights = 0.5 * (weights + weights[::-1])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    bw = _barycentric_weights(nodes)
    bw.setflags(write=False)
    return LGLRule(order=n, nodes=nodes, weights=weights, bary_weights=bw)


def lagrange_eval(rule: LGLRule, j: int, x: float) -> float:
    """Value of the j-th Lagrange basis polynomial of ``rule`` at ``x``.

    Uses the second barycentric form, which is exactly the Kronecker delta at
    the nodes and sums to one over j for any x.
    """
    return float(interpolation_matrix(rule, np.atleast_1d(float(x)))[0, j])


def interpolation_matrix(rule: LGLRule, targets: np.ndarray) -> np.ndarray:
    """Matrix L with L[i, j] = l_j(targets[i]) via barycentric interpolation.

    Rows sum to one identically (second barycentric form), so interpolation
    preserves constants to the last bit.
    """
    targets = np.asarray(targets, dtype=float)
    diff = targets[:, None] - rule.nodes[None, :]
    exact = np.isclose(diff, 0.0, rtol=0.0, atol=1e-15)
    diff = np.where(exact, 1.0, diff)
    terms = rule.bary_weights[None, :] / diff
    mat = terms / np.sum(terms, axis=1, keepdims=True)
    hit = exact.any(axis=1)
    if np.any(hit):
        mat[hit] = np.where(exact[hit], 1.0, 0.0)
    return mat


@dataclass(frozen=True)
class SBPOperators:
    """Diagonal-norm SBP operator set collocated on an LGL rule.

    Attributes:
        rule: the underlying quadrature rule.
        M: diagonal mass matrix diag(weights).
        D: dense nodal differentiation matrix, D[i, j] = l_j'(nodes[i]).
        Q: M @ D; satisfies Q + Q^T = B.
        B: boundary matrix diag(-1, 0, ..., 0, 1).
    """

    rule: LGLRule
    M: np.ndarray
    D: np.ndarray
    Q: np.ndarray
    B: np.ndarray

    @property
    def order(self) -> int:
        return self.rule.order

    @property
    def nodes(self) -> np.ndarray:
        return self.rule.nodes

    @property
    def weights(self) -> np.ndarray:
        return self.rule.weights


@lru_cache(maxsize=None)
def build_sbp(order: int) -> SBPOperators:
    """Construct the SBP operator set for polynomial degree ``order``.

    The derivative matrix uses barycentric differentiation with the
    negative-sum trick for the diagonal, which keeps D exact on degree-N
    polynomials to near machine precision.
    """
    rule = lgl_rule(order)
    x, bw = rule.nodes, rule.bary_weights
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    D = (bw[None, :] / bw[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -np.sum(D, axis=1))
    M = np.diag(rule.weights)
    Q = rule.weights[:, None] * D
    B = np.zeros((order + 1, order + 1))
    B[0, 0] = -1.0
    B[-1, -1] = 1.0
    for a in (D, M, Q, B):
        a.setflags(write=False)
    return SBPOperators(rule=rule, M=M, D=D, Q=Q, B=B)


def sbp_operators(order: int) -> SBPOperators:
    """Cached registry access; operators are immutable after construction."""
    return build_sbp(order)


def gauss_legendre_rule(n_points: int):
    """Interior Gauss-Legendre rule on [-1, 1], exact to degree 2n-1."""
    return np.polynomial.legendre.leggauss(n_points)


def dump_operators_csv(ops: SBPOperators, path) -> None:
    """Write nodes, weights and D to a CSV file with 17 significant digits."""
    n = ops.order + 1
    with open(path, "w") as fh:
        fh.write("row," + ",".join(f"c{j}" for j in range(n)) + "\n")
        fh.write("nodes," + ",".join(f"{v:.17g}" for v in ops.nodes) + "\n")
        fh.write("weights," + ",".join(f"{v:.17g}" for v in ops.weights) + "\n")
        for i in range(n):
            fh.write(f"D{i}," + ",".join(f"{v:.17g}" for v in ops.D[i]) + "\n")
