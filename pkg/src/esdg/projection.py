"""Mass-compatible projection operator pairs for non-conforming interfaces.

A pair couples a "fine" nodal distribution (one sub-edge, order N_L) with a
"coarse" one (the full edge, order N_R). The two directions are tied together
by the scaled compatibility condition

    delta_L * P_fine^T * M_L = delta_R * M_R * P_coarse,

which reduces to ``P_fine^T M_L = M_R P_coarse`` when the extents match.
Compatibility is what lets interface dissipation terms telescope into a
negative-definite quadratic form, so it holds here by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import gauss_legendre_rule, interpolation_matrix, lgl_rule

__all__ = [
    "InterfaceGeometry",
    "ProjectionPair",
    "build_p_pair",
    "build_h_pairs",
    "compatibility_residual",
]


@dataclass(frozen=True)
class InterfaceGeometry:
    """Geometry of one interface edge: a coarse edge tiled by fine sub-edges.

    Extents are physical lengths; offsets locate each sub-edge start relative
    to the coarse edge start. A conforming or purely order-mismatched edge is
    the special case of a single sub-edge spanning the full extent.
    """

    coarse_order: int
    coarse_extent: float
    fine_orders: tuple
    fine_extents: tuple
    fine_offsets: tuple

    def __post_init__(self):
        if self.sub_count < 1:
            raise ValueError("interface needs at least one sub-edge")
        if any(d <= 0 for d in self.fine_extents) or self.coarse_extent <= 0:
            raise ValueError("degenerate sub-edge: extents must be positive")
        tol = 1e-12 * self.coarse_extent
        pos = 0.0
        for off, ext in zip(self.fine_offsets, self.fine_extents):
            if abs(off - pos) > tol:
                raise ValueError("sub-edges must be contiguous and ordered")
            pos += ext
        if abs(pos - self.coarse_extent) > tol:
            raise ValueError("sub-edges must tile the coarse edge exactly")

    @property
    def sub_count(self) -> int:
        return len(self.fine_orders)


@dataclass(frozen=True)
class ProjectionPair:
    """Operator pair for one (sub-edge, coarse edge) coupling.

    Attributes:
        to_coarse: (N_R+1) x (N_L+1), moves fine-side nodal data to the
            coarse distribution.
        to_fine: (N_L+1) x (N_R+1), moves coarse-side nodal data to the
            fine distribution. Preserves constants exactly.
        fine_order / coarse_order: the two polynomial degrees.
        extent_ratio: delta_L / delta_R (1.0 for matching extents).
    """

    to_coarse: np.ndarray
    to_fine: np.ndarray
    fine_order: int
    coarse_order: int
    extent_ratio: float = 1.0


def _lumped_projection(low_order: int, high_order: int) -> np.ndarray:
    """Discrete L2 projection from the high LGL distribution onto the low one.

    This is the mortar back-projection M_low^{-1} L^T M_high with L the
    interpolation matrix from low to high nodes. Together with L it forms a
    compatible pair under the diagonal norms.
    """
    low, high = lgl_rule(low_order), lgl_rule(high_order)
    L = interpolation_matrix(low, high.nodes)
    return (L * high.weights[:, None]).T / low.weights[:, None]


def build_p_pair(order_fine: int, order_coarse: int) -> ProjectionPair:
    """Pair coupling two LGL distributions on the same geometric edge.

    The lower-order side is moved to the (hidden) mortar of maximal order by
    interpolation; the return direction is the discrete L2 projection
    ``M^{-1} L^T M_mortar``; the higher-order side copies. Composing gives
    direct element-to-element operators.
    """
    if order_fine < 1 or order_coarse < 1:
        raise ValueError("orders must be >= 1")
    if order_fine == order_coarse:
        eye = np.eye(order_fine + 1)
        return ProjectionPair(eye, eye.copy(), order_fine, order_coarse)
    if order_fine < order_coarse:
        up = interpolation_matrix(lgl_rule(order_fine), lgl_rule(order_coarse).nodes)
        down = _lumped_projection(order_fine, order_coarse)
        return ProjectionPair(to_coarse=up, to_fine=down,
                              fine_order=order_fine, coarse_order=order_coarse)
    up = interpolation_matrix(lgl_rule(order_coarse), lgl_rule(order_fine).nodes)
    down = _lumped_projection(order_coarse, order_fine)
    return ProjectionPair(to_coarse=down, to_fine=up,
                          fine_order=order_fine, coarse_order=order_coarse)


def _restriction_l2(order_fine: int, order_coarse: int,
                    a: float, b: float) -> np.ndarray:
    """Exact L2 projection of coarse-edge polynomials onto one sub-edge.

    The coarse polynomial is restricted through the affine map of the
    sub-interval [a, b] of the coarse reference edge and projected onto the
    degree-``order_fine`` space in the sub-edge's own coordinate. All inner
    products use Gauss-Legendre quadrature exact for the integrands, so the
    result is the analytic projection up to rounding.
    """
    fine, coarse = lgl_rule(order_fine), lgl_rule(order_coarse)
    nq = order_fine + order_coarse + 1
    xq, wq = gauss_legendre_rule(nq)
    # fine basis and restricted coarse basis sampled at the quadrature points
    PF = interpolation_matrix(fine, xq)                     # (nq, NL+1)
    xi = 0.5 * (a + b) + 0.5 * (b - a) * xq                 # sub -> coarse coord
    PC = interpolation_matrix(coarse, xi)                   # (nq, NR+1)
    gram = PF.T @ (wq[:, None] * PF)
    rhs = PF.T @ (wq[:, None] * PC)
    return np.linalg.solve(gram, rhs)


def build_h_pairs(geom: InterfaceGeometry) -> list:
    """Build one compatible pair per sub-edge of a hanging-node interface.

    ``to_fine`` is the exact restriction-projection primitive; ``to_coarse``
    is then defined through the scaled compatibility condition, so the pair
    satisfies it identically.
    """
    coarse = lgl_rule(geom.coarse_order)
    pairs = []
    pos = 0.0
    for order_fine, ext in zip(geom.fine_orders, geom.fine_extents):
        ratio = ext / geom.coarse_extent
        a = -1.0 + 2.0 * pos / geom.coarse_extent
        b = a + 2.0 * ratio
        if geom.sub_count == 1 and order_fine == geom.coarse_order:
            to_fine = np.eye(order_fine + 1)
        else:
            to_fine = _restriction_l2(order_fine, geom.coarse_order, a, b)
        fine = lgl_rule(order_fine)
        to_coarse = ratio * (to_fine * fine.weights[:, None]).T / coarse.weights[:, None]
        pairs.append(ProjectionPair(to_coarse=to_coarse, to_fine=to_fine,
                                    fine_order=order_fine,
                                    coarse_order=geom.coarse_order,
                                    extent_ratio=ratio))
        pos += ext
    return pairs


def compatibility_residual(pair: ProjectionPair,
                           m_fine: np.ndarray, m_coarse: np.ndarray,
                           delta_fine: float, delta_coarse: float) -> float:
    """Max-norm of delta_L P_fine^T M_L - delta_R M_R P_coarse."""
    lhs = delta_fine * pair.to_fine.T @ m_fine
    rhs = delta_coarse * m_coarse @ pair.to_coarse
    return float(np.max(np.abs(lhs - rhs)))
