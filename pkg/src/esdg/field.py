"""Solution storage: per-element nodal tensors batched by polynomial order.

Elements sharing an order are stacked into one contiguous array of shape
(K, N+1, N+1, n_vars), indexed (element slot, xi node, eta node, variable).
Index (i, j) addresses the tensor-product node (xi_i, eta_j). Batching by
order is what keeps the residual evaluation vectorized on mixed-order meshes.
"""

from __future__ import annotations

import numpy as np

from .quadrature import lgl_rule

__all__ = ["ElementLayout", "SolutionField", "Residual"]


class ElementLayout:
    """Order-grouped storage layout plus nodal geometry for a mesh.

    Attributes:
        orders: sorted distinct polynomial orders present in the mesh.
        group_ids: order -> list of element ids in slot order.
        slot_of: element id -> (order, slot).
        dx, dy, jac: order -> (K,) geometric arrays per group.
        node_x, node_y: order -> (K, N+1, N+1) physical node coordinates.
    """

    def __init__(self, mesh, n_vars: int):
        self.mesh = mesh
        self.n_vars = n_vars
        self.orders = sorted({e.order for e in mesh.elements})
        self.group_ids = {n: [] for n in self.orders}
        self.slot_of = {}
        for e in mesh.elements:
            ids = self.group_ids[e.order]
            self.slot_of[e.id] = (e.order, len(ids))
            ids.append(e.id)
        self.dx = {}
        self.dy = {}
        self.jac = {}
        self.node_x = {}
        self.node_y = {}
        for n, ids in self.group_ids.items():
            els = [mesh.elements[i] for i in ids]
            self.dx[n] = np.array([e.dx for e in els])
            self.dy[n] = np.array([e.dy for e in els])
            self.jac[n] = np.array([e.jacobian for e in els])
            xi = lgl_rule(n).nodes
            x1 = np.array([e.x1 for e in els])
            y1 = np.array([e.y1 for e in els])
            gx = x1[:, None] + 0.5 * (xi + 1.0)[None, :] * self.dx[n][:, None]
            gy = y1[:, None] + 0.5 * (xi + 1.0)[None, :] * self.dy[n][:, None]
            self.node_x[n] = np.broadcast_to(
                gx[:, :, None], (len(els), n + 1, n + 1)).copy()
            self.node_y[n] = np.broadcast_to(
                gy[:, None, :], (len(els), n + 1, n + 1)).copy()

    def zeros(self):
        return {n: np.zeros((len(ids), n + 1, n + 1, self.n_vars))
                for n, ids in self.group_ids.items()}


class SolutionField:
    """Conserved-state nodal values over a whole mesh."""

    def __init__(self, layout: ElementLayout, data: dict):
        self.layout = layout
        self.data = data

    @classmethod
    def zeros(cls, layout: ElementLayout):
        return cls(layout, layout.zeros())

    @classmethod
    def from_conserved_function(cls, layout: ElementLayout, fn):
        """Collocate ``fn(x, y) -> (..., n_vars)`` at every node."""
        data = {}
        for n in layout.orders:
            data[n] = np.ascontiguousarray(
                fn(layout.node_x[n], layout.node_y[n]), dtype=float)
        return cls(layout, data)

    @classmethod
    def from_primitive_function(cls, layout: ElementLayout, law, fn):
        return cls.from_conserved_function(
            layout, lambda x, y: law.conserved(fn(x, y)))

    def element_values(self, eid: int) -> np.ndarray:
        """(N+1, N+1, n_vars) view of one element's nodal values."""
        n, k = self.layout.slot_of[eid]
        return self.data[n][k]

    def copy(self):
        return type(self)(self.layout,
                          {n: a.copy() for n, a in self.data.items()})


class Residual(SolutionField):
    """Spatial-operator output R with J * dU/dt + R = 0 nodewise."""
