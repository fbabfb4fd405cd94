"""Split-form DGSEM residual on h/p non-conforming meshes.

The semi-discrete scheme per node (i, j) of an element is

    J dU/dt + R = 0,
    R = surface corrections / M_ii  +  2 sum_m D_im Ft#(U_ij, U_mj)
                                    +  2 sum_m D_jm Gt#(U_ij, U_im),

with contravariant two-point volume fluxes Ft# = (dy/2) f#, Gt# = (dx/2) g#.
Volume fluxes are always the law's entropy-conservative flux; the surface
coupling is selectable:

  * ``ec``          diagonal extraction of projected pairwise EC-flux
                    matrices; conserves primaries and entropy.
  * ``es``          ``ec`` plus interface dissipation on projected
                    entropy-variable jumps; conserves primaries, dissipates
                    entropy.
  * ``mortar``      classical mortar: project solutions to an intermediate
                    edge space, flux there, project back. Conserves
                    primaries, makes no entropy statement.
  * ``mortar-diss`` mortar with local Lax-Friedrichs dissipation on the
                    mortar.

Interfaces of identical shape (axis, orders, extent ratios) are batched, and
per-node quantities (entropy variables, wave speeds, physical fluxes) are
computed once per order group, so a residual evaluation is a short sequence
of vectorized array operations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import ElementLayout, Residual, SolutionField
from .mesh import Mesh
from .physics import ConservationLaw, PhysicsError
from .projection import ProjectionPair, build_h_pairs, build_p_pair
from .quadrature import interpolation_matrix, lgl_rule, sbp_operators

__all__ = ["COUPLINGS", "Discretization", "SideFlux", "InterfaceFluxSet",
           "residual"]

COUPLINGS = ("ec", "es", "mortar", "mortar-diss")


# ---------------------------------------------------------------------------
# gather / scatter plumbing

@dataclass
class _Side:
    """One side of an interface batch: where to gather and scatter.

    ``edge`` holds the node index of the edge along the interface axis (0 or
    N) per interface, so one batch may mix both orientations; ``sign`` is +1
    for edges at the element's max coordinate (they enter the residual with
    a plus) and -1 otherwise.
    """

    order: int
    slots: np.ndarray        # (B,) element slots in the order group
    edge: np.ndarray         # (B,) 0 or N, edge node index along the axis
    sign: np.ndarray         # (B,) +1 at-max edges, -1 at-min edges
    extent: np.ndarray       # (B,) physical edge lengths
    coeff: np.ndarray        # (B,) signed (extent/2) / w_end scatter scaling

    def take(self, ctx, name, axis):
        arr = ctx[self.order][name]
        if axis == 0:
            return arr[self.slots, self.edge]
        return arr[self.slots, :, self.edge]


@dataclass
class _ConformingBatch:
    axis: int
    order: int
    minus: _Side
    plus: _Side
    iface_idx: np.ndarray


@dataclass
class _PairBatch:
    """E = 1 with mismatched orders; fine on the minus side, coarse on plus."""

    axis: int
    fine: _Side
    coarse: _Side
    pair: ProjectionPair
    mortar: tuple            # (up_fine, down_fine, up_coarse, down_coarse)
    iface_idx: np.ndarray


@dataclass
class _MortarSub:
    """Mortar operators for one sub-edge of a hanging interface."""

    up_fine: np.ndarray          # fine trace -> mortar nodes
    down_fine: np.ndarray        # mortar flux -> fine trace
    restrict_coarse: np.ndarray  # coarse trace -> mortar nodes
    back_coarse: np.ndarray      # mortar flux -> coarse contribution (scaled)


@dataclass
class _HangingBatch:
    axis: int
    sigma: np.ndarray        # (B,) +1 when the coarse element is on the
    coarse: _Side            # plus side; orients the dissipation jump
    fines: list
    pairs: list
    mortar_subs: list
    iface_idx: np.ndarray


@dataclass
class _BoundaryBatch:
    axis: int
    order: int
    side: _Side
    at_max: bool             # True: ghost sits on the plus side of the element
    x: np.ndarray            # (B, n) edge node coordinates
    y: np.ndarray


@dataclass
class SideFlux:
    """Numerical flux received by one element edge of an interface."""

    element_id: int
    plus_side: bool          # element sits on the positive side of the axis
    order: int
    extent: float
    flux: np.ndarray         # (n+1, n_vars) in the interface normal direction
    trace: np.ndarray        # (n+1, n_vars) the element's own edge states


@dataclass
class InterfaceFluxSet:
    interface_index: int
    axis: int
    sides: list


def _half_over_w(order, extent):
    w_end = lgl_rule(order).weights[0]
    return 0.5 * np.asarray(extent) / w_end


class Discretization:
    """Precomputed operators and interface batches for one mesh and law.

    Immutable once built; ``residual`` is pure and safe to call concurrently.

    Args:
        mesh: the (validated) mesh.
        law: conservation law providing fluxes and the entropy machinery.
        exact_solution: ``fn(x, y, t) -> conserved`` used for ghost states on
            Dirichlet boundary edges; required when the mesh has any.
        lambda_policy: 'interface' (one dissipation rate per interface,
            default) or 'nodewise'.
    """

    def __init__(self, mesh: Mesh, law: ConservationLaw, exact_solution=None,
                 lambda_policy: str = "interface"):
        if lambda_policy not in ("interface", "nodewise"):
            raise ValueError(f"unknown lambda policy '{lambda_policy}'")
        self.mesh = mesh
        self.law = law
        self.exact_solution = exact_solution
        self.lambda_policy = lambda_policy
        self.layout = ElementLayout(mesh, law.n_vars)
        self.ops = {n: sbp_operators(n) for n in self.layout.orders}
        self.max_order = max(self.layout.orders)
        self._batches = self._group_interfaces(range(len(mesh.interfaces)))
        self._boundary = self._group_boundary()
        if self.mesh.boundary_edges and exact_solution is None:
            raise ValueError("mesh has Dirichlet edges; exact_solution required")

    # -- batch construction ---------------------------------------------------

    def _side(self, elem_ids, axis, at_max):
        ids = list(elem_ids)
        order = self.mesh.elements[ids[0]].order
        slots = np.array([self.layout.slot_of[i][1] for i in ids])
        extent = np.array([self.mesh.elements[i].dy if axis == 0
                           else self.mesh.elements[i].dx for i in ids])
        at_max = np.broadcast_to(at_max, (len(ids),))
        sign = np.where(at_max, 1.0, -1.0)
        return _Side(order=order, slots=slots,
                     edge=np.where(at_max, order, 0),
                     sign=sign, extent=extent,
                     coeff=sign * _half_over_w(order, extent))

    def _group_interfaces(self, indices):
        buckets = {}
        for idx in indices:
            iface = self.mesh.interfaces[idx]
            g = iface.geometry
            if iface.kind == "h":
                ratios = tuple(round(e / g.coarse_extent, 12)
                               for e in g.fine_extents)
                key = ("h", iface.axis, g.coarse_order, g.fine_orders, ratios)
            elif iface.kind == "p":
                key = ("p", iface.axis, g.fine_orders[0], g.coarse_order)
            else:
                key = ("c", iface.axis, g.coarse_order)
            buckets.setdefault(key, []).append(idx)
        batches = []
        for key in sorted(buckets, key=repr):
            idxs = buckets[key]
            ifaces = [self.mesh.interfaces[i] for i in idxs]
            kind, axis = key[0], key[1]
            iface_idx = np.array(idxs)
            if kind == "c":
                # conforming: the minus element is the fine slot iff the
                # coarse one sits on the plus side
                minus_ids = [f.fine_ids[0] if f.coarse_on_plus else f.coarse_id
                             for f in ifaces]
                plus_ids = [f.coarse_id if f.coarse_on_plus else f.fine_ids[0]
                            for f in ifaces]
                batches.append(_ConformingBatch(
                    axis=axis, order=key[2],
                    minus=self._side(minus_ids, axis, at_max=True),
                    plus=self._side(plus_ids, axis, at_max=False),
                    iface_idx=iface_idx))
            elif kind == "p":
                pair = build_p_pair(key[2], key[3])
                batches.append(_PairBatch(
                    axis=axis,
                    fine=self._side([f.fine_ids[0] for f in ifaces], axis,
                                    at_max=True),
                    coarse=self._side([f.coarse_id for f in ifaces], axis,
                                      at_max=False),
                    pair=pair,
                    mortar=_p_mortar_ops(key[2], key[3]),
                    iface_idx=iface_idx))
            else:
                geom = ifaces[0].geometry
                pairs = build_h_pairs(geom)
                coarse_on_plus = np.array([f.coarse_on_plus for f in ifaces])
                fines = [self._side([f.fine_ids[i] for f in ifaces], axis,
                                    at_max=coarse_on_plus)
                         for i in range(geom.sub_count)]
                batches.append(_HangingBatch(
                    axis=axis, sigma=np.where(coarse_on_plus, 1.0, -1.0),
                    coarse=self._side([f.coarse_id for f in ifaces], axis,
                                      at_max=~coarse_on_plus),
                    fines=fines, pairs=pairs,
                    mortar_subs=_h_mortar_ops(geom),
                    iface_idx=iface_idx))
        return batches

    def _group_boundary(self):
        buckets = {}
        for eid, side in self.mesh.boundary_edges:
            order = self.mesh.elements[eid].order
            buckets.setdefault((side, order), []).append(eid)
        batches = []
        for (side, order) in sorted(buckets):
            ids = buckets[(side, order)]
            axis = 0 if side in ("W", "E") else 1
            at_max = side in ("E", "N")
            sref = self._side(ids, axis, at_max=at_max)
            nodes = lgl_rule(order).nodes
            els = [self.mesh.elements[i] for i in ids]
            if axis == 0:
                x = np.array([[e.x2 if at_max else e.x1] * (order + 1)
                              for e in els])
                y = np.array([e.y1 + 0.5 * (nodes + 1) * e.dy for e in els])
            else:
                x = np.array([e.x1 + 0.5 * (nodes + 1) * e.dx for e in els])
                y = np.array([[e.y2 if at_max else e.y1] * (order + 1)
                              for e in els])
            batches.append(_BoundaryBatch(axis=axis, order=order, side=sref,
                                          at_max=at_max, x=x, y=y))
        return batches

    # -- residual evaluation ----------------------------------------------------

    def residual(self, field: SolutionField, coupling: str = "ec",
                 t: float = 0.0) -> Residual:
        """Evaluate R with the chosen interface coupling at time ``t``."""
        if coupling not in COUPLINGS:
            raise ValueError(f"unknown coupling '{coupling}'")
        law = self.law
        dissipative = coupling in ("es", "mortar-diss")
        out = {}
        ctx = {}
        for n in self.layout.orders:
            u = field.data[n]
            self._check_group(u, n)
            aux = law.ec_aux(u)
            group = {"U": u, "aux": aux,
                     0: law.flux(u, 0), 1: law.flux(u, 1)}
            if dissipative:
                group["V"] = law.entropy_vars_aux(aux)
                group["speed0"] = law.wave_speed_aux(aux, 0)
                group["speed1"] = law.wave_speed_aux(aux, 1)
            ctx[n] = group
            out[n] = self._volume_group(u, aux, n)
        for batch in self._batches:
            for side, fstar in self._batch_fluxes(batch, ctx, coupling):
                self._scatter(out, ctx, side, fstar, batch.axis)
        for batch in self._boundary:
            side, fstar = self._boundary_flux(batch, ctx, coupling, t)
            self._scatter(out, ctx, side, fstar, batch.axis)
        return Residual(self.layout, out)

    def _check_group(self, u, n):
        idx = self.law.admissibility_violation(u)
        if idx is not None:
            eid = self.layout.group_ids[n][idx[0]]
            raise PhysicsError(self.law.describe_violation(u, idx),
                               element=eid, node=idx[1:])

    def _volume_group(self, u, aux, n, two_point_flux=None):
        law = self.law
        ops = self.ops[n]
        dy = self.layout.dy[n][:, None, None, None]
        dx = self.layout.dx[n][:, None, None, None]
        if two_point_flux is None:
            fused = law.volume_fluxes(aux, ops.D)
            if fused is not None:
                vx, vy = fused
                return vx * (0.5 * dy) + vy * (0.5 * dx)
            fm = law.ec_flux_aux(aux[:, :, None, :, :], aux[:, None, :, :, :], 0)
            gm = law.ec_flux_aux(aux[:, :, :, None, :], aux[:, :, None, :, :], 1)
        else:
            fm = two_point_flux(u[:, :, None, :, :], u[:, None, :, :, :], 0)
            gm = two_point_flux(u[:, :, :, None, :], u[:, :, None, :, :], 1)
        vx = np.einsum("im,kimjq->kijq", ops.D, fm)
        vy = np.einsum("jm,kijmq->kijq", ops.D, gm)
        return vx * dy + vy * dx   # 2 * (delta/2) folds the factors together

    def volume_terms(self, field: SolutionField, two_point_flux=None) -> dict:
        """Split-form volume contribution alone (no surface corrections).

        ``two_point_flux(u_a, u_b, axis)`` overrides the law's EC flux; any
        consistent symmetric flux keeps the scheme conservative.
        """
        out = {}
        for n in self.layout.orders:
            u = field.data[n]
            aux = self.law.ec_aux(u) if two_point_flux is None else None
            out[n] = self._volume_group(u, aux, n, two_point_flux)
        return out

    def _scatter(self, out, ctx, side: _Side, fstar, axis):
        fphys = side.take(ctx, axis, axis)
        corr = side.coeff[:, None, None] * (fstar - fphys)
        arr = out[side.order]
        if axis == 0:
            arr[side.slots, side.edge] += corr
        else:
            arr[side.slots, :, side.edge] += corr

    # -- interface numerical fluxes ---------------------------------------------

    def _lambda_factor(self, speeds):
        """Dissipation factor broadcastable against (B, n, M) jumps.

        Default policy: half the largest wave speed over every node of the
        interface. The nodewise policy keeps per-node rates on the first
        side's distribution and still uses one rate for the remaining sides,
        which preserves the conservation and sign arguments.
        """
        if self.lambda_policy == "interface":
            lam = speeds[0].max(axis=1)
            for s in speeds[1:]:
                lam = np.maximum(lam, s.max(axis=1))
            return 0.5 * lam[:, None, None]
        lam = speeds[0]
        for s in speeds[1:]:
            if s.shape == lam.shape:
                lam = np.maximum(lam, s)
            else:
                lam = np.maximum(lam, s.max(axis=1, keepdims=True))
        return 0.5 * lam[:, :, None]

    def _batch_fluxes(self, batch, ctx, coupling):
        """Numerical flux vectors for every side of one interface batch."""
        dissipative = coupling in ("es", "mortar-diss")
        if isinstance(batch, _ConformingBatch):
            return self._conforming_fluxes(batch, ctx, dissipative)
        if coupling in ("mortar", "mortar-diss"):
            if isinstance(batch, _PairBatch):
                return self._mortar_pair_fluxes(batch, ctx, dissipative)
            return self._mortar_hanging_fluxes(batch, ctx, dissipative)
        if isinstance(batch, _PairBatch):
            return self._pair_fluxes(batch, ctx, dissipative)
        return self._hanging_fluxes(batch, ctx, dissipative)

    def _conforming_fluxes(self, batch, ctx, dissipative):
        axis = batch.axis
        a_m = batch.minus.take(ctx, "aux", axis)
        a_p = batch.plus.take(ctx, "aux", axis)
        fstar = self.law.ec_flux_aux(a_m, a_p, axis)
        if dissipative:
            speed = f"speed{axis}"
            jump = batch.plus.take(ctx, "V", axis) \
                - batch.minus.take(ctx, "V", axis)
            lam = self._lambda_factor((batch.minus.take(ctx, speed, axis),
                                       batch.plus.take(ctx, speed, axis)))
            fstar = fstar - 0.5 * lam * jump
        return [(batch.minus, fstar), (batch.plus, fstar)]

    def _pair_fluxes(self, batch, ctx, dissipative):
        axis = batch.axis
        a_f = batch.fine.take(ctx, "aux", axis)
        a_c = batch.coarse.take(ctx, "aux", axis)
        fm = self.law.ec_flux_aux(a_f[:, :, None, :], a_c[:, None, :, :], axis)
        p = batch.pair
        f_fine = np.einsum("ab,xabm->xam", p.to_fine, fm)
        f_coarse = np.einsum("ba,xabm->xbm", p.to_coarse, fm)
        if dissipative:
            speed = f"speed{axis}"
            v_f = batch.fine.take(ctx, "V", axis)
            v_c = batch.coarse.take(ctx, "V", axis)
            d = np.einsum("ab,xbm->xam", p.to_fine, v_c) - v_f
            lam = self._lambda_factor((batch.fine.take(ctx, speed, axis),
                                       batch.coarse.take(ctx, speed, axis)))
            # coarse element sits on the plus side, so the geometric jump
            # equals d on the fine nodes
            f_fine = f_fine - 0.5 * lam * d
            f_coarse = f_coarse - 0.5 * np.einsum(
                "ba,xam->xbm", p.to_coarse, lam * d)
        return [(batch.fine, f_fine), (batch.coarse, f_coarse)]

    def _hanging_fluxes(self, batch, ctx, dissipative):
        axis = batch.axis
        speed = f"speed{axis}"
        a_c = batch.coarse.take(ctx, "aux", axis)
        f_coarse = None
        out = []
        if dissipative:
            v_c = batch.coarse.take(ctx, "V", axis)
            lam = self._lambda_factor(
                [batch.coarse.take(ctx, speed, axis)]
                + [s.take(ctx, speed, axis) for s in batch.fines])
            sigma = batch.sigma[:, None, None]
        for side, pair in zip(batch.fines, batch.pairs):
            a_f = side.take(ctx, "aux", axis)
            fm = self.law.ec_flux_aux(a_f[:, :, None, :], a_c[:, None, :, :],
                                      axis)
            f_fine = np.einsum("ab,xabm->xam", pair.to_fine, fm)
            part = np.einsum("ba,xabm->xbm", pair.to_coarse, fm)
            if dissipative:
                d = np.einsum("ab,xbm->xam", pair.to_fine, v_c) \
                    - side.take(ctx, "V", axis)
                lam_f = lam if lam.shape[1] in (1, d.shape[1]) \
                    else lam.max(axis=1, keepdims=True)
                sl = sigma * lam_f
                f_fine = f_fine - 0.5 * sl * d
                part = part - 0.5 * np.einsum(
                    "ba,xam->xbm", pair.to_coarse, sl * d)
            out.append((side, f_fine))
            f_coarse = part if f_coarse is None else f_coarse + part
        out.append((batch.coarse, f_coarse))
        return out

    @staticmethod
    def _apply(mat, arr):
        if mat is None:
            return arr
        return np.einsum("ab,xbm->xam", mat, arr)

    def _mortar_admissible(self, u, batch):
        idx = self.law.admissibility_violation(u)
        if idx is not None:
            iface = int(batch.iface_idx[idx[0]])
            eid = self.mesh.interfaces[iface].coarse_id
            raise PhysicsError("projected mortar state inadmissible: "
                               + self.law.describe_violation(u, idx),
                               element=eid, node=idx[1:])

    def _mortar_lambda(self, aux_sides, axis):
        law = self.law
        speeds = [law.wave_speed_aux(a, axis) for a in aux_sides]
        return self._lambda_factor(speeds)

    def _mortar_pair_fluxes(self, batch, ctx, dissipative):
        law = self.law
        axis = batch.axis
        up_f, down_f, up_c, down_c = batch.mortar
        u_m = self._apply(up_f, batch.fine.take(ctx, "U", axis))
        u_p = self._apply(up_c, batch.coarse.take(ctx, "U", axis))
        self._mortar_admissible(u_m, batch)
        self._mortar_admissible(u_p, batch)
        a_m, a_p = law.ec_aux(u_m), law.ec_aux(u_p)
        fstar = law.ec_flux_aux(a_m, a_p, axis)
        if dissipative:
            jump = law.entropy_vars_aux(a_p) - law.entropy_vars_aux(a_m)
            fstar = fstar - 0.5 * self._mortar_lambda((a_m, a_p), axis) * jump
        return [(batch.fine, self._apply(down_f, fstar)),
                (batch.coarse, self._apply(down_c, fstar))]

    def _mortar_hanging_fluxes(self, batch, ctx, dissipative):
        law = self.law
        axis = batch.axis
        tr_c = batch.coarse.take(ctx, "U", axis)
        sigma = batch.sigma[:, None, None]
        f_coarse = None
        out = []
        for side, sub in zip(batch.fines, batch.mortar_subs):
            u_f = self._apply(sub.up_fine, side.take(ctx, "U", axis))
            u_c = self._apply(sub.restrict_coarse, tr_c)
            self._mortar_admissible(u_f, batch)
            self._mortar_admissible(u_c, batch)
            a_f, a_c = law.ec_aux(u_f), law.ec_aux(u_c)
            fstar = law.ec_flux_aux(a_f, a_c, axis)
            if dissipative:
                jump = sigma * (law.entropy_vars_aux(a_c)
                                - law.entropy_vars_aux(a_f))
                fstar = fstar - 0.5 * self._mortar_lambda((a_f, a_c),
                                                          axis) * jump
            out.append((side, self._apply(sub.down_fine, fstar)))
            part = np.einsum("ab,xbm->xam", sub.back_coarse, fstar)
            f_coarse = part if f_coarse is None else f_coarse + part
        out.append((batch.coarse, f_coarse))
        return out

    def _boundary_flux(self, batch, ctx, coupling, t):
        law = self.law
        ghost = np.ascontiguousarray(
            self.exact_solution(batch.x, batch.y, t), dtype=float)
        a_tr = batch.side.take(ctx, "aux", batch.axis)
        a_gh = law.ec_aux(ghost)
        fstar = law.ec_flux_aux(a_tr, a_gh, batch.axis)
        if coupling in ("es", "mortar-diss"):
            v_tr = law.entropy_vars_aux(a_tr)
            v_gh = law.entropy_vars_aux(a_gh)
            jump = (v_gh - v_tr) if batch.at_max else (v_tr - v_gh)
            lam = self._mortar_lambda((a_tr, a_gh), batch.axis)
            fstar = fstar - 0.5 * lam * jump
        return batch.side, fstar

    # -- per-interface view (diagnostics and tests) -------------------------------

    def interface_flux_set(self, field: SolutionField, index: int,
                           coupling: str = "ec") -> InterfaceFluxSet:
        """Numerical fluxes of one interface, one entry per element edge."""
        if coupling not in COUPLINGS:
            raise ValueError(f"unknown coupling '{coupling}'")
        (batch,) = self._group_interfaces([index])
        law = self.law
        ctx = {}
        for n in self.layout.orders:
            u = field.data[n]
            aux = law.ec_aux(u)
            ctx[n] = {"U": u, "aux": aux, 0: law.flux(u, 0),
                      1: law.flux(u, 1), "V": law.entropy_vars_aux(aux),
                      "speed0": law.wave_speed_aux(aux, 0),
                      "speed1": law.wave_speed_aux(aux, 1)}
        sides = self._batch_fluxes(batch, ctx, coupling)
        iface = self.mesh.interfaces[index]
        entries = []
        for sref, fstar in sides:
            eid = self.layout.group_ids[sref.order][int(sref.slots[0])]
            entries.append(SideFlux(
                element_id=eid,
                plus_side=bool(sref.sign[0] < 0),
                order=sref.order,
                extent=float(sref.extent[0]),
                flux=fstar[0],
                trace=sref.take(ctx, "U", iface.axis)[0]))
        return InterfaceFluxSet(interface_index=index, axis=iface.axis,
                                sides=entries)


def _p_mortar_ops(order_fine, order_coarse):
    """Two-sided mortar operators at order max(fine, coarse); None = identity."""
    m = max(order_fine, order_coarse)
    rule_m = lgl_rule(m)

    def updown(order):
        if order == m:
            return None, None
        up = interpolation_matrix(lgl_rule(order), rule_m.nodes)
        down = (up * rule_m.weights[:, None]).T / lgl_rule(order).weights[:, None]
        return up, down

    up_f, down_f = updown(order_fine)
    up_c, down_c = updown(order_coarse)
    return up_f, down_f, up_c, down_c


def _h_mortar_ops(geom):
    """Per-sub-edge mortar operators for a hanging interface.

    Each sub-edge carries its own mortar spanning the fine extent at order
    max(coarse, fine). The coarse side is restricted onto it by evaluation;
    flux returns to the coarse edge through the extent-scaled L2 assembly,
    which preserves the discrete edge integral exactly.
    """
    coarse_rule = lgl_rule(geom.coarse_order)
    subs = []
    pos = 0.0
    for order_fine, ext in zip(geom.fine_orders, geom.fine_extents):
        ratio = ext / geom.coarse_extent
        a = -1.0 + 2.0 * pos / geom.coarse_extent
        m = max(order_fine, geom.coarse_order)
        rule_m = lgl_rule(m)
        if order_fine == m:
            up_fine, down_fine = None, None
        else:
            up_fine = interpolation_matrix(lgl_rule(order_fine), rule_m.nodes)
            down_fine = (up_fine * rule_m.weights[:, None]).T \
                / lgl_rule(order_fine).weights[:, None]
        xi = a + ratio * (rule_m.nodes + 1.0)
        restrict = interpolation_matrix(coarse_rule, xi)
        back = ratio * (restrict * rule_m.weights[:, None]).T \
            / coarse_rule.weights[:, None]
        subs.append(_MortarSub(up_fine=up_fine, down_fine=down_fine,
                               restrict_coarse=restrict, back_coarse=back))
        pos += ext
    return subs


def residual(mesh: Mesh, law: ConservationLaw, field: SolutionField,
             coupling: str = "ec", t: float = 0.0,
             exact_solution=None) -> Residual:
    """One-shot residual evaluation (builds a Discretization each call)."""
    disc = Discretization(mesh, law, exact_solution=exact_solution)
    return disc.residual(field, coupling=coupling, t=t)
