"""Rectangular h/p non-conforming meshes with typed interface topology.

Meshes are immutable after construction. Interfaces are inferred from element
rectangles: edges that share a grid line are swept and paired into conforming,
order-mismatched (p) or hanging-node (h) interfaces. The canonical roles on an
interface are the single "coarse" edge and the fine edges tiling it; the
geometric side the coarse element occupies is kept separately because flux
orientation depends on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .projection import InterfaceGeometry

__all__ = [
    "Element",
    "Interface",
    "Mesh",
    "MeshError",
    "build_uniform_mesh",
    "build_mixed_refinement_mesh",
    "validate_mesh",
    "write_mesh_file",
    "read_mesh_file",
]

SIDES = ("left", "right", "bottom", "top")
_REL_TOL = 1e-12


class MeshError(Exception):
    pass


@dataclass(frozen=True)
class Element:
    """Axis-aligned rectangular element with one polynomial order."""

    id: int
    x1: float
    x2: float
    y1: float
    y2: float
    order: int

    def __post_init__(self):
        for name in ("x1", "x2", "y1", "y2"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "id", int(self.id))
        object.__setattr__(self, "order", int(self.order))
        if self.x2 <= self.x1 or self.y2 <= self.y1:
            raise MeshError(f"element {self.id} has non-positive extent")
        if self.order < 1:
            raise MeshError(f"element {self.id} order must be >= 1")

    @property
    def dx(self) -> float:
        return self.x2 - self.x1

    @property
    def dy(self) -> float:
        return self.y2 - self.y1

    @property
    def jacobian(self) -> float:
        return 0.25 * self.dx * self.dy


@dataclass(frozen=True)
class Interface:
    """One mesh interface: a coarse edge coupled to fine edges tiling it.

    axis 0 means the interface normal points in x (a vertical edge), axis 1
    in y. ``coarse_on_plus`` records whether the coarse element lies on the
    positive side of the axis; dissipation terms need the geometric jump
    orientation, not just the coarse/fine roles.
    """

    kind: str                    # 'conforming' | 'p' | 'h'
    axis: int                    # 0: x-normal, 1: y-normal
    coarse_id: int
    fine_ids: tuple
    geometry: InterfaceGeometry
    periodic: bool = False
    coarse_on_plus: bool = True

    @property
    def sub_count(self) -> int:
        return len(self.fine_ids)


@dataclass(frozen=True)
class Mesh:
    """Element list, inferred interfaces and per-domain-side boundary tags."""

    elements: tuple
    interfaces: tuple
    bc: dict
    bounds: tuple                # (x1, x2, y1, y2)
    boundary_edges: tuple = field(default=())   # (element_id, side) pairs

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def element(self, eid: int) -> Element:
        return self.elements[eid]

    def n_dofs(self, n_vars: int = 1) -> int:
        return n_vars * sum((e.order + 1) ** 2 for e in self.elements)


def _edge_extent(elem: Element, axis: int) -> float:
    return elem.dy if axis == 0 else elem.dx


def _edge_start(elem: Element, axis: int) -> float:
    return elem.y1 if axis == 0 else elem.x1


def _quantize(value: float, scale: float) -> int:
    return int(round(value / scale * 2**40))


def _build_interfaces(elements, bc, bounds):
    """Sweep shared grid lines and pair element edges into interfaces."""
    x1, x2, y1, y2 = bounds
    interfaces = []
    boundary_edges = []
    for axis in (0, 1):
        lo, hi = (x1, x2) if axis == 0 else (y1, y2)
        lo_side, hi_side = ("left", "right") if axis == 0 else ("bottom", "top")
        periodic = bc[lo_side] == "periodic"
        scale = max(hi - lo, 1.0)
        minus = {}   # line coordinate -> edges whose element is below the line
        plus = {}
        for e in elements:
            emin, emax = (e.x1, e.x2) if axis == 0 else (e.y1, e.y2)
            minus.setdefault(_quantize(emax, scale), []).append(e)
            plus.setdefault(_quantize(emin, scale), []).append(e)
        key_lo, key_hi = _quantize(lo, scale), _quantize(hi, scale)
        lines = sorted(set(minus) | set(plus))
        for key in lines:
            m_edges = minus.get(key, [])
            p_edges = plus.get(key, [])
            wrap = False
            if key == key_lo or key == key_hi:
                if periodic:
                    if key == key_lo:
                        continue  # handled at the high line
                    p_edges = plus.get(key_lo, [])
                    wrap = True
                else:
                    side = hi_side if key == key_hi else lo_side
                    bside = {"left": "W", "right": "E",
                             "bottom": "S", "top": "N"}[side]
                    for e in (m_edges if key == key_hi else p_edges):
                        boundary_edges.append((e.id, bside))
                    continue
            interfaces.extend(
                _pair_line(m_edges, p_edges, axis, wrap, scale))
    return tuple(interfaces), tuple(boundary_edges)


def _pair_line(m_edges, p_edges, axis, periodic, scale):
    """Pair the minus- and plus-side edges lying on one grid line."""
    tol = _REL_TOL * scale
    m_edges = sorted(m_edges, key=lambda e: _edge_start(e, axis))
    p_edges = sorted(p_edges, key=lambda e: _edge_start(e, axis))
    out = []
    i = j = 0
    while i < len(m_edges) and j < len(p_edges):
        m, p = m_edges[i], p_edges[j]
        if abs(_edge_start(m, axis) - _edge_start(p, axis)) > tol:
            raise MeshError(
                f"edges of elements {m.id} and {p.id} do not align")
        m_ext, p_ext = _edge_extent(m, axis), _edge_extent(p, axis)
        if abs(m_ext - p_ext) <= tol:
            out.append(_make_two_sided(m, p, axis, periodic))
            i += 1
            j += 1
        elif m_ext > p_ext:
            fines, j = _collect_tiling(p_edges, j, m_ext, axis, tol, m.id)
            out.append(_make_hanging(m, fines, axis, periodic,
                                     coarse_on_plus=False))
            i += 1
        else:
            fines, i = _collect_tiling(m_edges, i, p_ext, axis, tol, p.id)
            out.append(_make_hanging(p, fines, axis, periodic,
                                     coarse_on_plus=True))
            j += 1
    if i < len(m_edges) or j < len(p_edges):
        left = [e.id for e in m_edges[i:] + p_edges[j:]]
        raise MeshError(f"unmatched element edges {left} on a shared line")
    return out


def _collect_tiling(edges, start, target_extent, axis, tol, coarse_id):
    acc = 0.0
    fines = []
    k = start
    while acc < target_extent - tol:
        if k >= len(edges):
            raise MeshError(
                f"edges {[e.id for e in fines]} do not tile the edge of "
                f"element {coarse_id}")
        if fines:
            prev = fines[-1]
            if abs(_edge_start(edges[k], axis)
                   - (_edge_start(prev, axis) + _edge_extent(prev, axis))) > tol:
                raise MeshError(
                    f"gap between edges of elements {prev.id} and {edges[k].id}")
        fines.append(edges[k])
        acc += _edge_extent(edges[k], axis)
        k += 1
    if abs(acc - target_extent) > tol:
        raise MeshError(
            f"edges {[e.id for e in fines]} overshoot the edge of "
            f"element {coarse_id}")
    return fines, k


def _make_two_sided(m, p, axis, periodic):
    ext = _edge_extent(m, axis)
    if m.order == p.order:
        # conforming convention: the lower id takes the fine slot
        fine, coarse = (m, p) if m.id <= p.id else (p, m)
        kind = "conforming"
        coarse_on_plus = coarse is p
    else:
        fine, coarse, kind = m, p, "p"
        coarse_on_plus = True
    geom = InterfaceGeometry(
        coarse_order=coarse.order, coarse_extent=ext,
        fine_orders=(fine.order,), fine_extents=(ext,), fine_offsets=(0.0,))
    return Interface(kind=kind, axis=axis, coarse_id=coarse.id,
                     fine_ids=(fine.id,), geometry=geom, periodic=periodic,
                     coarse_on_plus=coarse_on_plus)


def _make_hanging(coarse, fines, axis, periodic, coarse_on_plus):
    start = _edge_start(fines[0], axis)
    geom = InterfaceGeometry(
        coarse_order=coarse.order,
        coarse_extent=_edge_extent(coarse, axis),
        fine_orders=tuple(e.order for e in fines),
        fine_extents=tuple(_edge_extent(e, axis) for e in fines),
        fine_offsets=tuple(_edge_start(e, axis) - start for e in fines))
    return Interface(kind="h", axis=axis, coarse_id=coarse.id,
                     fine_ids=tuple(e.id for e in fines), geometry=geom,
                     periodic=periodic, coarse_on_plus=coarse_on_plus)


def _make_mesh(elements, bc, bounds):
    bc = dict(bc)
    unknown = set(bc) - set(SIDES)
    if unknown or set(SIDES) - set(bc):
        raise MeshError(f"boundary tags must cover exactly {SIDES}")
    for a, b in (("left", "right"), ("bottom", "top")):
        if (bc[a] == "periodic") != (bc[b] == "periodic"):
            raise MeshError(f"periodic tags must pair {a}/{b}")
    interfaces, boundary_edges = _build_interfaces(elements, bc, bounds)
    return Mesh(elements=tuple(elements), interfaces=interfaces, bc=bc,
                bounds=tuple(bounds), boundary_edges=boundary_edges)


def build_uniform_mesh(nx: int, ny: int, order: int,
                       bounds=(0.0, 1.0, 0.0, 1.0), bc="periodic") -> Mesh:
    """Conforming nx-by-ny Cartesian mesh with a single polynomial order."""
    if nx < 1 or ny < 1:
        raise MeshError("nx and ny must be >= 1")
    x1, x2, y1, y2 = bounds
    xs = x1 + (x2 - x1) * np.arange(nx + 1) / nx
    ys = y1 + (y2 - y1) * np.arange(ny + 1) / ny
    elements = []
    for iy in range(ny):
        for ix in range(nx):
            elements.append(Element(id=len(elements),
                                    x1=xs[ix], x2=xs[ix + 1],
                                    y1=ys[iy], y2=ys[iy + 1], order=order))
    tags = {s: ("periodic" if bc == "periodic" else "exact") for s in SIDES}
    return _make_mesh(elements, tags, bounds)


def build_mixed_refinement_mesh(level: int, orders, size: float = 10.0,
                                bc: str = "exact") -> Mesh:
    """Three-region benchmark mesh exercising every interface kind.

    Region A fills the lower half [0, size] x [0, size/2]; regions B and C
    split the upper half at x = size/2. Each level quadrisects every element
    of the previous one, so A elements stay twice the size of B/C elements:
    the line y = size/2 carries 2:1 hanging-node interfaces, the line
    x = size/2 (upper half) carries order-mismatch interfaces whenever
    orders differ between B and C.

    Args:
        level: refinement level >= 1; level 1 has three elements.
        orders: polynomial orders (p_A, p_B, p_C).
        size: side length of the square domain.
        bc: 'periodic' or 'exact' (Dirichlet from an exact solution).
    """
    if level < 1:
        raise MeshError("level must be >= 1")
    p_a, p_b, p_c = orders
    n = 2 ** (level - 1)
    elements = []

    def add_region(x_lo, x_hi, y_lo, y_hi, order):
        xs = x_lo + (x_hi - x_lo) * np.arange(n + 1) / n
        ys = y_lo + (y_hi - y_lo) * np.arange(n + 1) / n
        for iy in range(n):
            for ix in range(n):
                elements.append(Element(id=len(elements),
                                        x1=xs[ix], x2=xs[ix + 1],
                                        y1=ys[iy], y2=ys[iy + 1],
                                        order=order))

    half = size / 2.0
    add_region(0.0, size, 0.0, half, p_a)
    add_region(0.0, half, half, size, p_b)
    add_region(half, size, half, size, p_c)
    tags = {s: ("periodic" if bc == "periodic" else "exact") for s in SIDES}
    return _make_mesh(elements, tags, (0.0, size, 0.0, size))


def validate_mesh(mesh: Mesh) -> list:
    """Return human-readable invariant violations; empty means valid."""
    problems = []
    x1, x2, y1, y2 = mesh.bounds
    area = sum(e.dx * e.dy for e in mesh.elements)
    domain_area = (x2 - x1) * (y2 - y1)
    if abs(area - domain_area) > _REL_TOL * domain_area:
        problems.append(
            f"element areas sum to {area!r}, domain area is {domain_area!r}")
    els = mesh.elements
    for i, a in enumerate(els):
        for b in els[i + 1:]:
            if (min(a.x2, b.x2) - max(a.x1, b.x1) > _REL_TOL
                    and min(a.y2, b.y2) - max(a.y1, b.y1) > _REL_TOL):
                problems.append(f"elements {a.id} and {b.id} overlap")
    try:
        interfaces, boundary = _build_interfaces(els, mesh.bc, mesh.bounds)
    except MeshError as err:
        problems.append(str(err))
        return problems
    seen = set()
    for iface in interfaces:
        axis_sides = ("E", "W") if iface.axis == 0 else ("N", "S")
        coarse_side = axis_sides[1] if iface.coarse_on_plus else axis_sides[0]
        fine_side = axis_sides[0] if iface.coarse_on_plus else axis_sides[1]
        edges = [(iface.coarse_id, coarse_side)]
        edges += [(fid, fine_side) for fid in iface.fine_ids]
        for edge in edges:
            if edge in seen:
                problems.append(f"edge {edge} belongs to multiple interfaces")
            seen.add(edge)
        geom = iface.geometry
        if iface.kind == "conforming":
            if geom.sub_count != 1 or geom.fine_orders[0] != geom.coarse_order:
                problems.append(f"interface {iface} misclassified as conforming")
        if iface.kind == "p":
            if geom.sub_count != 1 or geom.fine_orders[0] == geom.coarse_order:
                problems.append(f"interface {iface} misclassified as p")
    for edge in boundary:
        if edge in seen:
            problems.append(f"edge {edge} is both interface and boundary")
        seen.add(edge)
    if len(seen) != 4 * len(els):
        problems.append(
            f"{4 * len(els) - len(seen)} element edges unaccounted for")
    return problems


def write_mesh_file(mesh: Mesh, path) -> None:
    """Write the structured-text mesh description (round-trips exactly)."""
    with open(path, "w") as fh:
        fh.write("# esdg mesh description\n")
        fh.write("domain " + " ".join(repr(float(v)) for v in mesh.bounds) + "\n")
        for side in SIDES:
            fh.write(f"bc {side} {mesh.bc[side]}\n")
        for e in mesh.elements:
            fh.write(f"element {e.id} {e.x1!r} {e.x2!r} {e.y1!r} {e.y2!r} "
                      f"{e.order}\n")


def read_mesh_file(path) -> Mesh:
    """Read a mesh description; interfaces are inferred from the elements."""
    bounds = None
    bc = {}
    elements = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "domain":
                    bounds = tuple(float(v) for v in parts[1:5])
                elif parts[0] == "bc":
                    bc[parts[1]] = parts[2]
                elif parts[0] == "element":
                    elements.append(Element(
                        id=int(parts[1]), x1=float(parts[2]), x2=float(parts[3]),
                        y1=float(parts[4]), y2=float(parts[5]),
                        order=int(parts[6])))
                else:
                    raise MeshError(f"unknown record '{parts[0]}'")
            except (IndexError, ValueError) as err:
                raise MeshError(f"{path}:{lineno}: malformed record") from err
    if bounds is None:
        raise MeshError("mesh file lacks a domain record")
    elements.sort(key=lambda e: e.id)
    if [e.id for e in elements] != list(range(len(elements))):
        raise MeshError("element ids must be 0..K-1 without gaps")
    return _make_mesh(elements, bc, bounds)
