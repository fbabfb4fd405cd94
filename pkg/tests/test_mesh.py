import numpy as np
import pytest

from esdg.mesh import (Element, Mesh, MeshError, build_mixed_refinement_mesh,
                       build_uniform_mesh, read_mesh_file, validate_mesh,
                       write_mesh_file)


def kinds(mesh):
    return sorted(i.kind for i in mesh.interfaces)


class TestUniform:
    def test_single_element_periodic(self):
        mesh = build_uniform_mesh(1, 1, 4, bc="periodic")
        # one wrap interface per axis covers all four element edges
        assert len(mesh.interfaces) == 2
        assert all(i.periodic and i.kind == "conforming"
                   for i in mesh.interfaces)
        assert validate_mesh(mesh) == []

    def test_two_by_two_periodic_count(self):
        mesh = build_uniform_mesh(2, 2, 3, bc="periodic")
        assert mesh.n_elements == 4
        assert len(mesh.interfaces) == 8
        assert validate_mesh(mesh) == []

    def test_dirichlet_boundary_edges(self):
        mesh = build_uniform_mesh(2, 3, 2, bc="exact")
        assert len(mesh.boundary_edges) == 2 * (2 + 3)
        assert validate_mesh(mesh) == []

    def test_rejects_empty(self):
        with pytest.raises(MeshError):
            build_uniform_mesh(0, 2, 3)


class TestMixedRefinement:
    def test_level_one_layout(self):
        mesh = build_mixed_refinement_mesh(1, (3, 4, 3), size=10.0, bc="exact")
        assert mesh.n_elements == 3
        assert kinds(mesh) == ["h", "p"]
        h = [i for i in mesh.interfaces if i.kind == "h"][0]
        assert h.axis == 1 and h.coarse_id == 0 and h.fine_ids == (1, 2)
        assert not h.coarse_on_plus
        p = [i for i in mesh.interfaces if i.kind == "p"][0]
        assert p.axis == 0
        assert validate_mesh(mesh) == []

    def test_element_count_quadruples(self):
        counts = [build_mixed_refinement_mesh(lv, (2, 3, 2)).n_elements
                  for lv in (1, 2, 3)]
        assert counts == [3, 12, 48]

    def test_level_two_interface_census(self):
        mesh = build_mixed_refinement_mesh(2, (3, 4, 3), size=10.0,
                                           bc="periodic")
        from collections import Counter
        census = Counter(i.kind for i in mesh.interfaces)
        assert census == {"conforming": 14, "p": 4, "h": 4}
        assert validate_mesh(mesh) == []

    def test_p_interfaces_sit_on_the_order_jump(self):
        mesh = build_mixed_refinement_mesh(3, (3, 4, 3), size=10.0, bc="exact")
        for iface in mesh.interfaces:
            if iface.kind == "p":
                coarse = mesh.element(iface.coarse_id)
                fine = mesh.element(iface.fine_ids[0])
                assert {coarse.order, fine.order} == {3, 4}
                assert iface.axis == 0
                assert coarse.x1 == 5.0 or coarse.x2 == 5.0
            if iface.kind == "h":
                assert iface.axis == 1
                assert iface.geometry.sub_count == 2

    def test_areas_sum_exactly(self):
        mesh = build_mixed_refinement_mesh(3, (2, 3, 2), size=1.0)
        assert sum(e.dx * e.dy for e in mesh.elements) == 1.0

    def test_orders_assigned_by_region(self):
        mesh = build_mixed_refinement_mesh(2, (2, 5, 3), size=8.0)
        for e in mesh.elements:
            if e.y2 <= 4.0:
                assert e.order == 2
            elif e.x2 <= 4.0:
                assert e.order == 5
            else:
                assert e.order == 3

    def test_rejects_bad_level(self):
        with pytest.raises(MeshError):
            build_mixed_refinement_mesh(0, (2, 3, 2))


class TestValidation:
    def test_gap_reported(self):
        elements = (Element(0, 0.0, 1.0, 0.0, 1.0, 2),
                    Element(1, 1.0, 2.0, 0.25, 1.0, 2))
        bc = {s: "exact" for s in ("left", "right", "bottom", "top")}
        mesh = Mesh(elements=elements, interfaces=(), bc=bc,
                    bounds=(0.0, 2.0, 0.0, 1.0))
        problems = validate_mesh(mesh)
        assert problems and any("align" in p or "area" in p for p in problems)

    def test_overlap_reported(self):
        elements = (Element(0, 0.0, 1.2, 0.0, 1.0, 2),
                    Element(1, 1.0, 2.0, 0.0, 1.0, 2))
        bc = {s: "exact" for s in ("left", "right", "bottom", "top")}
        mesh = Mesh(elements=elements, interfaces=(), bc=bc,
                    bounds=(0.0, 2.0, 0.0, 1.0))
        assert any("overlap" in p for p in validate_mesh(mesh))

    def test_constructed_meshes_pass(self):
        for level in (1, 2, 3):
            mesh = build_mixed_refinement_mesh(level, (3, 4, 3),
                                               bc="periodic")
            assert validate_mesh(mesh) == []

    def test_classification_stable_under_reordering(self):
        mesh = build_mixed_refinement_mesh(2, (3, 4, 3), size=1.0, bc="exact")
        perm = np.random.default_rng(0).permutation(mesh.n_elements)
        relabeled = sorted(
            (Element(id=int(np.argsort(perm)[e.id]), x1=e.x1, x2=e.x2,
                     y1=e.y1, y2=e.y2, order=e.order)
             for e in mesh.elements), key=lambda e: e.id)
        from esdg.mesh import _make_mesh
        mesh2 = _make_mesh(relabeled, mesh.bc, mesh.bounds)

        def census(m):
            # id-independent signature: kind, axis and the participating
            # element footprints (roles on conforming interfaces follow ids)
            out = []
            for i in m.interfaces:
                members = sorted(
                    (m.element(e).x1, m.element(e).y1, m.element(e).order)
                    for e in (i.coarse_id, *i.fine_ids))
                out.append((i.kind, i.axis, tuple(members)))
            return sorted(out)

        assert census(mesh) == census(mesh2)

    def test_mismatched_periodic_tags_rejected(self):
        from esdg.mesh import _make_mesh
        elements = [Element(0, 0.0, 1.0, 0.0, 1.0, 2)]
        bc = {"left": "periodic", "right": "exact",
              "bottom": "exact", "top": "exact"}
        with pytest.raises(MeshError):
            _make_mesh(elements, bc, (0.0, 1.0, 0.0, 1.0))


class TestMeshFile:
    def test_roundtrip_uniform(self, tmp_path):
        mesh = build_uniform_mesh(3, 2, 4, bounds=(0.0, 10.0, 0.0, 5.0),
                                  bc="exact")
        path = tmp_path / "mesh.txt"
        write_mesh_file(mesh, path)
        back = read_mesh_file(path)
        assert back.bounds == mesh.bounds
        assert back.bc == mesh.bc
        assert back.elements == mesh.elements
        assert back.interfaces == mesh.interfaces
        # a second round trip is byte-identical
        path2 = tmp_path / "mesh2.txt"
        write_mesh_file(back, path2)
        assert path.read_text() == path2.read_text()

    def test_roundtrip_mixed(self, tmp_path):
        mesh = build_mixed_refinement_mesh(2, (3, 4, 3), size=1.0,
                                           bc="periodic")
        path = tmp_path / "mesh.txt"
        write_mesh_file(mesh, path)
        back = read_mesh_file(path)
        assert back.elements == mesh.elements
        assert back.interfaces == mesh.interfaces

    def test_malformed_record_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("domain 0 1 0 1\nelement 0 oops\n")
        with pytest.raises(MeshError):
            read_mesh_file(path)

    def test_unknown_record_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("domain 0 1 0 1\nvertex 0 0\n")
        with pytest.raises(MeshError):
            read_mesh_file(path)
