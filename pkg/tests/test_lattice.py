import numpy as np
import pytest

from genuscode import lattice as lat
from genuscode.builders import (
    build_handled_surface,
    cut_handle_seams,
    join_two_tori,
    random_repairing,
    symmetrize,
)
from genuscode.lattice import (
    SurfaceBlueprint,
    SurgeryError,
    build_torus,
    cut_along_cycle,
    dualize,
    punch_square_hole,
    sew_boundaries,
    torus_vertex_id,
    trace_boundaries,
    validate,
)


def torus_w_loop(L, y=0):
    """Edge ids of the horizontal ring at height y."""
    return [2 * (y * L + x) for x in range(L)]


class TestTorus:
    def test_counts_and_validity(self):
        for L in (3, 4, 7):
            c = build_torus(L)
            assert (c.n_vertices, c.n_edges, c.n_faces) == (L * L, 2 * L * L, L * L)
            rep = validate(c)
            assert rep.ok, rep.messages
            assert rep.euler_characteristic == 0
            assert rep.genus == 1
            assert rep.orientable
            assert rep.valence_histogram == {4: L * L}
            assert rep.face_size_histogram == {4: L * L}

    def test_every_edge_traversed_once_each_way(self):
        c = build_torus(5)
        dirs = {}
        for f, walk in c.faces.items():
            for pos in range(len(walk)):
                dirs.setdefault(walk[pos], []).append(lat._face_direction(c, f, pos))
        for e, ds in dirs.items():
            assert len(ds) == 2
            assert ds[0] == tuple(reversed(ds[1]))

    def test_too_small_rejected(self):
        with pytest.raises(SurgeryError):
            build_torus(2)


class TestPunch:
    def test_hole_counts(self):
        # side-2 hole: boundary circle of 8 edges, F drops by 4, chi by 1
        c = build_torus(8)
        c2, bid = punch_square_hole(c, torus_vertex_id(8, 1, 1), 2)
        assert c.n_faces - c2.n_faces == 4
        assert c.n_edges - c2.n_edges == 4
        assert c.n_vertices - c2.n_vertices == 1
        assert c2.euler_characteristic() == -1
        assert len(c2.boundaries[bid]) == 8
        rep = validate(c2)
        assert rep.ok, rep.messages

    def test_traced_circle_matches_stored(self):
        c, bid = punch_square_hole(build_torus(8), 0, 2)
        traced = trace_boundaries(c)
        assert len(traced) == 1
        assert set(traced[0].edges) == set(c.boundaries[bid].edges)
        assert traced[0].edges in [
            c.boundaries[bid].edges[k:] + c.boundaries[bid].edges[:k]
            for k in range(8)
        ]

    def test_overlapping_holes_rejected(self):
        c, _ = punch_square_hole(build_torus(8), 0, 2)
        with pytest.raises(SurgeryError) as err:
            punch_square_hole(c, torus_vertex_id(8, 2, 0), 2)
        assert err.value.code in ("surgery-conflict", "missing-cell")

    def test_missing_anchor_rejected(self):
        with pytest.raises(SurgeryError) as err:
            punch_square_hole(build_torus(6), 9999, 1)
        assert err.value.code == "missing-cell"


class TestSew:
    def test_punch_two_sew_back_gives_genus_two(self):
        c = build_torus(12)
        c, b1 = punch_square_hole(c, torus_vertex_id(12, 0, 0), 2)
        c, b2 = punch_square_hole(c, torus_vertex_id(12, 6, 6), 2)
        c = sew_boundaries(c, b1, b2, offset=0)
        rep = validate(c)
        assert rep.ok, rep.messages
        assert c.is_closed()
        assert rep.euler_characteristic == -2
        assert rep.genus == 2
        assert rep.orientable

    def test_offset_changes_result_but_not_invariants(self):
        def make(offset):
            c = build_torus(12)
            c, b1 = punch_square_hole(c, torus_vertex_id(12, 0, 0), 2)
            c, b2 = punch_square_hole(c, torus_vertex_id(12, 6, 6), 2)
            return sew_boundaries(c, b1, b2, offset=offset)

        c0, c3 = make(0), make(3)
        assert validate(c0).ok and validate(c3).ok
        assert lat.dumps(c0) != lat.dumps(c3)
        assert c0.euler_characteristic() == c3.euler_characteristic()

    def test_mirror_sew_can_be_nonorientable(self):
        c = build_torus(12)
        c, b1 = punch_square_hole(c, torus_vertex_id(12, 0, 0), 2)
        c, b2 = punch_square_hole(c, torus_vertex_id(12, 6, 6), 2)
        cm = sew_boundaries(c, b1, b2, offset=0, mirror=True)
        rep = validate(cm)
        # Still a valid closed complex, but the gluing reverses orientation.
        assert cm.is_closed()
        assert not rep.orientable
        assert rep.euler_characteristic == -2

    def test_length_mismatch_rejected(self):
        c = build_torus(12)
        c, b1 = punch_square_hole(c, torus_vertex_id(12, 0, 0), 1)
        c, b2 = punch_square_hole(c, torus_vertex_id(12, 6, 6), 2)
        with pytest.raises(SurgeryError) as err:
            sew_boundaries(c, b1, b2)
        assert err.value.code == "unequal-circles"


class TestJoinTwoTori:
    @pytest.mark.parametrize("L", [6, 9, 12])
    def test_genus_two_and_edge_budget(self, L):
        c = join_two_tori(L)
        rep = validate(c)
        assert rep.ok, rep.messages
        assert rep.genus == 2
        assert abs(c.n_edges - 4 * L * L) <= 0.1 * 4 * L * L


class TestBlueprint:
    def test_defaults(self):
        bp = SurfaceBlueprint(L=8, N=1)
        assert bp.hole_side == 2
        assert bp.tube_length == 4
        assert bp.base_side == 8

    def test_base_side_grows_with_n(self):
        sides = [SurfaceBlueprint(L=8, N=n).base_side for n in (1, 4, 16, 64)]
        assert sides == sorted(sides)
        assert sides[-1] >= 8 * np.sqrt(64 / 2) - 1

    def test_bad_parameters_rejected(self):
        for kwargs in ({"L": 6, "N": 1}, {"L": 8, "N": 0}, {"L": 0, "N": 1}):
            with pytest.raises(SurgeryError) as err:
                SurfaceBlueprint(**kwargs)
            assert err.value.code == "blueprint"

    def test_explicit_base_side_too_small_rejected(self):
        with pytest.raises(SurgeryError):
            SurfaceBlueprint(L=8, N=16, base_side=10)


class TestHandledSurface:
    @pytest.mark.parametrize("N", [1, 2, 4])
    def test_invariants(self, N):
        bp = SurfaceBlueprint(L=8, N=N)
        c = build_handled_surface(bp)
        rep = validate(c)
        assert rep.ok, rep.messages
        assert c.is_closed()
        assert rep.orientable
        assert rep.euler_characteristic == -2 * N
        assert rep.genus == N + 1
        # Exactly 8 valence-5 kinks per handle, everything else flat.
        assert rep.valence_histogram.get(5, 0) == 8 * N
        assert set(rep.valence_histogram) == {4, 5}
        assert N * 64 <= c.n_edges <= 4 * N * 64
        density = 8 * N / c.n_vertices
        assert 0.5 * 8 / 64 <= density <= 2 * 8 / 64

    def test_seams_are_rings_of_length_l(self):
        bp = SurfaceBlueprint(L=8, N=4)
        c = build_handled_surface(bp)
        assert sorted(c.meta["seams"]) == [0, 1, 2, 3]
        for seam in c.meta["seams"].values():
            V, E = lat.trace_cycle(c, seam)
            assert len(E) == 8

    def test_kink_labels_match_valences(self):
        c = build_handled_surface(SurfaceBlueprint(L=8, N=2))
        degs = c.degrees()
        labeled = {v for v, t in c.vlabels.items() if t.get("kink")}
        assert labeled == {v for v, d in degs.items() if d == 5}

    def test_l12_construction(self):
        bp = SurfaceBlueprint(L=12, N=2)
        c = build_handled_surface(bp)
        rep = validate(c)
        assert rep.ok, rep.messages
        assert rep.valence_histogram.get(5, 0) == 16
        for seam in c.meta["seams"].values():
            assert len(seam) == 12


class TestCut:
    def test_torus_w_loop_gives_annulus(self):
        c = build_torus(4)
        c2, cut = cut_along_cycle(c, torus_w_loop(4))
        rep = validate(c2)
        assert rep.ok, rep.messages
        assert rep.euler_characteristic == 0
        assert rep.n_boundaries == 2
        for bid in cut.boundary_ids:
            assert len(c2.boundaries[bid]) == 4
        assert len(cut.loop_edges) == 4
        # The cut duplicates the loop cells.
        assert c2.n_vertices == c.n_vertices + 4
        assert c2.n_edges == c.n_edges + 4

    def test_contractible_loop_rejected_as_separating(self):
        c = build_torus(6)
        face_walk = c.faces[7]
        with pytest.raises(SurgeryError) as err:
            cut_along_cycle(c, face_walk)
        assert err.value.code == "separating-cut"

    def test_non_simple_loop_rejected(self):
        c = build_torus(6)
        loop = torus_w_loop(6, y=0) + torus_w_loop(6, y=2)
        with pytest.raises(SurgeryError) as err:
            cut_along_cycle(c, loop)
        assert err.value.code == "not-a-loop"

    def test_loop_touching_boundary_rejected(self):
        c, bid = punch_square_hole(build_torus(8), torus_vertex_id(8, 0, 2), 2)
        with pytest.raises(SurgeryError) as err:
            cut_along_cycle(c, torus_w_loop(8, y=2))
        assert err.value.code in ("surgery-conflict", "missing-cell")

    def test_cut_leaves_input_untouched_on_failure(self):
        c = build_torus(6)
        before = lat.dumps(c)
        with pytest.raises(SurgeryError):
            cut_along_cycle(c, c.faces[0])
        assert lat.dumps(c) == before

    def test_handle_seam_cut_stays_connected(self):
        c = build_handled_surface(SurfaceBlueprint(L=8, N=2))
        c2, cuts = cut_handle_seams(c)
        rep = validate(c2)
        assert rep.ok, rep.messages
        assert rep.connected
        assert rep.n_boundaries == 4
        assert rep.euler_characteristic == -4

    def test_vertical_loop_also_cuts(self):
        L = 5
        c = build_torus(L)
        loop = [2 * (y * L + 2) + 1 for y in range(L)]
        c2, cut = cut_along_cycle(c, loop)
        rep = validate(c2)
        assert rep.ok, rep.messages
        assert rep.n_boundaries == 2


class TestRepair:
    def test_closes_and_keeps_chi(self):
        c = build_handled_surface(SurfaceBlueprint(L=8, N=4))
        cc, cuts = cut_handle_seams(c)
        for seed in (0, 1, 2):
            cr = random_repairing(cc, cuts, seed=seed)
            rep = validate(cr)
            assert rep.ok, rep.messages
            assert cr.is_closed()
            assert rep.euler_characteristic == -8
            assert rep.orientable
            assert sorted(cr.meta["seams"]) == [0, 1, 2, 3]

    def test_seed_changes_outcome_deterministically(self):
        c = build_handled_surface(SurfaceBlueprint(L=8, N=4))
        cc, cuts = cut_handle_seams(c)
        a1 = lat.dumps(random_repairing(cc, cuts, seed=5))
        a2 = lat.dumps(random_repairing(cc, cuts, seed=5))
        b = lat.dumps(random_repairing(cc, cuts, seed=6))
        assert a1 == a2
        assert a1 != b

    def test_missing_circle_rejected(self):
        c = build_handled_surface(SurfaceBlueprint(L=8, N=1))
        cc, cuts = cut_handle_seams(c)
        cr = random_repairing(cc, cuts, seed=0)
        with pytest.raises(SurgeryError) as err:
            random_repairing(cr, cuts, seed=0)
        assert err.value.code == "missing-cell"


class TestDual:
    def test_dual_swaps_counts(self):
        c = build_torus(5)
        d = dualize(c)
        assert d.n_vertices == c.n_faces
        assert d.n_faces == c.n_vertices
        assert d.n_edges == c.n_edges
        assert validate(d).ok

    def test_dual_of_dual_is_identity_on_cells(self):
        c = build_handled_surface(SurfaceBlueprint(L=8, N=2))
        dd = dualize(dualize(c))
        assert dd.vertices == c.vertices
        assert set(dd.edges) == set(c.edges)
        for e in c.edges:
            assert set(dd.edges[e]) == set(c.edges[e])
        for f in c.faces:
            assert set(dd.faces[f]) == set(c.faces[f])

    def test_dual_needs_closed_surface(self):
        c, _ = punch_square_hole(build_torus(6), 0, 1)
        with pytest.raises(SurgeryError) as err:
            dualize(c)
        assert err.value.code == "not-closed"

    def test_dual_carries_labels_across(self):
        c = build_handled_surface(SurfaceBlueprint(L=8, N=1))
        d = dualize(c)
        primal_kinks = {v for v, t in c.vlabels.items() if t.get("kink")}
        dual_kink_faces = {f for f, t in d.flabels.items() if t.get("kink")}
        assert primal_kinks == dual_kink_faces


class TestValidateDiagnostics:
    def test_reports_lost_face_with_edge_id(self):
        c = build_torus(4)
        del c.faces[5]
        del c.face_verts[5]
        rep = validate(c)
        assert not rep.ok
        assert any("slots" in m for m in rep.messages)

    def test_reports_self_loop(self):
        c = build_torus(4)
        c.edges[0] = (3, 3)
        rep = validate(c)
        assert not rep.ok
        assert any("self-loop" in m for m in rep.messages)

    def test_reports_broken_walk(self):
        c = build_torus(4)
        walk = list(c.faces[0])
        walk[0], walk[2] = walk[2], walk[0]
        c.faces[0] = tuple(walk)
        rep = validate(c)
        assert not rep.ok
        assert any("walk breaks" in m for m in rep.messages)


class TestSerialization:
    def test_roundtrip_byte_identical(self):
        c = build_handled_surface(SurfaceBlueprint(L=8, N=2))
        s = lat.dumps(c)
        assert lat.dumps(lat.loads(s)) == s

    def test_same_build_same_bytes(self):
        mk = lambda: build_handled_surface(SurfaceBlueprint(L=8, N=2))
        assert lat.dumps(mk()) == lat.dumps(mk())

    def test_rejects_wrong_format(self):
        with pytest.raises(SurgeryError) as err:
            lat.loads('{"format": "something-else", "version": "1"}')
        assert err.value.code == "format"

    def test_rejects_future_version(self):
        c = build_torus(3)
        d = lat.to_dict(c)
        d["version"] = "2"
        import json

        with pytest.raises(SurgeryError) as err:
            lat.loads(json.dumps(d))
        assert err.value.code == "format"

    def test_rejects_garbage(self):
        with pytest.raises(SurgeryError):
            lat.loads("not json at all{")

    def test_save_load_file(self, tmp_path):
        c = build_torus(4)
        p = tmp_path / "t.json"
        lat.save(c, p)
        assert lat.dumps(lat.load(p)) == lat.dumps(c)


class TestSymmetrize:
    @staticmethod
    def repaired(N, L=8, seed=3):
        bp = SurfaceBlueprint(L=L, N=N)
        c = build_handled_surface(bp)
        c, cuts = cut_handle_seams(c)
        return random_repairing(c, cuts, seed=seed), bp

    def test_wrong_stage_rejected(self):
        bp = SurfaceBlueprint(L=8, N=2)
        c = build_handled_surface(bp)
        with pytest.raises(SurgeryError) as err:
            symmetrize(c, bp, seed=1)
        assert err.value.code == "wrong-stage"

    def test_single_handle(self):
        c, bp = self.repaired(1)
        s = symmetrize(c, bp, seed=9)
        assert s.meta["stage"] == "symmetrized"
        assert s.is_closed()
        assert s.euler_characteristic() == -2

    @pytest.mark.parametrize("N", [4, 8])
    def test_preserves_topology(self, N):
        c, bp = self.repaired(N)
        s = symmetrize(c, bp, seed=9)
        rep = validate(s)
        assert rep.ok, rep.messages
        assert rep.orientable
        assert s.euler_characteristic() == -2 * N
        assert s.meta["blueprint"]["symmetrized"] is True

    def test_effective_density_about_doubles(self):
        c, bp = self.repaired(8)
        base = build_handled_surface(bp)
        base_density = sum(
            max(d - 4, 0) for d in base.degrees().values()
        ) / base.n_vertices
        s = symmetrize(c, bp, seed=9)
        r = s.meta["symmetrize_report"]
        assert r["effective_kinks"] == r["kink_excess"] + r["seam_disruptions"]
        ratio = r["effective_kink_density"] / base_density
        assert 1.5 <= ratio <= 3.5

    def test_report_bookkeeping(self):
        c, bp = self.repaired(8)
        s = symmetrize(c, bp, seed=9)
        r = s.meta["symmetrize_report"]
        handles = set(c.meta["seams"])
        assert set(r["accepted"]) <= handles
        assert {int(k) for k in r["skipped"]} <= handles
        assert set(r["accepted"]).isdisjoint(int(k) for k in r["skipped"])
        assert 2 * len(r["accepted"]) >= len(handles)
        # One seam ring per re-sewn circle pair.
        assert len(s.meta["seams"]) == len(r["accepted"])

    def test_deterministic(self):
        a, bp = self.repaired(4)
        b, _ = self.repaired(4)
        sa = symmetrize(a, bp, seed=21)
        sb = symmetrize(b, bp, seed=21)
        assert lat.dumps(sa) == lat.dumps(sb)

    def test_different_seeds_differ(self):
        a, bp = self.repaired(8)
        sa = symmetrize(a, bp, seed=1)
        sb = symmetrize(a, bp, seed=2)
        assert lat.dumps(sa) != lat.dumps(sb)
