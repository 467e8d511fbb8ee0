"""Homology and CSS-code extraction tests.

The signature route (tree-cotree bitmasks) is cross-checked against a
plain Gaussian-elimination membership test on the face-boundary span,
and the BFS systole against exhaustive simple-cycle enumeration.
"""

import numpy as np
import pytest

from genuscode import gf2, homology
from genuscode.builders import (
    build_handled_surface,
    cut_handle_seams,
    join_two_tori,
    random_repairing,
)
from genuscode.homology import (
    BinaryChain,
    HomologyError,
    boundary_maps,
    css_from_complex,
    handle_l_loop,
    is_nullhomologous,
    systole,
    systole_bruteforce,
)
from genuscode.lattice import (
    SurfaceBlueprint,
    build_torus,
    dualize,
    punch_square_hole,
    torus_vertex_id,
    trace_cycle,
)


def h_edge(L, x, y):
    return 2 * ((y % L) * L + (x % L))


def v_edge(L, x, y):
    return 2 * ((y % L) * L + (x % L)) + 1


def boundary_membership_oracle(c):
    """Independent trivial-cycle test: eliminate against the face span."""
    maps = boundary_maps(c)
    n = len(maps.edge_order)
    R, piv = gf2.row_reduce(maps.d2, n)
    eidx = {e: i for i, e in enumerate(maps.edge_order)}

    def member(chain):
        sup = chain.support if isinstance(chain, BinaryChain) else frozenset(chain)
        row = gf2.row_from_indices([eidx[e] for e in sup], n)
        return gf2.in_rowspace(R, piv, row)

    return member


class TestBoundaryMaps:
    def test_torus_shapes_and_composition(self):
        c = build_torus(4)
        maps = boundary_maps(c)
        assert len(maps.vertex_order) == 16
        assert len(maps.edge_order) == 32
        assert len(maps.face_order) == 16
        assert maps.composition_is_zero()
        # Four-valent vertices and square faces throughout.
        assert list(gf2.weight(maps.d1)) == [4] * 16
        assert list(gf2.weight(maps.d2)) == [4] * 16

    def test_handled_surface_composition(self):
        c = build_handled_surface(SurfaceBlueprint(L=8, N=1))
        assert boundary_maps(c).composition_is_zero()

    def test_rank_split_matches_cycle_count(self):
        for c in (build_torus(4), join_two_tori(6)):
            maps = boundary_maps(c)
            n = len(maps.edge_order)
            k = 2 - c.euler_characteristic()
            assert n - gf2.rank(maps.d1, n) - gf2.rank(maps.d2, n) == k


class TestNullhomology:
    def test_face_boundary_bounds(self):
        c = build_torus(4)
        for f in list(c.faces)[:5]:
            assert is_nullhomologous(c, c.faces[f])

    def test_empty_chain_bounds(self):
        c = build_torus(4)
        assert is_nullhomologous(c, [])

    def test_wrap_rings_do_not_bound(self):
        L = 5
        c = build_torus(L)
        row = [h_edge(L, x, 0) for x in range(L)]
        col = [v_edge(L, 0, y) for y in range(L)]
        assert not is_nullhomologous(c, row)
        assert not is_nullhomologous(c, col)
        assert not is_nullhomologous(c, set(row) | set(col))

    def test_parallel_rings_cobound(self):
        L = 5
        c = build_torus(L)
        both = {h_edge(L, x, 0) for x in range(L)} ^ {h_edge(L, x, 1) for x in range(L)}
        assert is_nullhomologous(c, both)

    def test_ring_stays_nontrivial_under_face_addition(self):
        L = 4
        c = build_torus(L)
        ring = {h_edge(L, x, 0) for x in range(L)}
        bumped = ring ^ set(c.faces[5])
        assert not is_nullhomologous(c, bumped)

    def test_non_cycle_rejected(self):
        c = build_torus(4)
        with pytest.raises(HomologyError) as err:
            is_nullhomologous(c, [h_edge(4, 0, 0)])
        assert err.value.code == "not-a-cycle"

    def test_unknown_edge_rejected(self):
        c = build_torus(4)
        with pytest.raises(HomologyError) as err:
            is_nullhomologous(c, [10_000])
        assert err.value.code == "missing-cell"

    def test_open_surface_rejected(self):
        c = build_torus(6)
        c, _ = punch_square_hole(c, torus_vertex_id(6, 0, 0), 2)
        ring = [h_edge(6, x, 4) for x in range(6)]
        with pytest.raises(HomologyError) as err:
            is_nullhomologous(c, ring)
        assert err.value.code == "not-closed"

    @pytest.mark.parametrize("make", [lambda: build_torus(5), lambda: join_two_tori(6)])
    def test_agrees_with_elimination_on_random_cycles(self, make):
        c = make()
        member = boundary_membership_oracle(c)
        maps = boundary_maps(c)
        n = len(maps.edge_order)
        cycle_basis = gf2.nullspace(maps.d1, n)
        rng = np.random.default_rng(20)
        for _ in range(60):
            pick = rng.integers(0, 2, size=cycle_basis.shape[0]).astype(bool)
            row = np.bitwise_xor.reduce(
                cycle_basis[pick], axis=0
            ) if pick.any() else gf2.zeros(1, n)[0]
            chain = [maps.edge_order[i] for i in gf2.indices_of(row, n)]
            assert is_nullhomologous(c, chain) == member(chain)

    def test_copy_is_classified_independently(self):
        c = build_torus(4)
        ring = [h_edge(4, x, 0) for x in range(4)]
        assert not is_nullhomologous(c, ring)
        c2 = c.copy()
        assert not is_nullhomologous(c2, ring)
        assert is_nullhomologous(c2, c2.faces[0])


class TestCssCode:
    def test_torus_code_basics(self):
        c = build_torus(4)
        code = css_from_complex(c)
        assert code.n == 32
        assert code.k == 2
        assert code.stabilizers_commute()
        assert code.logicals_commute_with_stabilizers()
        assert np.array_equal(code.pairing_matrix(), np.eye(2, dtype=np.uint8))

    def test_torus_logicals_are_transverse_cycles(self):
        c = build_torus(4)
        code = css_from_complex(c)
        member = boundary_membership_oracle(c)
        d = dualize(c)
        dual_member = boundary_membership_oracle(d)
        for z in code.logical_z:
            trace_cycle(c, z.support)
            assert len(z) >= 4
            assert not member(z)
        for x in code.logical_x:
            # x lives on the dual surface: even degree at every dual vertex,
            # and not a dual boundary.
            parity = {}
            for e in x.support:
                for v in d.edges[e]:
                    parity[v] = parity.get(v, 0) ^ 1
            assert not any(parity.values())
            assert not dual_member(x)

    def test_joined_tori_code(self):
        c = join_two_tori(6)
        code = css_from_complex(c)
        assert code.k == 4
        assert code.stabilizers_commute()
        assert code.logicals_commute_with_stabilizers()
        assert np.array_equal(code.pairing_matrix(), np.eye(4, dtype=np.uint8))

    def test_handled_surface_seam_labels(self):
        c = build_handled_surface(SurfaceBlueprint(L=8, N=2))
        code = css_from_complex(c)
        assert code.k == 2 * 2 + 2
        seam_labels = [t for t in code.z_labels if t["kind"] == "seam"]
        assert sorted(t["handle"] for t in seam_labels) == [0, 1]
        for t, z in zip(code.z_labels, code.logical_z):
            if t["kind"] == "seam":
                assert z.support == frozenset(c.meta["seams"][t["handle"]])
        assert np.array_equal(
            code.pairing_matrix(), np.eye(code.k, dtype=np.uint8)
        )

    def test_repaired_surface_code(self):
        c = build_handled_surface(SurfaceBlueprint(L=8, N=2))
        c, cuts = cut_handle_seams(c)
        c = random_repairing(c, cuts, seed=5)
        code = css_from_complex(c)
        assert code.k == 6
        assert code.stabilizers_commute()
        assert code.logicals_commute_with_stabilizers()
        assert np.array_equal(code.pairing_matrix(), np.eye(6, dtype=np.uint8))
        assert any(t["kind"] == "seam" for t in code.z_labels)

    def test_deterministic_across_identical_builds(self):
        a = css_from_complex(build_torus(5))
        b = css_from_complex(build_torus(5))
        assert [z.sorted() for z in a.logical_z] == [z.sorted() for z in b.logical_z]
        assert [x.sorted() for x in a.logical_x] == [x.sorted() for x in b.logical_x]

    def test_open_surface_rejected(self):
        c = build_torus(6)
        c, _ = punch_square_hole(c, torus_vertex_id(6, 0, 0), 2)
        with pytest.raises(HomologyError) as err:
            css_from_complex(c)
        assert err.value.code == "not-closed"


class TestSystole:
    @pytest.mark.parametrize("L", [3, 4, 5])
    def test_torus_systole_is_grid_side(self, L):
        rep = systole(build_torus(L))
        assert rep.primal_length == L
        assert rep.dual_length == L

    def test_reported_cycles_check_out(self):
        c = build_torus(5)
        rep = systole(c)
        assert len(rep.primal_cycle) == rep.primal_length
        trace_cycle(c, rep.primal_cycle.support)
        assert not boundary_membership_oracle(c)(rep.primal_cycle)
        d = dualize(c)
        assert len(rep.dual_cycle) == rep.dual_length
        trace_cycle(d, rep.dual_cycle.support)
        assert not boundary_membership_oracle(d)(rep.dual_cycle)

    def test_deterministic(self):
        a = systole(build_torus(4))
        b = systole(build_torus(4))
        assert a.primal_cycle.sorted() == b.primal_cycle.sorted()
        assert a.dual_cycle.sorted() == b.dual_cycle.sorted()

    @pytest.mark.parametrize("L", [3, 4, 5])
    def test_bruteforce_agrees_on_torus(self, L):
        c = build_torus(L)
        length, cyc, inconclusive = systole_bruteforce(c, r_max=L + 1)
        assert not inconclusive
        assert length == L
        assert not boundary_membership_oracle(c)(cyc)
        assert systole(c).primal_length == length

    def test_bruteforce_agrees_on_joined_tori(self):
        c = join_two_tori(6)
        rep = systole(c)
        length, cyc, inconclusive = systole_bruteforce(c, r_max=rep.primal_length)
        assert not inconclusive
        assert length == rep.primal_length
        assert len(cyc) == length

    def test_bruteforce_inconclusive_below_systole(self):
        length, cyc, inconclusive = systole_bruteforce(build_torus(5), r_max=3)
        assert inconclusive
        assert length is None and cyc is None

    def test_bruteforce_budget_guard(self):
        with pytest.raises(HomologyError) as err:
            systole_bruteforce(build_torus(5), r_max=5, max_steps=10)
        assert err.value.code == "oracle-infeasible"

    def test_handled_surface_systole_bounded_by_seam(self):
        c = build_handled_surface(SurfaceBlueprint(L=8, N=1))
        rep = systole(c)
        # The seam ring itself is a nontrivial cycle of length 8.
        assert 3 <= rep.primal_length <= 8


class TestHandleLoop:
    def test_single_handle_loop(self):
        L = 8
        c = build_handled_surface(SurfaceBlueprint(L=L, N=1))
        loop = handle_l_loop(c, 0)
        trace_cycle(c, loop.support)
        assert not is_nullhomologous(c, loop.support)
        assert not boundary_membership_oracle(c)(loop)
        assert L - 2 <= len(loop) <= L + 2

    def test_loop_and_seam_are_independent_classes(self):
        c = build_handled_surface(SurfaceBlueprint(L=8, N=1))
        loop = handle_l_loop(c, 0)
        seam = BinaryChain.of(c.meta["seams"][0])
        assert not is_nullhomologous(c, loop ^ seam)

    def test_two_handles_give_independent_loops(self):
        c = build_handled_surface(SurfaceBlueprint(L=8, N=2))
        l0 = handle_l_loop(c, 0)
        l1 = handle_l_loop(c, 1)
        assert not is_nullhomologous(c, l0)
        assert not is_nullhomologous(c, l1)
        assert not is_nullhomologous(c, l0 ^ l1)

    def test_loop_at_least_systole(self):
        c = build_handled_surface(SurfaceBlueprint(L=8, N=2))
        floor = systole(c).primal_length
        for hid in (0, 1):
            assert len(handle_l_loop(c, hid)) >= floor

    def test_deterministic(self):
        c = build_handled_surface(SurfaceBlueprint(L=8, N=2))
        assert handle_l_loop(c, 0).sorted() == handle_l_loop(c, 0).sorted()

    def test_repaired_surface_has_loops_per_seam(self):
        c = build_handled_surface(SurfaceBlueprint(L=8, N=2))
        c, cuts = cut_handle_seams(c)
        c = random_repairing(c, cuts, seed=11)
        for hid in c.meta["seams"]:
            loop = handle_l_loop(c, hid)
            trace_cycle(c, loop.support)
            assert not is_nullhomologous(c, loop.support)

    def test_unknown_handle_rejected(self):
        c = build_handled_surface(SurfaceBlueprint(L=8, N=1))
        with pytest.raises(HomologyError) as err:
            handle_l_loop(c, 7)
        assert err.value.code == "no-such-handle"
