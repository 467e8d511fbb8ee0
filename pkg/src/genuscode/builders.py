"""Composite surface constructions.

Everything here composes the primitive surgeries from `lattice`: joining
two tori through a neck, punching and tubing a base torus into an
N-handled surface, slicing all handle seams open and re-sewing them with
random identifications, and the second symmetrizing round of cuts along
the transverse handle loops.
"""

from __future__ import annotations

import math

import numpy as np

from .lattice import (
    BoundaryCircle,
    CellComplex,
    Cut,
    SurfaceBlueprint,
    SurgeryError,
    _hole_pitch,
    build_torus,
    cut_along_cycle,
    punch_square_hole,
    sew_boundaries,
    torus_vertex_id,
    trace_cycle,
)


def join_two_tori(L: int) -> CellComplex:
    """Genus-2 surface: a side-L torus necked to a side-round(2L/sqrt(3)) one.

    The second torus gets the elongated side that balances the two
    homology classes it carries; the neck is a square hole of side
    round(L/sqrt(6)) in each torus, chosen so the joined surface keeps
    about 4*L*L edges.
    """
    L2 = round(2 * L / math.sqrt(3))
    s = max(1, round(L / math.sqrt(6)))
    if s > L - 2 or s > L2 - 2:
        raise SurgeryError("blueprint", f"neck side {s} too large for tori {L}, {L2}")
    a = build_torus(L)
    b = build_torus(L2)
    a, hole_a = punch_square_hole(a, torus_vertex_id(L, 0, 0), s)
    b, hole_b = punch_square_hole(b, torus_vertex_id(L2, 0, 0), s)
    c = _disjoint_union(a, b)
    # _disjoint_union re-registers b's circles after a's.
    c = sew_boundaries(c, hole_a, c.meta.pop("_shifted_boundary")[hole_b], offset=0)
    c.meta = {"stage": "joined", "sides": [L, L2], "neck_side": s}
    return c


def _disjoint_union(a: CellComplex, b: CellComplex) -> CellComplex:
    """Shift b's ids past a's and merge the two complexes."""
    out = a.copy()
    dv = (max(a.vertices) + 1) if a.vertices else 0
    de = (max(a.edges) + 1) if a.edges else 0
    df = (max(a.faces) + 1) if a.faces else 0
    for v in b.vertices:
        out.vertices.add(v + dv)
    for e, (u, v) in b.edges.items():
        out.edges[e + de] = (u + dv, v + dv)
    for f, walk in b.faces.items():
        out.faces[f + df] = tuple(e + de for e in walk)
        out.face_verts[f + df] = tuple(v + dv for v in b.face_verts[f])
    shifted = {}
    for bid, circ in b.boundaries.items():
        new_bid = out.fresh_boundary_id()
        out.boundaries[new_bid] = BoundaryCircle(
            vertices=tuple(v + dv for v in circ.vertices),
            edges=tuple(e + de for e in circ.edges),
        )
        shifted[bid] = new_bid
    for v, t in b.vlabels.items():
        out.vlabels[v + dv] = dict(t)
    for e, t in b.elabels.items():
        out.elabels[e + de] = dict(t)
    for f, t in b.flabels.items():
        out.flabels[f + df] = dict(t)
    out.meta["_shifted_boundary"] = shifted
    return out


def _add_tube(c: CellComplex, m: int, t: int, label: dict):
    """Append a standalone cylinder of circumference m and length t.

    Returns (bottom circle id, top circle id, seam edge ids); the seam is
    the middle ring.  The bottom circle runs in +q direction, the top one
    in -q, which is how trace_boundaries would direct them.
    """
    vid = c.fresh_vertex_ids((t + 1) * m)
    eids = c.fresh_edge_ids((t + 1) * m + t * m)
    fids = c.fresh_face_ids(t * m)

    def v_at(r, q):
        return vid[r * m + q % m]

    ring = {}
    rung = {}
    k = 0
    for r in range(t + 1):
        for q in range(m):
            ring[(r, q)] = eids[k]
            k += 1
    for r in range(t):
        for q in range(m):
            rung[(r, q)] = eids[k]
            k += 1

    for r in range(t + 1):
        for q in range(m):
            c.edges[ring[(r, q)]] = (v_at(r, q), v_at(r, q + 1))
    for r in range(t):
        for q in range(m):
            c.edges[rung[(r, q)]] = (v_at(r, q), v_at(r + 1, q))
    c.vertices.update(vid)

    k = 0
    for r in range(t):
        for q in range(m):
            f = fids[k]
            k += 1
            c.faces[f] = (
                ring[(r, q)],
                rung[(r, (q + 1) % m)],
                ring[(r + 1, q)],
                rung[(r, q)],
            )
            c.face_verts[f] = (v_at(r, q), v_at(r, q + 1), v_at(r + 1, q + 1), v_at(r + 1, q))
            c.flabels[f] = dict(label)

    for (r, q), e in ring.items():
        c.elabels[e] = dict(label)
    for (r, q), e in rung.items():
        c.elabels[e] = dict(label)
    for v in vid:
        c.vlabels[v] = dict(label)

    b_bottom = BoundaryCircle(
        vertices=tuple(v_at(0, q) for q in range(m)),
        edges=tuple(ring[(0, q)] for q in range(m)),
    )
    b_top = BoundaryCircle(
        vertices=tuple(v_at(t, (m - q) % m) for q in range(m)),
        edges=tuple(ring[(t, (m - q - 1) % m)] for q in range(m)),
    )
    bid0 = c.fresh_boundary_id()
    c.boundaries[bid0] = b_bottom
    c.boundaries[bid0 + 1] = b_top
    seam = [ring[(t // 2, q)] for q in range(m)]
    for e in seam:
        c.elabels[e]["seam"] = True
    return bid0, bid0 + 1, seam


def build_handled_surface(blueprint: SurfaceBlueprint) -> CellComplex:
    """Base torus with N tube handles, each gluing a pair of square holes.

    Hole pairs sit L/2 apart on a uniform grid; tubes have circumference
    4*hole_side = L and length tube_length.  Every handle contributes
    exactly 8 valence-5 vertices (the sewn hole corners), which are the
    negative-curvature kinks the circle-growth model counts.
    """
    bp = blueprint
    L, N = bp.L, bp.N
    h = bp.hole_side
    B = bp.base_side
    pitch = _hole_pitch(L, h)
    per_row = B // pitch
    while per_row > 1 and B - (per_row - 1) * pitch < h + 2:
        per_row -= 1

    c = build_torus(B)
    hole_ids = []
    for k in range(2 * N):
        row, col = divmod(k, per_row)
        anchor = torus_vertex_id(B, col * pitch, row * pitch)
        c, bid = punch_square_hole(
            c, anchor, h, label={"handle": k // 2, "hole_end": k % 2}
        )
        hole_ids.append(bid)

    m = 4 * h
    seams = {}
    for n in range(N):
        b_bot, b_top, seam = _add_tube(c, m, bp.tube_length, {"handle": n, "tube": True})
        c = sew_boundaries(c, hole_ids[2 * n], b_bot, offset=0)
        c = sew_boundaries(c, hole_ids[2 * n + 1], b_top, offset=0)
        seams[n] = seam

    # The sewn hole corners must be the only curvature: 8 kinks per handle.
    degs = c.degrees()
    kinks = [v for v, d in degs.items() if d != 4]
    if sorted(set(degs[v] for v in kinks)) not in ([], [5]) or len(kinks) != 8 * N:
        raise SurgeryError(
            "construction-postcondition",
            f"expected {8 * N} valence-5 kinks, found {len(kinks)}",
        )
    for v in kinks:
        c.vlabels.setdefault(v, {})["kink"] = True

    c.meta["stage"] = "built"
    c.meta["blueprint"] = bp.to_dict()
    c.meta["seams"] = seams
    return c


def cut_handle_seams(c: CellComplex):
    """Cut every handle's seam ring open.  Returns (c', cuts dict)."""
    seams = c.meta.get("seams")
    if not seams:
        raise SurgeryError("wrong-stage", "complex has no seam registry")
    cuts = {}
    out = c
    for hid in sorted(seams):
        out, cut = cut_along_cycle(out, seams[hid])
        cuts[hid] = cut
    return out, cuts


def _repair_circles(c: CellComplex, circle_ids, rng, orientation_reversing=False):
    """Sew an even set of equal-length circles in uniformly random pairs.

    Returns (c', seams, pairs): seams maps pair index -> seam edge ids,
    pairs lists the (b1, b2, offset) choices actually sewn.  A uniformly
    random perfect matching comes from pairing consecutive entries of a
    uniformly random permutation; each pair also gets a uniformly random
    rotational offset.
    """
    ids = list(circle_ids)
    if len(ids) % 2:
        raise SurgeryError("unequal-circles", "odd number of circles to repair")
    lengths = {len(c.boundaries[b]) for b in ids}
    if len(lengths) > 1:
        raise SurgeryError(
            "unequal-circles", f"circle lengths differ: {sorted(lengths)}"
        )
    m = lengths.pop() if lengths else 0
    perm = [ids[i] for i in rng.permutation(len(ids))]
    out = c
    seams = {}
    pairs = []
    for pair in range(len(perm) // 2):
        b1, b2 = perm[2 * pair], perm[2 * pair + 1]
        offset = int(rng.integers(0, m))
        seam = list(out.boundaries[b1].edges)
        pairs.append((b1, b2, offset, tuple(out.boundaries[b1].vertices), tuple(out.boundaries[b2].vertices)))
        out = sew_boundaries(out, b1, b2, offset=offset, mirror=orientation_reversing)
        seams[pair] = seam
    return out, seams, pairs


def random_repairing(c: CellComplex, cuts, seed: int, orientation_reversing=False) -> CellComplex:
    """Re-close a cut-open surface with a random matching of its circles.

    `cuts` is the collection from cut_handle_seams (dict or list of Cut).
    Pairing and offsets are uniform under the given seed.  The original
    pairing is one of the possibilities, so the genus can land anywhere
    between N/2 and N; chi returns to its pre-cut value either way.
    """
    if isinstance(cuts, dict):
        cut_list = [cuts[k] for k in sorted(cuts)]
    else:
        cut_list = list(cuts)
    circle_ids = []
    for cut in cut_list:
        circle_ids.extend(cut.boundary_ids)
    for b in circle_ids:
        if b not in c.boundaries:
            raise SurgeryError("missing-cell", f"boundary circle {b} not present")
    rng = np.random.default_rng(seed)
    out, seams, _ = _repair_circles(c, circle_ids, rng, orientation_reversing)
    if not out.is_closed():
        raise SurgeryError("surgery-conflict", "unrepaired circles remain")
    out.meta["stage"] = "repaired"
    out.meta["seams"] = seams
    out.meta["repair_seed"] = int(seed)
    return out


def symmetrize(c: CellComplex, blueprint: SurfaceBlueprint, seed: int) -> CellComplex:
    """Second randomizing round: cut transverse handle loops and re-sew.

    For every handle seam, find its shortest crossing loop, keep the ones
    that are pairwise vertex-disjoint, pad the kept loops to a common
    length with square detours, cut them all and re-sew with a random
    matching.  Handles whose loop cannot be found, padded, or cut are
    skipped and reported; more than half skipped is an error.  After this
    the surface carries kinks from both rounds, roughly doubling the kink
    density."""
    from .homology import HomologyError, handle_l_loop

    if c.meta.get("stage") != "repaired":
        raise SurgeryError("wrong-stage", "symmetrize expects a repaired surface")
    seams = c.meta.get("seams", {})
    if not seams:
        raise SurgeryError("wrong-stage", "no seams to symmetrize across")

    skipped = {}
    loops = {}
    used = set()
    for hid in sorted(seams):
        try:
            chain = handle_l_loop(c, hid, avoid=used)
        except (HomologyError, SurgeryError) as err:
            skipped[hid] = f"no-loop: {err}"
            continue
        V, E = trace_cycle(c, chain.support)
        if used & set(V):
            skipped[hid] = "overlaps an earlier loop"
            continue
        loops[hid] = (V, E)
        used.update(V)

    # Pad within parity classes.  All faces are quads, so any detour moves
    # a loop's length by two: odd and even loops can never meet at one
    # common length, and each class is padded to its own target and
    # re-paired within itself instead.  Cutting a loop yields two circles
    # of its length, so every class holds an even number of circles.
    targets = {}
    for par in (0, 1):
        lens = [len(E) for (V, E) in loops.values() if len(E) % 2 == par]
        if lens:
            targets[par] = max(lens)
    padded = {}
    for hid in sorted(loops):
        V, E = loops[hid]
        target = targets[len(E) % 2]
        ok = True
        while len(E) < target:
            grown = _pad_loop_once(c, V, E, used)
            if grown is None:
                skipped[hid] = f"stuck at length {len(E)} padding to {target}"
                ok = False
                break
            V, E, new_verts = grown
            used.update(new_verts)
        if ok:
            padded[hid] = (V, E)

    cut_complex = c
    cuts = {}
    for hid in sorted(padded):
        try:
            cut_complex, cut = cut_along_cycle(cut_complex, padded[hid][1])
        except SurgeryError as err:
            skipped[hid] = f"cut failed: {err.code}"
            continue
        cuts[hid] = cut

    if 2 * len(cuts) < len(seams):
        raise SurgeryError(
            "symmetrize-failed",
            f"only {len(cuts)} of {len(seams)} handles survived: {skipped}",
        )

    rng = np.random.default_rng(seed)
    out = cut_complex
    new_seams = {}
    sewn = []
    for par in sorted(targets):
        ids = []
        for hid in sorted(cuts):
            if len(padded[hid][1]) % 2 == par:
                ids.extend(cuts[hid].boundary_ids)
        if not ids:
            continue
        out, class_seams, class_sewn = _repair_circles(out, ids, rng)
        for _, seam in sorted(class_seams.items()):
            new_seams[len(new_seams)] = seam
        sewn.extend(class_sewn)
    if not out.is_closed():
        raise SurgeryError("surgery-conflict", "unrepaired circles after symmetrize")

    # Effective curvature census.  Valence excess counts the corner kinks;
    # on top of that, every re-sewn site whose two halves come from
    # different original vertices breaks the straight continuation across
    # the seam and scatters paths the way a kink does.  (A plain rotation
    # of a homogeneous tube ring, as in the first repair round, is an
    # isometry and adds nothing, which is why the first round's seams are
    # not counted.)
    origin_of = {}
    for cut in cuts.values():
        origin_of.update(cut.vertex_origin)
    disruptions = 0
    for _, _, offset, verts1, verts2 in sewn:
        m = len(verts1)
        for j in range(m):
            o1 = origin_of.get(verts1[j])
            o2 = origin_of.get(verts2[(offset - j) % m])
            if o1 is None or o1 != o2:
                disruptions += 1

    degs = out.degrees()
    excess = sum(max(d - 4, 0) for d in degs.values())
    out.meta["stage"] = "symmetrized"
    out.meta["seams"] = new_seams
    out.meta["symmetrize_seed"] = int(seed)
    if blueprint is not None:
        bp_dict = blueprint.to_dict()
        bp_dict["symmetrized"] = True
        out.meta["blueprint"] = bp_dict
    out.meta["symmetrize_report"] = {
        "accepted": sorted(cuts),
        "skipped": {str(k): v for k, v in sorted(skipped.items())},
        "target_lengths": {str(p): t for p, t in sorted(targets.items())},
        "kink_excess": excess,
        "seam_disruptions": disruptions,
        "effective_kinks": excess + disruptions,
        "effective_kink_density": (excess + disruptions) / len(degs) if degs else 0.0,
    }
    return out


def _pad_loop_once(c: CellComplex, V, E, used):
    """Lengthen a loop by 2 with a square detour around one of its edges.

    Picks the first loop edge with an adjacent quad whose two far corners
    are unused vertices; returns (V', E', new vertices) or None.
    """
    slots = c.edge_slots()
    n = len(E)
    for i in range(n):
        e = E[i]
        u, v = V[i], V[(i + 1) % n]
        for f, pos in sorted(slots[e]):
            walk = c.faces[f]
            fv = c.face_verts[f]
            if len(walk) != 4:
                continue
            # Quad corners beyond this edge, in walk order from its end.
            a, b = fv[(pos + 2) % 4], fv[(pos + 3) % 4]
            if a in used or b in used or a == b:
                continue
            e1 = walk[(pos + 1) % 4]
            e2 = walk[(pos + 2) % 4]
            e3 = walk[(pos + 3) % 4]
            # The walk step runs fv[pos] -> fv[pos+1]; line the detour up
            # with the loop's own direction at this edge.
            if fv[pos] == u:
                detour_verts = [b, a]
                detour_edges = [e3, e2, e1]
            else:
                detour_verts = [a, b]
                detour_edges = [e1, e2, e3]
            V2 = V[: i + 1] + detour_verts + V[i + 1 :]
            E2 = E[:i] + detour_edges + E[i + 1 :]
            return V2, E2, {a, b}
    return None
