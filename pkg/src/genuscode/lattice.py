"""Cell complexes for square-lattice surfaces and the surgeries on them.

A complex is stored combinatorially.  Vertices are bare integer ids.  An
edge is an unordered pair of distinct vertices (parallel edges allowed,
self-loops not).  A face is a closed walk recorded twice, as the edge
sequence and as the aligned vertex sequence: ``edges[i]`` joins
``verts[i]`` to ``verts[(i+1) % n]``.  Keeping the vertex walk explicit
removes every ambiguity that parallel edges would otherwise cause.

Faces are oriented walks and all constructors keep the global orientation
consistent, so a boundary circle can always be traced with the surface
lying on the left: each boundary edge is directed the way its unique
adjacent face traverses it.  Sewing two circles recorded that way is
orientation-preserving exactly when the index map is reversed, which is
what `sew_boundaries` does by default; set ``mirror=True`` for the
orientation-reversing gluing (mod-2 homology does not notice, but the
embedding does).

Ids are allocated deterministically (max existing + 1), every random
choice goes through an explicitly seeded generator, and serialization
sorts everything, so identical build parameters give byte-identical
files.
"""

from __future__ import annotations

import copy as _copy
import json
import math
from dataclasses import dataclass, field

import numpy as np

FORMAT_NAME = "genuscode-surface"
FORMAT_VERSION = "1"


class SurgeryError(ValueError):
    """A surgery or construction precondition failed.

    `code` is a short machine-readable tag; the CLI maps code families to
    exit codes.
    """

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class BoundaryCircle:
    """Closed boundary walk; edges[i] joins vertices[i] to vertices[i+1 mod m]."""

    vertices: tuple
    edges: tuple

    def __len__(self):
        return len(self.edges)


@dataclass(frozen=True)
class Cut:
    """Record of one cut_along_cycle: the loop and the two circles it left."""

    loop_vertices: tuple
    loop_edges: tuple
    boundary_ids: tuple
    # new cell id -> original id, for both copies of every duplicated cell
    vertex_origin: dict
    edge_origin: dict


@dataclass
class SurfaceBlueprint:
    """Parameters of a handled surface.

    L is the handle scale: holes have side L/4 (circumference L), tubes
    have length L/2 by default, and the mid-tube seam ring is the handle's
    width cycle of length L.  N handles are punched into a base torus of
    side `base_side` (smallest side that fits 2N holes on a uniform grid,
    starting from ceil(L*sqrt(N/2))).
    """

    L: int
    N: int
    hole_side: int = 0
    tube_length: int = 0
    base_side: int = 0
    seed: int = 0
    symmetrized: bool = False

    def __post_init__(self):
        if self.L < 4 or self.L % 4:
            raise SurgeryError("blueprint", f"L must be a positive multiple of 4, got {self.L}")
        if self.N < 1:
            raise SurgeryError("blueprint", f"N must be >= 1, got {self.N}")
        if self.hole_side == 0:
            self.hole_side = self.L // 4
        if self.tube_length == 0:
            self.tube_length = self.L // 2
        if self.hole_side < 1 or self.tube_length < 1:
            raise SurgeryError("blueprint", "hole_side and tube_length must be >= 1")
        if self.base_side == 0:
            self.base_side = _auto_base_side(self.L, self.N, self.hole_side)
        cap = _hole_capacity(self.base_side, self.L, self.hole_side)
        if cap < 2 * self.N:
            raise SurgeryError(
                "blueprint",
                f"base side {self.base_side} fits only {cap} holes, need {2 * self.N}",
            )

    def to_dict(self):
        return {
            "L": self.L,
            "N": self.N,
            "hole_side": self.hole_side,
            "tube_length": self.tube_length,
            "base_side": self.base_side,
            "seed": self.seed,
            "symmetrized": self.symmetrized,
        }


def _hole_pitch(L: int, hole_side: int) -> int:
    # Holes sit on a uniform grid; pitch keeps rings at least two lattice
    # steps apart (and at least L/2 so paired holes are L/2 apart).
    return max(L // 2, hole_side + 2)


def _hole_capacity(base_side: int, L: int, hole_side: int) -> int:
    pitch = _hole_pitch(L, hole_side)
    per_row = base_side // pitch
    # The wrap-around gap between the last hole in a row and the first one
    # must also keep two clear steps.
    while per_row > 1 and base_side - (per_row - 1) * pitch < hole_side + 2:
        per_row -= 1
    if per_row < 1:
        return 0
    if per_row == 1 and base_side < hole_side + 2:
        return 0
    return per_row * per_row


def _auto_base_side(L: int, N: int, hole_side: int) -> int:
    side = max(3, math.ceil(L * math.sqrt(N / 2)))
    while _hole_capacity(side, L, hole_side) < 2 * N:
        side += 1
    return side


@dataclass(eq=False)
class CellComplex:
    vertices: set = field(default_factory=set)
    edges: dict = field(default_factory=dict)        # id -> (u, v)
    faces: dict = field(default_factory=dict)        # id -> tuple of edge ids
    face_verts: dict = field(default_factory=dict)   # id -> aligned tuple of vertex ids
    boundaries: dict = field(default_factory=dict)   # id -> BoundaryCircle
    vlabels: dict = field(default_factory=dict)      # vertex id -> {tag: value}
    elabels: dict = field(default_factory=dict)
    flabels: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    # -- basic accessors ------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_faces(self):
        return len(self.faces)

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    def is_closed(self) -> bool:
        return not self.boundaries

    def copy(self) -> "CellComplex":
        return CellComplex(
            vertices=set(self.vertices),
            edges=dict(self.edges),
            faces=dict(self.faces),
            face_verts=dict(self.face_verts),
            boundaries=dict(self.boundaries),
            vlabels={v: dict(t) for v, t in self.vlabels.items()},
            elabels={e: dict(t) for e, t in self.elabels.items()},
            flabels={f: dict(t) for f, t in self.flabels.items()},
            meta=_copy.deepcopy(self.meta),
        )

    def vertex_edges(self) -> dict:
        """vertex id -> sorted list of incident edge ids."""
        out = {v: [] for v in self.vertices}
        for e in sorted(self.edges):
            u, v = self.edges[e]
            out[u].append(e)
            out[v].append(e)
        return out

    def degrees(self) -> dict:
        return {v: len(es) for v, es in self.vertex_edges().items()}

    def edge_slots(self) -> dict:
        """edge id -> list of (face id, walk position) using it."""
        slots = {e: [] for e in self.edges}
        for f in sorted(self.faces):
            for pos, e in enumerate(self.faces[f]):
                slots[e].append((f, pos))
        return slots

    def adjacency_csr(self):
        """Vertex adjacency as sorted index arrays for BFS kernels.

        Returns (vid_list, indptr, neighbor_idx, via_edge) with neighbors
        ordered by (edge id), so traversals are deterministic.
        """
        vids = sorted(self.vertices)
        vindex = {v: i for i, v in enumerate(vids)}
        lists = [[] for _ in vids]
        for e in sorted(self.edges):
            u, v = self.edges[e]
            lists[vindex[u]].append((e, vindex[v]))
            lists[vindex[v]].append((e, vindex[u]))
        indptr = np.zeros(len(vids) + 1, dtype=np.int64)
        nbr = np.empty(2 * len(self.edges), dtype=np.int64)
        via = np.empty(2 * len(self.edges), dtype=np.int64)
        k = 0
        for i, lst in enumerate(lists):
            for e, j in lst:
                nbr[k] = j
                via[k] = e
                k += 1
            indptr[i + 1] = k
        return vids, indptr, nbr, via

    def fresh_vertex_ids(self, count):
        start = (max(self.vertices) + 1) if self.vertices else 0
        return list(range(start, start + count))

    def fresh_edge_ids(self, count):
        start = (max(self.edges) + 1) if self.edges else 0
        return list(range(start, start + count))

    def fresh_face_ids(self, count):
        start = (max(self.faces) + 1) if self.faces else 0
        return list(range(start, start + count))

    def fresh_boundary_id(self):
        return (max(self.boundaries) + 1) if self.boundaries else 0


# -- vertex links -------------------------------------------------------


def _corners_by_vertex(c: CellComplex) -> dict:
    """vertex -> list of corners (face, pos, prev_edge, next_edge).

    The corner of face f at walk position i sits at vertex
    face_verts[f][i], between edges walk[i-1] and walk[i].
    """
    corners = {v: [] for v in c.vertices}
    for f in sorted(c.faces):
        walk = c.faces[f]
        verts = c.face_verts[f]
        n = len(walk)
        for i in range(n):
            corners[verts[i]].append((f, i, walk[i - 1], walk[i]))
    return corners


def vertex_link(c: CellComplex, v, corners=None):
    """Chain the corners around v into an umbrella.

    Returns (kind, edge_seq, corner_seq) where kind is "cycle" for an
    interior vertex or "path" for a boundary vertex.  For a cycle,
    corner_seq[i] lies between edge_seq[i] and edge_seq[(i+1) % d].  For a
    path, edge_seq has one more entry than corner_seq and the two extreme
    edges are boundary edges.  Raises SurgeryError("pinched-vertex") when
    the corners chain into more than one component.
    """
    if corners is None:
        corners = _corners_by_vertex(c)[v]
    if not corners:
        raise SurgeryError("pinched-vertex", f"vertex {v} has no incident face corner")
    # Each incident edge contributes one or two corner ports at v.
    ports = {}
    for ci, (f, i, ea, eb) in enumerate(corners):
        ports.setdefault(ea, []).append((ci, 0))
        ports.setdefault(eb, []).append((ci, 1))
    for e, ps in ports.items():
        if len(ps) > 2:
            raise SurgeryError(
                "pinched-vertex", f"edge {e} has {len(ps)} corner slots at vertex {v}"
            )
    boundary_edges = [e for e, ps in sorted(ports.items()) if len(ps) == 1]
    if len(boundary_edges) not in (0, 2):
        raise SurgeryError(
            "pinched-vertex",
            f"vertex {v} touches {len(boundary_edges)} boundary edge slots",
        )

    used = [False] * len(corners)

    def other_port(edge, ci):
        for cj, side in ports[edge]:
            if cj != ci:
                return cj
        return None

    if boundary_edges:
        start_edge = boundary_edges[0]
        ci, side = ports[start_edge][0]
        edge_seq = [start_edge]
        corner_seq = []
        cur_edge, cur_ci = start_edge, ci
        while True:
            f, i, ea, eb = corners[cur_ci]
            used[cur_ci] = True
            corner_seq.append(cur_ci)
            nxt_edge = eb if cur_edge == ea else ea
            edge_seq.append(nxt_edge)
            nxt_ci = other_port(nxt_edge, cur_ci)
            if nxt_ci is None:
                break
            cur_edge, cur_ci = nxt_edge, nxt_ci
        kind = "path"
    else:
        start_ci = 0
        f, i, ea, eb = corners[start_ci]
        edge_seq = [ea]
        corner_seq = []
        cur_edge, cur_ci = ea, start_ci
        while True:
            f, i, ea, eb = corners[cur_ci]
            used[cur_ci] = True
            corner_seq.append(cur_ci)
            nxt_edge = eb if cur_edge == ea else ea
            nxt_ci = other_port(nxt_edge, cur_ci)
            if nxt_ci == corner_seq[0] or nxt_ci is None:
                break
            edge_seq.append(nxt_edge)
            cur_edge, cur_ci = nxt_edge, nxt_ci
        kind = "cycle"
    if not all(used):
        raise SurgeryError(
            "pinched-vertex", f"corners at vertex {v} split into several umbrellas"
        )
    return kind, edge_seq, [corners[ci] for ci in corner_seq]


# -- boundary tracing ---------------------------------------------------


def _face_direction(c: CellComplex, f, pos):
    """(from_vertex, to_vertex) for the walk step `pos` of face f."""
    verts = c.face_verts[f]
    return verts[pos], verts[(pos + 1) % len(verts)]


def trace_boundaries(c: CellComplex) -> list:
    """Find all boundary circles, directed with the surface on the left.

    A boundary edge (exactly one face slot) is directed the way its face
    traverses it; chaining those directed edges yields the circles.
    """
    slots = c.edge_slots()
    directed = {}
    for e, sl in slots.items():
        if len(sl) == 0:
            raise SurgeryError("dangling-edge", f"edge {e} has no adjacent face")
        if len(sl) == 1:
            f, pos = sl[0]
            directed[e] = _face_direction(c, f, pos)
    # outgoing[v] -> list of boundary edges leaving v
    outgoing = {}
    for e in sorted(directed):
        u, w = directed[e]
        outgoing.setdefault(u, []).append(e)
    circles = []
    seen = set()
    corners_all = _corners_by_vertex(c)
    for e0 in sorted(directed):
        if e0 in seen:
            continue
        verts = []
        edges = []
        e = e0
        while True:
            seen.add(e)
            u, w = directed[e]
            verts.append(u)
            edges.append(e)
            outs = outgoing.get(w, [])
            if len(outs) == 1:
                nxt = outs[0]
            else:
                # Vertex on several circles: stay inside the umbrella fan
                # that e arrived on.
                nxt = _next_boundary_edge(c, w, e, corners_all[w])
            if nxt == e0:
                break
            e = nxt
        circles.append(BoundaryCircle(vertices=tuple(verts), edges=tuple(edges)))
    return circles


def _next_boundary_edge(c: CellComplex, v, arriving_edge, corners):
    """Boundary edge leaving v paired with arriving_edge in one fan."""
    ports = {}
    for ci, (f, i, ea, eb) in enumerate(corners):
        ports.setdefault(ea, []).append(ci)
        ports.setdefault(eb, []).append(ci)
    # Walk the fan starting from arriving_edge until the far end.
    cur_edge = arriving_edge
    cur_ci = ports[arriving_edge][0]
    prev_ci = None
    while True:
        f, i, ea, eb = corners[cur_ci]
        nxt_edge = eb if cur_edge == ea else ea
        nxts = [cj for cj in ports[nxt_edge] if cj != cur_ci]
        if not nxts:
            return nxt_edge
        cur_edge = nxt_edge
        cur_ci = nxts[0]


# -- torus --------------------------------------------------------------


def torus_vertex_id(L: int, x: int, y: int) -> int:
    return (y % L) * L + (x % L)


def _torus_h_edge(L, x, y):
    return 2 * ((y % L) * L + (x % L))


def _torus_v_edge(L, x, y):
    return 2 * ((y % L) * L + (x % L)) + 1


def build_torus(L: int) -> CellComplex:
    """Square-lattice torus with L*L vertices, periodic both ways.

    Vertex (x, y) has id y*L + x; the horizontal edge leaving (x, y)
    rightward has id 2*(y*L+x), the vertical one upward 2*(y*L+x)+1; the
    face with lower-left corner (x, y) has id y*L + x and is walked
    counter-clockwise.
    """
    if L < 3:
        raise SurgeryError("blueprint", f"torus side must be >= 3, got {L}")
    c = CellComplex()
    c.vertices = set(range(L * L))
    for y in range(L):
        for x in range(L):
            c.edges[_torus_h_edge(L, x, y)] = (
                torus_vertex_id(L, x, y),
                torus_vertex_id(L, x + 1, y),
            )
            c.edges[_torus_v_edge(L, x, y)] = (
                torus_vertex_id(L, x, y),
                torus_vertex_id(L, x, y + 1),
            )
    for y in range(L):
        for x in range(L):
            fid = y * L + x
            c.faces[fid] = (
                _torus_h_edge(L, x, y),
                _torus_v_edge(L, x + 1, y),
                _torus_h_edge(L, x, y + 1),
                _torus_v_edge(L, x, y),
            )
            c.face_verts[fid] = (
                torus_vertex_id(L, x, y),
                torus_vertex_id(L, x + 1, y),
                torus_vertex_id(L, x + 1, y + 1),
                torus_vertex_id(L, x, y + 1),
            )
    c.meta = {"grid_side": L, "stage": "torus"}
    return c


# -- punching -----------------------------------------------------------


def punch_square_hole(c: CellComplex, anchor: int, side: int, label=None):
    """Remove a side x side block of faces from a grid-built region.

    `anchor` is the vertex id of the block's lower-left corner in the
    torus grid the complex was built on (meta["grid_side"]).  Interior
    vertices and edges of the block go away; the ring of 4*side edges
    around it becomes a new boundary circle.  Returns (c', boundary_id).
    """
    L = c.meta.get("grid_side")
    if not L:
        raise SurgeryError("surgery-conflict", "punching needs a grid-built complex")
    if side < 1 or side > L - 2:
        raise SurgeryError("blueprint", f"hole side {side} out of range for grid {L}")
    if anchor not in c.vertices:
        raise SurgeryError("missing-cell", f"anchor vertex {anchor} not in complex")
    x0, y0 = anchor % L, anchor // L

    gone_faces = [
        (y0 + j) % L * L + (x0 + i) % L for j in range(side) for i in range(side)
    ]
    gone_edges = [
        _torus_h_edge(L, x0 + i, y0 + j) for j in range(1, side) for i in range(side)
    ] + [
        _torus_v_edge(L, x0 + i, y0 + j) for j in range(side) for i in range(1, side)
    ]
    gone_verts = [
        torus_vertex_id(L, x0 + i, y0 + j)
        for j in range(1, side)
        for i in range(1, side)
    ]
    ring_verts = set()
    for i in range(side + 1):
        ring_verts.add(torus_vertex_id(L, x0 + i, y0))
        ring_verts.add(torus_vertex_id(L, x0 + i, y0 + side))
        ring_verts.add(torus_vertex_id(L, x0, y0 + i))
        ring_verts.add(torus_vertex_id(L, x0 + side, y0 + i))

    for f in gone_faces:
        if f not in c.faces:
            raise SurgeryError("missing-cell", f"face {f} already removed")
    for e in gone_edges:
        if e not in c.edges:
            raise SurgeryError("missing-cell", f"edge {e} already removed")
    if len(set(gone_verts)) != (side - 1) ** 2 or len(ring_verts) != 4 * side:
        raise SurgeryError("surgery-conflict", "hole wraps onto itself")
    occupied = set()
    for b in c.boundaries.values():
        occupied.update(b.vertices)
    if occupied & (ring_verts | set(gone_verts)):
        raise SurgeryError("surgery-conflict", "hole touches an existing boundary")

    out = c.copy()
    for f in gone_faces:
        del out.faces[f]
        del out.face_verts[f]
        out.flabels.pop(f, None)
    for e in gone_edges:
        del out.edges[e]
        out.elabels.pop(e, None)
    for v in gone_verts:
        out.vertices.discard(v)
        out.vlabels.pop(v, None)

    known = set()
    for b in out.boundaries.values():
        known.update(b.edges)
    new_circles = [b for b in trace_boundaries(out) if not known & set(b.edges)]
    if len(new_circles) != 1 or len(new_circles[0]) != 4 * side:
        raise SurgeryError("surgery-conflict", "punch produced an unexpected boundary")
    bid = out.fresh_boundary_id()
    out.boundaries[bid] = new_circles[0]
    if label is not None:
        for v in new_circles[0].vertices:
            out.vlabels.setdefault(v, {}).update(label)
        for e in new_circles[0].edges:
            out.elabels.setdefault(e, {}).update(label)
    return out, bid


# -- sewing -------------------------------------------------------------


def sew_boundaries(c: CellComplex, b1: int, b2: int, offset: int = 0, mirror: bool = False):
    """Identify two equal-length boundary circles.

    With both circles traced surface-on-left, the default identification
    maps position j of circle b1 to position (offset - j) of circle b2,
    which is the orientation-preserving gluing.  ``mirror=True`` uses
    (offset + j) instead, the orientation-reversing one.  Cells of b1
    keep their ids; cells of b2 are renamed onto them.
    """
    if b1 == b2:
        raise SurgeryError("surgery-conflict", "cannot sew a circle to itself")
    for b in (b1, b2):
        if b not in c.boundaries:
            raise SurgeryError("missing-cell", f"no boundary circle {b}")
    c1, c2 = c.boundaries[b1], c.boundaries[b2]
    m = len(c1)
    if len(c2) != m:
        raise SurgeryError(
            "unequal-circles", f"circle lengths differ: {m} vs {len(c2)}"
        )
    if set(c1.vertices) & set(c2.vertices) or set(c1.edges) & set(c2.edges):
        raise SurgeryError("surgery-conflict", "circles share cells; cannot sew")

    vmap = {}
    emap = {}
    for j in range(m):
        if mirror:
            vmap[c2.vertices[(offset + j) % m]] = c1.vertices[j]
            emap[c2.edges[(offset + j) % m]] = c1.edges[j]
        else:
            vmap[c2.vertices[(offset - j) % m]] = c1.vertices[j]
            emap[c2.edges[(offset - j - 1) % m]] = c1.edges[j]

    out = c.copy()
    for v_old in vmap:
        out.vertices.discard(v_old)
    for e_old in emap:
        del out.edges[e_old]

    def mv(v):
        return vmap.get(v, v)

    def me(e):
        return emap.get(e, e)

    out.edges = {e: (mv(u), mv(v)) for e, (u, v) in out.edges.items()}
    out.faces = {f: tuple(me(e) for e in walk) for f, walk in out.faces.items()}
    out.face_verts = {f: tuple(mv(v) for v in walk) for f, walk in out.face_verts.items()}
    del out.boundaries[b1]
    del out.boundaries[b2]
    out.boundaries = {
        b: BoundaryCircle(
            vertices=tuple(mv(v) for v in circ.vertices),
            edges=tuple(me(e) for e in circ.edges),
        )
        for b, circ in out.boundaries.items()
    }
    for old, new in vmap.items():
        if old in out.vlabels:
            out.vlabels.setdefault(new, {}).update(out.vlabels.pop(old))
    for old, new in emap.items():
        if old in out.elabels:
            out.elabels.setdefault(new, {}).update(out.elabels.pop(old))
    if "seams" in out.meta:
        out.meta["seams"] = {
            h: [me(e) for e in es] for h, es in out.meta["seams"].items()
        }
    return out


# -- dual ---------------------------------------------------------------


def dualize(c: CellComplex) -> CellComplex:
    """Dual complex: faces become vertices, vertices become faces.

    Edge ids carry over unchanged (an edge is dual to itself), dual vertex
    ids equal the primal face ids and dual face ids the primal vertex ids,
    so dualize(dualize(c)) reproduces the original cell structure exactly.
    """
    if not c.is_closed():
        raise SurgeryError("not-closed", "dual is defined for closed complexes only")
    slots = c.edge_slots()
    d = CellComplex()
    d.vertices = set(c.faces)
    for e, sl in sorted(slots.items()):
        if len(sl) != 2:
            raise SurgeryError("dangling-edge", f"edge {e} has {len(sl)} face slots")
        (f1, _), (f2, _) = sl
        if f1 == f2:
            raise SurgeryError(
                "surgery-conflict", f"edge {e} has the same face on both sides"
            )
        d.edges[e] = (f1, f2)
    corners_all = _corners_by_vertex(c)
    for v in sorted(c.vertices):
        kind, edge_seq, corner_seq = vertex_link(c, v, corners_all[v])
        if kind != "cycle":
            raise SurgeryError("not-closed", f"vertex {v} lies on a boundary")
        faces_around = [f for (f, i, ea, eb) in corner_seq]
        # Dual edge edge_seq[i] joins the dual vertices (faces) on either
        # side of it in the umbrella: faces_around[i-1] and faces_around[i].
        d.faces[v] = tuple(edge_seq)
        d.face_verts[v] = tuple(
            [faces_around[-1]] + faces_around[:-1]
        )
    d.vlabels = {f: dict(t) for f, t in c.flabels.items()}
    d.elabels = {e: dict(t) for e, t in c.elabels.items()}
    d.flabels = {v: dict(t) for v, t in c.vlabels.items()}
    d.meta = {"stage": "dual", "dual_of_stage": c.meta.get("stage")}
    return d


# -- validation ---------------------------------------------------------


@dataclass
class ValidationReport:
    ok: bool
    euler_characteristic: int
    n_vertices: int
    n_edges: int
    n_faces: int
    n_boundaries: int
    connected: bool
    orientable: bool
    valence_histogram: dict
    face_size_histogram: dict
    genus: int | None
    messages: list

    def __str__(self):
        status = "ok" if self.ok else "INVALID"
        lines = [
            f"{status}: V={self.n_vertices} E={self.n_edges} F={self.n_faces} "
            f"chi={self.euler_characteristic} boundaries={self.n_boundaries} "
            f"genus={self.genus if self.genus is not None else '-'} "
            f"connected={self.connected} orientable={self.orientable}",
            f"valences: {self.valence_histogram}",
            f"face sizes: {self.face_size_histogram}",
        ]
        lines += [f"  {m}" for m in self.messages]
        return "\n".join(lines)


def validate(c: CellComplex) -> ValidationReport:
    """Structural checks: incidence, umbrellas, boundaries, orientability."""
    msgs = []

    if not c.vertices:
        msgs.append("empty complex")
    for e, (u, v) in sorted(c.edges.items()):
        if u == v:
            msgs.append(f"edge {e} is a self-loop")
        for w in (u, v):
            if w not in c.vertices:
                msgs.append(f"edge {e} endpoint {w} missing")
    for f in sorted(c.faces):
        walk = c.faces[f]
        verts = c.face_verts.get(f)
        if verts is None or len(verts) != len(walk) or len(walk) < 2:
            msgs.append(f"face {f} walk malformed")
            continue
        n = len(walk)
        for i, e in enumerate(walk):
            pair = c.edges.get(e)
            if pair is None:
                msgs.append(f"face {f} uses missing edge {e}")
            elif {verts[i], verts[(i + 1) % n]} != set(pair):
                msgs.append(f"face {f} walk breaks at edge {e}")

    slots = None
    boundary_edges = set()
    if not msgs:
        slots = c.edge_slots()
        for b, circ in sorted(c.boundaries.items()):
            m = len(circ)
            if m == 0 or len(circ.vertices) != m:
                msgs.append(f"boundary {b} malformed")
                continue
            for i, e in enumerate(circ.edges):
                pair = c.edges.get(e)
                if pair is None:
                    msgs.append(f"boundary {b} uses missing edge {e}")
                elif {circ.vertices[i], circ.vertices[(i + 1) % m]} != set(pair):
                    msgs.append(f"boundary {b} breaks at edge {e}")
                if e in boundary_edges:
                    msgs.append(f"edge {e} appears on two boundaries")
                boundary_edges.add(e)
        for e, sl in sorted(slots.items()):
            want = 1 if e in boundary_edges else 2
            if len(sl) != want:
                msgs.append(f"edge {e} has {len(sl)} face slots, expected {want}")

    if not msgs:
        corners_all = _corners_by_vertex(c)
        boundary_verts = set()
        for circ in c.boundaries.values():
            boundary_verts.update(circ.vertices)
        for v in sorted(c.vertices):
            try:
                kind, _, _ = vertex_link(c, v, corners_all[v])
            except SurgeryError as err:
                msgs.append(str(err))
                continue
            want = "path" if v in boundary_verts else "cycle"
            if kind != want:
                msgs.append(f"vertex {v} link is a {kind}, expected {want}")

    connected = False
    if c.vertices and not msgs:
        vids, indptr, nbr, _ = c.adjacency_csr()
        seen = np.zeros(len(vids), dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            u = stack.pop()
            for k in range(indptr[u], indptr[u + 1]):
                w = nbr[k]
                if not seen[w]:
                    seen[w] = True
                    stack.append(int(w))
        connected = bool(seen.all())
        if not connected:
            msgs.append("complex is not connected")

    orientable = False
    if not msgs:
        orientable = _check_orientable(c, slots)
        if not orientable:
            msgs.append("no consistent global orientation")

    degs = c.degrees() if c.vertices else {}
    vhist = {}
    for d in degs.values():
        vhist[d] = vhist.get(d, 0) + 1
    fhist = {}
    for walk in c.faces.values():
        fhist[len(walk)] = fhist.get(len(walk), 0) + 1

    chi = c.euler_characteristic()
    genus = None
    if not msgs and c.is_closed() and orientable:
        genus = (2 - chi) // 2

    return ValidationReport(
        ok=not msgs,
        euler_characteristic=chi,
        n_vertices=c.n_vertices,
        n_edges=c.n_edges,
        n_faces=c.n_faces,
        n_boundaries=len(c.boundaries),
        connected=connected,
        orientable=orientable,
        valence_histogram=dict(sorted(vhist.items())),
        face_size_histogram=dict(sorted(fhist.items())),
        genus=genus,
        messages=msgs,
    )


def _check_orientable(c: CellComplex, slots=None) -> bool:
    """2-color faces so shared edges are traversed oppositely iff same color."""
    if slots is None:
        slots = c.edge_slots()
    color = {}
    for f0 in sorted(c.faces):
        if f0 in color:
            continue
        color[f0] = 0
        stack = [f0]
        while stack:
            f = stack.pop()
            walk = c.faces[f]
            for pos in range(len(walk)):
                e = walk[pos]
                sl = slots[e]
                if len(sl) != 2:
                    continue
                for g, gpos in sl:
                    if g == f and gpos == pos:
                        continue
                    opposite = _face_direction(c, f, pos) == tuple(
                        reversed(_face_direction(c, g, gpos))
                    )
                    want = color[f] if opposite else 1 - color[f]
                    if g not in color:
                        color[g] = want
                        stack.append(g)
                    elif color[g] != want:
                        return False
    return True


# -- cutting ------------------------------------------------------------


def trace_cycle(c: CellComplex, loop_edges):
    """Order a vertex-simple edge set into a cycle.

    Returns (V, E) with E[i] joining V[i] to V[(i+1) % n], starting from
    the smallest vertex along its smallest edge.  Raises "not-a-loop" if
    the set is not a single vertex-simple cycle.
    """
    loop = sorted(set(int(e) for e in loop_edges))
    if not loop:
        raise SurgeryError("not-a-loop", "empty loop")
    for e in loop:
        if e not in c.edges:
            raise SurgeryError("missing-cell", f"loop edge {e} not in complex")
    at = {}
    for e in loop:
        u, v = c.edges[e]
        at.setdefault(u, []).append(e)
        at.setdefault(v, []).append(e)
    for v, es in at.items():
        if len(es) != 2:
            raise SurgeryError(
                "not-a-loop", f"vertex {v} meets {len(es)} loop edges, need 2"
            )
    v0 = min(at)
    e0 = min(at[v0])
    V = [v0]
    E = [e0]
    while True:
        u, w = c.edges[E[-1]]
        nxt_v = w if u == V[-1] else u
        if nxt_v == v0:
            break
        V.append(nxt_v)
        a, b = at[nxt_v]
        E.append(b if a == E[-1] else a)
    if len(E) != len(loop):
        raise SurgeryError("not-a-loop", "loop edges form more than one cycle")
    return V, E


def cut_along_cycle(c: CellComplex, loop_edges):
    """Slice the surface open along a vertex-simple closed loop.

    The loop cells are duplicated into two copies carrying two new
    boundary circles; chi is unchanged.  Fails with "separating-cut" if
    the loop disconnects the surface and "one-sided-loop" when the loop
    has no two-sided neighborhood (Moebius-like), both leaving the input
    untouched.  Returns (c', Cut).
    """
    V, E = trace_cycle(c, loop_edges)
    n = len(V)
    boundary_verts = set()
    for circ in c.boundaries.values():
        boundary_verts.update(circ.vertices)
    if boundary_verts & set(V):
        raise SurgeryError("surgery-conflict", "loop touches a boundary circle")
    pos_of_vertex = {v: i for i, v in enumerate(V)}

    # Split each loop vertex's umbrella into the two arcs on either side
    # of the loop.  side_of[(vertex pos, corner key)] in {0, 1}.
    corners_all = _corners_by_vertex(c)
    arcs = []  # per vertex pos: (corner key -> arc index, arc0 corners, arc1 corners)
    for i, v in enumerate(V):
        kind, edge_seq, corner_seq = vertex_link(c, v, corners_all[v])
        if kind != "cycle":
            raise SurgeryError("surgery-conflict", f"loop vertex {v} on boundary")
        e_prev = E[i - 1]
        e_here = E[i]
        d = len(edge_seq)
        try:
            p = edge_seq.index(e_prev)
            q = edge_seq.index(e_here)
        except ValueError:
            raise SurgeryError("not-a-loop", f"loop edges not adjacent at {v}")
        # corner_seq[j] lies between edge_seq[j] and edge_seq[(j+1) % d]
        side = {}
        j = p
        cur = 0
        while True:
            corner = corner_seq[j]
            side[(corner[0], corner[1])] = cur
            j = (j + 1) % d
            if j == p:
                break
            if j == q:
                cur = 1
        arcs.append(side)

    # Propagate a consistent side labeling along the loop: the face slot
    # of E[i] must get the same side at V[i] and V[i+1].
    slots = c.edge_slots()
    flip = [0] * n  # whether arcs[i] labels are globally swapped
    for i in range(n):
        f, posn = slots[E[i]][0]
        side_here = arcs[i][_corner_at(c, f, posn, V[i])] ^ flip[i]
        j = (i + 1) % n
        side_there = arcs[j][_corner_at(c, f, posn, V[j])]
        want_flip = side_here ^ side_there
        if j == 0:
            if want_flip != flip[0]:
                raise SurgeryError(
                    "one-sided-loop", "loop neighborhood is one-sided; cannot cut"
                )
        else:
            flip[j] = want_flip

    def side_at(i, f, posn):
        return arcs[i][_corner_at(c, f, posn, V[i])] ^ flip[i]

    out = c.copy()
    new_v = out.fresh_vertex_ids(2 * n)
    new_e = out.fresh_edge_ids(2 * n)
    v_copy = {}  # (pos, side) -> new vertex id
    e_copy = {}  # (pos, side) -> new edge id
    for i in range(n):
        v_copy[(i, 0)] = new_v[2 * i]
        v_copy[(i, 1)] = new_v[2 * i + 1]
        e_copy[(i, 0)] = new_e[2 * i]
        e_copy[(i, 1)] = new_e[2 * i + 1]

    for i in range(n):
        out.vertices.add(v_copy[(i, 0)])
        out.vertices.add(v_copy[(i, 1)])
    for i in range(n):
        for s in (0, 1):
            out.edges[e_copy[(i, s)]] = (
                v_copy[(i, s)],
                v_copy[((i + 1) % n, s)],
            )

    # Re-point non-loop edges at their side's vertex copy.
    loop_set = set(E)
    edge_new_ends = {}
    for e in sorted(c.edges):
        if e in loop_set:
            continue
        u, w = c.edges[e]
        nu, nw = u, w
        if u in pos_of_vertex or w in pos_of_vertex:
            # Find this edge's side from any face corner containing it.
            for f, posn in slots[e]:
                fv = c.face_verts[f]
                nface = len(fv)
                for end, vtx in ((0, fv[posn]), (1, fv[(posn + 1) % nface])):
                    if vtx in pos_of_vertex:
                        i = pos_of_vertex[vtx]
                        ck = (f, posn if end == 0 else (posn + 1) % nface)
                        s = arcs[i][ck] ^ flip[i]
                        if end == 0 and fv[posn] == u or end == 1 and fv[(posn + 1) % nface] == u:
                            nu = v_copy[(i, s)]
                        else:
                            nw = v_copy[(i, s)]
            edge_new_ends[e] = (nu, nw)
    for e, ends in edge_new_ends.items():
        out.edges[e] = ends

    # Rewrite faces corner by corner.
    for f in sorted(c.faces):
        walk = list(c.faces[f])
        verts = list(c.face_verts[f])
        nface = len(walk)
        changed = False
        for p in range(nface):
            vtx = verts[p]
            if vtx in pos_of_vertex:
                i = pos_of_vertex[vtx]
                s = arcs[i][(f, p)] ^ flip[i]
                verts[p] = v_copy[(i, s)]
                changed = True
        for p in range(nface):
            e = walk[p]
            if e in loop_set:
                i = E.index(e)
                # Side of this slot = side of its corner at V[i].
                s = side_at(i, f, p)
                walk[p] = e_copy[(i, s)]
                changed = True
        if changed:
            out.faces[f] = tuple(walk)
            out.face_verts[f] = tuple(verts)

    for i, v in enumerate(V):
        out.vertices.discard(v)
        lab = out.vlabels.pop(v, None)
        if lab:
            out.vlabels[v_copy[(i, 0)]] = dict(lab)
            out.vlabels[v_copy[(i, 1)]] = dict(lab)
    for i, e in enumerate(E):
        del out.edges[e]
        lab = out.elabels.pop(e, None)
        if lab:
            out.elabels[e_copy[(i, 0)]] = dict(lab)
            out.elabels[e_copy[(i, 1)]] = dict(lab)

    # New boundary circles.
    known = set()
    for b in out.boundaries.values():
        known.update(b.edges)
    fresh = [b for b in trace_boundaries(out) if not known & set(b.edges)]
    if len(fresh) != 2:
        raise SurgeryError("separating-cut", f"cut produced {len(fresh)} circles")
    bid0 = out.fresh_boundary_id()
    out.boundaries[bid0] = fresh[0]
    out.boundaries[bid0 + 1] = fresh[1]

    # Reject separating loops: result must stay connected.
    vids, indptr, nbr, _ = out.adjacency_csr()
    seen = np.zeros(len(vids), dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        u = stack.pop()
        for k in range(indptr[u], indptr[u + 1]):
            w = nbr[k]
            if not seen[w]:
                seen[w] = True
                stack.append(int(w))
    if not seen.all():
        raise SurgeryError("separating-cut", "loop separates the surface")

    vertex_origin = {}
    edge_origin = {}
    for i in range(n):
        for s in (0, 1):
            vertex_origin[v_copy[(i, s)]] = V[i]
            edge_origin[e_copy[(i, s)]] = E[i]
    cut = Cut(
        loop_vertices=tuple(V),
        loop_edges=tuple(E),
        boundary_ids=(bid0, bid0 + 1),
        vertex_origin=vertex_origin,
        edge_origin=edge_origin,
    )
    return out, cut


def _corner_at(c: CellComplex, f, pos, v):
    """Corner key of face f at vertex v, for the walk step at `pos`.

    The step at pos runs face_verts[pos] -> face_verts[pos+1]; its corner
    at the start vertex is (f, pos), at the end vertex (f, pos+1).
    """
    fv = c.face_verts[f]
    n = len(fv)
    if fv[pos] == v:
        return (f, pos)
    if fv[(pos + 1) % n] == v:
        return (f, (pos + 1) % n)
    raise SurgeryError("surgery-conflict", f"face {f} step {pos} misses vertex {v}")


# -- serialization ------------------------------------------------------


def to_dict(c: CellComplex) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "vertices": [[v, c.vlabels.get(v, {})] for v in sorted(c.vertices)],
        "edges": [
            [e, c.edges[e][0], c.edges[e][1], c.elabels.get(e, {})]
            for e in sorted(c.edges)
        ],
        "faces": [
            [f, list(c.faces[f]), list(c.face_verts[f]), c.flabels.get(f, {})]
            for f in sorted(c.faces)
        ],
        "boundaries": [
            [b, list(circ.vertices), list(circ.edges)]
            for b, circ in sorted(c.boundaries.items())
        ],
        "meta": _meta_to_json(c.meta),
    }


def from_dict(d: dict) -> CellComplex:
    if d.get("format") != FORMAT_NAME:
        raise SurgeryError("format", f"not a {FORMAT_NAME} file")
    if str(d.get("version", "")).split(".")[0] != FORMAT_VERSION:
        raise SurgeryError(
            "format", f"unsupported format version {d.get('version')!r}"
        )
    c = CellComplex()
    for v, labels in d["vertices"]:
        c.vertices.add(int(v))
        if labels:
            c.vlabels[int(v)] = dict(labels)
    for e, u, v, labels in d["edges"]:
        c.edges[int(e)] = (int(u), int(v))
        if labels:
            c.elabels[int(e)] = dict(labels)
    for f, walk, verts, labels in d["faces"]:
        c.faces[int(f)] = tuple(int(e) for e in walk)
        c.face_verts[int(f)] = tuple(int(v) for v in verts)
        if labels:
            c.flabels[int(f)] = dict(labels)
    for b, verts, edges in d.get("boundaries", []):
        c.boundaries[int(b)] = BoundaryCircle(
            vertices=tuple(int(v) for v in verts),
            edges=tuple(int(e) for e in edges),
        )
    c.meta = _meta_from_json(d.get("meta", {}))
    return c


def _meta_to_json(meta: dict) -> dict:
    out = json.loads(json.dumps(meta))
    if "seams" in out:
        out["seams"] = {str(k): v for k, v in out["seams"].items()}
    return out


def _meta_from_json(meta: dict) -> dict:
    out = dict(meta)
    if "seams" in out:
        out["seams"] = {int(k): [int(e) for e in v] for k, v in out["seams"].items()}
    return out


def dumps(c: CellComplex) -> str:
    """Canonical JSON text: sorted keys, fixed separators, trailing newline.

    Identical complexes serialize to identical bytes.
    """
    return json.dumps(to_dict(c), sort_keys=True, separators=(",", ":")) + "\n"


def loads(text: str) -> CellComplex:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as err:
        raise SurgeryError("format", f"not valid JSON: {err}") from err
    return from_dict(d)


def save(c: CellComplex, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(c))


def load(path) -> CellComplex:
    with open(path) as fh:
        return loads(fh.read())
