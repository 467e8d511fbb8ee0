"""Mod-2 homology of surface complexes and the CSS code it carries.

The workhorse is a tree-cotree decomposition: a spanning tree of the
vertex graph, a spanning tree of the face (dual) graph on the remaining
edges, and the 2 - chi leftover edges.  Fundamental cycles of the
leftovers in the vertex tree give a homology basis; their fundamental
cycles in the face tree give the transverse (dual) basis.  Every edge
gets a signature word whose bit i says whether the edge lies on dual
basis cycle i, so testing whether a cycle bounds is just XORing the
signatures along it: the intersection pairing with a full dual basis
vanishes exactly on boundaries.

Everything derived is cached per complex (weakly, keyed by identity);
complexes are treated as immutable once built, which the surgery API
guarantees.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field

import numpy as np

from . import gf2
from .lattice import CellComplex, SurgeryError, cut_along_cycle, dualize, trace_cycle


class HomologyError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class BinaryChain:
    """A mod-2 edge set; XOR is chain addition."""

    support: frozenset

    @classmethod
    def of(cls, edges):
        return cls(support=frozenset(int(e) for e in edges))

    def __xor__(self, other):
        return BinaryChain(support=self.support ^ other.support)

    def __len__(self):
        return len(self.support)

    def sorted(self):
        return tuple(sorted(self.support))


@dataclass
class BoundaryMaps:
    vertex_order: tuple
    edge_order: tuple
    face_order: tuple
    d1: np.ndarray  # one packed row per vertex: incident edges mod 2
    d2: np.ndarray  # one packed row per face: boundary edges mod 2

    def composition_is_zero(self) -> bool:
        """d1 . d2 = 0: every face boundary has even degree at every vertex."""
        return not gf2.gram(self.d1, self.d2).any()


def boundary_maps(c: CellComplex) -> BoundaryMaps:
    vertex_order = tuple(sorted(c.vertices))
    edge_order = tuple(sorted(c.edges))
    face_order = tuple(sorted(c.faces))
    eidx = {e: i for i, e in enumerate(edge_order)}
    ne = len(edge_order)
    d1 = gf2.zeros(len(vertex_order), ne)
    vidx = {v: i for i, v in enumerate(vertex_order)}
    for e, (u, v) in c.edges.items():
        gf2.set_bit(d1[vidx[u]], eidx[e])
        gf2.set_bit(d1[vidx[v]], eidx[e])
    d2 = gf2.zeros(len(face_order), ne)
    for fi, f in enumerate(face_order):
        counts = {}
        for e in c.faces[f]:
            counts[e] = counts.get(e, 0) + 1
        for e, k in counts.items():
            if k % 2:
                gf2.set_bit(d2[fi], eidx[e])
    return BoundaryMaps(vertex_order, edge_order, face_order, d1, d2)


# -- tree-cotree skeleton ----------------------------------------------


@dataclass
class _Skeleton:
    vertex_tree: set          # edge ids
    face_tree: set            # edge ids
    leftover: list            # edge ids, sorted; one homology pair each
    v_parent: dict            # vertex -> (parent vertex, edge) or None at root
    f_parent: dict            # face -> (parent face, edge) or None at root
    z_basis: list             # BinaryChain per leftover: cycle in vertex tree
    w_basis: list             # BinaryChain per leftover: cycle in face tree
    sig: dict                 # edge id -> int bitmask over w_basis
    k: int


_cache: "weakref.WeakKeyDictionary[CellComplex, _Skeleton]" = weakref.WeakKeyDictionary()


def _skeleton(c: CellComplex) -> _Skeleton:
    got = _cache.get(c)
    if got is not None:
        return got
    if not c.is_closed():
        raise HomologyError("not-closed", "homology tooling expects a closed surface")

    # Spanning tree of the vertex graph, BFS in sorted order.
    adj = {v: [] for v in c.vertices}
    for e in sorted(c.edges):
        u, v = c.edges[e]
        adj[u].append((e, v))
        adj[v].append((e, u))
    root = min(c.vertices)
    v_parent = {root: None}
    vertex_tree = set()
    queue = [root]
    qi = 0
    while qi < len(queue):
        u = queue[qi]
        qi += 1
        for e, w in adj[u]:
            if w not in v_parent:
                v_parent[w] = (u, e)
                vertex_tree.add(e)
                queue.append(w)
    if len(v_parent) != len(c.vertices):
        raise HomologyError("disconnected", "vertex graph is not connected")

    # Spanning tree of the face graph using only non-tree edges.
    slots = c.edge_slots()
    fadj = {f: [] for f in c.faces}
    for e in sorted(c.edges):
        if e in vertex_tree:
            continue
        sl = slots[e]
        if len(sl) != 2:
            raise HomologyError("not-closed", f"edge {e} has {len(sl)} face slots")
        (f1, _), (f2, _) = sl
        if f1 != f2:
            fadj[f1].append((e, f2))
            fadj[f2].append((e, f1))
    froot = min(c.faces)
    f_parent = {froot: None}
    face_tree = set()
    queue = [froot]
    qi = 0
    while qi < len(queue):
        g = queue[qi]
        qi += 1
        for e, g2 in fadj[g]:
            if g2 not in f_parent:
                f_parent[g2] = (g, e)
                face_tree.add(e)
                queue.append(g2)
    if len(f_parent) != len(c.faces):
        raise HomologyError("disconnected", "face graph did not span; surface broken")

    leftover = sorted(set(c.edges) - vertex_tree - face_tree)
    k = 2 - c.euler_characteristic()
    if len(leftover) != k:
        raise HomologyError(
            "chi-mismatch",
            f"tree-cotree leftover {len(leftover)} != 2 - chi = {k}",
        )

    def v_path(v):
        out = set()
        while v_parent[v] is not None:
            u, e = v_parent[v]
            out.add(e)
            v = u
        return out

    def f_path(f):
        out = set()
        while f_parent[f] is not None:
            g, e = f_parent[f]
            out.add(e)
            f = g
        return out

    z_basis = []
    w_basis = []
    for e in leftover:
        u, v = c.edges[e]
        z_basis.append(BinaryChain(frozenset(v_path(u) ^ v_path(v) ^ {e})))
        (f1, _), (f2, _) = slots[e]
        w_basis.append(BinaryChain(frozenset(f_path(f1) ^ f_path(f2) ^ {e})))

    sig = {e: 0 for e in c.edges}
    for i, w in enumerate(w_basis):
        for e in w.support:
            sig[e] |= 1 << i

    sk = _Skeleton(
        vertex_tree=vertex_tree,
        face_tree=face_tree,
        leftover=leftover,
        v_parent=v_parent,
        f_parent=f_parent,
        z_basis=z_basis,
        w_basis=w_basis,
        sig=sig,
        k=k,
    )
    _cache[c] = sk
    return sk


def _as_support(chain):
    if isinstance(chain, BinaryChain):
        return chain.support
    return frozenset(int(e) for e in chain)


def is_nullhomologous(c: CellComplex, chain) -> bool:
    """Does this cycle bound faces?  Raises if the chain is not a cycle."""
    support = _as_support(chain)
    parity = {}
    for e in support:
        pair = c.edges.get(e)
        if pair is None:
            raise HomologyError("missing-cell", f"edge {e} not in complex")
        for v in pair:
            parity[v] = parity.get(v, 0) ^ 1
    if any(parity.values()):
        raise HomologyError("not-a-cycle", "chain has nonzero vertex boundary")
    sk = _skeleton(c)
    acc = 0
    for e in support:
        acc ^= sk.sig[e]
    return acc == 0


# -- CSS code -----------------------------------------------------------


@dataclass
class CssCode:
    """CSS code on the edges: vertex stars check one error type, faces the other.

    logical_z[i] is a cycle in the surface, logical_x[i] a cycle in the
    dual, normalized so logical_z[i] intersects logical_x[j] an odd number
    of times exactly when i == j.
    """

    n: int
    k: int
    edge_order: tuple
    vertex_order: tuple
    face_order: tuple
    Hx: np.ndarray
    Hz: np.ndarray
    logical_z: list
    logical_x: list
    z_labels: list
    x_labels: list
    edge_index: dict = field(repr=False, default_factory=dict)
    _sig_x: dict = field(repr=False, default_factory=dict)
    _sig_z: dict = field(repr=False, default_factory=dict)

    def pack(self, chain) -> np.ndarray:
        return gf2.row_from_indices(
            [self.edge_index[e] for e in _as_support(chain)], self.n
        )

    def pairing_matrix(self) -> np.ndarray:
        Z = np.vstack([self.pack(z) for z in self.logical_z])
        X = np.vstack([self.pack(x) for x in self.logical_x])
        return gf2.gram(Z, X)

    def stabilizers_commute(self) -> bool:
        return not gf2.gram(self.Hx, self.Hz).any()

    def logicals_commute_with_stabilizers(self) -> bool:
        if self.k == 0:
            return True
        Z = np.vstack([self.pack(z) for z in self.logical_z])
        X = np.vstack([self.pack(x) for x in self.logical_x])
        return not gf2.gram(Z, self.Hx).any() and not gf2.gram(X, self.Hz).any()


def css_from_complex(c: CellComplex) -> CssCode:
    """Extract the CSS code of a closed surface complex.

    The transverse-cycle count k always equals 2 - chi.  When the complex
    carries a seam registry (handled surfaces), the seam rings are worked
    into the cycle basis first and labeled with their handle ids; the
    rest of the basis is filled algebraically.  The dual basis is then
    normalized against the cycle basis so the pairing matrix is exactly
    the identity.
    """
    maps = boundary_maps(c)
    if not maps.composition_is_zero():
        raise HomologyError("bad-complex", "face boundaries are not cycles")
    sk = _skeleton(c)
    n = len(maps.edge_order)
    k = sk.k
    rank_x = gf2.rank(maps.d1, n)
    rank_z = gf2.rank(maps.d2, n)
    if n - rank_x - rank_z != k:
        raise HomologyError(
            "chi-mismatch",
            f"n - rank(Hx) - rank(Hz) = {n - rank_x - rank_z}, expected {k}",
        )
    eidx = {e: i for i, e in enumerate(maps.edge_order)}

    def pack_chain(support):
        return gf2.row_from_indices([eidx[e] for e in support], n)

    # Greedy basis: seam rings first (labeled), tree-cotree cycles after.
    # The span of Hz plus accepted cycles is kept in RREF so each
    # candidate costs one reduction, not a fresh elimination.
    hz_rref, hz_piv = gf2.row_reduce(maps.d2, n)
    span = np.vstack([hz_rref[: len(hz_piv)], gf2.zeros(k, n)])
    span_rows = len(hz_piv)
    span_pivots = list(hz_piv)
    logical_z = []
    z_labels = []

    def try_add(support, label):
        nonlocal span_rows
        if len(logical_z) >= k:
            return False
        res = gf2.reduce_vector(
            span[:span_rows], span_pivots, pack_chain(support)
        )
        if not res.any():
            return False
        p = int(gf2.indices_of(res, n)[0])
        at = int(np.searchsorted(np.asarray(span_pivots, dtype=np.int64), p))
        span[at + 1 : span_rows + 1] = span[at:span_rows]
        span[at] = res
        span_pivots.insert(at, p)
        span_rows += 1
        w = p >> 6
        mask = np.uint64(1) << np.uint64(p & 63)
        hit = np.nonzero((span[:span_rows, w] & mask) != 0)[0]
        hit = hit[hit != at]
        if hit.size:
            span[hit] ^= span[at]
        logical_z.append(BinaryChain(frozenset(support)))
        z_labels.append(label)
        return True

    seams = c.meta.get("seams") or {}
    for hid in sorted(seams):
        support = set(int(e) for e in seams[hid])
        if not all(e in c.edges for e in support):
            continue
        try:
            trace_cycle(c, support)
        except SurgeryError:
            continue
        try_add(support, {"kind": "seam", "handle": int(hid)})
    for i, z in enumerate(sk.z_basis):
        if len(logical_z) >= k:
            break
        try_add(z.support, {"kind": "algebraic", "index": i})
    if len(logical_z) != k:
        raise HomologyError("basis-incomplete", "could not complete the cycle basis")

    # Dual basis, then normalize the pairing to the identity.
    Zrows = (
        np.vstack([pack_chain(z.support) for z in logical_z])
        if k
        else gf2.zeros(0, n)
    )
    Xrows = (
        np.vstack([pack_chain(w.support) for w in sk.w_basis])
        if k
        else gf2.zeros(0, n)
    )
    P = gf2.gram(Zrows, Xrows)
    Pinv = gf2.inverse(gf2.pack(P), k) if k else gf2.zeros(0, 0)
    if k and Pinv is None:
        raise HomologyError("basis-incomplete", "degenerate cycle pairing")
    logical_x = []
    x_labels = []
    for col in range(k):
        combo = frozenset()
        for j in range(k):
            if gf2.get_bit(Pinv[j], col):
                combo ^= sk.w_basis[j].support
        logical_x.append(BinaryChain(combo))
        x_labels.append({"partner": dict(z_labels[col])})

    code = CssCode(
        n=n,
        k=k,
        edge_order=maps.edge_order,
        vertex_order=maps.vertex_order,
        face_order=maps.face_order,
        Hx=maps.d1,
        Hz=maps.d2,
        logical_z=logical_z,
        logical_x=logical_x,
        z_labels=z_labels,
        x_labels=x_labels,
        edge_index=eidx,
    )
    code._sig_x = {e: 0 for e in maps.edge_order}
    code._sig_z = {e: 0 for e in maps.edge_order}
    for i, x in enumerate(logical_x):
        for e in x.support:
            code._sig_x[e] |= 1 << i
    for i, z in enumerate(logical_z):
        for e in z.support:
            code._sig_z[e] |= 1 << i
    return code


# -- systoles -----------------------------------------------------------


@dataclass
class SystoleReport:
    primal_length: int
    primal_cycle: BinaryChain
    dual_length: int
    dual_cycle: BinaryChain
    method: str = "bfs-fundamental"


def _min_nontrivial_cycle(c: CellComplex):
    """Exact shortest homologically nontrivial cycle.

    Scans BFS trees from every root; on some root lying on a systolic
    cycle, that cycle splits into two shortest paths plus one edge, so
    the fundamental-cycle bound is tight there.  Ties prefer the
    lexicographically smallest sorted edge tuple among tight candidates.
    """
    sk = _skeleton(c)
    if sk.k == 0:
        raise HomologyError("no-cycles", "surface has trivial homology")
    sig = sk.sig
    adj = {v: [] for v in c.vertices}
    for e in sorted(c.edges):
        u, v = c.edges[e]
        adj[u].append((e, v))
        adj[v].append((e, u))
    best_len = None
    best_support = None
    for root in sorted(c.vertices):
        depth = {root: 0}
        acc = {root: 0}
        parent = {root: None}
        order = [root]
        qi = 0
        while qi < len(order):
            u = order[qi]
            qi += 1
            if best_len is not None and depth[u] * 2 > best_len:
                break
            for e, w in adj[u]:
                if w not in depth:
                    depth[w] = depth[u] + 1
                    acc[w] = acc[u] ^ sig[e]
                    parent[w] = (u, e)
                    order.append(w)

        def path_edges(v):
            out = set()
            while parent[v] is not None:
                u, e = parent[v]
                out.add(e)
                v = u
            return out

        for e in sorted(c.edges):
            u, v = c.edges[e]
            if u not in depth or v not in depth:
                continue
            if parent.get(u) and parent[u][1] == e or parent.get(v) and parent[v][1] == e:
                continue
            bound = depth[u] + depth[v] + 1
            if best_len is not None and bound > best_len:
                continue
            if acc[u] ^ acc[v] ^ sig[e] == 0:
                continue
            support = path_edges(u) ^ path_edges(v) ^ {e}
            # Overlapping paths can cancel down to a shorter or even
            # trivial chain; re-check length and class on the real thing.
            real = 0
            for ee in support:
                real ^= sig[ee]
            if real == 0:
                continue
            length = len(support)
            key = (length, tuple(sorted(support)))
            if best_len is None or key < (best_len, tuple(sorted(best_support))):
                best_len, best_support = length, support
    return best_len, BinaryChain(frozenset(best_support))


def systole(c: CellComplex) -> SystoleReport:
    """Shortest nontrivial cycle lengths of the surface and its dual."""
    p_len, p_cyc = _min_nontrivial_cycle(c)
    d = dualize(c)
    d_len, d_cyc = _min_nontrivial_cycle(d)
    return SystoleReport(
        primal_length=p_len,
        primal_cycle=p_cyc,
        dual_length=d_len,
        dual_cycle=d_cyc,
    )


def systole_bruteforce(c: CellComplex, r_max: int, max_steps: int = 20_000_000):
    """Oracle: enumerate vertex-simple cycles up to length r_max.

    Returns (length, BinaryChain, inconclusive).  inconclusive=True means
    no nontrivial cycle of length <= r_max exists, so the systole is
    larger; a budget overrun raises instead of guessing.
    """
    sk = _skeleton(c)
    sig = sk.sig
    adj = {v: [] for v in c.vertices}
    for e in sorted(c.edges):
        u, v = c.edges[e]
        adj[u].append((e, v))
        adj[v].append((e, u))
    best = None
    best_edges = None
    steps = 0
    for s in sorted(c.vertices):
        cap = r_max if best is None else min(r_max, best - 1)
        if cap < 2:
            break
        # Iterative DFS over paths whose vertices stay >= s, so each
        # cycle is found exactly at its smallest vertex.
        stack = [(s, iter(adj[s]), 0, [])]
        on_path = {s}
        edges_used = []
        while stack:
            v, it, acc_sig, _ = stack[-1]
            advanced = False
            for e, w in it:
                steps += 1
                if steps > max_steps:
                    raise HomologyError(
                        "oracle-infeasible",
                        f"cycle enumeration exceeded {max_steps} steps",
                    )
                if edges_used and e == edges_used[-1]:
                    continue
                if w == s and len(edges_used) >= 1:
                    support = frozenset(edges_used + [e])
                    if len(support) != len(edges_used) + 1:
                        continue
                    if acc_sig ^ sig[e]:
                        length = len(support)
                        if best is None or (length, tuple(sorted(support))) < (
                            best,
                            tuple(sorted(best_edges)),
                        ):
                            best, best_edges = length, support
                            cap = min(r_max, best - 1)
                    continue
                if w < s or w in on_path:
                    continue
                if len(edges_used) + 1 > cap - 1:
                    continue
                stack.append((w, iter(adj[w]), acc_sig ^ sig[e], None))
                on_path.add(w)
                edges_used.append(e)
                advanced = True
                break
            if not advanced:
                stack.pop()
                if edges_used:
                    edges_used.pop()
                if stack:
                    on_path.discard(v)
    if best is None:
        return None, None, True
    return best, BinaryChain(best_edges), False


# -- handle loops -------------------------------------------------------


def handle_l_loop(c: CellComplex, handle, avoid=()) -> BinaryChain:
    """Shortest transverse loop through one handle.

    Cuts the surface along the handle's seam ring and takes the shortest
    path between the two copies of a seam vertex; mapped back, that is a
    vertex-simple cycle crossing the seam exactly once, hence
    homologically nontrivial.  Vertices in `avoid` are off limits, which
    lets callers route successive loops around each other.
    """
    seams = c.meta.get("seams") or {}
    if handle not in seams:
        raise HomologyError("no-such-handle", f"no seam registered for handle {handle}")
    seam = seams[handle]
    if not all(e in c.edges for e in seam):
        raise HomologyError("no-such-handle", f"seam of handle {handle} was destroyed")
    try:
        cut_c, cut = cut_along_cycle(c, seam)
    except SurgeryError as err:
        raise HomologyError("no-such-handle", f"seam no longer cuts: {err}") from err

    b0, b1 = cut.boundary_ids
    circ0 = cut_c.boundaries[b0]
    circ1 = cut_c.boundaries[b1]
    twin = {}
    by_origin = {}
    for v in circ0.vertices:
        by_origin[cut.vertex_origin[v]] = v
    for v in circ1.vertices:
        twin[by_origin[cut.vertex_origin[v]]] = v

    avoid = frozenset(avoid)

    def blocked(v):
        return cut.vertex_origin.get(v, v) in avoid

    adj = {v: [] for v in cut_c.vertices}
    for e in sorted(cut_c.edges):
        u, v = cut_c.edges[e]
        adj[u].append((e, v))
        adj[v].append((e, u))

    candidates = []
    for start in sorted(twin):
        if blocked(start):
            continue
        goal = twin[start]
        depth = {start: 0}
        parent = {start: None}
        order = [start]
        qi = 0
        while qi < len(order) and goal not in depth:
            u = order[qi]
            qi += 1
            for e, w in adj[u]:
                if w not in depth and not blocked(w):
                    depth[w] = depth[u] + 1
                    parent[w] = (u, e)
                    order.append(w)
        if goal not in depth:
            continue
        path = []
        v = goal
        while parent[v] is not None:
            u, e = parent[v]
            path.append(e)
            v = u
        candidates.append((depth[goal], start, path))
    if not candidates:
        raise HomologyError("no-loop", f"handle {handle} copies are disconnected")
    candidates.sort(key=lambda t: (t[0], t[1]))

    for _, start, path in candidates:
        support = set()
        for e in path:
            orig = cut.edge_origin.get(e, e)
            support ^= {orig}
        try:
            trace_cycle(c, support)
        except SurgeryError:
            continue
        if is_nullhomologous(c, support):
            continue
        return BinaryChain(frozenset(support))
    raise HomologyError("no-loop", f"no simple crossing loop for handle {handle}")
