"""Error sampling, syndromes, decoding, and failure-rate estimation.

The two error species never mix: bit flips live on the primal graph and
are checked by vertex stars, phase flips are the same story on the dual
graph.  Decoding therefore always means: find the flagged checks, pair
them up cheaply, and read back shortest paths.  The matching is exact
(subset DP for small defect sets, dense blossom above that), and the
verdict on a decoded round is pure homology: the residual either bounds
or it crosses some logical loop, and the signature words say which.

Monte Carlo runs derive one counter-based stream per trial from the
master seed, so any single trial can be replayed in isolation.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np

from . import gf2
from ._kernels import bfs_dists, blossom, match_dp, walk_path
from .homology import BinaryChain, CssCode, css_from_complex, systole
from .lattice import CellComplex, dualize

_Z95 = 1.959963984540054


class DecodingError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


# -- domain types -------------------------------------------------------


@dataclass(frozen=True)
class ErrorPattern:
    """Independent bit-flip and phase-flip supports on the edges."""

    x_chain: BinaryChain
    z_chain: BinaryChain


@dataclass(frozen=True)
class Syndrome:
    """Flagged checks of one sector.

    sector "x": vertex ids with odd incidence to the bit-flip chain.
    sector "z": face ids whose boundary meets the phase-flip chain an
    odd number of times; these are the vertices of the dual graph.
    """

    sector: str
    defects: frozenset

    def __len__(self):
        return len(self.defects)


@dataclass(frozen=True)
class Outcome:
    """Homology verdict on one decoded round."""

    success: bool
    x_flips: tuple
    z_flips: tuple

    @property
    def failed_qubits(self):
        return tuple(sorted(set(self.x_flips) | set(self.z_flips)))


@dataclass(frozen=True)
class MlDecision:
    """Most likely error coset, with the full posterior for auditing.

    labels[i] is a sorted tuple of logical indices; label () is the
    class of the reference correction itself.  correction realizes the
    winning class.
    """

    sector: str
    label: tuple
    correction: BinaryChain
    labels: tuple
    probabilities: tuple


@dataclass(frozen=True)
class TrialSummary:
    trials: int
    p: float
    decoder: str
    seed: int
    distance: int
    failures: int
    eps_hat: float
    ci_low: float
    ci_high: float
    x_failures: int
    z_failures: int
    qubit_failures: tuple
    handle_qubits: tuple
    handle_failures: int
    handle_trials: int
    handle_eps: float
    handle_ci_low: float
    handle_ci_high: float


@dataclass(frozen=True)
class ScalingFit:
    beta: float
    K: float
    p_c: float
    residuals: tuple
    n_points: int
    dropped: int
    distances: tuple
    rates: tuple


def wilson_interval(successes: int, total: int, z: float = _Z95):
    """95% score interval for a binomial fraction; (0, 1) when empty."""
    if total == 0:
        return (0.0, 1.0)
    ph = successes / total
    zz = z * z
    den = 1.0 + zz / total
    center = (ph + zz / (2 * total)) / den
    half = z * math.sqrt(ph * (1.0 - ph) / total + zz / (4.0 * total * total)) / den
    return (max(0.0, center - half), min(1.0, center + half))


# -- per-complex decoding contexts --------------------------------------


class _SectorContext:
    """CSR graph plus edge-position translation for one sector."""

    def __init__(self, graph: CellComplex, eids):
        epos = {e: i for i, e in enumerate(eids)}
        vids, indptr, nbr, via = graph.adjacency_csr()
        self.vids = vids
        self.vidx = {v: i for i, v in enumerate(vids)}
        self.V = len(vids)
        self.indptr = indptr
        self.nbr = nbr
        self.via = np.array([epos[int(e)] for e in via], dtype=np.int64)
        self.ends0 = np.empty(len(eids), dtype=np.int64)
        self.ends1 = np.empty(len(eids), dtype=np.int64)
        for i, e in enumerate(eids):
            u, v = graph.edges[e]
            self.ends0[i] = self.vidx[u]
            self.ends1[i] = self.vidx[v]

    def defect_indices(self, sel):
        """Vertex indices with odd incidence to the selected edges."""
        counts = np.bincount(
            np.concatenate((self.ends0[sel], self.ends1[sel])), minlength=self.V
        )
        return np.nonzero(counts & 1)[0]


_ctx_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()
_code_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _contexts(c: CellComplex):
    got = _ctx_cache.get(c)
    if got is None:
        eids = tuple(sorted(c.edges))
        got = {
            "eids": eids,
            "epos": {e: i for i, e in enumerate(eids)},
            "x": _SectorContext(c, eids),
            "z": _SectorContext(dualize(c), eids),
        }
        _ctx_cache[c] = got
    return got


def _code_of(c: CellComplex) -> CssCode:
    code = _code_cache.get(c)
    if code is None:
        code = css_from_complex(c)
        _code_cache[c] = code
    return code


def _sig_planes(code: CssCode, eids, logicals):
    """Per-edge signature words: plane w bit i says edge lies on logical
    64*w + i.  XOR along a cycle gives its pairing with the whole basis."""
    epos = {e: i for i, e in enumerate(eids)}
    nplanes = max(1, (code.k + 63) // 64)
    planes = np.zeros((len(eids), nplanes), dtype=np.uint64)
    for i, chain in enumerate(logicals):
        w, b = divmod(i, 64)
        bit = np.uint64(1 << b)
        for e in chain.support:
            planes[epos[e], w] ^= bit
    return planes


def _bits_of(words) -> tuple:
    out = []
    for w, word in enumerate(words):
        word = int(word)
        while word:
            low = word & -word
            out.append(64 * w + low.bit_length() - 1)
            word ^= low
    return tuple(out)


def _int_to_words(val: int):
    words = [val & ((1 << 64) - 1)]
    val >>= 64
    while val:
        words.append(val & ((1 << 64) - 1))
        val >>= 64
    return words


# -- sampling and syndromes ---------------------------------------------


def sample_iid_error(c: CellComplex, p: float, seed: int) -> ErrorPattern:
    """Each edge flips into either chain independently with rate p."""
    if not 0.0 <= p <= 1.0:
        raise DecodingError("invalid-parameter", f"error rate {p} outside [0, 1]")
    ctx = _contexts(c)
    eids = ctx["eids"]
    rng = np.random.Generator(np.random.Philox(key=int(seed) & ((1 << 128) - 1)))
    arr = np.asarray(eids, dtype=np.int64)
    x_sel = rng.random(len(eids)) < p
    z_sel = rng.random(len(eids)) < p
    return ErrorPattern(
        x_chain=BinaryChain.of(arr[x_sel]),
        z_chain=BinaryChain.of(arr[z_sel]),
    )


def syndrome_of(c: CellComplex, e: ErrorPattern):
    """Flagged vertex checks and face checks, as an (x, z) pair."""
    ctx = _contexts(c)
    epos = ctx["epos"]
    out = []
    for sector, chain in (("x", e.x_chain), ("z", e.z_chain)):
        sctx = ctx[sector]
        sel = np.zeros(len(ctx["eids"]), dtype=bool)
        for eid in chain.support:
            if eid not in epos:
                raise DecodingError("missing-cell", f"edge {eid} not in complex")
            sel[epos[eid]] = True
        idx = sctx.defect_indices(sel)
        out.append(
            Syndrome(sector=sector, defects=frozenset(sctx.vids[i] for i in idx))
        )
    return tuple(out)


# -- matching decoders --------------------------------------------------

_DP_MAX = 14


def _pair_up(D: np.ndarray):
    """Exact minimum-weight pairing of an even defect set."""
    n = D.shape[0]
    if n == 2:
        return [(0, 1)]
    if n <= _DP_MAX:
        _, pairs = match_dp(n, D)
        return [(int(a), int(b)) for a, b in pairs]
    off = int(D.max()) * n + 1
    W = np.zeros((n + 1, n + 1), dtype=np.int64)
    W[1:, 1:] = off - D
    np.fill_diagonal(W, 0)
    m = blossom(n, W)
    return [(u, int(m[u]) - 1) for u in range(n) if int(m[u]) - 1 > u]


def _pair_greedy(D: np.ndarray):
    n = D.shape[0]
    alive = list(range(n))
    pairs = []
    while alive:
        best = None
        for ai, i in enumerate(alive):
            for j in alive[ai + 1 :]:
                key = (int(D[i, j]), i, j)
                if best is None or key < best:
                    best = key
        _, i, j = best
        pairs.append((i, j))
        alive.remove(i)
        alive.remove(j)
    return pairs


def _decode_indices(sctx: _SectorContext, defect_vidx: np.ndarray, greedy: bool):
    """Correction mask over edge positions for the given defect set."""
    nmask = np.zeros(len(sctx.ends0), dtype=bool)
    n = defect_vidx.shape[0]
    if n == 0:
        return nmask
    dist = bfs_dists(sctx.indptr, sctx.nbr, defect_vidx, sctx.V)
    D = dist[:, defect_vidx].astype(np.int64)
    pairs = _pair_greedy(D) if greedy else _pair_up(D)
    for i, j in pairs:
        path = walk_path(
            sctx.indptr, sctx.nbr, sctx.via, dist[i], int(defect_vidx[j])
        )
        nmask[path] ^= True
    return nmask


def _syndrome_to_indices(sctx: _SectorContext, s: Syndrome) -> np.ndarray:
    if len(s.defects) % 2:
        raise DecodingError(
            "invalid-syndrome", f"odd defect count {len(s.defects)}"
        )
    try:
        idx = sorted(sctx.vidx[d] for d in s.defects)
    except KeyError as missing:
        raise DecodingError(
            "invalid-syndrome", f"unknown check id {missing.args[0]}"
        ) from None
    return np.asarray(idx, dtype=np.int64)


def _chain_from_mask(eids, mask) -> BinaryChain:
    arr = np.asarray(eids, dtype=np.int64)
    return BinaryChain.of(arr[mask])


def decode_mwpm(c: CellComplex, s: Syndrome) -> BinaryChain:
    """Minimum-weight perfect matching correction.

    Defects are paired by exact minimum total graph distance and joined
    by shortest paths; ties in the paths resolve toward smaller edge
    ids.  The result always annihilates the syndrome.
    """
    ctx = _contexts(c)
    sctx = ctx[s.sector]
    mask = _decode_indices(sctx, _syndrome_to_indices(sctx, s), greedy=False)
    return _chain_from_mask(ctx["eids"], mask)


def decode_greedy(c: CellComplex, s: Syndrome) -> BinaryChain:
    """Baseline: repeatedly connect the currently closest defect pair."""
    ctx = _contexts(c)
    sctx = ctx[s.sector]
    mask = _decode_indices(sctx, _syndrome_to_indices(sctx, s), greedy=True)
    return _chain_from_mask(ctx["eids"], mask)


# -- maximum-likelihood oracle ------------------------------------------

_ML_MAX_BITS = 22


def _packed_rows_to_ints(M: np.ndarray, ncols: int):
    out = []
    for row in M:
        val = 0
        for w, word in enumerate(row):
            val |= int(word) << (64 * w)
        out.append(val)
    return out


def decode_ml_bruteforce(c: CellComplex, s: Syndrome, p: float) -> MlDecision:
    """Exact coset posterior by enumerating the full stabilizer span.

    Sums the probability of every error consistent with the syndrome,
    coset by coset, and returns the most likely logical class.  Only
    viable when (independent checks + logical count) stays around 22
    bits; larger instances raise oracle-infeasible.
    """
    if not 0.0 <= p <= 1.0:
        raise DecodingError("invalid-parameter", f"error rate {p} outside [0, 1]")
    code = _code_of(c)
    ctx = _contexts(c)
    eids = ctx["eids"]
    epos = ctx["epos"]
    n = len(eids)
    if s.sector == "x":
        stab = code.Hz
        logicals = code.logical_z
    else:
        stab = code.Hx
        logicals = code.logical_x
    R, pivots = gf2.row_reduce(stab, n)
    rank = len(pivots)
    if rank + code.k > _ML_MAX_BITS:
        raise DecodingError(
            "oracle-infeasible",
            f"coset enumeration needs {rank + code.k} free bits",
        )
    gens = _packed_rows_to_ints(R[:rank], n)

    base = decode_greedy(c, s)
    chain_int = 0
    for e in base.support:
        chain_int |= 1 << epos[e]
    logical_ints = []
    for chain in logicals:
        val = 0
        for e in chain.support:
            val |= 1 << epos[e]
        logical_ints.append(val)

    pw = np.empty(n + 1, dtype=np.float64)
    for w in range(n + 1):
        pw[w] = (p**w) * ((1.0 - p) ** (n - w))

    labels = []
    probs = []
    for h in range(1 << code.k):
        rep = chain_int
        lbl = []
        for i in range(code.k):
            if (h >> i) & 1:
                rep ^= logical_ints[i]
                lbl.append(i)
        total = 0.0
        sigma = 0
        total += pw[(rep ^ sigma).bit_count()]
        gray = 0
        for step in range(1, 1 << rank):
            ng = step ^ (step >> 1)
            sigma ^= gens[(gray ^ ng).bit_length() - 1]
            gray = ng
            total += pw[(rep ^ sigma).bit_count()]
        labels.append(tuple(lbl))
        probs.append(total)

    best = 0
    for i in range(1, len(labels)):
        if probs[i] > probs[best]:
            best = i
    win = chain_int
    for i in labels[best]:
        win ^= logical_ints[i]
    support = []
    pos = 0
    v = win
    while v:
        if v & 1:
            support.append(eids[pos])
        v >>= 1
        pos += 1
    return MlDecision(
        sector=s.sector,
        label=labels[best],
        correction=BinaryChain.of(support),
        labels=tuple(labels),
        probabilities=tuple(probs),
    )


# -- classification -----------------------------------------------------


def residual_class(
    c: CellComplex,
    e: ErrorPattern,
    correction: ErrorPattern,
    code: CssCode = None,
) -> Outcome:
    """Judge a decoded round by the homology of error + correction.

    The correction must reproduce the error's syndrome in both sectors;
    then each residual cycle either bounds (success) or pairs oddly
    with some logical loops, which are reported by index.
    """
    if code is None:
        code = _code_of(c)
    residual_x = e.x_chain ^ correction.x_chain
    residual_z = e.z_chain ^ correction.z_chain
    sx, sz = syndrome_of(c, ErrorPattern(residual_x, residual_z))
    if sx.defects or sz.defects:
        raise DecodingError(
            "inconsistent-correction",
            "correction does not annihilate the error syndrome",
        )
    x_word = 0
    for eid in residual_x.support:
        x_word ^= code._sig_x[eid]
    z_word = 0
    for eid in residual_z.support:
        z_word ^= code._sig_z[eid]
    x_flips = _bits_of(_int_to_words(x_word))
    z_flips = _bits_of(_int_to_words(z_word))
    return Outcome(
        success=not (x_flips or z_flips), x_flips=x_flips, z_flips=z_flips
    )


# -- Monte Carlo --------------------------------------------------------


def run_trials(
    c: CellComplex,
    code: CssCode,
    p: float,
    trials: int,
    decoder: str = "mwpm",
    seed: int = 0,
    distance: int = None,
    on_trial=None,
) -> TrialSummary:
    """Sample, decode, and classify independent rounds; Wilson intervals.

    Trial t draws from a Philox stream at counter block t, so any trial
    is reproducible alone.  A trial fails when any logical pairing
    flips; per-pairing counts are kept so handle qubits (those whose
    cycle-basis label is a seam) can be read out separately from the
    base-torus ones.
    """
    if not 0.0 <= p <= 1.0:
        raise DecodingError("invalid-parameter", f"error rate {p} outside [0, 1]")
    if trials < 1:
        raise DecodingError("invalid-parameter", "need at least one trial")
    if decoder not in ("mwpm", "greedy"):
        raise DecodingError("invalid-parameter", f"unknown decoder {decoder!r}")
    greedy = decoder == "greedy"
    ctx = _contexts(c)
    eids = ctx["eids"]
    E = len(eids)
    xctx = ctx["x"]
    zctx = ctx["z"]
    sig_x = _sig_planes(code, eids, code.logical_x)
    sig_z = _sig_planes(code, eids, code.logical_z)
    if distance is None:
        distance = systole(c).primal_length

    qubit_fail = np.zeros(code.k, dtype=np.int64)
    failures = 0
    x_failures = 0
    z_failures = 0
    master = int(seed) & ((1 << 64) - 1)
    for t in range(trials):
        rng = np.random.Generator(
            np.random.Philox(key=master, counter=t << 128)
        )
        x_sel = rng.random(E) < p
        z_sel = rng.random(E) < p
        flipped = set()
        x_hit = False
        z_hit = False
        weights = []
        defect_counts = []
        for sctx, sel, planes, is_x in (
            (xctx, x_sel, sig_x, True),
            (zctx, z_sel, sig_z, False),
        ):
            didx = sctx.defect_indices(sel)
            defect_counts.append(int(didx.shape[0]))
            corr = _decode_indices(sctx, didx, greedy=greedy)
            weights.append(int(corr.sum()))
            res = sel ^ corr
            if res.any():
                words = np.bitwise_xor.reduce(planes[res], axis=0)
            else:
                words = np.zeros(planes.shape[1], dtype=np.uint64)
            bits = _bits_of(words)
            if bits:
                flipped.update(bits)
                if is_x:
                    x_hit = True
                else:
                    z_hit = True
        if flipped:
            failures += 1
            for i in flipped:
                qubit_fail[i] += 1
        x_failures += x_hit
        z_failures += z_hit
        if on_trial is not None:
            on_trial(
                {
                    "seed": seed,
                    "trial": t,
                    "p": p,
                    "decoder": decoder,
                    "defects": tuple(defect_counts),
                    "correction_weight": tuple(weights),
                    "outcome": "failure" if flipped else "success",
                    "flipped_sectors": tuple(sorted(flipped)),
                }
            )

    handle_qubits = tuple(
        i for i, lbl in enumerate(code.z_labels) if lbl.get("kind") == "seam"
    )
    handle_failures = int(sum(qubit_fail[i] for i in handle_qubits))
    handle_trials = trials * len(handle_qubits)
    h_low, h_high = wilson_interval(handle_failures, handle_trials)
    low, high = wilson_interval(failures, trials)
    return TrialSummary(
        trials=trials,
        p=p,
        decoder=decoder,
        seed=seed,
        distance=int(distance),
        failures=failures,
        eps_hat=failures / trials,
        ci_low=low,
        ci_high=high,
        x_failures=int(x_failures),
        z_failures=int(z_failures),
        qubit_failures=tuple(int(v) for v in qubit_fail),
        handle_qubits=handle_qubits,
        handle_failures=handle_failures,
        handle_trials=handle_trials,
        handle_eps=handle_failures / handle_trials if handle_trials else 0.0,
        handle_ci_low=h_low,
        handle_ci_high=h_high,
    )


# -- scaling fit --------------------------------------------------------


def fit_scaling(summaries, beta: float) -> ScalingFit:
    """Fit ln eps = K d^beta ln(p / p_c) by linear least squares.

    With a = K and b = -K ln p_c the model is linear in (a, b) against
    the regressors d^beta ln p and d^beta.  beta is a fixed input, never
    fitted.  Zero-failure rows carry no log and are dropped (counted).
    """
    if beta <= 0:
        raise DecodingError("invalid-parameter", "beta must be positive")
    rows = []
    dropped = 0
    for s in summaries:
        if s.failures == 0:
            dropped += 1
            continue
        rows.append((s.distance, s.p, s.eps_hat))
    by_d = {}
    for d, p, eps in rows:
        by_d.setdefault(d, []).append((p, eps))
    for d, pts in by_d.items():
        pts.sort()
        for (p1, e1), (p2, e2) in zip(pts, pts[1:]):
            if e2 < e1:
                raise DecodingError(
                    "non-monotone-data",
                    f"failure rate drops from {e1} to {e2} as p rises at d={d}",
                )
    dvals = sorted(by_d)
    pvals = sorted({p for _, p, _ in rows})
    if len(dvals) < 3 or len(pvals) < 3:
        raise DecodingError(
            "fit-underdetermined",
            f"need 3 distances and 3 rates, have {len(dvals)} and {len(pvals)}",
        )
    X = np.empty((len(rows), 2))
    y = np.empty(len(rows))
    for i, (d, p, eps) in enumerate(rows):
        db = float(d) ** beta
        X[i, 0] = db * math.log(p)
        X[i, 1] = db
        y[i] = math.log(eps)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    a, b = float(coef[0]), float(coef[1])
    if a <= 0:
        raise DecodingError("fit-degenerate", "fitted K is not positive")
    p_c = math.exp(-b / a)
    if not 0.0 < p_c < 1.0:
        raise DecodingError("fit-degenerate", f"fitted p_c {p_c} outside (0, 1)")
    resid = tuple(float(r) for r in (y - X @ coef))
    return ScalingFit(
        beta=beta,
        K=a,
        p_c=p_c,
        residuals=resid,
        n_points=len(rows),
        dropped=dropped,
        distances=tuple(dvals),
        rates=tuple(pvals),
    )
