"""Circle growth on kinked lattices and the scaling formulas built on it.

A flat square lattice grows diamond circles, c(r) = 4r.  Every vertex of
valence five inside the circle feeds it an extra linear contribution, and
with kinks spread at density rho the perimeter follows

    c(r) = 4r + rho * sum_{r_k < r} c(r_k) * (r - r_k),

whose continuum solution is c(r) = L*sqrt(2)*sinh(sqrt(8)*r/L) at
rho = 8/L^2.  Everything downstream (minimal-loop radius, threshold
correction product, fidelity exponents, walk counts) evaluates stated
formulas; all logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .lattice import CellComplex

BETA_QUASILOCAL = math.log(2) / math.log(3)


class GeometryError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class GrowthProfile:
    """BFS layer census around one root.

    perimeter[r] counts vertices at graph distance exactly r (so
    perimeter[0] is 1), area[r] counts those within distance r.
    """

    root: int
    perimeter: tuple
    area: tuple

    @property
    def r_max(self) -> int:
        return len(self.perimeter) - 1


@dataclass(frozen=True)
class ScalingParams:
    L: int
    N: int
    beta: float = BETA_QUASILOCAL
    rho: float = None
    alpha: float = 0.5
    symmetrized: bool = False

    def __post_init__(self):
        if self.L < 1 or self.N < 1:
            raise GeometryError("invalid-parameter", "L and N must be positive")
        if not 0 < self.beta <= 1:
            raise GeometryError("invalid-parameter", f"beta {self.beta} not in (0, 1]")
        if self.rho is None:
            base = 8.0 / self.L**2
            object.__setattr__(self, "rho", 2 * base if self.symmetrized else base)
        if self.rho <= 0:
            raise GeometryError("invalid-parameter", f"kink density {self.rho} <= 0")
        if not 0 < self.alpha <= 1:
            raise GeometryError("invalid-parameter", f"alpha {self.alpha} not in (0, 1]")


@dataclass(frozen=True)
class WalkGrowth:
    root: int
    counts: tuple          # w(r), exact integers
    v: float               # growth rate estimate w(r_max)/w(r_max - 1)
    multiplier: float      # 4/v


@dataclass(frozen=True)
class MinLoopPrediction:
    r_star: int            # first radius whose model area reaches the target
    reference: float       # asymptotic L*ln(N)/sqrt(8)
    area_target: float


@dataclass(frozen=True)
class ThresholdFactors:
    value: float
    factors: tuple         # one multiplicand per k = 1..k_max
    k_max: int
    empty_product: bool
    nonstandard_beta: bool


def measure_circle_growth(c: CellComplex, root, r_max: int) -> GrowthProfile:
    """Exact perimeter and area of BFS circles around root."""
    if r_max < 1:
        raise GeometryError("invalid-parameter", "r_max must be at least 1")
    if root not in c.vertices:
        raise GeometryError("invalid-parameter", f"root {root} not a vertex")
    adj = {v: set() for v in c.vertices}
    for u, v in c.edges.values():
        adj[u].add(v)
        adj[v].add(u)
    depth = {root: 0}
    frontier = [root]
    perimeter = [1]
    for r in range(1, r_max + 1):
        nxt = []
        for u in frontier:
            for w in adj[u]:
                if w not in depth:
                    depth[w] = r
                    nxt.append(w)
        perimeter.append(len(nxt))
        frontier = nxt
    area = []
    total = 0
    for p in perimeter:
        total += p
        area.append(total)
    return GrowthProfile(root=root, perimeter=tuple(perimeter), area=tuple(area))


def solve_perimeter_recursion(rho: float, r_max: int) -> list:
    """Model perimeters c(0..r_max) for kink density rho.

    c(r) = 4r plus rho * c(r_k) * (r - r_k) summed over earlier radii;
    the value at r depends only on strictly smaller radii, so one forward
    sweep solves it.
    """
    if rho < 0:
        raise GeometryError("invalid-parameter", f"kink density {rho} < 0")
    c = [0.0] * (r_max + 1)
    weighted = 0.0   # sum of c(r_k) * (r - r_k), updated incrementally
    running = 0.0    # sum of c(r_k)
    for r in range(1, r_max + 1):
        weighted += running
        c[r] = 4.0 * r + rho * weighted
        running += c[r]
    return c


def recursion_area(rho: float, r_max: int) -> list:
    """Model areas: the root plus all perimeters out to each radius."""
    c = solve_perimeter_recursion(rho, r_max)
    area = [1.0]
    for r in range(1, r_max + 1):
        area.append(area[-1] + c[r])
    return area


def closed_form_perimeter(L: float, r: float) -> float:
    if L <= 0:
        raise GeometryError("invalid-parameter", f"L {L} <= 0")
    return L * math.sqrt(2.0) * math.sinh(math.sqrt(8.0) * r / L)


def predicted_min_loop(sp: ScalingParams, r_cap: int = 1_000_000) -> MinLoopPrediction:
    """Radius at which the model circle swallows a fraction alpha of the surface.

    The area target is alpha * L^2 * N; growth is exponential, so beyond
    this radius circles around almost any root collide with themselves
    and short transverse loops stop existing.
    """
    if sp.N < 2:
        raise GeometryError(
            "undefined-scaling", "minimal-loop scaling needs at least two handles"
        )
    target = sp.alpha * sp.L**2 * sp.N
    c_prev_sum = 0.0
    weighted = 0.0
    area = 1.0
    r = 0
    while area < target:
        r += 1
        if r > r_cap:
            raise GeometryError("no-convergence", f"area never reached {target}")
        weighted += c_prev_sum
        c_r = 4.0 * r + sp.rho * weighted
        c_prev_sum += c_r
        area += c_r
    return MinLoopPrediction(
        r_star=r,
        reference=sp.L * math.log(sp.N) / math.sqrt(8.0),
        area_target=target,
    )


def threshold_factor_product(sp: ScalingParams, area=None) -> ThresholdFactors:
    """Finite product of per-scale threshold corrections.

    Each working scale 3^k contributes [2*(3^k)^2 / a(3^k)]^{(1/3^k)^beta}
    up to k_max = floor(log3(L*ln N)); `area` may override the model area
    function (a callable of r).
    """
    x = sp.L * math.log(sp.N) if sp.N > 1 else 0.0
    if x < 3.0:
        return ThresholdFactors(
            value=1.0,
            factors=(),
            k_max=0,
            empty_product=True,
            nonstandard_beta=abs(sp.beta - BETA_QUASILOCAL) > 1e-9,
        )
    k_max = int(math.floor(math.log(x) / math.log(3.0)))
    if area is None:
        a = recursion_area(sp.rho, 3**k_max)

        def area(r):
            return a[r]

    factors = []
    value = 1.0
    for k in range(1, k_max + 1):
        rk = 3**k
        base = 2.0 * rk * rk / area(rk)
        f = base ** ((1.0 / rk) ** sp.beta)
        factors.append(f)
        value *= f
    return ThresholdFactors(
        value=value,
        factors=tuple(factors),
        k_max=k_max,
        empty_product=False,
        nonstandard_beta=abs(sp.beta - BETA_QUASILOCAL) > 1e-9,
    )


def threshold_factor_closed(L: float, N: float, beta: float) -> float:
    """Closed-form threshold correction 8*exp(-12*(ln N)^(1-beta)/L^beta)."""
    if not 0 < beta <= 1:
        raise GeometryError("invalid-parameter", f"beta {beta} not in (0, 1]")
    if L <= 0 or N < 2:
        raise GeometryError("invalid-parameter", "need L > 0 and N >= 2")
    return 8.0 * math.exp(-12.0 * math.log(N) ** (1.0 - beta) / L**beta)


def fidelity_exponent(L: float, N: float, beta: float) -> float:
    """The exponent (L*ln N)^beta of the failure probability."""
    if not 0 < beta <= 1:
        raise GeometryError("invalid-parameter", f"beta {beta} not in (0, 1]")
    if N < 2:
        raise GeometryError("undefined-scaling", "exponent needs at least two handles")
    return (L * math.log(N)) ** beta


def scaling_schedule(L: float, beta: float) -> float:
    """ln N as a function of L that keeps the exponent a pure power of L.

    Returns L^(beta/(1-beta)); at that schedule fidelity_exponent equals
    the same value.  beta = 1 has no finite schedule.
    """
    if not 0 < beta < 1:
        raise GeometryError("invalid-parameter", f"beta {beta} not in (0, 1)")
    return L ** (beta / (1.0 - beta))


def count_walks(c: CellComplex, root, r_max: int) -> WalkGrowth:
    """Exact counts of length-r walks from root (revisits allowed).

    Parallel edges count separately.  Integers are kept exact, so the
    counts stay valid far past 64-bit range.
    """
    if r_max < 1:
        raise GeometryError("invalid-parameter", "r_max must be at least 1")
    if root not in c.vertices:
        raise GeometryError("invalid-parameter", f"root {root} not a vertex")
    nbrs = {v: [] for v in c.vertices}
    for u, v in c.edges.values():
        nbrs[u].append(v)
        nbrs[v].append(u)
    w = {v: 0 for v in c.vertices}
    w[root] = 1
    counts = [1]
    for _ in range(r_max):
        nxt = {v: 0 for v in c.vertices}
        for u, val in w.items():
            if val:
                for x in nbrs[u]:
                    nxt[x] += val
        w = nxt
        counts.append(sum(w.values()))
    v_est = counts[-1] / counts[-2]
    return WalkGrowth(
        root=root, counts=tuple(counts), v=v_est, multiplier=4.0 / v_est
    )
