"""Invariant measures at finite depth, with exact rational arithmetic.

A probability vector on the level-n towers determines base masses
``μ_n(t) = seed(t)/h_n(t)``; lower levels follow from ``μ_m = P_{m,n} μ_n``.
Point-mass seeds at the deepest level stand in for the ergodic measures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .diagram import DiagramError, DiagramSpec, product_matrix

DELTA = 0.05
CLUSTER_TOL = 0.02
CLUSTER_LEVEL = 2
TRAIL_LEVELS = 3


@lru_cache(maxsize=256)
def _product(spec: DiagramSpec, m: int, n: int):
    return product_matrix(spec, m, n)


@lru_cache(maxsize=64)
def _heights(spec: DiagramSpec, n: int):
    return spec.heights(n)


@dataclass(frozen=True)
class MeasureVector:
    level: int
    base: tuple[Fraction, ...]
    tower: tuple[Fraction, ...]

    def __post_init__(self):
        if sum(self.tower) != 1:
            raise DiagramError(f"tower masses at level {self.level} sum to {sum(self.tower)}")

    def mass(self, t: int) -> Fraction:
        return self.tower[t - 1]


def _as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x) if isinstance(x, int) else Fraction(str(x))


def measure_estimate(spec: DiagramSpec, m: int, n: int, seed) -> MeasureVector:
    """Level-``m`` measure induced by tower masses ``seed`` at level ``n``."""
    if not 1 <= m <= n <= spec.depth:
        raise DiagramError(f"levels ({m}, {n}) out of range for depth {spec.depth}")
    seed = [_as_fraction(x) for x in seed]
    if len(seed) != spec.rank:
        raise DiagramError(f"seed has {len(seed)} entries, rank is {spec.rank}")
    if any(x < 0 for x in seed) or sum(seed) != 1:
        raise DiagramError("seed must be a probability vector")
    h_n = _heights(spec, n)
    mu_n = [s / h for s, h in zip(seed, h_n)]
    P = _product(spec, m, n)
    mu_m = tuple(sum((P[i][j] * mu_n[j] for j in range(spec.rank)), Fraction(0)) for i in range(spec.rank))
    h_m = _heights(spec, m)
    return MeasureVector(m, mu_m, tuple(h * x for h, x in zip(h_m, mu_m)))


def point_seed(rank: int, t: int) -> list[Fraction]:
    return [Fraction(int(i == t)) for i in range(1, rank + 1)]


def uniform_seed(rank: int) -> list[Fraction]:
    return [Fraction(1, rank)] * rank


def l1(u, v) -> Fraction:
    return sum((abs(a - b) for a, b in zip(u, v)), Fraction(0))


def simplex_diameter(spec: DiagramSpec, m: int, n: int) -> Fraction:
    """Largest L1 distance between level-``m`` tower vectors of point seeds at ``n``."""
    if not 1 <= m < n <= spec.depth:
        raise DiagramError(f"levels ({m}, {n}) out of range for depth {spec.depth}")
    vecs = [measure_estimate(spec, m, n, point_seed(spec.rank, t)).tower for t in spec.vertices]
    return max((l1(u, v) for i, u in enumerate(vecs) for v in vecs[i + 1:]), default=Fraction(0))


# --------------------------------------------------------------------------
# Cleanliness
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasureGroup:
    seeds: tuple[int, ...]
    I: frozenset[int]
    # (level, vertex) -> (lowest, highest) tower mass over the group's seeds
    trajectory: dict[tuple[int, int], tuple[Fraction, Fraction]]


@dataclass(frozen=True)
class CleanlinessReport:
    delta: float
    tol: float
    depth: int
    groups: tuple[MeasureGroup, ...]
    vanishing: frozenset[int]
    decreasing: frozenset[int]  # vanishing vertices whose mass drops monotonically
    exact: bool
    notes: tuple[str, ...] = field(default=())

    def partition(self) -> list[frozenset[int]]:
        return [g.I for g in self.groups if g.I]


def _single_linkage(vectors: dict[int, tuple[Fraction, ...]], tol: float) -> list[list[int]]:
    parent = {t: t for t in vectors}

    def find(t):
        while parent[t] != t:
            parent[t] = parent[parent[t]]
            t = parent[t]
        return t

    keys = sorted(vectors)
    for i, a in enumerate(keys):
        for b in keys[i + 1:]:
            if l1(vectors[a], vectors[b]) <= Fraction(str(tol)):
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for t in keys:
        groups.setdefault(find(t), []).append(t)
    return sorted(groups.values())


def cleanliness_classify(spec: DiagramSpec, depth: int | None = None, delta: float = DELTA,
                         tol: float = CLUSTER_TOL, cluster_level: int = CLUSTER_LEVEL) -> CleanlinessReport:
    """Group point-mass seeds at ``depth`` into candidate ergodic measures.

    Seeds are clustered (single linkage, L1 within ``tol``) on their tower
    vectors at ``cluster_level``.  A group's I-set holds the vertices whose
    tower mass stays at least ``delta`` over the three levels below the
    deepest one, for every seed in the group.
    """
    N = spec.depth if depth is None else depth
    if N < 4 or N > spec.depth:
        raise DiagramError(f"cleanliness needs 4 <= depth <= {spec.depth}")
    d = spec.rank
    levels = list(range(1, N))
    towers = {t: {m: measure_estimate(spec, m, N, point_seed(d, t)).tower for m in levels}
              for t in spec.vertices}
    clusters = _single_linkage({t: towers[t][cluster_level] for t in spec.vertices}, tol)
    trail = levels[-TRAIL_LEVELS:]
    dfrac = Fraction(str(delta))
    raw = []
    for seeds in clusters:
        traj = {}
        for m in levels:
            for v in spec.vertices:
                vals = [towers[t][m][v - 1] for t in seeds]
                traj[(m, v)] = (min(vals), max(vals))
        floor = {v: min(traj[(m, v)][0] for m in trail) for v in spec.vertices}
        raw.append((seeds, traj, floor))
    # a vertex qualifying for several groups goes where its floor is highest
    owner = {}
    for v in spec.vertices:
        best = None
        for gi, (_, _, floor) in enumerate(raw):
            if floor[v] >= dfrac and (best is None or floor[v] > raw[best][2][v]):
                best = gi
        if best is not None:
            owner[v] = best
    groups = tuple(MeasureGroup(tuple(seeds), frozenset(v for v, g in owner.items() if g == gi), traj)
                   for gi, (seeds, traj, _) in enumerate(raw))
    vanishing = frozenset(v for v in spec.vertices if v not in owner)
    decreasing = set()
    for v in vanishing:
        hi = [max(g.trajectory[(m, v)][1] for g in groups) for m in trail]
        if all(b <= a for a, b in zip(hi, hi[1:])):
            decreasing.add(v)
    exact = any(g.I == frozenset(spec.vertices) for g in groups)
    return CleanlinessReport(delta, tol, N, groups, vanishing, frozenset(decreasing), exact)


# --------------------------------------------------------------------------
# Column diagnostics
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LowIndependence:
    I: frozenset[int]
    m: int
    threshold: Fraction
    ratios: dict[int, Fraction]  # n -> min_{t1,t2 in I} P_{m,n}[t1][t2]/q_{m,n}
    n0: int | None


def low_independence_check(spec: DiagramSpec, I, m: int, depth: int | None = None,
                           delta: float = DELTA) -> LowIndependence:
    spec.require_toeplitz()
    I = frozenset(I)
    if not I:
        raise DiagramError("I must be nonempty")
    N = spec.depth if depth is None else depth
    threshold = Fraction(str(delta)) / 3
    ratios = {}
    for n in range(m + 1, N + 1):
        P = _product(spec, m, n)
        q = spec.q_range(m, n)
        ratios[n] = min(Fraction(P[a - 1][b - 1], q) for a in I for b in I)
    n0 = None
    for n in sorted(ratios, reverse=True):
        if ratios[n] < threshold:
            break
        n0 = n
    return LowIndependence(I, m, threshold, ratios, n0)


def tower_mass_limit_table(spec: DiagramSpec, depth: int | None = None) -> dict[tuple[int, int], tuple[Fraction, Fraction]]:
    """``(level, vertex) -> (lo, hi)`` over all point-mass seeds at the deepest level."""
    N = spec.depth if depth is None else depth
    if N < 3:
        raise DiagramError("needs depth >= 3")
    table = {}
    for m in range(1, N):
        vecs = [measure_estimate(spec, m, N, point_seed(spec.rank, t)).tower for t in spec.vertices]
        for v in spec.vertices:
            vals = [vec[v - 1] for vec in vecs]
            table[(m, v)] = (min(vals), max(vals))
    return table
