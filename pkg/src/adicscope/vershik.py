"""Finite-depth Vershik dynamics on Toeplitz-type diagrams.

A path of depth ``N`` is stored by its top vertex and its edge ranks
``j_2..j_N``; everything else is derived.  Entrance times use
``r_n = Σ_{i<n} p_i·s̄_i`` with ``s̄_i = q_{i+1} - j_{i+1}``.

Sampling uses :class:`random.Random` (Mersenne Twister) seeded with
``(seed << 64) | sample_index``, so every sample has its own reproducible
stream independent of evaluation order.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from .diagram import DiagramError, DiagramSpec
from .eigen import EigenvalueCandidate, KMap, HypothesisError
from .measures import MeasureVector, measure_estimate, uniform_seed
from .residues import range_residue_counts

STABLE_LEVELS = 3


class MaximalPathError(DiagramError):
    pass


@dataclass(frozen=True)
class PathPoint:
    depth: int
    top: int
    positions: tuple[int, ...]   # j_2 .. j_N
    vertices: tuple[int, ...]    # tau_1 .. tau_N
    suffixes: tuple[int, ...]    # s_1 .. s_{N-1}
    entrance: tuple[int, ...]    # r_1 .. r_N

    def j(self, n: int) -> int:
        return self.positions[n - 2]

    def tau(self, n: int) -> int:
        return self.vertices[n - 1]

    def s(self, n: int) -> int:
        return self.suffixes[n - 1]

    def r(self, n: int) -> int:
        return self.entrance[n - 1]


def build_path(spec: DiagramSpec, top: int, positions) -> PathPoint:
    positions = tuple(positions)
    N = len(positions) + 1
    if not 2 <= N <= spec.depth:
        raise DiagramError(f"path depth {N} out of range 2..{spec.depth}")
    if top not in spec.vertices:
        raise DiagramError(f"top vertex {top} out of range")
    verts = [0] * N
    verts[N - 1] = top
    suffixes = [0] * (N - 1)
    for n in range(N, 1, -1):
        word = spec.word(n, verts[n - 1])
        j = positions[n - 2]
        if not 1 <= j <= word.length:
            raise DiagramError(f"j_{n} = {j} outside 1..{word.length}")
        verts[n - 2] = word.letter_at(j)
        suffixes[n - 2] = word.length - j
    entrance = [0]
    p = 1
    for i in range(1, N):
        # p_i for Toeplitz; general heights would need h_i(tau_i)
        p *= spec.q(i)
        entrance.append(entrance[-1] + p * suffixes[i - 1])
    return PathPoint(N, top, positions, tuple(verts), tuple(suffixes), tuple(entrance))


def _depth(spec: DiagramSpec, N: int | None) -> int:
    N = spec.depth if N is None else N
    if not 2 <= N <= spec.depth:
        raise DiagramError(f"path depth {N} out of range 2..{spec.depth}")
    return N


def min_path(spec: DiagramSpec, N: int | None = None, top: int = 1) -> PathPoint:
    N = _depth(spec, N)
    return build_path(spec, top, [1] * (N - 1))


def max_path(spec: DiagramSpec, N: int | None = None, top: int = 1) -> PathPoint:
    N = _depth(spec, N)
    pos = []
    v = top
    for n in range(N, 1, -1):
        w = spec.word(n, v)
        pos.append(w.length)
        v = w.last()
    return build_path(spec, top, list(reversed(pos)))


def is_maximal(spec: DiagramSpec, x: PathPoint) -> bool:
    return all(x.j(n) == spec.word(n, x.tau(n)).length for n in range(2, x.depth + 1))


def successor(spec: DiagramSpec, x: PathPoint, wrap: bool = False) -> PathPoint:
    """Vershik successor: bump the lowest non-maximal edge, reset everything below.

    On a maximal path, ``wrap`` returns the minimal path into the same top
    vertex; otherwise :class:`MaximalPathError` is raised.
    """
    pos = list(x.positions)
    for n in range(2, x.depth + 1):
        if pos[n - 2] < spec.word(n, x.tau(n)).length:
            pos[n - 2] += 1
            for i in range(2, n):
                pos[i - 2] = 1
            return build_path(spec, x.top, pos)
    if wrap:
        return min_path(spec, x.depth, x.top)
    raise MaximalPathError("successor of a maximal path")


def path_from_rank(spec: DiagramSpec, top: int, r: int, N: int | None = None) -> PathPoint:
    """The path into ``top`` with entrance time ``r_N = r`` (mixed-radix decode)."""
    N = _depth(spec, N)
    spec.require_toeplitz()
    if not 0 <= r < spec.p(N):
        raise DiagramError(f"r = {r} outside 0..p_{N}-1")
    pos = []
    for i in range(1, N):
        s = (r // spec.p(i)) % spec.q(i + 1)
        pos.append(spec.q(i + 1) - s)
    return build_path(spec, top, pos)


def sample_path(spec: DiagramSpec, N: int | None, masses, rng_seed: int, index: int = 0) -> PathPoint:
    """Draw a level-``N`` tower from ``masses`` and a uniform path inside it."""
    N = _depth(spec, N)
    spec.require_toeplitz()
    fr = [m if isinstance(m, Fraction) else Fraction(str(m)) for m in masses]
    if len(fr) != spec.rank or any(x < 0 for x in fr) or sum(fr) != 1:
        raise DiagramError("masses must be a probability vector over the top vertices")
    rng = random.Random((rng_seed << 64) | index)
    den = lcm(*(x.denominator for x in fr))
    u = rng.randrange(den)
    acc = 0
    top = spec.rank
    for t, x in enumerate(fr, start=1):
        acc += x.numerator * (den // x.denominator)
        if u < acc:
            top = t
            break
    return path_from_rank(spec, top, rng.randrange(spec.p(N)), N)


def suffix_between(spec: DiagramSpec, x: PathPoint, l: int, n: int) -> int:
    """``s̄_{l,n}(x)`` from the per-level digits."""
    total, scale = 0, 1
    for i in range(l, n):
        total += scale * x.s(i)
        scale *= spec.q(i + 1)
    return total


def orbit(spec: DiagramSpec, start: PathPoint, steps: int, level: int, moduli=()):
    """Rows ``(step, tau_level, r_level mod b for each b)`` along the forward orbit."""
    rows = []
    x = start
    for step in range(steps + 1):
        rows.append((step, x.tau(level), *[x.r(level) % b for b in moduli]))
        if step < steps:
            x = successor(spec, x, wrap=True)
    return rows


# --------------------------------------------------------------------------
# Phase convergence
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceReport:
    samples: int
    depth: int
    stabilized: int
    missing: int
    fraction: float
    histogram: dict[int, int]  # last level where consecutive phases differ -> count
    stable_levels: int


def phase_sequence(spec: DiagramSpec, x: PathPoint, candidate: EigenvalueCandidate, kmap: KMap,
                   t0: int) -> list[int] | None:
    """Indices ``a·(r_n + ρ_n(τ_n)) mod b`` for ``n = 2..N``, or None on a missing pair."""
    b, a, p = candidate.b, candidate.a, candidate.p
    phases = []
    r = 0
    for n in range(2, x.depth + 1):
        # r_n mod b built from residues p_{n-1} mod b and s_{n-1} mod b
        r = (r + candidate.p_mod(n - 1) * (x.s(n - 1) % b)) % b
        pair = (t0, x.tau(n))
        if pair not in kmap:
            return None
        phases.append(a * (r - p * kmap[pair]) % b)
    return phases


def convergence_test(spec: DiagramSpec, candidate: EigenvalueCandidate, kmap: KMap, t0: int,
                     samples: int, N: int | None, rng_seed: int, masses=None,
                     stable_levels: int = STABLE_LEVELS) -> ConvergenceReport:
    N = _depth(spec, N)
    if candidate.p is None:
        raise HypothesisError("candidate has no constant residue p")
    if masses is None:
        masses = (measure_estimate(spec, N, spec.depth, uniform_seed(spec.rank)).tower
                  if spec.depth > N else uniform_seed(spec.rank))
    hist: Counter = Counter()
    stabilized = missing = 0
    for i in range(samples):
        x = sample_path(spec, N, masses, rng_seed, i)
        ph = phase_sequence(spec, x, candidate, kmap, t0)
        if ph is None:
            missing += 1
            continue
        last = 0
        for n in range(3, N + 1):
            if ph[n - 2] != ph[n - 3]:
                last = n
        hist[last] += 1
        if len(set(ph[-stable_levels:])) == 1:
            stabilized += 1
    return ConvergenceReport(samples, N, stabilized, missing, stabilized / samples if samples else 0.0,
                             dict(sorted(hist.items())), stable_levels)


def bad_set_measure(spec: DiagramSpec, candidate: EigenvalueCandidate, kmap: KMap, I, m: int, n: int,
                    measure: MeasureVector) -> Fraction:
    """Exact mass of the paths whose ``s̄_{m,n}`` misses the k-map class, or with ``τ_n ∉ I``."""
    if measure.level != n:
        raise DiagramError(f"measure is at level {measure.level}, window top is {n}")
    I = frozenset(I)
    tensor = range_residue_counts(spec, m, n, candidate.b)
    e = kmap.modulus
    if candidate.b % e:
        raise DiagramError(f"k-map modulus {e} does not divide b = {candidate.b}")
    p_m = spec.p(m)
    total = Fraction(0)
    for t2 in I:
        for t1 in spec.vertices:
            cell = tensor.counts[t1 - 1, t2 - 1]
            P = int(sum(cell))
            if not P:
                continue
            k = kmap[(t1, t2)]
            hit = sum(int(c) for kk, c in enumerate(cell) if kk % e == k)
            total += (P - hit) * p_m * measure.base[t2 - 1]
    outside = sum((measure.tower[t - 1] for t in spec.vertices if t not in I), Fraction(0))
    return total + outside
