"""Eigenvalue candidates of Toeplitz-type diagrams.

A candidate ``λ = exp(2πi a/b)`` is judged from the residues of ``p_n`` mod
``b`` and from residue statistics of suffix sets.  Everything here is a
finite-depth proxy for an asymptotic statement, so thresholds are explicit
parameters and are echoed in every report.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

from .diagram import DiagramError, DiagramSpec
from .residues import ResidueCountTensor, range_residue_counts, sigma_sums

TAU_ACCEPT = 0.05
WINDOW_COUNT = 3
STABLE_LEVELS = 3
# float slack when comparing deficiencies along the ladder
LADDER_SLACK = 1e-12
# trend rules: "by-m" compares max_n D(m, n, t2) as m grows, "ladder" compares
# consecutive windows in sorted order.  For fixed m the smallest column of D
# cannot decrease when n grows, so "ladder" rejects almost every real diagram.
TREND_BY_M = "by-m"
TREND_LADDER = "ladder"

CONTINUOUS = "continuous"
CANDIDATE = "candidate"
REJECTED = "rejected"
UNDECIDED = "undecided"


class HypothesisError(ValueError):
    """An operation was called outside its hypotheses."""


@dataclass(frozen=True)
class EigenvalueCandidate:
    a: int
    b: int
    rank: int
    residues: tuple[int, ...]  # p_n mod b for n = 1..max_level
    gcds: tuple[int, ...]      # (b, p_n) for n = 1..max_level
    n0: int
    bb: int
    p: int | None
    status: str

    @property
    def max_level(self) -> int:
        return len(self.residues)

    def p_mod(self, m: int) -> int:
        if 1 <= m <= len(self.residues):
            return self.residues[m - 1]
        if self.p is not None and m >= self.n0:
            return self.p
        raise DiagramError(f"p_{m} mod {self.b} not computed (max level {self.max_level})")

    def effective_modulus(self, m: int) -> int:
        """Number of distinct phases ``b / (b, p_m)`` at level ``m``."""
        return self.b // gcd(self.b, self.p_mod(m))

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "bb": self.bb, "p": self.p, "n0": self.n0,
                "status": self.status, "residues": list(self.residues), "gcds": list(self.gcds)}


def classify_candidate(spec: DiagramSpec, a: int, b: int, max_level: int | None = None) -> EigenvalueCandidate:
    if b < 1:
        raise HypothesisError("b must be positive")
    if gcd(a, b) != 1:
        raise HypothesisError(f"gcd({a}, {b}) != 1")
    spec.require_toeplitz()
    max_level = spec.depth if max_level is None else max_level
    if not 1 <= max_level <= spec.depth:
        raise DiagramError(f"max_level {max_level} outside 1..{spec.depth}")
    residues, gcds = [], []
    p = 1
    for n in range(1, max_level + 1):
        p *= spec.q(n)
        residues.append(p % b)
        gcds.append(gcd(b, p))
    g = gcds[-1]
    n0 = gcds.index(g) + 1
    bb = b // g
    # p_n mod b from n0 on (level 1 is the hat edge and does not count)
    tail = set(residues[max(n0, 2) - 1:])
    common = tail.pop() if len(tail) == 1 else None
    if bb == 1:
        status = CONTINUOUS
    elif max_level - n0 + 1 < STABLE_LEVELS:
        status = UNDECIDED
    elif bb <= spec.rank:
        status = CANDIDATE
    else:
        status = REJECTED
    return EigenvalueCandidate(a % b if b > 1 else 0, b, spec.rank, tuple(residues), tuple(gcds),
                               n0, bb, common, status)


def manual_candidate(a: int, b: int, p: int, rank: int) -> EigenvalueCandidate:
    """Candidate with a prescribed constant residue ``p``, for hand-made checks."""
    g = gcd(b, p)
    return EigenvalueCandidate(a, b, rank, (), (), 1, b // g, p % b, CANDIDATE)


def stabilizing_telescope(spec: DiagramSpec, candidate: EigenvalueCandidate,
                          search_bound: int | None = None) -> list[int]:
    """Cut levels (starting with 1) along which ``p_n mod b`` is constant."""
    if candidate.status == REJECTED:
        raise HypothesisError("candidate is rejected")
    depth = min(spec.depth, candidate.max_level)
    identity_cut = list(range(1, depth + 1))
    if candidate.b == 1 or candidate.p is not None:
        return identity_cut
    bound = depth if search_bound is None else min(search_bound, depth)
    first = max(candidate.n0, 2)
    seen: dict[int, list[int]] = {}
    for n in range(first, bound + 1):
        seen.setdefault(candidate.p_mod(n), []).append(n)
    if not seen:
        raise HypothesisError("no levels to search")
    best = max(seen.values(), key=lambda levels: (len(levels), -levels[0]))
    if len(best) < 2:
        raise HypothesisError(
            f"no residue recurs within level {bound}: " + ", ".join(
                f"{r} at {lv}" for r, lv in sorted(seen.items())))
    return [1] + best


def default_windows(depth: int) -> list[tuple[int, int]]:
    return [(m, n) for m in range(2, depth + 1) for n in range(m + 2, depth + 1)]


# --------------------------------------------------------------------------
# Deficiency tables
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class WindowRecord:
    m: int
    n: int
    t2: int
    D: float


@dataclass(frozen=True)
class PairGap:
    m: int
    n: int
    t1: int
    t2: int
    magnitude_gap: float  # (P - |Σ|)/q
    dominant_gap: float   # (P - N^{(k*)})/q
    k: int | None


@dataclass
class DeficiencyReport:
    candidate: EigenvalueCandidate
    source: frozenset[int]
    source_mode: str
    targets: tuple[int, ...]
    windows: list[tuple[int, int]]
    records: list[WindowRecord]
    gaps: list[PairGap]
    tau: float = TAU_ACCEPT
    window_count: int = WINDOW_COUNT
    trend: str = TREND_BY_M
    accepted: bool = False
    reason: str = ""

    def value(self, m: int, n: int, t2: int) -> float:
        for r in self.records:
            if (r.m, r.n, r.t2) == (m, n, t2):
                return r.D
        raise KeyError((m, n, t2))

    def series(self, t2: int) -> list[float]:
        return [self.value(m, n, t2) for m, n in self.windows]


def _dominant(cell, modulus: int) -> tuple[int, int]:
    """(k, N^{(k)}) of the heaviest class after folding onto ``modulus``."""
    folded = [0] * modulus
    for k, c in enumerate(cell):
        folded[k % modulus] += int(c)
    best = max(range(modulus), key=lambda k: (folded[k], -k))
    return best, folded[best]


def _check_windows(spec: DiagramSpec, windows) -> list[tuple[int, int]]:
    out = sorted(set((int(m), int(n)) for m, n in windows))
    for m, n in out:
        if not 1 <= m < n <= spec.depth:
            raise DiagramError(f"window ({m}, {n}) out of range for depth {spec.depth}")
    return out


def deficiency_table(spec: DiagramSpec, candidate: EigenvalueCandidate, windows=None,
                     source: frozenset[int] | set[int] | None = None, targets=None,
                     tau: float = TAU_ACCEPT, window_count: int = WINDOW_COUNT,
                     trend: str = TREND_BY_M) -> DeficiencyReport:
    """``D(m,n,t2) = 1 - Σ_{t1∈S} |Σ_{m,n}(t1,t2)| / q_{m,n}`` over a window ladder.

    ``source`` is the set S (all vertices when omitted); ``targets`` default to
    S.  The result carries an acceptance verdict: every D over the last
    ``window_count`` windows is below ``tau`` and each target's D values
    do not grow under the chosen ``trend`` rule.
    """
    if candidate.status != CANDIDATE:
        raise HypothesisError(f"candidate status is {candidate.status}")
    spec.require_toeplitz()
    windows = _check_windows(spec, default_windows(spec.depth) if windows is None else windows)
    if not windows:
        raise DiagramError("no windows to evaluate")
    mode = "all" if source is None else "subset"
    S = frozenset(spec.vertices) if source is None else frozenset(source)
    T = tuple(sorted(S if targets is None else targets))
    records, gaps = [], []
    for m, n in windows:
        tensor = range_residue_counts(spec, m, n, candidate.b)
        sig = sigma_sums(tensor, candidate)
        e = candidate.effective_modulus(m)
        q = tensor.q_mn
        for t2 in T:
            total = sum(sig.magnitude[t1 - 1][t2 - 1] for t1 in S)
            records.append(WindowRecord(m, n, t2, 1.0 - total))
            for t1 in spec.vertices:
                cell = tensor.counts[t1 - 1, t2 - 1]
                P = int(sum(cell))
                k, top = _dominant(cell, e) if P else (None, 0)
                gaps.append(PairGap(m, n, t1, t2,
                                    sig.mass[t1 - 1][t2 - 1] - sig.magnitude[t1 - 1][t2 - 1],
                                    float(Fraction(P - top, q)), k))
    report = DeficiencyReport(candidate, S, mode, T, windows, records, gaps, tau, window_count, trend)
    report.accepted, report.reason = evaluate_acceptance(report, tau, window_count, trend)
    return report


def ladder_increase(report: DeficiencyReport, t2: int, trend: str = TREND_LADDER):
    """First pair of windows where D grows for ``t2``, or None."""
    if trend == TREND_LADDER:
        steps = list(zip(report.windows, report.windows[1:]))
        vals = {w: report.value(*w, t2) for w in report.windows}
    elif trend == TREND_BY_M:
        by_m: dict[int, float] = {}
        for m, n in report.windows:
            by_m[m] = max(by_m.get(m, 0.0), report.value(m, n, t2))
        ms = sorted(by_m)
        steps = list(zip(ms, ms[1:]))
        vals = by_m
    else:
        raise ValueError(f"unknown trend rule {trend!r}")
    for w0, w1 in steps:
        if vals[w1] > vals[w0] + LADDER_SLACK:
            return w0, w1
    return None


def evaluate_acceptance(report: DeficiencyReport, tau: float = TAU_ACCEPT,
                        window_count: int = WINDOW_COUNT, trend: str = TREND_BY_M) -> tuple[bool, str]:
    tail = report.windows[-window_count:]
    for t2 in report.targets:
        for m, n in tail:
            D = report.value(m, n, t2)
            if not D < tau:
                return False, f"D({m},{n},{t2}) = {D:.6g} >= {tau}"
    for t2 in report.targets:
        bump = ladder_increase(report, t2, trend)
        if bump is not None:
            return False, f"D increases for t2={t2} from {bump[0]} to {bump[1]} ({trend})"
    return True, f"deficiency below {tau} and non-increasing ({trend})"


# --------------------------------------------------------------------------
# k-maps, cocycle identities, Ψ-partitions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class KMap:
    """Residue map ``k(t1, t2)`` for ``t1`` any vertex and ``t2`` in ``domain``."""

    domain: frozenset[int]
    modulus: int
    k: dict[tuple[int, int], int]
    dominant_mass: dict[tuple[int, int], Fraction] = field(default_factory=dict)
    window: tuple[int, int] | None = None

    def __getitem__(self, pair: tuple[int, int]) -> int:
        try:
            return self.k[pair]
        except KeyError:
            raise DiagramError(f"k-map has no value for pair {pair}") from None

    def __contains__(self, pair) -> bool:
        return pair in self.k

    def perturbed(self, t1: int, t2: int, delta: int = 1) -> "KMap":
        k = dict(self.k)
        k[(t1, t2)] = (self[(t1, t2)] + delta) % self.modulus
        return KMap(self.domain, self.modulus, k, dict(self.dominant_mass), self.window)

    def zeroed(self) -> "KMap":
        return KMap(self.domain, self.modulus, {pair: 0 for pair in self.k}, {}, self.window)

    def to_dict(self) -> dict:
        return {"modulus": self.modulus, "window": list(self.window) if self.window else None,
                "k": {f"{a},{b}": v for (a, b), v in sorted(self.k.items())},
                "dominant_mass": {f"{a},{b}": str(v) for (a, b), v in sorted(self.dominant_mass.items())}}


def extract_kmap(spec: DiagramSpec, candidate: EigenvalueCandidate, m: int, n: int,
                 domain=None) -> KMap:
    """Dominant residue class of ``s_{m,n}`` per pair, folded to the phase count.

    Pairs with ``P_{m,n}[t1][t2] = 0`` are left out.
    """
    if candidate.status not in (CANDIDATE, CONTINUOUS):
        raise HypothesisError(f"candidate status is {candidate.status}")
    dom = frozenset(spec.vertices) if domain is None else frozenset(domain)
    tensor = range_residue_counts(spec, m, n, candidate.b)
    e = candidate.effective_modulus(m)
    k, mass = {}, {}
    for t2 in sorted(dom):
        for t1 in spec.vertices:
            cell = tensor.counts[t1 - 1, t2 - 1]
            P = int(sum(cell))
            if not P:
                continue
            kk, top = _dominant(cell, e)
            k[(t1, t2)] = kk
            mass[(t1, t2)] = Fraction(top, P)
    return KMap(dom, e, k, mass, (m, n))


@dataclass(frozen=True)
class CocycleResult:
    passed: bool
    p: int
    b: int
    violations: tuple[tuple[str, int, int, int], ...]

    def describe(self) -> str:
        if self.passed:
            return "all identities hold"
        kind, a, b, c = self.violations[0]
        return f"{kind} fails at ({a},{b},{c})"


def cocycle_check(kmap: KMap, candidate, I=None) -> CocycleResult:
    """Check additivity, vanishing diagonal and antisymmetry of ``p·k`` mod ``b``.

    ``candidate`` is an :class:`EigenvalueCandidate` with a constant residue
    or a plain ``(p, b)`` pair.
    """
    if isinstance(candidate, EigenvalueCandidate):
        if candidate.p is None:
            raise HypothesisError("candidate has no constant residue p; telescope first")
        p, b = candidate.p, candidate.b
    else:
        p, b = candidate
    verts = sorted(kmap.domain if I is None else I)
    pk = {}
    for t1 in verts:
        for t2 in verts:
            pk[(t1, t2)] = p * kmap[(t1, t2)] % b
    bad = []
    for t in verts:
        if pk[(t, t)]:
            bad.append(("identity", t, t, t))
    for t1 in verts:
        for t2 in verts:
            if (pk[(t1, t2)] + pk[(t2, t1)]) % b:
                bad.append(("antisymmetry", t1, t2, t1))
    for t1 in verts:
        for t2 in verts:
            for t3 in verts:
                if (pk[(t1, t3)] - pk[(t1, t2)] - pk[(t2, t3)]) % b:
                    bad.append(("additivity", t1, t2, t3))
    return CocycleResult(not bad, p, b, tuple(bad))


@dataclass(frozen=True)
class PsiPartition:
    m: int
    n: int
    t2: int
    modulus: int
    atoms: dict[int, frozenset[int]]
    class_sums: dict[int, float]
    distances: dict[int, float]
    onto: bool


def psi_partition(spec: DiagramSpec, candidate: EigenvalueCandidate, m: int, n: int, t2: int,
                  domain=None) -> PsiPartition:
    dom = frozenset(spec.vertices) if domain is None else frozenset(domain)
    kmap = extract_kmap(spec, candidate, m, n, {t2})
    sig = sigma_sums(range_residue_counts(spec, m, n, candidate.b), candidate)
    e = kmap.modulus
    atoms = {k: frozenset(t1 for t1 in dom if kmap.k.get((t1, t2)) == k) for k in range(e)}
    sums = {k: sum(sig.magnitude[t1 - 1][t2 - 1] for t1 in atoms[k]) for k in range(e)}
    dist = {k: abs(v - 1 / e) for k, v in sums.items()}
    return PsiPartition(m, n, t2, e, atoms, sums, dist, all(atoms.values()))


def dominant_root(weights, epsilon: float) -> tuple[int, float]:
    """Index of the heaviest root of unity and the guaranteed lower bound on its weight.

    ``weights`` are convex coefficients on the N-th roots of unity whose
    combination has modulus above ``1 - epsilon``; some weight then exceeds
    ``1 - C·epsilon`` with ``C = N / (1 - cos(2π/N))``.
    """
    w = [float(x) for x in weights]
    N = len(w)
    if N == 0:
        raise HypothesisError("no weights")
    if min(w) < 0 or abs(sum(w) - 1) > 1e-12:
        raise HypothesisError("weights must be nonnegative and sum to 1")
    z = sum(x * cmath.exp(2j * cmath.pi * k / N) for k, x in enumerate(w))
    if not abs(z) > 1 - epsilon:
        raise HypothesisError(f"|sum| = {abs(z):.12g} is not above 1 - epsilon = {1 - epsilon:.12g}")
    best = max(range(N), key=lambda k: (w[k], -k))
    if N == 1:
        return 0, 1.0
    return best, 1 - dominance_constant(N) * epsilon


def dominance_constant(N: int) -> float:
    """C with w_max > 1 - C·eps whenever |Σ w_k ω^k| > 1 - eps for N-th roots ω."""
    return N / (1 - math.cos(2 * math.pi / N))


@dataclass(frozen=True)
class UniformPairReport:
    d: int
    pair_values: dict[tuple[int, int, int, int], float]  # (m, n, t1, t2) -> |Σ|/q
    pair_distances: dict[tuple[int, int, int, int], float]
    tower_masses: dict[int, Fraction]
    tower_distances: dict[int, float]
    window: tuple[int, int]


def uniform_pair_check(spec: DiagramSpec, candidate: EigenvalueCandidate, windows) -> UniformPairReport:
    """With bb = d every pair magnitude and every tower mass should sit near 1/d."""
    from .measures import measure_estimate

    d = spec.rank
    if d < 2 or candidate.bb != d:
        raise HypothesisError(f"needs bb = d (bb = {candidate.bb}, d = {d})")
    windows = _check_windows(spec, windows)
    values, dist = {}, {}
    for m, n in windows:
        sig = sigma_sums(range_residue_counts(spec, m, n, candidate.b), candidate)
        for t1 in spec.vertices:
            for t2 in spec.vertices:
                v = sig.magnitude[t1 - 1][t2 - 1]
                values[(m, n, t1, t2)] = v
                dist[(m, n, t1, t2)] = abs(v - 1 / d)
    m, n = max(windows, key=lambda w: (w[1] - w[0], w))
    uniform = [Fraction(1, d)] * d
    mv = measure_estimate(spec, m, n, uniform)
    masses = {t: mv.tower[t - 1] for t in spec.vertices}
    return UniformPairReport(d, values, dist, masses,
                            {t: abs(float(v) - 1 / d) for t, v in masses.items()}, (m, n))


# --------------------------------------------------------------------------
# Survey
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SurveyEntry:
    I: frozenset[int]
    b: int
    status: str
    bb: int
    accepted: bool
    reason: str
    max_tail_D: float | None = None


@dataclass(frozen=True)
class MeasureSurvey:
    I: frozenset[int]
    accepted_b: tuple[int, ...]
    B: frozenset[int]
    b_mu: int | None  # None when B has no divisibility-maximal element


@dataclass(frozen=True)
class SurveyResult:
    d: int
    b_max: int
    depth: int
    tau: float
    window_count: int
    trend: str
    entries: tuple[SurveyEntry, ...]
    measures: tuple[MeasureSurvey, ...]
    sum_b: int
    sum_ok: bool
    count_ok: bool
    note: str = "a = 1 for every b; coprime numerators share the verdict"

    def accepted(self, I) -> tuple[int, ...]:
        I = frozenset(I)
        return tuple(e.b for e in self.entries if e.I == I and e.accepted)

    def entry(self, I, b) -> SurveyEntry:
        I = frozenset(I)
        for e in self.entries:
            if e.I == I and e.b == b:
                return e
        raise KeyError((I, b))


def divisibility_maximum(values) -> int | None:
    vals = set(values)
    if not vals:
        return 1
    top = [v for v in vals if all(v % u == 0 for u in vals)]
    return top[0] if top else None


def survey(spec: DiagramSpec, b_max: int, depth: int | None, hypotheses, *,
           tau: float = TAU_ACCEPT, window_count: int = WINDOW_COUNT, windows=None,
           trend: str = TREND_BY_M) -> SurveyResult:
    if b_max < 2:
        raise HypothesisError("b_max must be at least 2")
    depth = spec.depth if depth is None else depth
    entries, per_measure = [], []
    hyps = [frozenset(I) for I in hypotheses]
    for I in hyps:
        accepted = []
        for b in range(2, b_max + 1):
            cand = classify_candidate(spec, 1, b, depth)
            tail = None
            if cand.status != CANDIDATE:
                ok, why = False, {"continuous": "continuous", "undecided": "gcd not stabilized",
                                  "rejected": "bb > d"}[cand.status]
            elif cand.bb > len(I):
                ok, why = False, "𝐛 > #I"
            else:
                rep = deficiency_table(spec, cand, windows if windows is not None else default_windows(depth),
                                       I, I, tau, window_count, trend)
                ok, why = rep.accepted, rep.reason
                tail = max(rep.value(m, n, t2) for m, n in rep.windows[-window_count:] for t2 in rep.targets)
            entries.append(SurveyEntry(I, b, cand.status, cand.bb, ok, why, tail))
            if ok:
                accepted.append((b, cand.bb))
        B = frozenset(bb for _, bb in accepted)
        per_measure.append(MeasureSurvey(I, tuple(b for b, _ in accepted), B, divisibility_maximum(B)))
    b_mus = [ms.b_mu if ms.b_mu is not None else max(ms.B) for ms in per_measure]
    total = sum(b_mus)
    d = spec.rank
    count_ok = len(hyps) <= d - sum(x - 1 for x in b_mus)
    return SurveyResult(d, b_max, depth, tau, window_count, trend, tuple(entries), tuple(per_measure),
                        total, total <= d, count_ok)
