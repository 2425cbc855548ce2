"""Residue-class statistics of suffix sets.

For a window ``m < n`` and vertices ``t1`` (level m), ``t2`` (level n) the
suffix set collects ``s_{m,n}(x)``, the number of paths of ``E_{m,n}`` into
``t2`` that are strictly bigger than the segment of ``x``.  Counts per
residue class are computed from run-length blocks with closed-form
arithmetic and composed across levels by dynamic programming; no path is
ever enumerated outside the brute-force oracle.
"""

from __future__ import annotations

import cmath
import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd

import numpy as np

from .diagram import DiagramError, DiagramSpec, ExpansionLimitError, compose_words

BRUTEFORCE_LIMIT = 10**4


@dataclass(frozen=True, eq=False)
class ResidueCountTensor:
    """``counts[t1-1, t2-1, k]`` = number of suffixes ``s ≡ k (mod modulus)``."""

    m: int
    n: int
    modulus: int
    q_mn: int
    counts: np.ndarray  # object dtype, shape (d, d, modulus)

    def __post_init__(self):
        self.counts.flags.writeable = False

    @property
    def rank(self) -> int:
        return self.counts.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ResidueCountTensor):
            return NotImplemented
        return ((self.m, self.n, self.modulus, self.q_mn) == (other.m, other.n, other.modulus, other.q_mn)
                and np.array_equal(self.counts, other.counts))

    def count(self, t1: int, t2: int, k: int) -> int:
        return self.counts[t1 - 1, t2 - 1, k % self.modulus]

    def marginal(self) -> tuple[tuple[int, ...], ...]:
        """Sum over residue classes; equals ``P_{m,n}``."""
        summed = self.counts.sum(axis=2)
        return tuple(tuple(int(x) for x in row) for row in summed)

    def column_class_totals(self, t2: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.counts[:, t2 - 1, :].sum(axis=0))

    def collapse(self, modulus: int) -> "ResidueCountTensor":
        """Merge classes onto a divisor of the current modulus."""
        if self.modulus % modulus:
            raise DiagramError(f"{modulus} does not divide {self.modulus}")
        d = self.rank
        out = np.zeros((d, d, modulus), dtype=object)
        for k in range(self.modulus):
            out[:, :, k % modulus] += self.counts[:, :, k]
        return ResidueCountTensor(self.m, self.n, modulus, self.q_mn, out)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["m", "n", "t1", "t2", "k", "count"])
        d = self.rank
        for t1 in range(d):
            for t2 in range(d):
                for k in range(self.modulus):
                    writer.writerow([self.m, self.n, t1 + 1, t2 + 1, k, str(self.counts[t1, t2, k])])
        return buf.getvalue()


@dataclass(frozen=True)
class SuffixSet:
    m: int
    n: int
    t1: int
    t2: int
    values: frozenset[int]


def progression_residues(start: int, step: int, count: int, modulus: int) -> list[int]:
    """Histogram mod ``modulus`` of ``start + i*step`` for ``0 <= i < count``.

    Residues of ``i*step`` repeat with period ``modulus / gcd(step, modulus)``,
    so the cost is O(modulus) regardless of ``count``.
    """
    hist = [0] * modulus
    if count <= 0:
        return hist
    period = modulus // gcd(step % modulus, modulus) if step % modulus else 1
    full, rem = divmod(count, period)
    for i in range(period):
        hist[(start + i * step) % modulus] += full + (1 if i < rem else 0)
    return hist


# --------------------------------------------------------------------------
# Oracle
# --------------------------------------------------------------------------

def suffix_set_bruteforce(spec: DiagramSpec, m: int, n: int, t1: int, t2: int) -> SuffixSet:
    q_mn = spec.q_range(m, n)
    if q_mn > BRUTEFORCE_LIMIT:
        raise ExpansionLimitError(f"q_{{{m},{n}}} = {q_mn} exceeds oracle scale {BRUTEFORCE_LIMIT}")
    letters = compose_words(spec, m, n, t2, explicit=True, limit=BRUTEFORCE_LIMIT)
    return SuffixSet(m, n, t1, t2, frozenset(q_mn - j for j, v in enumerate(letters, 1) if v == t1))


def bruteforce_tensor(spec: DiagramSpec, m: int, n: int, modulus: int) -> ResidueCountTensor:
    """Residue histogram built from :func:`suffix_set_bruteforce`."""
    d = spec.rank
    out = np.zeros((d, d, modulus), dtype=object)
    for t1 in spec.vertices:
        for t2 in spec.vertices:
            for s in suffix_set_bruteforce(spec, m, n, t1, t2).values:
                out[t1 - 1, t2 - 1, s % modulus] += 1
    return ResidueCountTensor(m, n, modulus, spec.q_range(m, n), out)


# --------------------------------------------------------------------------
# Run-length counts and the composition DP
# --------------------------------------------------------------------------

def level_residue_counts(spec: DiagramSpec, n: int, modulus: int) -> ResidueCountTensor:
    """Tensor for the single-level window ``(n-1, n)``."""
    spec.require_toeplitz()
    return _level_counts(spec, n, modulus)


@lru_cache(maxsize=1024)
def _level_counts(spec: DiagramSpec, n: int, modulus: int) -> ResidueCountTensor:
    if modulus < 1:
        raise DiagramError("modulus must be positive")
    d = spec.rank
    q = spec.q(n)
    out = np.zeros((d, d, modulus), dtype=object)
    for t2 in spec.vertices:
        for offset, block, repeat in spec.word(n, t2).runs():
            ell = len(block)
            for o, t1 in enumerate(block):
                # position j = offset + o + 1 + i*ell carries suffix q - j
                hist = progression_residues(q - offset - o - 1, -ell, repeat, modulus)
                cell = out[t1 - 1, t2 - 1]
                for k, c in enumerate(hist):
                    if c:
                        cell[k] += c
    return ResidueCountTensor(n - 1, n, modulus, q, out)


def compose_tensors(lower: ResidueCountTensor, upper: ResidueCountTensor) -> ResidueCountTensor:
    """Combine windows ``(m, l)`` and ``(l, n)`` into ``(m, n)``.

    Uses ``s_{m,n} = s_{m,l} + q_{m,l} * s_{l,n}``.
    """
    if lower.n != upper.m or lower.modulus != upper.modulus:
        raise DiagramError("tensors do not chain")
    B = lower.modulus
    shift = lower.q_mn % B
    d = lower.rank
    result = np.zeros((d, d, B), dtype=object)
    for k2 in range(B):
        layer = upper.counts[:, :, k2]
        if not any(layer.flat):
            continue
        # (t1, k1, t2) -> (t1, t2, k1)
        part = np.tensordot(lower.counts, layer, axes=([1], [0])).transpose(0, 2, 1)
        result += np.roll(part, (shift * k2) % B, axis=2)
    return ResidueCountTensor(lower.m, upper.n, B, lower.q_mn * upper.q_mn, result)


def range_residue_counts(spec: DiagramSpec, m: int, n: int, modulus: int) -> ResidueCountTensor:
    spec.require_toeplitz()
    if not 1 <= m < n <= spec.depth:
        raise DiagramError(f"window ({m}, {n}) out of range for depth {spec.depth}")
    return _range_counts(spec, m, n, modulus)


@lru_cache(maxsize=4096)
def _range_counts(spec: DiagramSpec, m: int, n: int, modulus: int) -> ResidueCountTensor:
    if n == m + 1:
        return _level_counts(spec, n, modulus)
    return compose_tensors(_range_counts(spec, m, n - 1, modulus), _level_counts(spec, n, modulus))


# --------------------------------------------------------------------------
# Exponential sums
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SigmaTable:
    """``Σ_{m,n}(t1,t2)/q_{m,n}`` with magnitudes and the matching ``P/q``."""

    m: int
    n: int
    normalized: tuple[tuple[complex, ...], ...]
    magnitude: tuple[tuple[float, ...], ...]
    mass: tuple[tuple[float, ...], ...]


def sigma_sums(tensor: ResidueCountTensor, candidate) -> SigmaTable:
    """Normalized sums of ``λ^{-p_m s}`` over each suffix set.

    ``candidate`` supplies ``a``, ``b`` and ``p_mod(m)``; the tensor must be
    taken modulo ``b``.
    """
    b = candidate.b
    if tensor.modulus != b:
        raise DiagramError(f"tensor modulus {tensor.modulus} != b = {b}")
    step = (candidate.a * candidate.p_mod(tensor.m)) % b
    roots = [cmath.exp(-2j * cmath.pi * ((step * k) % b) / b) for k in range(b)]
    q = tensor.q_mn
    d = tensor.rank
    normalized, magnitude, mass = [], [], []
    for t1 in range(d):
        nrow, mrow, prow = [], [], []
        for t2 in range(d):
            cell = tensor.counts[t1, t2]
            total = 0j
            for k in range(b):
                if cell[k]:
                    total += float(Fraction(cell[k], q)) * roots[k]
            nrow.append(total)
            mrow.append(abs(total))
            prow.append(float(Fraction(int(sum(cell)), q)))
        normalized.append(tuple(nrow))
        magnitude.append(tuple(mrow))
        mass.append(tuple(prow))
    return SigmaTable(tensor.m, tensor.n, tuple(normalized), tuple(magnitude), tuple(mass))
