"""Toy corpus, hypothesis strategies and brute-force oracles shared by the tests.

The oracles only use path enumeration and plain complex arithmetic; they do
not touch the run-length or dynamic-programming code under test.
"""

from __future__ import annotations

import cmath
import random
from fractions import Fraction

from hypothesis import strategies as st

from adicscope.diagram import LevelSpec, OrderWord, DiagramSpec, enumerate_paths, make_spec
from adicscope.examples import LEVEL2_WORD, _words_ex2

CYCLIC_WORDS = ["1 2 3 1", "2 3 1 2", "3 1 2 3"]
UNIFORM_WORDS = ["1 2 3", "1 2 3", "1 2 3"]


def cyclic_toy(depth: int = 3) -> DiagramSpec:
    return make_spec(3, [CYCLIC_WORDS] * (depth - 1))


def uniform_toy(depth: int = 3) -> DiagramSpec:
    return make_spec(3, [UNIFORM_WORDS] * (depth - 1))


def single_class_toy(depth: int = 3) -> DiagramSpec:
    # letters alternate, so each (t1, t2) pair has suffixes of one parity; use b = 2
    return make_spec(2, [["1 2 1 2 1", "2 1 2 1 2"]] * (depth - 1))


def primitive_toy(depth: int = 4) -> DiagramSpec:
    return make_spec(2, [["1 2 2 1", "1 2 1 1"]] * (depth - 1))


def random_toy(seed: int, d_max: int = 4, q_max: int = 12, depth_max: int = 4) -> DiagramSpec:
    rng = random.Random(seed)
    d = rng.randint(1, d_max)
    depth = rng.randint(2, depth_max)
    levels = []
    for _ in range(2, depth + 1):
        q = rng.randint(max(1, d), q_max)
        levels.append([[rng.randint(1, d) for _ in range(q)] for _ in range(d)])
    return make_spec(d, levels)


TOY_SEEDS = range(24)


def toy_corpus() -> list[DiagramSpec]:
    return [random_toy(s) for s in TOY_SEEDS] + [cyclic_toy(3), cyclic_toy(4), uniform_toy(4),
                                                single_class_toy(3), primitive_toy(4)]


@st.composite
def toeplitz_specs(draw, d_max=3, q_max=5, depth_max=4, min_depth=2):
    d = draw(st.integers(1, d_max))
    depth = draw(st.integers(min_depth, depth_max))
    levels = []
    for _ in range(2, depth + 1):
        q = draw(st.integers(1, q_max))
        levels.append([draw(st.lists(st.integers(1, d), min_size=q, max_size=q)) for _ in range(d)])
    return make_spec(d, levels)


def small_example2(q3: int = 25, q4: int = 25) -> DiagramSpec:
    """Example-2 word tables with small characteristic values (q = 12c + 1)."""
    levels = [LevelSpec(2, 50, tuple(OrderWord.parse(LEVEL2_WORD) for _ in range(7)))]
    for n, q in ((3, q3), (4, q4)):
        levels.append(LevelSpec(n, q, tuple(OrderWord.parse(w) for w in _words_ex2(q))))
    return DiagramSpec(7, tuple(levels), True)


# --------------------------------------------------------------------------
# Oracles
# --------------------------------------------------------------------------

def suffix_lists(spec: DiagramSpec, m: int, n: int) -> dict[tuple[int, int], list[int]]:
    """``(t1, t2) -> suffix values`` from sorted path enumeration."""
    out: dict[tuple[int, int], list[int]] = {}
    for t2 in spec.vertices:
        paths = enumerate_paths(spec, m, n, t2)
        total = len(paths)
        for idx, (_, src) in enumerate(paths):
            out.setdefault((src, t2), []).append(total - 1 - idx)
    return out


def oracle_histogram(spec, m, n, B) -> dict[tuple[int, int, int], int]:
    hist: dict[tuple[int, int, int], int] = {}
    for (t1, t2), vals in suffix_lists(spec, m, n).items():
        for s in vals:
            key = (t1, t2, s % B)
            hist[key] = hist.get(key, 0) + 1
    return hist


def oracle_deficiency(spec, m, n, a, b, source=None) -> dict[int, float]:
    """``1 - Σ_{t1∈S} |Σ_s exp(-2πi a p_m s / b)| / q_{m,n}`` straight from suffix values."""
    p_m = spec.p(m)
    q = spec.q_range(m, n)
    sl = suffix_lists(spec, m, n)
    S = list(spec.vertices) if source is None else sorted(source)
    out = {}
    for t2 in spec.vertices:
        total = 0.0
        for t1 in S:
            z = sum(cmath.exp(-2j * cmath.pi * ((a * p_m * s) % b) / b) for s in sl.get((t1, t2), []))
            total += abs(z) / q
        out[t2] = 1 - total
    return out


def oracle_entrance(spec, path_letters_positions) -> int:
    """r_N from the definition ``Σ p_i (q_{i+1} - j_{i+1})``."""
    r, p = 0, 1
    for i, j in enumerate(path_letters_positions, start=1):
        p *= spec.q(i)
        r += p * (spec.q(i + 1) - j)
    return r


def exact_column(P, t2) -> list[Fraction]:
    col = [P[i][t2 - 1] for i in range(len(P))]
    s = sum(col)
    return [Fraction(c, s) for c in col]


# one "criterion N: PASS|FAIL ..." line per acceptance criterion, printed in the session summary
ACCEPTANCE: list[str] = []
