"""Builders for the six worked example diagrams, plus the model-scheme check.

All examples have rank 7, ``q_2 = 2 * 5**2`` and ``q_n = 5**(2n)`` for
``n > 2``.  The level-2 word is not constrained by the construction; every
vertex gets ``1 (2 3 4 5 6 7 1)^7``, which starts and ends with 1 and uses
every letter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .diagram import DiagramError, DiagramSpec, LevelSpec, OrderWord
from .eigen import KMap

RANK = 7
LEVEL2_WORD = "1 (2 3 4 5 6 7 1)^7"

# vertex classes of the model scheme: W_1, W_2, W_3
MODEL_CLASSES = ((1, 4, 7), (2, 5), (3, 6))


def char_q(n: int) -> int:
    if n == 1:
        return 1
    if n == 2:
        return 2 * 5**2
    return 5 ** (2 * n)


@dataclass(frozen=True)
class ExampleMeta:
    example_id: int
    claimed_I: tuple[frozenset[int], ...]
    claimed_candidates: tuple[tuple[frozenset[int], int, int], ...]  # (I, b, bb)
    claimed_rejections: tuple[tuple[frozenset[int], int], ...] = ()  # (I, b)
    tower_limits: dict[int, str] = field(default_factory=dict)
    claims: tuple[str, ...] = ()  # expected outcomes in compact notation
    notes: tuple[str, ...] = ()


def _g(*letters: int) -> str:
    return " ".join(map(str, letters))


def _digits(s: str) -> str:
    return " ".join(s)


def _rep(block: str, count: int) -> str:
    if count < 0:
        raise DiagramError(f"negative repetition count {count}")
    return f"({_digits(block)})^{count}"


def _words_ex2(q: int) -> list[str]:
    c = (q - 1) // 12
    return [
        f"{_rep('123456723756', c)} 1",
        f"1 {_rep('312645372675', c - 1)} {_rep('312', 3)} 6 7 1",
        f"1 {_rep('123456723756', c - 1)} {_rep('123', 3)} 4 5 1",
        f"{_rep('156423756723', c)} 1",
        f"1 {_rep('345612375672', c - 1)} {_rep('645', 3)} 3 1 1",
        f"1 {_rep('156423756723', c - 1)} {_rep('723', 3)} 1 2 1",
        f"{_rep('153426753726', c)} 1",
    ]


def _words_ex3(q: int) -> list[str]:
    c = (q - 1) // 3
    return [
        f"{_rep('123', c - 2)} {_digits('4567231')}",
        f"1 3 {_rep('123', c - 2)} {_digits('45671')}",
        f"1 {_rep('123', c - 2)} {_digits('456721')}",
        f"1 4 6 {_rep('456', c - 2)} {_digits('7231')}",
        f"1 4 {_rep('456', c - 2)} {_digits('12371')}",
        f"1 {_rep('456', c - 2)} {_digits('123761')}",
        f"1 5 6 {_rep('456', c - 2)} {_digits('7231')}",
    ]


def _words_ex4(q: int) -> list[str]:
    c = (q - 1) // 12
    # words 3 and 6 use exponent c-1; c-2 would give length 12c-11 != q
    return [
        f"{_rep('123456423156', c - 1)} {_rep('123', 3)} {_digits('7561')}",
        f"1 {_rep('312645342615', c - 1)} {_rep('312', 3)} {_digits('671')}",
        f"1 {_rep('123456423156', c - 1)} {_rep('123', 3)} {_digits('751')}",
        f"{_rep('156423456123', c - 1)} {_rep('123', 3)} {_digits('7561')}",
        f"1 {_rep('345612315642', c - 1)} {_rep('645', 3)} {_digits('371')}",
        f"1 {_rep('156423456123', c - 1)} {_rep('123', 3)} {_digits('721')}",
        f"1 {_rep('7', q - 7)} {_digits('654321')}",
    ]


def _words_ex5(q: int) -> list[str]:
    c = (q - 1) // 12
    return [
        f"{_rep('123', 4 * c - 2)} {_digits('1245671')}",
        f"1 {_rep('312', 4 * c - 2)} {_digits('345671')}",
        f"1 {_rep('123', 4 * c - 2)} {_digits('145671')}",
        f"1 {_rep('5674', 3 * c - 2)} {_digits('23745671')}",
        f"1 5 {_rep('7456', 3 * c - 2)} {_digits('7452371')}",
        f"1 5 {_rep('4567', 3 * c - 2)} {_digits('2367471')}",
        f"1 2 {_rep('5674', 3 * c - 2)} {_digits('3674571')}",
    ]


def _words_ex6(q: int) -> list[str]:
    c = (q - 1) // 12
    return [
        f"{_rep('123', 4 * c - 2)} {_digits('1245671')}",
        f"1 {_rep('312', 4 * c - 2)} {_digits('345671')}",
        f"1 {_rep('123', 4 * c - 2)} {_digits('145671')}",
        f"1 {_rep('647465', 2 * c - 1)} {_digits('237461')}",
        f"1 {_rep('656574', 2 * c - 1)} {_digits('652361')}",
        f"1 6 {_rep('646575', 2 * c - 1)} {_digits('72361')}",
        f"1 6 {_rep('757564', 2 * c - 1)} {_digits('73261')}",
    ]


_WORDS = {2: _words_ex2, 3: _words_ex3, 4: _words_ex4, 5: _words_ex5, 6: _words_ex6}

_ALL = frozenset(range(1, 8))
_META = {
    2: ExampleMeta(
        2, (_ALL,), ((_ALL, 6, 3),),
        tower_limits={1: "1/12", 4: "1/12", 2: "1/6", 3: "1/6", 5: "1/6", 6: "1/6", 7: "1/6"},
        claims=("b=6: p=2, bb=3", "one measure, I={1..7}"),
    ),
    3: ExampleMeta(
        3, (frozenset({1, 2, 3}), frozenset({4, 5, 6})),
        ((frozenset({1, 2, 3}), 6, 3), (frozenset({4, 5, 6}), 6, 3)),
        claims=("I={1,2,3} | I={4,5,6}", "restrict {1,2,3}: q_n-4"),
    ),
    4: ExampleMeta(
        4, (frozenset(range(1, 7)), frozenset({7})),
        ((frozenset(range(1, 7)), 6, 3),),
        claimed_rejections=((frozenset({7}), 6),),
        claims=("I={1..6} | I={7}", "I={7}: no candidate, bb > #I"),
        notes=("words 3 and 6 use exponent c-1 so every word has length q",),
    ),
    5: ExampleMeta(
        5, (frozenset({1, 2, 3}), frozenset({4, 5, 6, 7})),
        ((frozenset({1, 2, 3}), 6, 3), (frozenset({4, 5, 6, 7}), 8, 4)),
        claims=("{1,2,3}: b=6, bb=3", "{4..7}: b=8, bb=4"),
    ),
    6: ExampleMeta(
        6, (frozenset({1, 2, 3}), frozenset({4, 5, 6, 7})),
        ((frozenset({1, 2, 3}), 6, 3), (frozenset({4, 5, 6, 7}), 4, 2)),
        claimed_rejections=((frozenset({4, 5, 6, 7}), 8),),
        claims=("{1,2,3}: b=6, bb=3", "{4..7}: b=4, bb=2; b=8 rejected"),
    ),
}


def build_example(example_id: int, depth: int) -> tuple[DiagramSpec, ExampleMeta]:
    """Deterministic diagram for example ``example_id`` with levels up to ``depth``.

    Example 1 is a family rather than an instance; the example-2 diagram is
    returned for it with a note in the metadata.
    """
    if example_id not in range(1, 7):
        raise DiagramError(f"unknown example {example_id}")
    if depth < 3:
        raise DiagramError("examples need depth >= 3")
    source = 2 if example_id == 1 else example_id
    make = _WORDS[source]
    levels = [LevelSpec(2, char_q(2), tuple(OrderWord.parse(LEVEL2_WORD) for _ in range(RANK)))]
    for n in range(3, depth + 1):
        q = char_q(n)
        levels.append(LevelSpec(n, q, tuple(OrderWord.parse(w) for w in make(q))))
    spec = DiagramSpec(RANK, tuple(levels), True)
    meta = _META[source]
    if example_id == 1:
        meta = ExampleMeta(1, meta.claimed_I, meta.claimed_candidates, meta.claimed_rejections,
                           meta.tower_limits, meta.claims,
                           ("model family; instantiated by the example-2 diagram",))
    return spec, meta


# --------------------------------------------------------------------------
# Model scheme conformance
# --------------------------------------------------------------------------

def model_class(t: int) -> int:
    """Index 0, 1, 2 of the class W_1, W_2, W_3 containing ``t``."""
    for i, cls in enumerate(MODEL_CLASSES):
        if t in cls:
            return i
    raise DiagramError(f"vertex {t} outside the model classes")


def model_kmap() -> KMap:
    """``k(t1, t2) = j - i mod 3`` for ``t1`` in ``W_i`` and ``t2`` in ``W_j``."""
    k = {(t1, t2): (model_class(t2) - model_class(t1)) % 3
         for t1 in range(1, 8) for t2 in range(1, 8)}
    return KMap(frozenset(range(1, 8)), 3, k, {}, None)


@dataclass(frozen=True)
class ConformanceReport:
    L_bound: int
    exceptions: dict[tuple[int, int], int]  # (level, vertex) -> mismatches
    max_exceptions: int
    passed: bool
    kmap: KMap


def word_exceptions(word: OrderWord, start_class: int) -> int:
    """Positions whose letter class breaks the cyclic W_1 -> W_2 -> W_3 pattern."""
    mismatches = 0
    for offset, block, repeat in word.runs():
        ell = len(block)
        for o, v in enumerate(block):
            # pattern class at 0-based position p is (start_class + p) mod 3
            from .residues import progression_residues
            hist = progression_residues(start_class + offset + o, ell, repeat, 3)
            mismatches += repeat - hist[model_class(v)]
    return mismatches


def model_conformance(spec: DiagramSpec, L_bound: int) -> ConformanceReport:
    """Compare every word at levels >= 3 with the model class pattern of its vertex."""
    if spec.rank != RANK:
        raise DiagramError(f"model scheme needs rank 7, got {spec.rank}")
    exceptions = {}
    for n in range(3, spec.depth + 1):
        for t in spec.vertices:
            exceptions[(n, t)] = word_exceptions(spec.word(n, t), model_class(t))
    worst = max(exceptions.values(), default=0)
    return ConformanceReport(L_bound, exceptions, worst, worst <= L_bound, model_kmap())
