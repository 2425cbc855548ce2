"""Ordered Bratteli diagrams of Toeplitz type.

Vertices at every level are identified with ``1..d``.  Level 1 (the hat) is
implicit: each vertex has a single incoming edge from the root, so
``q_1 = 1`` and ``h_1 = (1, ..., 1)``.  Level ``n >= 2`` is described by one
order word per target vertex: the ``j``-th letter of ``w_n(t)`` is the source
vertex of the ``j``-th smallest edge ending at ``t``.

Words are kept run-length encoded as ``(block, repeat)`` pairs and are only
expanded on request, because the example diagrams reach ``q_n = 5**(2n)``.
"""

from __future__ import annotations

import bisect
import os
import re
from dataclasses import dataclass, field
from functools import cached_property
from math import prod
from typing import Iterable, Iterator, Sequence

DEFAULT_MAX_EXPAND = 2**31
DEFAULT_MAX_BLOCK = 2**20

Matrix = tuple[tuple[int, ...], ...]


class DiagramError(ValueError):
    """Raised for malformed or inconsistent diagram data."""


class ParseError(DiagramError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ExpansionLimitError(DiagramError):
    pass


class NotToeplitzError(DiagramError):
    pass


def max_expand() -> int:
    """Letter budget for explicit word expansion (env ``ADICSCOPE_MAX_EXPAND``)."""
    value = os.environ.get("ADICSCOPE_MAX_EXPAND")
    return int(value) if value else DEFAULT_MAX_EXPAND


# --------------------------------------------------------------------------
# Order words
# --------------------------------------------------------------------------

def _normalize_blocks(blocks) -> tuple[tuple[tuple[int, ...], int], ...]:
    out: list[tuple[tuple[int, ...], int]] = []
    for block, repeat in blocks:
        block = tuple(int(v) for v in block)
        repeat = int(repeat)
        if repeat < 0:
            raise DiagramError(f"negative repeat {repeat}")
        if not block or repeat == 0:
            continue
        # adjacent literal runs merge so that the serialized form is canonical
        if repeat == 1 and out and out[-1][1] == 1:
            out[-1] = (out[-1][0] + block, 1)
        else:
            out.append((block, repeat))
    return tuple(out)


@dataclass(frozen=True)
class OrderWord:
    """A run-length encoded word over vertex labels."""

    blocks: tuple[tuple[tuple[int, ...], int], ...]

    def __post_init__(self):
        blocks = _normalize_blocks(self.blocks)
        if not blocks:
            raise DiagramError("order word must be nonempty")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_letters(cls, letters: Iterable[int]) -> "OrderWord":
        return cls(((tuple(letters), 1),))

    @classmethod
    def parse(cls, text: str) -> "OrderWord":
        """Parse ``"1 (2 3)^4 5"`` style tokens."""
        return cls(_parse_tokens(text))

    @cached_property
    def length(self) -> int:
        return sum(len(b) * r for b, r in self.blocks)

    @cached_property
    def _starts(self) -> tuple[int, ...]:
        starts, pos = [], 0
        for b, r in self.blocks:
            starts.append(pos)
            pos += len(b) * r
        return tuple(starts)

    def runs(self) -> Iterator[tuple[int, tuple[int, ...], int]]:
        """Yield ``(offset, block, repeat)`` with 0-based offsets."""
        for start, (b, r) in zip(self._starts, self.blocks):
            yield start, b, r

    def letter_at(self, j: int) -> int:
        """Letter at 1-based position ``j``."""
        if not 1 <= j <= self.length:
            raise IndexError(j)
        pos = j - 1
        i = bisect.bisect_right(self._starts, pos) - 1
        block = self.blocks[i][0]
        return block[(pos - self._starts[i]) % len(block)]

    def letters(self) -> frozenset[int]:
        return frozenset(v for b, _ in self.blocks for v in b)

    def first(self) -> int:
        return self.blocks[0][0][0]

    def last(self) -> int:
        return self.blocks[-1][0][-1]

    def count(self, letter: int) -> int:
        return sum(b.count(letter) * r for b, r in self.blocks)

    def histogram(self, d: int) -> tuple[int, ...]:
        hist = [0] * d
        for b, r in self.blocks:
            for v in b:
                hist[v - 1] += r
        return tuple(hist)

    def expand(self, limit: int | None = None) -> tuple[int, ...]:
        limit = max_expand() if limit is None else limit
        if self.length > limit:
            raise ExpansionLimitError(
                f"word of length {self.length} exceeds expansion limit {limit}")
        out: list[int] = []
        for b, r in self.blocks:
            out.extend(b * r)
        return tuple(out)

    def filtered(self, keep: frozenset[int]) -> "OrderWord | None":
        blocks = [(tuple(v for v in b if v in keep), r) for b, r in self.blocks]
        blocks = [(b, r) for b, r in blocks if b]
        return OrderWord(blocks) if blocks else None

    def relabeled(self, mapping: dict[int, int]) -> "OrderWord":
        return OrderWord([(tuple(mapping[v] for v in b), r) for b, r in self.blocks])

    def to_text(self) -> str:
        parts = []
        for b, r in self.blocks:
            inner = " ".join(map(str, b))
            parts.append(inner if r == 1 else f"({inner})^{r}")
        return " ".join(parts)

    def __str__(self) -> str:
        return self.to_text()


_TOKEN = re.compile(r"\s*(?:\(([^()]*)\)\^(\d+)|(\d+))")


def _parse_tokens(text: str) -> list[tuple[tuple[int, ...], int]]:
    blocks: list[tuple[tuple[int, ...], int]] = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if not match:
            raise DiagramError(f"cannot parse word token at {text[pos:]!r}")
        inner, rep, bare = match.groups()
        if bare is not None:
            blocks.append(((int(bare),), 1))
        else:
            items = inner.split()
            if not items or not all(x.isdigit() for x in items):
                raise DiagramError(f"bad repetition group ({inner})")
            blocks.append((tuple(int(x) for x in items), int(rep)))
        pos = match.end()
    if not blocks:
        raise DiagramError("empty word")
    return blocks


# --------------------------------------------------------------------------
# Levels and diagrams
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelSpec:
    """Edges ``E_n`` between level ``n-1`` and level ``n`` (``n >= 2``).

    ``q`` is the common in-degree, or ``None`` for a non-Toeplitz level
    produced by :func:`subdiagram_restrict`.
    """

    level_index: int
    q: int | None
    words: tuple[OrderWord, ...]

    def word(self, t: int) -> OrderWord:
        return self.words[t - 1]

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(w.length for w in self.words)


@dataclass(frozen=True)
class DiagramSpec:
    rank: int
    levels: tuple[LevelSpec, ...]
    toeplitz: bool = True
    labels: tuple[int, ...] | None = None  # original vertex names after restriction

    def __post_init__(self):
        if self.rank < 1:
            raise DiagramError("rank must be positive")
        d = self.rank
        for expected, lev in enumerate(self.levels, start=2):
            if lev.level_index != expected:
                raise DiagramError(f"level {lev.level_index} out of sequence (expected {expected})")
            if len(lev.words) != d:
                raise DiagramError(f"level {lev.level_index}: expected {d} words, got {len(lev.words)}")
            for t, w in enumerate(lev.words, start=1):
                bad = [v for v in w.letters() if not 1 <= v <= d]
                if bad:
                    raise DiagramError(
                        f"level {lev.level_index} word {t}: vertex {min(bad)} out of range 1..{d}")
                if lev.q is not None and w.length != lev.q:
                    raise DiagramError(
                        f"level {lev.level_index} word {t}: length {w.length} != q = {lev.q}")
            if self.toeplitz and lev.q is None:
                raise DiagramError("toeplitz spec with a level lacking constant q")

    @property
    def depth(self) -> int:
        """Index of the deepest level (level 1 is the implicit hat)."""
        return len(self.levels) + 1

    @property
    def vertices(self) -> range:
        return range(1, self.rank + 1)

    def level(self, n: int) -> LevelSpec:
        if not 2 <= n <= self.depth:
            raise DiagramError(f"level {n} out of range 2..{self.depth}")
        return self.levels[n - 2]

    def word(self, n: int, t: int) -> OrderWord:
        return self.level(n).word(t)

    def require_toeplitz(self) -> None:
        if not self.toeplitz:
            raise NotToeplitzError("operation requires a Toeplitz-type diagram")

    def q(self, n: int) -> int:
        if n == 1:
            return 1
        q = self.level(n).q
        if q is None:
            raise NotToeplitzError(f"level {n} has no constant in-degree")
        return q

    def q_range(self, m: int, n: int) -> int:
        """``q_{m,n} = q_{m+1} ... q_n``."""
        return prod(self.q(i) for i in range(m + 1, n + 1))

    def p(self, n: int) -> int:
        return self.q_range(0, n) if n >= 1 else 1

    def heights(self, n: int) -> tuple[int, ...]:
        h = (1,) * self.rank
        for i in range(2, n + 1):
            h = _row_times(h, incidence_matrix(self, i))
        return h


def _row_times(row: Sequence[int], mat: Matrix) -> tuple[int, ...]:
    d = len(row)
    return tuple(sum(row[i] * mat[i][j] for i in range(d)) for j in range(len(mat[0])))


def make_spec(rank: int, words_by_level: Sequence[Sequence], toeplitz: bool | None = None,
              labels=None) -> DiagramSpec:
    """Build a spec from per-level word lists (level 2 first).

    Words may be :class:`OrderWord` instances, strings in the file token
    syntax, or plain letter sequences.
    """
    levels = []
    for n, words in enumerate(words_by_level, start=2):
        ws = tuple(_as_word(w) for w in words)
        lengths = {w.length for w in ws}
        q = lengths.pop() if len(lengths) == 1 else None
        levels.append(LevelSpec(n, q, ws))
    if toeplitz is None:
        toeplitz = all(lev.q is not None for lev in levels)
    return DiagramSpec(rank, tuple(levels), toeplitz, tuple(labels) if labels else None)


def _as_word(w) -> OrderWord:
    if isinstance(w, OrderWord):
        return w
    if isinstance(w, str):
        return OrderWord.parse(w)
    return OrderWord.from_letters(w)


# --------------------------------------------------------------------------
# File format
# --------------------------------------------------------------------------

HEADER = "adic-diagram v1"


def parse_spec(text: str) -> DiagramSpec:
    """Parse the line-oriented diagram format (see README)."""
    lines = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((no, line))
    if not lines or lines[0][1] != HEADER:
        raise ParseError(f"expected header {HEADER!r}", lines[0][0] if lines else 1)

    rank = depth = None
    labels = None
    levels: dict[int, tuple[int | None, dict[int, OrderWord], int]] = {}
    current: int | None = None
    for no, line in lines[1:]:
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if head == "rank":
                rank = int(rest)
            elif head == "levels":
                depth = int(rest)
            elif head == "labels":
                labels = tuple(int(x) for x in rest.split())
            elif head == "level":
                parts = rest.split()
                if len(parts) != 3 or parts[1] != "q":
                    raise ParseError("expected 'level <n> q <q_n>'", no)
                n = int(parts[0])
                if n in levels:
                    raise ParseError(f"duplicate level {n}", no)
                q = None if parts[2] == "-" else int(parts[2])
                levels[n] = (q, {}, no)
                current = n
            elif head == "word":
                if current is None:
                    raise ParseError("word before any level", no)
                t_text, _, tokens = rest.partition(" ")
                t = int(t_text)
                q, words, _ = levels[current]
                if rank is not None and not 1 <= t <= rank:
                    raise ParseError(f"vertex {t} out of range 1..{rank}", no)
                if t in words:
                    raise ParseError(f"duplicate word for vertex {t}", no)
                word = OrderWord.parse(tokens)
                if rank is not None:
                    bad = [v for v in word.letters() if not 1 <= v <= rank]
                    if bad:
                        raise ParseError(f"vertex symbol {min(bad)} out of range 1..{rank}", no)
                if q is not None and word.length != q:
                    raise ParseError(f"word length {word.length} != q = {q}", no)
                words[t] = word
            else:
                raise ParseError(f"unknown directive {head!r}", no)
        except ParseError:
            raise
        except (ValueError, DiagramError) as exc:
            raise ParseError(str(exc), no) from exc

    if rank is None or depth is None:
        raise ParseError("missing 'rank' or 'levels' line")
    expected = set(range(2, depth + 1))
    if set(levels) != expected:
        missing = sorted(expected - set(levels))
        extra = sorted(set(levels) - expected)
        raise ParseError(f"levels mismatch: missing {missing}, unexpected {extra}")
    built = []
    for n in range(2, depth + 1):
        q, words, no = levels[n]
        missing = [t for t in range(1, rank + 1) if t not in words]
        if missing:
            raise ParseError(f"level {n}: missing word for vertex {missing[0]}", no)
        built.append(LevelSpec(n, q, tuple(words[t] for t in range(1, rank + 1))))
    toeplitz = all(lev.q is not None for lev in built)
    return DiagramSpec(rank, tuple(built), toeplitz, labels)


def serialize_spec(spec: DiagramSpec) -> str:
    out = [HEADER, f"rank {spec.rank}", f"levels {spec.depth}"]
    if spec.labels is not None:
        out.append("labels " + " ".join(map(str, spec.labels)))
    for lev in spec.levels:
        out.append(f"level {lev.level_index} q {'-' if lev.q is None else lev.q}")
        for t, w in enumerate(lev.words, start=1):
            out.append(f"word {t} {w.to_text()}")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# Properness
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PropernessReport:
    h1_ok: bool
    h2_ok: bool
    h3_ok: bool
    h4_ok: bool
    unique_min_ok: bool
    failures: tuple[str, ...] = field(default=())

    @property
    def proper(self) -> bool:
        return self.h1_ok and self.h2_ok and self.h3_ok and self.h4_ok and self.unique_min_ok


def validate_properness(spec: DiagramSpec) -> PropernessReport:
    d = spec.rank
    failures = []
    # the hat is implicit with one edge per vertex, and every level has d vertices
    h1 = h3 = True
    h2 = h4 = umin = True
    full = frozenset(spec.vertices)
    for lev in spec.levels:
        n = lev.level_index
        for t, w in enumerate(lev.words, start=1):
            missing = sorted(full - w.letters())
            if missing:
                h2 = False
                failures.append(f"H2 level {n}: word {t} misses letters {missing}")
        lasts = {w.last() for w in lev.words}
        firsts = {w.first() for w in lev.words}
        if len(lasts) > 1:
            h4 = False
            failures.append(f"H4 level {n}: last letters {sorted(lasts)}")
        if len(firsts) > 1:
            umin = False
            failures.append(f"min level {n}: first letters {sorted(firsts)}")
    if d < 1:
        h3 = False
    return PropernessReport(h1, h2, h3, h4, umin, tuple(failures))


# --------------------------------------------------------------------------
# Matrices
# --------------------------------------------------------------------------

def identity(d: int) -> Matrix:
    return tuple(tuple(int(i == j) for j in range(d)) for i in range(d))


def matmul(a: Matrix, b: Matrix) -> Matrix:
    inner = range(len(b))
    cols = range(len(b[0]))
    return tuple(tuple(sum(row[k] * b[k][j] for k in inner) for j in cols) for row in a)


def incidence_matrix(spec: DiagramSpec, n: int) -> Matrix:
    """``M_n[t1][t2]`` = number of edges from ``t1`` (level n-1) to ``t2``."""
    lev = spec.level(n)
    cols = [w.histogram(spec.rank) for w in lev.words]
    return tuple(tuple(col[t1] for col in cols) for t1 in range(spec.rank))


def product_matrix(spec: DiagramSpec, m: int, n: int) -> Matrix:
    """``P_{m,n} = M_{m+1} ... M_n`` (identity when ``m == n``)."""
    if not 1 <= m <= n <= spec.depth:
        raise DiagramError(f"window ({m}, {n}) out of range for depth {spec.depth}")
    result = identity(spec.rank)
    for i in range(m + 1, n + 1):
        result = matmul(result, incidence_matrix(spec, i))
    return result


# --------------------------------------------------------------------------
# Composition, telescoping, restriction
# --------------------------------------------------------------------------

def compose_words(spec: DiagramSpec, m: int, n: int, t: int, *, explicit: bool = False,
                  limit: int | None = None, max_block: int = DEFAULT_MAX_BLOCK):
    """Order word ``W_{m,n}(t)`` over level-``m`` vertices.

    Letter ``j`` is the level-``m`` vertex of the ``j``-th smallest path of
    ``E_{m,n}`` ending at ``t``.  In explicit mode the letters are returned
    as a tuple (guarded by ``limit``); otherwise an :class:`OrderWord`.
    """
    if not 1 <= m < n <= spec.depth:
        raise DiagramError(f"window ({m}, {n}) out of range for depth {spec.depth}")
    if explicit:
        limit = max_expand() if limit is None else limit
        total = prod(spec.word(i, t).length for i in range(m + 1, n + 1)) if spec.toeplitz else None
        if total is not None and total > limit:
            raise ExpansionLimitError(f"W_{{{m},{n}}} has {total} letters > limit {limit}")
        return _compose_symbolic(spec, m, n, max_block)[t - 1].expand(limit)
    return _compose_symbolic(spec, m, n, max_block)[t - 1]


def _compose_symbolic(spec: DiagramSpec, m: int, n: int, max_block: int) -> tuple[OrderWord, ...]:
    if n == m + 1:
        return spec.level(n).words
    lower = _compose_symbolic(spec, m, n - 1, max_block)
    out = []
    for w in spec.level(n).words:
        blocks: list[tuple[tuple[int, ...], int]] = []
        for block, repeat in w.blocks:
            inner = [bl for u in block for bl in lower[u - 1].blocks]
            if repeat == 1:
                blocks.extend(inner)
            elif len(inner) == 1 and inner[0][1] == 1:
                blocks.append((inner[0][0], repeat))
            else:
                size = sum(len(b) * r for b, r in inner)
                if size > max_block:
                    raise ExpansionLimitError(
                        f"repeated block of {size} letters exceeds block bound {max_block}")
                letters: list[int] = []
                for b, r in inner:
                    letters.extend(b * r)
                blocks.append((tuple(letters), repeat))
        out.append(OrderWord(blocks))
    return tuple(out)


def telescope(spec: DiagramSpec, cut_levels: Sequence[int], *,
              max_block: int = DEFAULT_MAX_BLOCK) -> DiagramSpec:
    cuts = list(cut_levels)
    if not cuts or cuts[0] != 1:
        raise DiagramError("cut levels must start at 1")
    if any(b <= a for a, b in zip(cuts, cuts[1:])) or cuts[-1] > spec.depth:
        raise DiagramError(f"cut levels {cuts} must be strictly increasing within 1..{spec.depth}")
    levels = []
    for k, (a, b) in enumerate(zip(cuts, cuts[1:]), start=2):
        words = _compose_symbolic(spec, a, b, max_block)
        lengths = {w.length for w in words}
        q = lengths.pop() if len(lengths) == 1 else None
        levels.append(LevelSpec(k, q, words))
    return DiagramSpec(spec.rank, tuple(levels), spec.toeplitz, spec.labels)


def subdiagram_restrict(spec: DiagramSpec, keep: Iterable[int]) -> DiagramSpec:
    """Keep only paths through ``keep`` at every level; vertices are relabeled 1..k.

    The original names are stored in ``labels``.
    """
    kept = sorted(set(keep))
    if not kept:
        raise DiagramError("cannot restrict to an empty vertex set")
    if any(not 1 <= v <= spec.rank for v in kept):
        raise DiagramError(f"restriction set {kept} out of range 1..{spec.rank}")
    keep_set = frozenset(kept)
    relabel = {v: i for i, v in enumerate(kept, start=1)}
    old_labels = spec.labels or tuple(spec.vertices)
    levels = []
    toeplitz = spec.toeplitz
    for lev in spec.levels:
        words = []
        for t in kept:
            w = lev.word(t).filtered(keep_set)
            if w is None:
                raise DiagramError(
                    f"level {lev.level_index}: word of vertex {t} is empty after restriction")
            words.append(w.relabeled(relabel))
        lengths = {w.length for w in words}
        q = lengths.pop() if len(lengths) == 1 else None
        toeplitz = toeplitz and q is not None
        levels.append(LevelSpec(lev.level_index, q, tuple(words)))
    labels = tuple(old_labels[v - 1] for v in kept)
    return DiagramSpec(len(kept), tuple(levels), toeplitz, labels)


# --------------------------------------------------------------------------
# Oracles
# --------------------------------------------------------------------------

def enumerate_paths(spec: DiagramSpec, m: int, n: int, t: int) -> list[tuple[tuple[int, ...], int]]:
    """All paths of ``E_{m,n}`` into ``t`` in the induced order, by brute force.

    Each path is ``((j_{m+1}, ..., j_n), source_vertex)`` and paths are
    sorted by comparing the top edge first.  Used as an independent oracle.
    """
    paths: list[tuple[tuple[int, ...], int]] = []

    def walk(i, v, acc):
        if i == m:
            paths.append((tuple(reversed(acc)), v))
            return
        word = spec.word(i, v)
        for j in range(1, word.length + 1):
            walk(i - 1, word.letter_at(j), acc + [j])

    walk(n, t, [])
    paths.sort(key=lambda item: tuple(reversed(item[0])))
    return paths
