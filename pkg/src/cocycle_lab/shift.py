"""Finite words, cylinders and Bernoulli measures on the two-sided 2-shift."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .exceptions import InvalidInputError, InvalidParameterError, UndefinedDistanceError


@dataclass(frozen=True)
class Word:
    """Symbols in {0,1} on the index window ``[lo, hi]``.

    ``symbols[i]`` is the coordinate at index ``lo + i``.
    """

    lo: int
    symbols: tuple[int, ...]

    def __post_init__(self):
        syms = tuple(int(s) for s in self.symbols)
        if not syms:
            raise InvalidInputError("a word needs at least one symbol")
        if any(s not in (0, 1) for s in syms):
            raise InvalidInputError(f"symbols must be 0 or 1, got {self.symbols!r}")
        object.__setattr__(self, "lo", int(self.lo))
        object.__setattr__(self, "symbols", syms)

    @classmethod
    def from_string(cls, lo: int, sym: str) -> Word:
        return cls(lo, tuple(int(ch) for ch in sym))

    @classmethod
    def from_code(cls, lo: int, length: int, code: int) -> Word:
        """Inverse of `code`: bit ``i`` of `code` is the symbol at ``lo + i``."""
        return cls(lo, tuple((code >> i) & 1 for i in range(length)))

    @classmethod
    def from_dict(cls, data: dict) -> Word:
        return cls.from_string(data["lo"], data["sym"])

    @property
    def hi(self) -> int:
        return self.lo + len(self.symbols) - 1

    @property
    def code(self) -> int:
        return sum(s << i for i, s in enumerate(self.symbols))

    def __len__(self) -> int:
        return len(self.symbols)

    def __getitem__(self, index: int) -> int:
        if not self.lo <= index <= self.hi:
            raise IndexError(f"index {index} outside [{self.lo}, {self.hi}]")
        return self.symbols[index - self.lo]

    def covers(self, lo: int, hi: int) -> bool:
        return self.lo <= lo and hi <= self.hi

    def restrict(self, lo: int, hi: int) -> Word:
        if not self.covers(lo, hi):
            raise InvalidInputError(
                f"window [{lo}, {hi}] not inside [{self.lo}, {self.hi}]")
        return Word(lo, self.symbols[lo - self.lo:hi - self.lo + 1])

    def shifted(self, j: int) -> Word:
        """The same symbols re-based to ``[lo - j, hi - j]``."""
        return Word(self.lo - j, self.symbols)

    def as_string(self) -> str:
        return "".join(map(str, self.symbols))

    def to_dict(self) -> dict:
        return {"lo": self.lo, "sym": self.as_string()}

    def as_array(self) -> np.ndarray:
        return np.array(self.symbols, dtype=np.uint8)


@dataclass(frozen=True)
class CylinderSpec:
    """Sequences agreeing with `base` on ``[base.lo, base.hi]``."""

    base: Word

    @property
    def lo(self) -> int:
        return self.base.lo

    @property
    def hi(self) -> int:
        return self.base.hi

    def contains(self, word: Word) -> bool:
        """Whether every extension of `word` lies in the cylinder."""
        if not word.covers(self.lo, self.hi):
            raise InvalidInputError("word does not cover the cylinder window")
        return word.restrict(self.lo, self.hi) == self.base

    def conflicts_with(self, other: CylinderSpec) -> bool:
        """True when the two cylinders fix some common index differently."""
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return any(self.base[i] != other.base[i] for i in range(lo, hi + 1))


@dataclass(frozen=True)
class BernoulliParams:
    p: float

    def __post_init__(self):
        p = float(self.p)
        if not 0.0 < p < 1.0:
            raise InvalidParameterError(f"p must lie in (0, 1), got {self.p!r}")
        object.__setattr__(self, "p", p)


def return_word(k: int) -> tuple[int, ...]:
    """``k`` zeros followed by ``k + 1`` ones."""
    if k < 1:
        raise InvalidParameterError(f"k must be a positive integer, got {k!r}")
    return (0,) * k + (1,) * (k + 1)


def zn_cylinder(k: int) -> CylinderSpec:
    """The cylinder fixing ``return_word(k)`` on ``[0, 2k]``."""
    return CylinderSpec(Word(0, return_word(k)))


def _check_common_window(u: Word, v: Word) -> None:
    if (u.lo, u.hi) != (v.lo, v.hi):
        raise InvalidInputError(
            f"windows differ: [{u.lo}, {u.hi}] vs [{v.lo}, {v.hi}]")
    if not u.lo <= 0 <= u.hi:
        raise InvalidInputError("the window must contain index 0")


def first_disagreement_radius(u: Word, v: Word) -> int | None:
    """Smallest ``|i|`` with ``u_i != v_i``, or None if the words are equal.

    Extensions of `u` and `v` that agree outside the window have exactly
    this value as their agreement depth ``N(x, y)``.
    """
    _check_common_window(u, v)
    radii = [abs(u.lo + i) for i, (a, b) in enumerate(zip(u.symbols, v.symbols)) if a != b]
    return min(radii) if radii else None


def word_distance(u: Word, v: Word) -> float:
    radius = first_disagreement_radius(u, v)
    if radius is None:
        raise UndefinedDistanceError("equal words do not determine a distance")
    return 2.0 ** -radius


def cylinder_measure(c: CylinderSpec | Word, b: BernoulliParams) -> float:
    base = c.base if isinstance(c, CylinderSpec) else c
    ones = sum(base.symbols)
    zeros = len(base) - ones
    return b.p**ones * (1.0 - b.p) ** zeros


def shift_cylinder(c: CylinderSpec, j: int) -> CylinderSpec:
    """The image of `c` under the ``j``-th power of the left shift."""
    return CylinderSpec(c.base.shifted(j))


# -- sampling ---------------------------------------------------------------

def stream_rng(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based generator for the stream identified by ``(seed, *keys)``.

    Streams with distinct keys are independent, so trial ``t`` can be drawn
    as ``stream_rng(seed, t)`` in any order or on any worker.
    """
    entropy = [int(seed), *(int(k) for k in keys)]
    if any(e < 0 for e in entropy):
        raise InvalidParameterError("seeds and stream keys must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def sample_symbols(rng: np.random.Generator, length: int, p: float) -> np.ndarray:
    """``length`` i.i.d. symbols as uint8, each 1 with probability `p`."""
    return (rng.random(length) < p).astype(np.uint8)


def sample_window(seed: int, lo: int, hi: int, b: BernoulliParams) -> Word:
    if lo > hi:
        raise InvalidInputError(f"empty window [{lo}, {hi}]")
    syms = sample_symbols(stream_rng(seed), hi - lo + 1, b.p)
    return Word(lo, tuple(syms.tolist()))


def all_words(lo: int, hi: int) -> Iterator[Word]:
    length = hi - lo + 1
    for code in range(1 << length):
        yield Word.from_code(lo, length, code)


def window_codes(symbols: np.ndarray, width: int, count: int | None = None) -> np.ndarray:
    """Codes of the ``width``-wide windows starting at each offset of `symbols`.

    Bit ``i`` of entry ``t`` is ``symbols[t + i]``; there are
    ``len(symbols) - width + 1`` windows unless `count` truncates them.
    """
    symbols = np.asarray(symbols)
    n = symbols.shape[-1] - width + 1 if count is None else count
    if n < 0 or n + width - 1 > symbols.shape[-1]:
        raise InvalidInputError("symbol array is too short for the requested windows")
    dtype = np.int64
    codes = np.zeros(symbols.shape[:-1] + (n,), dtype=dtype)
    for i in range(width):
        codes |= symbols[..., i:i + n].astype(dtype) << i
    return codes


def occurrences(symbols: Sequence[int] | np.ndarray, pattern: Sequence[int]) -> np.ndarray:
    """Offsets ``t`` with ``symbols[t:t+len(pattern)] == pattern``."""
    symbols = np.asarray(symbols, dtype=np.uint8)
    width = len(pattern)
    if symbols.size < width:
        return np.empty(0, dtype=np.int64)
    target = sum(int(s) << i for i, s in enumerate(pattern))
    return np.flatnonzero(window_codes(symbols, width) == target)
