"""Symbolic model of the full 2-shift restricted to the backward orbit of 1^inf.

Points of the tail set are stored canonically as a finite *stem* that is either
empty or ends in ``0``; the point denoted is ``stem`` followed by infinitely
many ``1``.  Positions inside a word are counted from 1, so the potential of a
point is ``1 / (position of its first 0)``.

Besides the object-level operations (``shift``, ``potential``,
``birkhoff_sum``, ``enumerate_level_set``) the module exposes a few vectorised
helpers that produce the same quantities for a whole level at once.  Their
ordering convention is shared by the partition and representation modules:
level ``n >= 1`` holds the stems ``p + "0"`` for all ``p`` of length ``n - 1``,
ordered by the integer value of ``p`` (equivalently, lexicographically).
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import CapExceeded, InvalidSymbol

ENUMERATION_CAP = 26


def _check_symbols(text):
    for pos, ch in enumerate(text, start=1):
        if ch not in "01":
            raise InvalidSymbol(f"invalid symbol at position {pos}: {ch!r}")


@dataclass(frozen=True)
class Word:
    """A finite binary word; ``Word("")`` names the whole space."""

    symbols: str = ""

    def __post_init__(self):
        if not isinstance(self.symbols, str):
            raise TypeError("Word symbols must be a str of '0'/'1'")
        _check_symbols(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def __str__(self):
        return self.symbols

    def symbol(self, i: int) -> int:
        """Symbol at 1-based position ``i``."""
        if not 1 <= i <= len(self.symbols):
            raise IndexError(f"position {i} outside 1..{len(self.symbols)}")
        return int(self.symbols[i - 1])

    def first_zero(self) -> Optional[int]:
        """1-based position of the first ``0``, or None for an all-ones word."""
        idx = self.symbols.find("0")
        return None if idx < 0 else idx + 1

    @property
    def code(self) -> int:
        """Integer value of the word read as a binary numeral (0 for empty)."""
        return int(self.symbols, 2) if self.symbols else 0


def parse_word(text: str) -> Word:
    """Parse a '0'/'1' string into a Word.

    >>> parse_word("110").symbol(3)
    0
    """
    _check_symbols(text)
    return Word(text)


@dataclass(frozen=True)
class TailPoint:
    """The point ``stem . 1^inf`` of the tail set.

    The stem must be empty or end in ``0``; any other stem would name the same
    point as a shorter one, so it is refused to keep equality structural.
    """

    stem: Word = Word("")

    def __post_init__(self):
        if isinstance(self.stem, str):
            object.__setattr__(self, "stem", parse_word(self.stem))
        s = self.stem.symbols
        if s and s[-1] != "0":
            raise ValueError(f"stem {s!r} is not canonical (must be empty or end in 0)")

    @classmethod
    def from_string(cls, text: str) -> "TailPoint":
        return cls(parse_word(text))

    @property
    def level(self) -> int:
        """Least k with shift^k(y) = 1^inf."""
        return len(self.stem)

    def __str__(self):
        return self.stem.symbols


FIXED_POINT = TailPoint(Word(""))


def shift(y: TailPoint) -> TailPoint:
    """Drop the first symbol; 1^inf is fixed."""
    if y.level == 0:
        return y
    return TailPoint(Word(y.stem.symbols[1:]))


def potential(y: TailPoint) -> float:
    """F(y) = 1 / (position of first 0), and 0 at 1^inf."""
    j = y.stem.first_zero()
    return 0.0 if j is None else 1.0 / j


def potential_on_cylinder(u: Word) -> float:
    """Constant value of F on the cylinder [u]; ``u`` must contain a 0."""
    j = u.first_zero()
    if j is None:
        raise ValueError(f"F is not constant on the all-ones cylinder [{u.symbols}]")
    return 1.0 / j


def birkhoff_sum(y: TailPoint, n: int) -> float:
    """sum_{j<n} F(shift^j y), summed with ``math.fsum``.

    Terms past ``level(y)`` vanish, so the value stabilises at n = level(y).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    terms = []
    point = y
    for _ in range(min(n, y.level)):
        terms.append(potential(point))
        point = shift(point)
    return math.fsum(terms)


def enumerate_level_set(n: int, cap: int = ENUMERATION_CAP) -> list:
    """All tail points of level exactly ``n``, in lexicographic stem order."""
    if n < 0:
        raise ValueError("level must be >= 0")
    if n > cap:
        raise CapExceeded("level", n, cap)
    if n == 0:
        return [FIXED_POINT]
    width = n - 1
    return [TailPoint(Word((format(q, f"0{width}b") if width else "") + "0"))
            for q in range(1 << width)]


# ---------------------------------------------------------------------------
# vectorised level helpers


@lru_cache(maxsize=None)
def _leading_ones(m: int) -> np.ndarray:
    """Number of leading 1s of every word of length m, indexed by its code."""
    if m == 0:
        return np.zeros(1, dtype=np.int64)
    prev = _leading_ones(m - 1)
    out = np.zeros(1 << m, dtype=np.int64)
    out[1 << (m - 1):] = prev + 1
    out.flags.writeable = False
    return out


def leading_ones(m: int) -> np.ndarray:
    """Leading-ones count for all words of length ``m`` (read-only array)."""
    return _leading_ones(m)


def level_potentials(n: int) -> np.ndarray:
    """F at every level-n tail point, in level order (n >= 1)."""
    if n < 1:
        raise ValueError("level must be >= 1")
    # stem p+"0": the first 0 sits right after the leading ones of p
    return 1.0 / (_leading_ones(n - 1) + 1).astype(np.float64)


@lru_cache(maxsize=32)
def _level_sums(n: int) -> np.ndarray:
    if n == 0:
        out = np.zeros(1)
    elif n == 1:
        out = np.ones(1)
    else:
        prev = _level_sums(n - 1)
        # shifting p+"0" drops the top bit of p
        out = level_potentials(n) + np.tile(prev, 2)
    out.flags.writeable = False
    return out


def level_birkhoff_sums(n: int, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Full Birkhoff sums S(y) = sum_{j<n} F(shift^j y) for all y of level n."""
    if n > cap:
        raise CapExceeded("level", n, cap)
    return _level_sums(n)


def basis_arrays(N: int, cap: int = ENUMERATION_CAP):
    """Levels and stem codes for all tail points of level <= N.

    Order: 1^inf first, then level 1, 2, ..., N, each in lexicographic order.
    The stem code of a level-n point is the integer value of its n-bit stem.
    Returns ``(levels, codes)`` as int64 arrays of length 2**N.
    """
    if N > cap:
        raise CapExceeded("level_cap", N, cap)
    levels = [np.zeros(1, dtype=np.int64)]
    codes = [np.zeros(1, dtype=np.int64)]
    for n in range(1, N + 1):
        size = 1 << (n - 1)
        levels.append(np.full(size, n, dtype=np.int64))
        codes.append(np.arange(size, dtype=np.int64) << 1)
    return np.concatenate(levels), np.concatenate(codes)


def basis_birkhoff_sums(N: int) -> np.ndarray:
    """Birkhoff sums over the whole level <= N basis, in basis order."""
    return np.concatenate([level_birkhoff_sums(n) for n in range(N + 1)])


def cylinder_mask(levels: np.ndarray, codes: np.ndarray, u: Word) -> np.ndarray:
    """Boolean mask of the points ``stem . 1^inf`` that lie in the cylinder [u]."""
    m = len(u)
    if m == 0:
        return np.ones(levels.shape, dtype=bool)
    target = u.code
    mask = np.zeros(levels.shape, dtype=bool)
    long_ = levels >= m
    mask[long_] = (codes[long_] >> (levels[long_] - m)) == target
    short = ~long_
    pad = m - levels[short]
    # compare u against the stem padded with 1s up to length m
    mask[short] = ((codes[short] << pad) | ((np.int64(1) << pad) - 1)) == target
    return mask
