"""Cylinder values of the e^{beta F}-conformal measure on the full 2-shift.

A conformal probability measure is pinned down by two rules,

    mu([0w]) = e^{-beta} mu([w])
    mu([1w]) = e^{-beta/(j+1)} mu([w])      (j = first 0 in w),

plus normalisation, which fixes the all-ones cylinder at every depth.  The
table below runs that recursion with signed arithmetic: when beta < beta_0 the
all-ones residual turns negative at some depth, and that sign change is the
numerical witness that no conformal probability measure exists.
"""

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .critical import harmonic_numbers
from .errors import CapExceeded
from .shift import TailPoint, Word, birkhoff_sum, leading_ones, parse_word

MAX_TABLE_DEPTH = 16
NEGATIVE_TOL = 1e-12


@dataclass(frozen=True)
class CylinderMeasureTable:
    """Masses of all cylinders up to ``depth``.

    ``levels[m][i]`` is the mass of the length-m word with binary value ``i``,
    so each level is already in lexicographic order.
    """

    beta: float
    depth: int
    levels: tuple

    @property
    def masses(self) -> dict:
        """Word string -> mass for every word of length ``depth``."""
        n = self.depth
        if n == 0:
            return {"": float(self.levels[0][0])}
        return {format(i, f"0{n}b"): float(m) for i, m in enumerate(self.levels[n])}

    @property
    def residual_trace(self) -> np.ndarray:
        """R_1..R_n, the mass of [1^m] for m = 1..depth."""
        return np.array([lvl[-1] for lvl in self.levels[1:]])

    def mass(self, u) -> float:
        u = u if isinstance(u, Word) else parse_word(u)
        if len(u) > self.depth:
            raise ValueError(f"word length {len(u)} exceeds table depth {self.depth}")
        return float(self.levels[len(u)][u.code])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["word", "mass"])
        for word, m in self.masses.items():
            w.writerow([word, repr(m)])
        w.writerow([f"residual_1^{self.depth}", repr(float(self.levels[-1][-1]))])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "beta": self.beta,
            "depth": self.depth,
            "masses": self.masses,
            "residual_trace": [float(r) for r in self.residual_trace],
        }, indent=1)

    @classmethod
    def from_masses(cls, beta, masses):
        """Rebuild a table from depth-n masses, aggregating shorter cylinders."""
        depth = max((len(k) for k in masses), default=0)
        top = np.empty(1 << depth)
        if len(masses) != len(top):
            raise ValueError(f"expected {len(top)} words of length {depth}, got {len(masses)}")
        for word, m in masses.items():
            top[parse_word(word).code] = m
        levels = [top]
        for _ in range(depth):
            prev = levels[0]
            levels.insert(0, prev[0::2] + prev[1::2])
        return cls(float(beta), depth, tuple(levels))

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        table = cls.from_masses(obj["beta"], obj["masses"])
        if int(obj["depth"]) != table.depth:
            raise ValueError("depth field disagrees with the words present")
        return table

    @classmethod
    def from_csv(cls, text, beta):
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["word", "mass"]:
            raise ValueError("missing 'word,mass' header")
        masses = {}
        for word, m in rows[1:]:
            if word.startswith("residual_"):
                continue
            masses[word] = float(m)
        return cls.from_masses(beta, masses)


def conformal_table(beta: float, depth: int) -> CylinderMeasureTable:
    """Run the cylinder recursion down to ``depth`` (at most 16).

    Negative all-ones residuals are kept as they are.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if depth > MAX_TABLE_DEPTH:
        raise CapExceeded("depth", depth, MAX_TABLE_DEPTH)
    beta = float(beta)
    e0 = math.exp(-beta)
    levels = [np.ones(1)]
    for m in range(depth):
        prev = levels[-1]
        half = 1 << m
        nxt = np.empty(2 * half)
        nxt[:half] = e0 * prev
        lead = leading_ones(m)
        # words w with a 0 have their first 0 at position lead+1
        factor = np.exp(-beta / (lead[:-1] + 2.0))
        nxt[half:-1] = factor * prev[:-1]
        nxt[-1] = 1.0 - math.fsum(nxt[:-1])
        levels.append(nxt)
    return CylinderMeasureTable(beta, depth, tuple(levels))


def cylinder_mass_closed_form(beta: float, u) -> float:
    """exp(-beta * S(u.1^inf)) for a nonempty word ending in 0."""
    u = u if isinstance(u, Word) else parse_word(u)
    if len(u) == 0 or u.symbols[-1] != "0":
        raise ValueError(f"closed form needs a nonempty word ending in 0, got {u.symbols!r}")
    return math.exp(-beta * birkhoff_sum(TailPoint(u), len(u)))


@dataclass(frozen=True)
class NonexistenceReport:
    beta: float
    first_negative_depth: Optional[int]
    probe_depth: int
    last_residual: float


def residuals(beta: float, n: int) -> np.ndarray:
    """R_1..R_n with R_m = 1 - sum_{k<=m} e^{-beta s_k} (compensated running sum)."""
    terms = np.exp(-beta * harmonic_numbers(n)).tolist()
    out = np.empty(n)
    s = c = 0.0
    for i, x in enumerate(terms):
        t = s + x
        c += (s - t) + x if abs(s) >= abs(x) else (x - t) + s
        s = t
        out[i] = 1.0 - (s + c)
    return out


def detect_nonexistence(beta: float, probe_depth: int) -> NonexistenceReport:
    """First depth n <= probe_depth with R_n < -1e-12, if any.

    The all-ones residual obeys R_n = 1 - sum_{k<=n} e^{-beta s_k} because the
    cylinders [0], [10], [110], ... are disjoint with masses e^{-beta s_k}, so
    this scan needs O(n) work instead of the exponential table.
    """
    if probe_depth < 1:
        raise ValueError("probe_depth must be >= 1")
    beta = float(beta)
    terms = np.exp(-beta * harmonic_numbers(probe_depth)).tolist()
    s = c = 0.0
    r = 1.0
    for n, x in enumerate(terms, start=1):
        t = s + x
        c += (s - t) + x if abs(s) >= abs(x) else (x - t) + s
        s = t
        r = 1.0 - (s + c)
        if r < -NEGATIVE_TOL:
            return NonexistenceReport(beta, n, probe_depth, r)
    return NonexistenceReport(beta, None, probe_depth, r)
