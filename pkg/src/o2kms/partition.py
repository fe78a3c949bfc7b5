"""Level partition sums Z_n, the total mass M, and the atomic measure at 1^inf.

Z_n sums exp(-beta S(y)) over the tail points of level n.  Splitting a level-n
stem at its first 0 gives the renewal equation

    Z_n = sum_{k=1}^{n} e^{-beta s_k} Z_{n-k},     Z_0 = 1,

and ``partition_bruteforce`` evaluates the same number by enumerating the
level set directly, as an independent check of the recursion.
"""

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .critical import certify_against_one, renewal_weights
from .errors import CapExceeded, DivergentSeries, NoAtomicMeasure, NumericOverflow
from .shift import (TailPoint, Word, basis_arrays, basis_birkhoff_sums, birkhoff_sum,
                    cylinder_mask, enumerate_level_set, parse_word)

MAX_SEQUENCE_N = 100_000
MAX_BRUTEFORCE_N = 20
MAX_SANDWICH_N = 50_000
MAX_ATOMIC_N = 20
DIVERGENCE_THRESHOLD = 1e12


@dataclass(frozen=True)
class PartitionTable:
    beta: float
    Z: np.ndarray          # Z_0..Z_N
    partial_M: np.ndarray  # partial_M[m] = sum_{n=1}^{m} Z_n, m = 0..N

    @property
    def N(self):
        return len(self.Z) - 1

    def to_csv(self) -> str:
        lines = ["n,Z,partial_M"]
        for n, (z, m) in enumerate(zip(self.Z, self.partial_M)):
            lines.append(f"{n},{float(z)!r},{float(m)!r}")
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {"beta": self.beta, "Z": [float(z) for z in self.Z],
                "partial_M": [float(m) for m in self.partial_M]}


def _prefix_sums(Z):
    out = np.zeros(len(Z))
    s = c = 0.0
    for i in range(1, len(Z)):
        x = float(Z[i])
        t = s + x
        c += (s - t) + x if abs(s) >= abs(x) else (x - t) + s
        s = t
        out[i] = s + c
    return out


def partition_sequence(beta: float, N: int) -> PartitionTable:
    """Z_0..Z_N by the renewal recursion (O(N^2))."""
    if N < 0:
        raise ValueError("N must be >= 0")
    if N > MAX_SEQUENCE_N:
        raise CapExceeded("N", N, MAX_SEQUENCE_N)
    beta = float(beta)
    w = renewal_weights(beta, N)
    Z = np.zeros(N + 1)
    Z[0] = 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, N + 1):
            Z[n] = np.dot(w[:n], Z[n - 1::-1])
            if not math.isfinite(Z[n]):
                raise NumericOverflow(f"Z_{n} overflowed at beta={beta}")
    return PartitionTable(beta, Z, _prefix_sums(Z))


@lru_cache(maxsize=None)
def _bruteforce_sums(n):
    return tuple(birkhoff_sum(y, n) for y in enumerate_level_set(n))


def partition_bruteforce(beta: float, n: int) -> float:
    """Z_n summed point by point over the enumerated level set."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > MAX_BRUTEFORCE_N:
        raise CapExceeded("n", n, MAX_BRUTEFORCE_N)
    return math.fsum(math.exp(-beta * s) for s in _bruteforce_sums(n))


@dataclass(frozen=True)
class MassEstimate:
    """Outcome of ``total_mass``; ``value`` is the last partial sum."""

    beta: float
    value: float
    converged: bool
    N: int
    gap: float


def total_mass(beta: float, rel_tol: float = 1e-10, max_n: int = 1 << 14) -> MassEstimate:
    """Estimate M = sum_{n>=1} Z_n by doubling N until partial sums settle.

    Converged when |M(2N) - M(N)| <= rel_tol * M(2N).  Otherwise the result
    is flagged as not converged, either because 2N passed ``max_n`` or because
    the partial sum ran past 1e12 (growth that only happens for beta < beta_0).
    """
    if not rel_tol > 0:
        raise ValueError("rel_tol must be positive")
    N = 16
    while True:
        try:
            table = partition_sequence(beta, 2 * N)
        except NumericOverflow:
            return MassEstimate(float(beta), DIVERGENCE_THRESHOLD, False, 2 * N, math.inf)
        m_n, m_2n = float(table.partial_M[N]), float(table.partial_M[2 * N])
        gap = abs(m_2n - m_n)
        if gap <= rel_tol * m_2n:
            return MassEstimate(float(beta), m_2n, True, 2 * N, gap)
        if 4 * N > max_n or m_2n > DIVERGENCE_THRESHOLD:
            return MassEstimate(float(beta), m_2n, False, 2 * N, gap)
        N *= 2


def sandwich_check(beta: float, N: int) -> bool:
    """Check sum_{1..N} Z <= (sum_{0..N} Z)(sum_{1..N} e^{-beta s_k}) <= sum_{1..2N} Z."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > MAX_SANDWICH_N:
        raise CapExceeded("N", N, MAX_SANDWICH_N)
    table = partition_sequence(beta, 2 * N)
    Z = table.Z
    left = math.fsum(Z[1 : N + 1])
    middle = math.fsum(Z[: N + 1]) * math.fsum(renewal_weights(beta, N))
    right = math.fsum(Z[1 : 2 * N + 1])
    slack = 1e-12 * max(left, middle, right)
    return left <= middle + slack and middle <= right + slack


@dataclass(frozen=True)
class AtomicMeasure:
    """Truncation to levels <= N of m_x, the atomic conformal measure at 1^inf.

    Atoms are stored in basis order (1^inf, then levels 1..N lexicographically)
    as raw Boltzmann factors; ``normalizer`` is their exact (``fsum``) total, so
    the retained atoms carry mass exactly 1.  ``tail_tolerance`` bounds the
    difference between any truncated cylinder mass and the untruncated one.
    """

    beta: float
    level_cap: int
    levels: np.ndarray
    codes: np.ndarray
    raw: np.ndarray
    normalizer: float
    tail_tolerance: Optional[float]

    @property
    def atom_at_x(self) -> float:
        return 1.0 / self.normalizer

    @property
    def partial_M(self) -> float:
        return self.normalizer - 1.0

    @property
    def weights(self) -> np.ndarray:
        return self.raw / self.normalizer

    def atoms(self):
        """Yield ``(TailPoint, weight)`` pairs in basis order."""
        for lvl, code, r in zip(self.levels.tolist(), self.codes.tolist(), self.raw.tolist()):
            stem = format(code, f"0{lvl}b") if lvl else ""
            yield TailPoint(Word(stem)), r / self.normalizer

    def weight(self, y: TailPoint) -> float:
        n = y.level
        if n > self.level_cap:
            return 0.0
        idx = 0 if n == 0 else (1 << (n - 1)) + (y.stem.code >> 1)
        return float(self.raw[idx]) / self.normalizer

    def cylinder_mass(self, u) -> float:
        u = u if isinstance(u, Word) else parse_word(u)
        mask = cylinder_mask(self.levels, self.codes, u)
        return math.fsum(self.raw[mask]) / self.normalizer

    def to_json(self) -> str:
        return json.dumps({
            "beta": self.beta,
            "level_cap": self.level_cap,
            "normalizer": self.normalizer,
            "tail_tolerance": self.tail_tolerance,
            "atoms": {str(y): w for y, w in self.atoms()},
        }, indent=1)


def atomic_measure(beta: float, N: int, mass_rel_tol: float = 1e-10) -> AtomicMeasure:
    """Build the truncated atomic measure; requires a certified G(beta) < 1."""
    if N < 0:
        raise ValueError("N must be >= 0")
    if N > MAX_ATOMIC_N:
        raise CapExceeded("N", N, MAX_ATOMIC_N)
    beta = float(beta)
    try:
        enclosure = certify_against_one(beta)
    except DivergentSeries as exc:
        raise NoAtomicMeasure(f"beta={beta} <= 1: {exc}") from None
    if not enclosure.upper < 1.0:
        raise NoAtomicMeasure(
            f"cannot certify G({beta}) < 1 (enclosure [{enclosure.lower}, {enclosure.upper}])")
    levels, codes = basis_arrays(N)
    raw = np.exp(-beta * basis_birkhoff_sums(N))
    normalizer = math.fsum(raw)
    est = total_mass(beta, rel_tol=mass_rel_tol)
    tail = None
    if est.converged:
        m_n = normalizer - 1.0
        # |truncated - true| <= (M - M_N) / (1 + M); the doubling gap covers M - est
        tail = max(est.value - m_n, 0.0) / (1.0 + est.value) + est.gap
    return AtomicMeasure(beta, N, levels, codes, raw, normalizer, tail)
