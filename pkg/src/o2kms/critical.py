"""Harmonic numbers, the series G(beta) = sum_k exp(-beta s_k) and its root.

``series_G`` returns a certified enclosure of G(beta): an exactly rounded
partial sum over k <= K plus rigorous lower/upper bounds for the tail k > K and
an explicit allowance for floating-point error.  The tail bounds rest on

    1/(2k) - 1/(12k^2) < s_k - ln k - gamma < 1/(2k)      (k >= 1)

so that for k > K, with c = exp(-beta*gamma) and a = beta/2,

    c k^-beta (1 - a/k)  <=  exp(-beta s_k)
                         <=  c E k^-beta (1 - a/k + a^2/(2k^2)),
    E = exp(beta / (12 (K+1)^2)),

and each power sum sum_{k>K} k^-p is enclosed by the trapezoid / midpoint
integrals of the convex function x^-p.  The enclosure width decays like
K^(-beta-1), which is what makes 1e-10 brackets on beta_0 cheap.
"""

import math
import threading
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .errors import BracketError, DivergentSeries

EULER_GAMMA = 0.57721566490153286061
EPS = float(np.finfo(float).eps)

DEFAULT_START_TERMS = 1 << 10
DEFAULT_MAX_TERMS = 1 << 22

_harm_lock = threading.Lock()
_harm = np.zeros(1)          # _harm[k] = s_k, _harm[0] = 0
_harm_state = (0.0, 0.0)     # Neumaier (sum, compensation) after the last entry


def _extend_harmonic(k):
    global _harm, _harm_state
    with _harm_lock:
        have = len(_harm) - 1
        if k <= have:
            return
        target = max(k, 2 * have)
        new = np.empty(target + 1)
        new[: have + 1] = _harm
        s, c = _harm_state
        for j in range(have + 1, target + 1):
            x = 1.0 / j
            t = s + x
            if abs(s) >= abs(x):
                c += (s - t) + x
            else:
                c += (x - t) + s
            s = t
            new[j] = s + c
        _harm_state = (s, c)
        _harm = new


def harmonic(k: int) -> float:
    """s_k = 1 + 1/2 + ... + 1/k by compensated forward summation (cached)."""
    if k < 1:
        raise ValueError("harmonic(k) needs k >= 1")
    if k >= len(_harm):
        _extend_harmonic(k)
    return float(_harm[k])


def harmonic_numbers(n: int) -> np.ndarray:
    """Array ``[s_1, ..., s_n]`` (a copy)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n >= len(_harm):
        _extend_harmonic(n)
    return _harm[1 : n + 1].copy()


def renewal_weights(beta: float, n: int) -> np.ndarray:
    """``[exp(-beta s_1), ..., exp(-beta s_n)]``."""
    return np.exp(-beta * harmonic_numbers(n))


@dataclass(frozen=True)
class SeriesResult:
    """Certified enclosure of G(beta).

    The true value lies in ``[lower, upper]`` where
    ``lower = value + tail_low - rounding`` and
    ``upper = value + tail_high + rounding``.
    """

    beta: float
    value: float
    tail_low: float
    tail_high: float
    terms_used: int
    rounding: float

    @property
    def lower(self) -> float:
        return self.value + self.tail_low - self.rounding

    @property
    def upper(self) -> float:
        return self.value + self.tail_high + self.rounding

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _power_tail(p, K):
    """Bounds (lo, hi) on sum_{k>K} k^-p for p > 1, K >= 0."""
    lo = (K + 1.0) ** (1.0 - p) / (p - 1.0) + 0.5 * (K + 1.0) ** (-p)
    hi = (K + 0.5) ** (1.0 - p) / (p - 1.0)
    return lo, hi


def _enclose(beta, K):
    terms = np.exp(-beta * harmonic_numbers(K))
    value = math.fsum(terms)
    c = math.exp(-beta * EULER_GAMMA)
    a = 0.5 * beta
    L0, U0 = _power_tail(beta, K)
    L1, U1 = _power_tail(beta + 1.0, K)
    _, U2 = _power_tail(beta + 2.0, K)
    E = math.exp(beta / (12.0 * (K + 1.0) ** 2))
    tail_low = max(c * (L0 - a * U1), 0.0)
    tail_high = c * E * (U0 - a * L1 + 0.5 * a * a * U2)
    s_K = harmonic(K)
    # per-term error of exp(-beta*s_k) is at most (3 beta s_k + 4) ulp;
    # tail formulas get a generous 64 ulp relative allowance
    rounding = EPS * ((3.0 * beta * s_K + 5.0) * value + 64.0 * tail_high) + 4 * EPS
    return SeriesResult(beta, value, tail_low, tail_high, K, rounding)


def _check_beta(beta):
    if not math.isfinite(beta):
        raise ValueError(f"beta must be finite, got {beta}")
    if beta <= 1.0:
        raise DivergentSeries(
            f"G({beta}) diverges: exp(-beta s_k) >= exp(-beta)/k^beta for beta <= 1")


def series_G(beta: float, tol: float = 1e-10, max_terms: int = DEFAULT_MAX_TERMS) -> SeriesResult:
    """Certified enclosure of G(beta) of width <= tol.

    The number of summed terms doubles from 1024 until the enclosure is narrow
    enough; if ``max_terms`` is reached first the wider enclosure is returned
    as is (it is still valid).
    """
    _check_beta(beta)
    if not tol > 0:
        raise ValueError("tol must be positive")
    K = DEFAULT_START_TERMS
    while True:
        res = _enclose(beta, K)
        if res.width <= tol or K >= max_terms:
            return res
        K = min(2 * K, max_terms)


def certify_against_one(beta: float, max_terms: int = DEFAULT_MAX_TERMS) -> SeriesResult:
    """Enclosure of G(beta) refined until it excludes 1, or ``max_terms`` is hit."""
    _check_beta(beta)
    K = 64
    while True:
        res = _enclose(beta, K)
        if res.lower > 1.0 or res.upper < 1.0 or K >= max_terms:
            return res
        K = min(2 * K, max_terms)


def _sign(beta):
    res = certify_against_one(beta)
    if res.lower > 1.0:
        return 1
    if res.upper < 1.0:
        return -1
    return 0


@dataclass(frozen=True)
class Beta0Result:
    lo: float
    hi: float
    midpoint: float
    residual: float

    def to_dict(self):
        return asdict(self)


@lru_cache(maxsize=16)
def solve_beta0(tol: float = 1e-10) -> Beta0Result:
    """Bisection for the unique beta_0 > 1 with G(beta_0) = 1.

    Every bisection step uses a certified sign of G - 1, so on return
    G(lo) > 1 > G(hi) is proven (up to the stated rounding model) and
    ``hi - lo <= tol``.  ``residual`` bounds |G(midpoint) - 1|.
    """
    if not tol >= 1e-12:
        raise ValueError("tol must be >= 1e-12")
    lo, hi = 1.0 + 1e-6, 2.0
    if _sign(lo) != 1:
        raise BracketError(f"could not certify G({lo}) > 1")
    while _sign(hi) != -1:
        hi *= 2.0
        if hi > 64.0:
            raise BracketError("could not certify an upper bracket for beta_0")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        s = _sign(mid)
        if s > 0:
            lo = mid
        elif s < 0:
            hi = mid
        else:
            # mid is closer to beta_0 than the enclosures can resolve
            a, b = mid - 0.25 * tol, mid + 0.25 * tol
            if _sign(a) != 1 or _sign(b) != -1:
                raise BracketError(f"could not separate beta_0 near {mid!r}")
            lo, hi = a, b
            break
    mid = 0.5 * (lo + hi)
    res = series_G(mid, tol=min(1e-12, tol))
    residual = max(abs(res.lower - 1.0), abs(res.upper - 1.0))
    return Beta0Result(lo, hi, mid, residual)
