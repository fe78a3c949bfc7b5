"""Truncated circle-indexed representations of O_2 on l^2 of the tail set.

Basis vectors are the tail points of level <= N, ordered as in
``shift.basis_arrays``: index 0 is 1^inf and a level-n point with stem
``p + "0"`` sits at index ``2**(n-1) + int(p, 2)``.  In that order the binary
expansion of an index ``g >= 1`` is ``"1" + p``, which makes the shift map an
index operation.

For the generator V_i the kernel of pi_lambda has exactly one entry per row:
row y carries a 1 in column shift(y) when y starts with i, except row 1^inf of
V_1, which carries lambda (the isotropy character, period 1).  Rows at level N
keep their targets; V_i^* loses the discarded level N+1, so isometry checks are
split into interior and boundary rows.
"""

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import CapExceeded, ConditioningError
from .partition import atomic_measure
from .shift import (Word, basis_arrays, basis_birkhoff_sums, cylinder_mask,
                    leading_ones, parse_word)

MAX_LEVEL_CAP = 22
UNIT_TOL = 1e-12
ENTRY_GUARD = 1e3


@dataclass(frozen=True, eq=False)
class TruncatedRep:
    beta: float
    lam: complex
    N: int
    levels: np.ndarray
    codes: np.ndarray
    birkhoff: np.ndarray     # S(y) for each basis point
    potential: np.ndarray    # F(y) for each basis point
    V0: sp.csr_matrix
    V1: sp.csr_matrix
    _monomials: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return len(self.levels)

    @property
    def H(self) -> np.ndarray:
        """Diagonal of the Gibbs density exp(-beta S)."""
        return np.exp(-self.beta * self.birkhoff)

    @property
    def interior_mask(self) -> np.ndarray:
        return self.levels <= self.N - 1

    def unitary(self, t: float) -> np.ndarray:
        """Diagonal of U_t = exp(i t S)."""
        return np.exp(1j * t * self.birkhoff)

    def generator(self, i: int) -> sp.csr_matrix:
        return self.V0 if i == 0 else self.V1

    def monomial(self, u) -> sp.csr_matrix:
        """pi_lambda(V_u) = V_{u_1} V_{u_2} ... V_{u_n} (cached per rep)."""
        key = str(u)
        if key not in self._monomials:
            out = sp.identity(self.dim, dtype=complex, format="csr")
            for ch in key:
                out = out @ self.generator(int(ch))
            self._monomials[key] = out.tocsr()
        return self._monomials[key]


def build_rep(beta: float, lam: complex, N: int) -> TruncatedRep:
    """Sparse pi_lambda(V_0), pi_lambda(V_1) and diagonal data on levels <= N."""
    if N < 0:
        raise ValueError("N must be >= 0")
    if N > MAX_LEVEL_CAP:
        raise CapExceeded("level_cap", N, MAX_LEVEL_CAP)
    lam = complex(lam)
    if abs(abs(lam) - 1.0) > UNIT_TOL:
        raise ValueError(f"|lambda| must be 1, got {abs(lam)!r}")
    levels, codes = basis_arrays(N)
    dim = len(levels)
    g = np.arange(dim, dtype=np.int64)
    n = levels
    first = np.zeros(dim, dtype=np.int64)
    target = np.zeros(dim, dtype=np.int64)
    deep = n >= 2
    q = g[deep] - (np.int64(1) << (n[deep] - 1))
    first[deep] = q >> (n[deep] - 2)
    quarter = np.int64(1) << (n[deep] - 2)
    target[deep] = quarter + (q & (quarter - 1))
    # level 1 ("0") maps to 1^inf with first symbol 0; 1^inf maps to itself via V_1
    first[0] = 1
    values = np.ones(dim, dtype=complex)
    values[0] = lam
    mats = []
    for i in (0, 1):
        rows = np.flatnonzero(first == i)
        mats.append(sp.csr_matrix((values[rows], (rows, target[rows])), shape=(dim, dim)))
    pot = np.zeros(dim)
    for lvl in range(1, N + 1):
        lo = 1 << (lvl - 1)
        pot[lo : 2 * lo] = 1.0 / (leading_ones(lvl - 1) + 1.0)
    return TruncatedRep(float(beta), lam, N, levels, codes, basis_birkhoff_sums(N), pot,
                        mats[0], mats[1])


def cylinder_projection(rep: TruncatedRep, u) -> sp.csr_matrix:
    """Diagonal 0/1 projection onto the basis points lying in [u]."""
    u = u if isinstance(u, Word) else parse_word(u)
    if len(u) > rep.N:
        raise ValueError(f"|u|={len(u)} exceeds level cap {rep.N}")
    mask = cylinder_mask(rep.levels, rep.codes, u)
    return sp.diags(mask.astype(complex), format="csr")


@dataclass(frozen=True)
class GibbsState:
    rep: TruncatedRep
    H: np.ndarray
    trace_H: float

    def __call__(self, a) -> complex:
        return evaluate(self, a)


def gibbs_state(rep: TruncatedRep) -> GibbsState:
    H = rep.H
    return GibbsState(rep, H, math.fsum(H))


def _diagonal(a, dim):
    if a.shape != (dim, dim):
        raise ValueError(f"operator shape {a.shape} does not match dimension {dim}")
    return np.asarray(a.diagonal())


def evaluate(state: GibbsState, a) -> complex:
    """Tr(H a) / Tr(H), accumulated with ``math.fsum``."""
    d = _diagonal(a, state.rep.dim)
    prod = state.H * d
    re = math.fsum(np.real(prod))
    im = math.fsum(np.imag(prod))
    return complex(re, im) / state.trace_H


def _max_abs(m) -> float:
    m = sp.csr_matrix(m)
    m.eliminate_zeros()
    return float(np.max(np.abs(m.data))) if m.nnz else 0.0


@dataclass(frozen=True)
class CuntzReport:
    completeness: float        # max |V0 V0* + V1 V1* - I|
    isometry_interior: float   # max |V_i* V_i - I| over interior rows
    boundary: float            # max |V_i* V_i| over level-N rows


def check_cuntz(rep: TruncatedRep) -> CuntzReport:
    ident = sp.identity(rep.dim, dtype=complex, format="csr")
    V0, V1 = rep.V0, rep.V1
    completeness = _max_abs(V0 @ V0.conj().T + V1 @ V1.conj().T - ident)
    inner = rep.interior_mask
    iso = bnd = 0.0
    for V in (V0, V1):
        P = (V.conj().T @ V).tocsr()
        iso = max(iso, _max_abs((P - ident)[inner]))
        if (~inner).any():
            bnd = max(bnd, _max_abs(P[~inner]))
    return CuntzReport(completeness, iso, bnd)


def check_covariance(rep: TruncatedRep, t: float) -> float:
    """max_i |U_t V_i U_t^* - e^{itF} V_i|."""
    u = sp.diags(rep.unitary(t))
    d = sp.diags(np.exp(1j * t * rep.potential))
    worst = 0.0
    for V in (rep.V0, rep.V1):
        worst = max(worst, _max_abs(u @ V @ u.conj() - d @ V))
    return worst


def _entry_bound(a):
    if sp.issparse(a):
        return float(np.max(np.abs(a.data))) if a.nnz else 0.0
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def check_kms(rep: TruncatedRep, a, b) -> float:
    """|omega(ab) - omega(b H a H^{-1})| for the Gibbs state omega of ``rep``."""
    for name, m in (("a", a), ("b", b)):
        if m.shape != (rep.dim, rep.dim):
            raise ValueError(f"{name} has shape {m.shape}, expected {(rep.dim, rep.dim)}")
        if _entry_bound(m) > ENTRY_GUARD:
            raise ConditioningError(f"entries of {name} exceed {ENTRY_GUARD}")
    state = gibbs_state(rep)
    a = sp.csr_matrix(a)
    b = sp.csr_matrix(b)
    h = sp.diags(state.H)
    h_inv = sp.diags(np.exp(rep.beta * rep.birkhoff))
    lhs = evaluate(state, a @ b)
    rhs = evaluate(state, b @ (h @ a @ h_inv))
    return abs(lhs - rhs)


def random_sparse_pair(dim, rng, nnz=None):
    """Two sparse matrices with unit-modulus entries.

    Half of b's entries sit on the transpose of a's support so that ``a @ b``
    has a nonzero diagonal and the trace comparison is not vacuous.
    """
    nnz = nnz or max(8, dim // 16)
    rows, cols = rng.integers(0, dim, nnz), rng.integers(0, dim, nnz)
    a = sp.csr_matrix((np.exp(2j * math.pi * rng.random(nnz)), (rows, cols)), shape=(dim, dim))
    half = nnz // 2
    b_rows = np.concatenate([cols[:half], rng.integers(0, dim, nnz - half)])
    b_cols = np.concatenate([rows[:half], rng.integers(0, dim, nnz - half)])
    b = sp.csr_matrix((np.exp(2j * math.pi * rng.random(nnz)), (b_rows, b_cols)),
                      shape=(dim, dim))
    return a, b


@lru_cache(maxsize=8)
def _atomic(beta, N):
    return atomic_measure(beta, N)


@lru_cache(maxsize=8)
def _rep_family(beta, N, Q):
    return tuple(build_rep(beta, cmath.exp(2j * math.pi * j / Q), N) for j in range(Q))


def circle_average(beta: float, N: int, Q: int, u, v):
    """Average of omega_lambda(V_u V_v^*) over the Q-th roots of unity, and
    the value of the atomic-measure state on the same element.

    A diagonal entry of V_u V_v^* picks up lambda^(|u|-|v|), so the average is
    exact once Q > ||u| - |v||.
    """
    if Q < 2:
        raise ValueError("Q must be >= 2")
    u = u if isinstance(u, Word) else parse_word(u)
    v = v if isinstance(v, Word) else parse_word(v)
    vals = []
    for rep in _rep_family(float(beta), N, Q):
        state = gibbs_state(rep)
        A, B = rep.monomial(u), rep.monomial(v)
        diag = np.asarray(A.multiply(B.conj()).sum(axis=1)).ravel()
        prod = state.H * diag
        vals.append(complex(math.fsum(prod.real), math.fsum(prod.imag)) / state.trace_H)
    mean = complex(math.fsum(z.real for z in vals), math.fsum(z.imag for z in vals)) / Q
    if u == v:
        reference = complex(_atomic(float(beta), N).cylinder_mass(u))
    else:
        reference = 0j
    return mean, reference
