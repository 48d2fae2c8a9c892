"""
Trigonometric (q = 0) model: Gegenbauer basis data and exact coupling matrices.

The basis is w_m = C^{n+1}_m(cos pi x) (sin pi x)^{n+1}, orthogonal on [0, 1]
with squared norms N_m; v_m = w_m / sqrt(N_m) is orthonormal.  Everything is
computed in the w basis with Fractions; the square roots only appear when a
caller asks for an orthonormal entry as a float.
"""

import functools, logging, math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Tuple

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelParams:
    n: int = 1

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"coupling n must be an integer >= 1, got {self.n!r}")

    @property
    def nu(self) -> int:
        return self.n + 1


@dataclass(frozen=True)
class BasisElement:
    m: int
    squared_norm: Fraction
    unperturbed_E: Fraction     # pi^2 units


def squared_norm(m: int, n: int) -> Fraction:
    """N_m = (m+2n+1)! / (2^{2n+1} (m+n+1) m! (n!)^2)."""
    return Fraction(math.factorial(m + 2 * n + 1),
                    2 ** (2 * n + 1) * (m + n + 1) * math.factorial(m) * math.factorial(n) ** 2)


def unperturbed_energy(m: int, n: int) -> Fraction:
    """E_m / pi^2 = (m+n+1)^2 - n(n+1)/3."""
    return Fraction((m + n + 1) ** 2) - Fraction(n * (n + 1), 3)


def basis_element(m: int, params: ModelParams) -> BasisElement:
    return BasisElement(m, squared_norm(m, params.n), unperturbed_energy(m, params.n))


# ── Potential ────────────────────────────────────────────────
def _divisors(k: int) -> List[int]:
    return [d for d in range(1, k + 1) if k % d == 0]


def potential_fourier(k: int, n: int) -> List[Tuple[int, Fraction]]:
    """Fourier data of V_2k in pi^2 units: [(0, const), (d, coeff of cos 2 d pi x), ...].

    Collecting q^{2k} in n(n+1) wp(x) gives 8 n(n+1) sum_{d | k} d (1 - cos 2 d pi x).
    """
    if k < 1:
        raise ValueError(f"order k must be >= 1, got {k}")
    g = 8 * n * (n + 1)
    divs = _divisors(k)
    return [(0, Fraction(g * sum(divs)))] + [(d, Fraction(-g * d)) for d in divs]


def potential_value(k: int, n: int, x: float) -> float:
    """V_2k(x) / pi^2 evaluated from its Fourier data."""
    return sum(float(c) * math.cos(2 * j * math.pi * x) for j, c in potential_fourier(k, n))


# ── Gegenbauer / Chebyshev ───────────────────────────────────
def gegenbauer_recurrence(m: int, nu) -> Tuple[Fraction, Fraction]:
    """(a_plus, a_minus) with z C_m = a_plus C_{m+1} + a_minus C_{m-1}; a_minus = 0 at m = 0."""
    nu = Fraction(nu)
    a_plus = Fraction(m + 1) / (2 * (m + nu))
    a_minus = (m + 2 * nu - 1) / (2 * (m + nu)) if m > 0 else Fraction(0)
    return a_plus, a_minus


def gegenbauer_value(m: int, nu, z) -> Fraction:
    """C^nu_m(z) built from the three-term recurrence (exact for rational z)."""
    nu, z = Fraction(nu), Fraction(z)
    prev, cur = Fraction(0), Fraction(1)
    for j in range(m):
        a_plus, a_minus = gegenbauer_recurrence(j, nu)
        prev, cur = cur, (z * cur - a_minus * prev) / a_plus
    return cur


def chebyshev_t(j: int) -> List[int]:
    """Integer coefficients of T_j, lowest degree first."""
    t0, t1 = [1], [0, 1]
    if j == 0:
        return t0
    for _ in range(j - 1):
        nxt = [0] + [2 * c for c in t1]
        for i, c in enumerate(t0):
            nxt[i] -= c
        t0, t1 = t1, nxt
    return t1


def _apply_z(vec: Dict[int, Fraction], nu: int) -> Dict[int, Fraction]:
    """Multiplication by z = cos pi x on a vector in the w basis."""
    out: Dict[int, Fraction] = {}
    for i, v in vec.items():
        a_plus, a_minus = _recurrence_cached(i, nu)
        out[i + 1] = out.get(i + 1, 0) + a_plus * v
        if i > 0:
            out[i - 1] = out.get(i - 1, 0) + a_minus * v
    return out


@functools.lru_cache(maxsize=None)
def _recurrence_cached(i: int, nu: int):
    return gegenbauer_recurrence(i, nu)


@functools.lru_cache(maxsize=8)
def _chebyshev_columns(nu: int, M: int, d_max: int):
    """cols[m][d] = T_{2d}(Z) w_m as a sparse dict, rows <= M kept, d = 1..d_max.

    The three-term recurrence runs untruncated; only the finished vectors
    are clipped to the cutoff.
    """
    cols = []
    for m in range(M + 1):
        prev = {m: Fraction(1)}
        cur = _apply_z(prev, nu)
        per_d = {}
        for j in range(2, 2 * d_max + 1):
            nxt = {i: 2 * v for i, v in _apply_z(cur, nu).items()}
            for i, v in prev.items():
                nxt[i] = nxt.get(i, 0) - v
            prev, cur = cur, nxt
            if j % 2 == 0:
                per_d[j // 2] = {i: v for i, v in cur.items() if i <= M and v != 0}
        cols.append(per_d)
    return cols


# ── Coupling matrices ────────────────────────────────────────
@dataclass(frozen=True)
class CouplingMatrix:
    """V_2k in the w basis: raw[(m, m')] is the coefficient of w_m' in V_2k w_m.

    The orthonormal entry is d[m][m'] = raw[(m, m')] sqrt(N_m' / N_m); it is
    rational on the diagonal and its square is always rational.
    """

    order: int
    cutoff: int
    params: ModelParams
    raw_entries: Dict[Tuple[int, int], Fraction]
    norms: Tuple[Fraction, ...]

    def raw(self, m: int, mp: int) -> Fraction:
        return self.raw_entries.get((m, mp), Fraction(0))

    def diagonal(self, m: int) -> Fraction:
        return self.raw(m, m)

    def squared(self, m: int, mp: int) -> Fraction:
        """d[m][m']^2, exact."""
        return self.raw(m, mp) * self.raw(mp, m)

    def entry(self, m: int, mp: int) -> float:
        r = self.raw(m, mp)
        if r == 0:
            return 0.0
        return float(r) * math.sqrt(self.norms[mp] / self.norms[m])

    def is_symmetric(self) -> bool:
        """N_m' raw(m, m') == N_m raw(m', m) for every stored pair."""
        return all(self.norms[mp] * v == self.norms[m] * self.raw(mp, m)
                   for (m, mp), v in self.raw_entries.items())

    def column(self, m: int) -> Dict[int, Fraction]:
        """{m': raw(m, m')} over the band."""
        lo, hi = max(0, m - 2 * self.order), min(self.cutoff, m + 2 * self.order)
        return {mp: self.raw_entries[(m, mp)] for mp in range(lo, hi + 1)
                if (m, mp) in self.raw_entries}

    def to_dense(self) -> np.ndarray:
        """Orthonormal-basis matrix as floats, d[m][m'] at [m', m]."""
        out = np.zeros((self.cutoff + 1, self.cutoff + 1))
        for (m, mp) in self.raw_entries:
            out[mp, m] = self.entry(m, mp)
        return out


def coupling_matrices(k_max: int, M: int, params: ModelParams) -> List[CouplingMatrix]:
    """[V_2, V_4, ..., V_2k_max] sharing one Chebyshev pass."""
    if M < 2 * k_max:
        raise ValueError(f"cutoff M = {M} < 2k = {2 * k_max}: band would overflow the cutoff")
    cols = _chebyshev_columns(params.nu, M, k_max)
    norms = tuple(squared_norm(i, params.n) for i in range(M + 1))
    out = []
    for k in range(1, k_max + 1):
        fourier = potential_fourier(k, params.n)
        entries: Dict[Tuple[int, int], Fraction] = {}
        for m in range(M + 1):
            acc: Dict[int, Fraction] = {m: fourier[0][1]}
            for d, c in fourier[1:]:
                for i, v in cols[m][d].items():
                    acc[i] = acc.get(i, 0) + c * v
            for i, v in acc.items():
                if v != 0:
                    entries[(m, i)] = v
        out.append(CouplingMatrix(k, M, params, entries, norms))
    logger.debug("built %d coupling matrices (n=%d, M=%d)", k_max, params.n, M)
    return out


def coupling_matrix(k: int, M: int, params: ModelParams) -> CouplingMatrix:
    if M < 2 * k:
        raise ValueError(f"cutoff M = {M} < 2k = {2 * k}: band would overflow the cutoff")
    return coupling_matrices(k, M, params)[k - 1]
