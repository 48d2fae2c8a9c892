"""
Exact Rayleigh-Schrodinger expansion of E_m(q) around the trigonometric model,
and convergence-radius estimation from coefficient growth.

Eigenvector coefficients are stored as b[k][m'] with the orthonormal-basis
value c[k][m'] = b[k][m'] sqrt(N_m' / N_m); with that scaling every quantity
in the recursion is a Fraction.
"""

import logging, math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import FitError
from .trig_basis import (CouplingMatrix, ModelParams, coupling_matrices,
                         squared_norm, unperturbed_energy)

logger = logging.getLogger(__name__)

DEFAULTS = {
    "k_min": 10,          # lowest first order of the radius fit
    "window": 3,          # the fit runs over the top 1/window of the orders
    "singularity_power": 1.5,
    "tail": 10,           # orders entering the tail estimate
    "min_points": 5,
}


@dataclass
class RationalSeries:
    """E_m(q) / pi^2 = sum_k coeffs[k] q^{2k}."""

    n: int
    m: int
    coeffs: List[Fraction]

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1


@dataclass
class EigvecTable:
    m: int
    b: List[Dict[int, Fraction]]
    norm_ratio: Dict[int, Fraction] = field(default_factory=dict)

    def c(self, k: int, mp: int) -> float:
        v = self.b[k].get(mp, Fraction(0))
        if v == 0:
            return 0.0
        return float(v) * math.sqrt(self.norm_ratio[mp])

    def c_squared(self, k: int, mp: int) -> Fraction:
        v = self.b[k].get(mp, Fraction(0))
        return v * v * self.norm_ratio.get(mp, Fraction(1))

    def normalization_residual(self, k: int) -> Fraction:
        """Order-2k coefficient of <v_m(q), v_m(q)> - 1; zero for every k >= 1."""
        total = Fraction(0)
        for j in range(k + 1):
            for mp, v in self.b[j].items():
                w = self.b[k - j].get(mp)
                if w:
                    total += self.norm_ratio[mp] * v * w
        return total


def cutoff_for(m: int, k_max: int) -> int:
    """Basis cutoff at which the recursion is lossless: |m' - m| <= 2k never exceeds it."""
    return m + 2 * k_max + 2


# ── Expansion ────────────────────────────────────────────────
def expand(m: int, k_max: int, params: ModelParams,
           matrices: Optional[Sequence[CouplingMatrix]] = None) -> Tuple[RationalSeries, EigvecTable]:
    """Coefficients E^{2k}_m and c^{2k}_{m,m'} for k = 0..k_max."""
    if m < 0 or k_max < 0:
        raise ValueError(f"need m >= 0 and k_max >= 0, got m={m}, k_max={k_max}")
    n = params.n
    if k_max and matrices is None:
        matrices = coupling_matrices(k_max, cutoff_for(m, k_max), params)
    if k_max:
        assert matrices[0].cutoff >= m + 2 * k_max, "cutoff too small for lossless recursion"

    E0 = unperturbed_energy(m, n)
    Nm = squared_norm(m, n)
    energies = [E0]
    b: List[Dict[int, Fraction]] = [{m: Fraction(1)}]
    ratio: Dict[int, Fraction] = {m: Fraction(1)}
    diff: Dict[int, Fraction] = {}

    for k in range(1, k_max + 1):
        # W_k = sum_j A_j b^{k-j}, restricted to the parity band around m
        W: Dict[int, Fraction] = {}
        for j in range(1, k + 1):
            A = matrices[j - 1]
            for src, v in b[k - j].items():
                for dst, a in A.column(src).items():
                    W[dst] = W.get(dst, 0) + a * v

        Ek = W.get(m, Fraction(0)) - sum(
            (energies[j] * b[k - j].get(m, 0) for j in range(1, k)), Fraction(0))
        energies.append(Ek)

        bk: Dict[int, Fraction] = {}
        for mp in range(max(m - 2 * k, (m % 2)), m + 2 * k + 1, 2):
            if mp == m:
                continue
            if mp not in diff:
                diff[mp] = E0 - unperturbed_energy(mp, n)
                assert diff[mp] != 0, f"vanishing divisor at m'={mp}"
                ratio[mp] = squared_norm(mp, n) / Nm
            num = W.get(mp, Fraction(0)) - sum(
                (energies[j] * b[k - j].get(mp, 0) for j in range(1, k)), Fraction(0))
            if num:
                bk[mp] = num / diff[mp]

        acc = Fraction(0)
        for j in range(1, k):
            for mp, v in b[j].items():
                w = b[k - j].get(mp)
                if w:
                    acc += ratio[mp] * v * w
        if acc:
            bk[m] = -acc / 2
        b.append(bk)
        logger.debug("m=%d k=%d E=%s", m, k, Ek)

    return RationalSeries(n, m, energies), EigvecTable(m, b, ratio)


def _expand_job(args):
    m, k_max, n = args
    return expand(m, k_max, ModelParams(n))[0]


def expand_many(ms: Sequence[int], k_max: int, params: ModelParams,
                jobs: int = 1) -> List[RationalSeries]:
    """Independent expansions for several m; parallel across processes when jobs > 1."""
    if jobs > 1 and len(ms) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_expand_job, [(m, k_max, params.n) for m in ms]))
    if not ms:
        return []
    shared = coupling_matrices(k_max, cutoff_for(max(ms), k_max), params) if k_max else None
    return [expand(m, k_max, params, shared)[0] for m in ms]


# ── Evaluation ───────────────────────────────────────────────
def evaluate(series: RationalSeries, q: complex, radius: Optional[float] = None) -> complex:
    """E_m(q) in absolute units (pi^2 restored); Horner in q^2."""
    if radius is not None and abs(q) >= radius:
        logger.warning("evaluating E_%d at |q| = %.4g beyond estimated radius %.4g",
                       series.m, abs(q), radius)
    q2 = complex(q) * complex(q)
    acc = 0j
    for c in reversed(series.coeffs):
        acc = acc * q2 + float(c)
    return math.pi ** 2 * acc


def evaluate_exact(series: RationalSeries, q: Fraction) -> Fraction:
    """E_m(q) / pi^2 for rational q, exact."""
    q2 = Fraction(q) ** 2
    acc = Fraction(0)
    for c in reversed(series.coeffs):
        acc = acc * q2 + c
    return acc


def beyond_radius(q: complex, radius: Optional[float]) -> bool:
    return radius is not None and abs(q) >= radius


# ── Radius estimation ────────────────────────────────────────
@dataclass
class RadiusEstimate:
    radius: float           # 1/b from the envelope fit
    a: float
    b: float
    tail_radius: float      # min over the last orders of (k^p |E^{2k}|/a)^{-1/2k}
    points: int
    k_min: int = 0          # first order of the fitted window


def default_k_min(order: int) -> int:
    """Top third of the orders, never below DEFAULTS["k_min"]."""
    return max(DEFAULTS["k_min"], order - order // DEFAULTS["window"])


def estimate_radius(series: RationalSeries, k_min: int = None,
                    power: float = None) -> RadiusEstimate:
    """Fit the upper envelope of log|E^{2k}| + p log k ~ log a + 2k log b.

    Square-root branch points give |E^{2k}| ~ k^{-3/2} R^{-2k} times an
    oscillating factor per conjugate pair. The line is fitted through the
    vertices of the upper convex hull of the window, so sign changes and dips
    do not pull the slope down.
    """
    k_min = default_k_min(series.order) if k_min is None else k_min
    p = DEFAULTS["singularity_power"] if power is None else power
    if series.order < k_min + DEFAULTS["tail"]:
        logger.warning("series order %d is short for k_min=%d; fit may be unstable",
                       series.order, k_min)
    ks, logs = [], []
    for k in range(max(k_min, 1), series.order + 1):
        c = series.coeffs[k]
        if c == 0:
            continue
        ks.append(k)
        logs.append(_log_abs(c) + p * math.log(k))
    if len(ks) < DEFAULTS["min_points"]:
        raise FitError(f"only {len(ks)} usable coefficients for the radius fit of E_{series.m}")
    hull = _upper_hull([2.0 * k for k in ks], logs)
    if len(hull) >= 4:
        # window ends are hull vertices by position, not because they are peaks
        hull = hull[1:-1]
    xs = np.asarray([2.0 * ks[i] for i in hull])
    ys = np.asarray([logs[i] for i in hull])
    slope, intercept = np.polyfit(xs, ys, 1)
    log_a, log_b = float(intercept), float(slope)
    tail = [math.exp(-(lg - log_a) / (2 * k))
            for k, lg in zip(ks[-DEFAULTS["tail"]:], logs[-DEFAULTS["tail"]:])]
    return RadiusEstimate(radius=math.exp(-log_b), a=math.exp(log_a), b=math.exp(log_b),
                          tail_radius=min(tail), points=len(ks), k_min=ks[0])


def _upper_hull(xs: Sequence[float], ys: Sequence[float]) -> List[int]:
    """Indices of the upper convex hull of points sorted by x (monotone chain)."""
    hull: List[int] = []
    for i in range(len(xs)):
        while len(hull) >= 2:
            j, k = hull[-2], hull[-1]
            cross = (xs[k] - xs[j]) * (ys[i] - ys[j]) - (ys[k] - ys[j]) * (xs[i] - xs[j])
            if cross < 0:
                break
            hull.pop()
        hull.append(i)
    return hull


def _log_abs(c: Fraction) -> float:
    """log|c| without overflowing float for very large numerators or denominators."""
    c = abs(c)
    return math.log(c.numerator) - math.log(c.denominator)


# ── Truncated-matrix oracle ──────────────────────────────────
def truncated_hamiltonian(q: complex, params: ModelParams, parity: int,
                          M: int = 40, k_terms: int = 20) -> Tuple[np.ndarray, List[int]]:
    """H(q)/pi^2 on {v_i : i <= M, i = parity mod 2}, potential summed to q^{2 k_terms}."""
    mats = coupling_matrices(k_terms, max(M, 2 * k_terms), params)
    idx = [i for i in range(M + 1) if i % 2 == parity % 2]
    H = np.diag([float(unperturbed_energy(i, params.n)) for i in idx]).astype(complex)
    q2 = complex(q) ** 2
    for k, A in enumerate(mats, start=1):
        D = A.to_dense()[np.ix_(idx, idx)]
        H = H + q2 ** k * D
    return H, idx


def matrix_eigenvalue(m: int, q: complex, params: ModelParams,
                      M: int = 40, k_terms: int = 20) -> complex:
    """Eigenvalue of the truncated matrix continuing E_m(0), in absolute units.

    Picked by rank of the real part within the parity sector, which is the
    order the eigenvalues keep for real q^2.
    """
    H, idx = truncated_hamiltonian(q, params, m % 2, M, k_terms)
    vals = np.linalg.eigvals(H)
    vals = vals[np.argsort(vals.real)]
    return math.pi ** 2 * complex(vals[idx.index(m)])
