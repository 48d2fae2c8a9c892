"""
Monodromy of the n = 1 Lamé equation.

With E = -wp(t0) the solution sigma(x+t0)/sigma(x) e^{-x zeta(t0)} picks up the
factor exp(2 eta1 t0 - zeta(t0)) under x -> x+1.  Eigenvalues of the periodic
(anti-periodic) problem are the E for which that exponent is an even (odd)
multiple of pi i, and two of them can only collide where in addition
E = 2 eta1.  This module solves for t0, evaluates the exponent three
independent ways, and scans the q-disk for the collision conditions.
"""

import cmath, logging, math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import (LameError, NoConvergenceError, PoleProximityError,
                      SeriesDivergenceError, SingularJacobianError)
from . import elliptic as ell
from .elliptic import QContext

logger = logging.getLogger(__name__)

PI = math.pi

DEFAULTS = {
    "newton_tol": 1e-12,      # relative to 1 + |E|
    "max_iter": 50,
    "jacobian_tol": 1e-10,    # |wp'| floor, relative to (1+|E|)^{3/2}
    "near_integer": 0.02,     # |r - round r| that triggers polishing
    "local_min_cap": 0.25,    # grid local minima below this are polished too
    "m_range": (-6, 6),
    "polish_tol": 1e-10,
    "polish_iter": 60,
    "polish_step": 0.01,      # cap on one Newton step in q
    "polish_backtrack": 8,
    "polish_radius": 0.02,    # roots farther than this from the start are rejected
    "scan_radius": 2.0,       # polish radius in grid spacings
    "seed_reach": 0.75,       # predicted roots farther than this many spacings are left to other nodes
    "min_abs_q": 1e-3,        # q = 0 solves 2 eta1 + e_2 = 2 eta1 + e_3 = 0
    "dedup_tol": 1e-6,
    "class_tol": 1e-6,        # |2 eta1 + e_i| in pi^2 units
    "half_period_tol": 0.05,
    "max_abs_q": 0.95,
    "quad_tol": 1e-10,
    "quad_max_panels": 4096,
    "detour_tol": 1e-3,
    "ode_tol": 1e-12,
}


class Classification(str, Enum):
    BRANCH = "branch"
    E1 = "e1"
    E2 = "e2"
    E3 = "e3"
    UNRESOLVED = "unresolved"


@dataclass
class SpectralPoint:
    q: complex
    E: complex
    t0: complex
    m: int

    @property
    def family(self) -> str:
        return "periodic" if self.m % 2 == 0 else "anti-periodic"

    def residuals(self, ctx: QContext) -> Tuple[float, float]:
        """(|wp(t0) + E|, |2 eta1 t0 - zeta(t0) - m pi i|)."""
        return (abs(ell.wp(self.t0, ctx) + self.E),
                abs(exponent(self.t0, ctx) - self.m * PI * 1j))


@dataclass
class BranchCandidate:
    point: SpectralPoint
    residuals: Tuple[float, float]
    classification: Classification = Classification.UNRESOLVED
    coincidence_gap: Optional[float] = None     # min_i |2 eta1 + e_i| / pi^2

    def to_dict(self) -> dict:
        p = self.point
        return {
            "q": [p.q.real, p.q.imag],
            "t0": [p.t0.real, p.t0.imag],
            "m": p.m,
            "residual": max(self.residuals),
            "class": self.classification.value,
        }


# ── Lattice bookkeeping ──────────────────────────────────────
def canonical_t0(t: complex, ctx: QContext) -> complex:
    """Representative of +-t mod the lattice with Re in [0, 1/2] and |Im| minimal."""
    t, _ = ell.reduce_argument(complex(t), ctx)
    t = complex(t)
    t -= round(t.real)
    if t.real < 0:
        t = -t
    if t.imag < 0:
        if abs(t.real) < 1e-14:
            t = -t
        elif abs(t.real - 0.5) < 1e-14:
            t = 1 - t
    return t


def lattice_distance(t: complex, w: complex, ctx: QContext) -> float:
    """min over signs and lattice vectors of |t -+ w - lattice|."""
    best = math.inf
    for d in (t - w, t + w):
        d, _ = ell.reduce_argument(complex(d), ctx)
        d = complex(d)
        d -= round(d.real)
        best = min(best, abs(d))
    return best


# ── t0 from E ────────────────────────────────────────────────
def _seed_t0(E: complex, ctx: QContext) -> Optional[complex]:
    """Invert wp ~ -2 eta1 + pi^2 / sin^2(pi t), the q -> 0 shape of the series."""
    den = 2 * complex(ell.eta1(ctx)) - E
    if abs(den) < 1e-9:
        return None
    w = cmath.sqrt(PI ** 2 / den)
    t = cmath.asin(w) / PI
    if abs(cmath.sin(PI * t)) < 1e-6:
        return None
    return t


def _newton_t0(E: complex, seed: complex, ctx: QContext, opts: dict) -> complex:
    t = complex(seed)
    scale = 1 + abs(E)
    for _ in range(opts["max_iter"]):
        f = complex(ell.wp(t, ctx)) + E
        if abs(f) <= opts["newton_tol"] * scale:
            return t
        d = complex(ell.wp_prime(t, ctx))
        if abs(d) < opts["jacobian_tol"] * scale ** 1.5:
            raise SingularJacobianError(f"wp'(t) = {d:.3e} at t = {t}")
        t -= f / d
    raise NoConvergenceError(f"Newton for t0 did not converge (E = {E}, q = {ctx.q})")


def solve_t0(q: complex, E: complex, seed: Optional[complex] = None,
             ctx: Optional[QContext] = None, opts: dict = None) -> complex:
    """t0 with wp(t0) = -E, lattice-reduced to the canonical half cell."""
    o = {**DEFAULTS, **(opts or {})}
    ctx = ctx if ctx is not None else ell.make_context(q)
    seeds = [seed] if seed is not None else []
    guess = _seed_t0(E, ctx)
    if guess is not None:
        seeds.append(guess)
    it = ctx.im_tau if ctx.q != 0 else 1.0
    seeds += [a + 1j * b * it for b in (0.1, 0.3, 0.45, 0.2) for a in (0.25, 0.5, 0.1, 0.4)]
    last = None
    for s in seeds:
        try:
            return canonical_t0(_newton_t0(E, s, ctx, o), ctx)
        except (NoConvergenceError, SingularJacobianError, PoleProximityError) as e:
            last = e
            if seed is not None and s == seed:
                logger.debug("seed %s failed for E=%s: %s", seed, E, e)
    raise last if last else NoConvergenceError("no seed available")


# ── Exponent, three ways ─────────────────────────────────────
def exponent(t0: complex, ctx: QContext) -> complex:
    """2 eta1 t0 - zeta(t0)."""
    return complex(2 * ell.eta1(ctx) * t0 - ell.zeta(t0, ctx))


def exponents_agree(a: complex, b: complex, tol: float) -> bool:
    """a == +-b modulo 2 pi i, the ambiguity left by the choice of t0."""
    for d in (a - b, a + b):
        k = round(d.imag / (2 * PI))
        if abs(d - 2j * PI * k) <= tol:
            return True
    return False


def sheet_index(t0: complex, ctx: QContext) -> Tuple[int, float]:
    """(round(r), |r - round(r)|) with r = exponent / (pi i)."""
    r = exponent(t0, ctx) / (PI * 1j)
    m = int(round(r.real))
    return m, abs(r - m)


def _dist_to_segment(p: complex, a: complex, b: complex) -> float:
    ab = b - a
    if ab == 0:
        return abs(p - a)
    s = max(0.0, min(1.0, ((p - a) * ab.conjugate()).real / abs(ab) ** 2))
    return abs(p - (a + s * ab))


def _gauss_panels(f, n_panels: int, nodes, weights):
    """Composite Gauss-Legendre on [0, 1]; f receives the ordered node array."""
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    u = (lo + (hi - lo) * (nodes[None, :] + 1) / 2).ravel()
    w = ((hi - lo) / 2 * weights[None, :]).ravel()
    vals = f(u)
    return complex(np.sum(w * vals)), vals


def _continuous_sqrt(z: np.ndarray, start: complex) -> np.ndarray:
    """Square root of z along an ordered path, sign chosen by continuity from start."""
    out = np.sqrt(z.astype(complex))
    prev = start
    for i in range(out.size):
        if abs(out[i] - prev) > abs(out[i] + prev):
            out[i] = -out[i]
        prev = out[i]
    return out


def _detour_path(start: complex, end: complex, avoid, tol: float) -> List[complex]:
    """Straight segment, or a two-segment path bent away from the points in avoid."""
    def clear(pts):
        return all(_dist_to_segment(b, a, c) >= tol for a, c in zip(pts[:-1], pts[1:]) for b in avoid)

    if clear([start, end]):
        return [start, end]
    for bend in (0.25, -0.25, 0.5, -0.5):
        pts = [start, (start + end) / 2 + 1j * bend * (end - start), end]
        if clear(pts):
            return pts
    raise NoConvergenceError("branch point collision on integration path")


def _branch_integral(start: complex, end: complex, avoid, weight, coeff: complex,
                     o: dict) -> complex:
    """int_start^end weight(s) ds / sqrt(coeff (s - start) prod_b (s - b)).

    The inverse square-root singularity at start is removed by the
    substitution s = start + u^2 (P - start) on the first segment; the root is
    principal there and continued along the path.  Panels double until two
    successive values agree.
    """
    span = abs(end - start)
    if span == 0:
        return 0j
    tol = o["detour_tol"] * max(1.0, span)
    if any(abs(end - b) < tol for b in avoid):
        raise NoConvergenceError(f"endpoint {end} sits on a branch point")
    path = _detour_path(start, end, avoid, tol)
    nodes, weights = np.polynomial.legendre.leggauss(16)

    def rest(s):
        out = np.ones_like(s, dtype=complex)
        for b in avoid:
            out = out * (s - b)
        return out

    P = path[1]
    root0 = cmath.sqrt(coeff * (P - start) * complex(rest(np.array([start]))[0]))

    def first(u):
        s = start + u ** 2 * (P - start)
        return 2 * weight(s) * (P - start) / _continuous_sqrt(coeff * (P - start) * rest(s), root0)

    def integrate(n_panels):
        total, _ = _gauss_panels(first, n_panels, nodes, weights)
        u = np.linspace(0.0, 1.0, 8 * n_panels + 1)
        s = start + u ** 2 * (P - start)
        r = complex(_continuous_sqrt(coeff * (P - start) * rest(s), root0)[-1])
        for a, b in zip(path[1:-1], path[2:]):
            s = a + np.linspace(0.0, 1.0, 8 * n_panels + 1) * (b - a)
            track = _continuous_sqrt(coeff * (s - start) * rest(s), r)

            def seg(u, a=a, b=b, r0=r):
                s = a + u * (b - a)
                return weight(s) * (b - a) / _continuous_sqrt(coeff * (s - start) * rest(s), r0)

            val, _ = _gauss_panels(seg, n_panels, nodes, weights)
            total += val
            r = complex(track[-1])
        return total

    n = 4
    prev = integrate(n)
    while n < o["quad_max_panels"]:
        n *= 2
        cur = integrate(n)
        if abs(cur - prev) <= o["quad_tol"] * (1 + abs(cur)):
            return cur
        prev = cur
    raise NoConvergenceError(f"quadrature from {start} to {end} did not converge")


def hyperelliptic_exponent(E: complex, ctx: QContext, opts: dict = None) -> complex:
    """-1/2 int_{-e1}^{E} (s - 2 eta1) / sqrt(-(s+e1)(s+e2)(s+e3)) ds.

    Agrees with exponent(t0) up to sign and a multiple of 2 pi i.
    """
    o = {**DEFAULTS, **(opts or {})}
    c = ell.constants(ctx)
    e1, e2, e3 = (complex(v) for v in c.e)
    h = complex(c.eta1)
    return -0.5 * _branch_integral(-e1, complex(E), (-e2, -e3), lambda s: s - 2 * h, -1, o)


def t0_by_quadrature(E: complex, ctx: QContext, opts: dict = None) -> complex:
    """1/2 + int_{e1}^{-E} ds / sqrt(4 (s-e1)(s-e2)(s-e3)).

    Equal to t0 up to sign and lattice translation; independent of the
    Newton inversion in solve_t0.
    """
    o = {**DEFAULTS, **(opts or {})}
    c = ell.constants(ctx)
    e1, e2, e3 = (complex(v) for v in c.e)
    return 0.5 + _branch_integral(e1, -complex(E), (e2, e3), lambda s: np.ones_like(s), 4, o)


def ode_multiplier(q: complex, E: complex, n: int = 1, ctx: Optional[QContext] = None,
                   opts: dict = None) -> Tuple[complex, complex]:
    """Transfer-matrix trace over one period of f'' = (n(n+1) wp(x + tau/2) - E) f.

    The shifted potential has no poles on the real axis.  Returns
    (trace, multiplier) with multiplier + 1/multiplier = trace, |multiplier| >= 1.
    """
    o = {**DEFAULTS, **(opts or {})}
    ctx = ctx if ctx is not None else ell.make_context(q)
    if ctx.q == 0:
        raise SeriesDivergenceError("the shifted potential needs q != 0")
    shift = ctx.tau / 2
    g = n * (n + 1)

    def rhs(x, y):
        v = g * complex(ell.wp(x + shift, ctx)) - E
        return [y[1], v * y[0], y[3], v * y[2]]

    sol = solve_ivp(rhs, (0.0, 1.0), np.array([1, 0, 0, 1], dtype=complex),
                    method="DOP853", rtol=o["ode_tol"], atol=o["ode_tol"])
    if not sol.success:
        raise NoConvergenceError(f"transfer-matrix integration failed: {sol.message}")
    y = sol.y[:, -1]
    trace = complex(y[0] + y[3])
    disc = cmath.sqrt(trace * trace - 4)
    mu = (trace + disc) / 2
    if abs(mu) < 1:
        mu = (trace - disc) / 2
    return trace, mu


# ── Branch conditions ────────────────────────────────────────
def _nearest_image(t: complex, ref: complex, ctx: QContext) -> complex:
    """Image of +-t under the lattice closest to ref."""
    best = None
    for s in (t, -t):
        d = s - ref
        d -= round(d.imag / ctx.im_tau) * ctx.tau
        d -= round(d.real)
        if best is None or abs(d) < abs(best):
            best = d
    return ref + best


def _coincidence_residuals(ctx: QContext):
    """([2 eta1 + e_i], [d/dq of each]); wp'(omega_i) = 0 drops the moving-omega term."""
    c = ell.constants(ctx)
    h, dh = complex(c.eta1), complex(ell.eta1_dq(ctx))
    G = [2 * h + complex(e) for e in c.e]
    dG = [2 * dh + complex(ell.wp_dq(w, ctx)) for w in ell.half_periods(ctx)]
    return G, dG


def _general_state(m: int, K: int, o: dict):
    """q -> (2 eta1 t0 - zeta(t0) - m pi i, its q-derivative, t0) with wp(t0) = -2 eta1.

    t0 follows the reference image, so the sheet does not jump between steps.
    On the curve wp(t0) = -2 eta1 the t-derivative of the exponent vanishes and
    only the explicit q-dependence is left.
    """
    def state(q: complex, t_ref: complex):
        try:
            ctx = ell.make_context(q, K)
            h = complex(ell.eta1(ctx))
            t = _nearest_image(_newton_t0(2 * h, t_ref, ctx, o), t_ref, ctx)
            F = exponent(t, ctx) - m * PI * 1j
            D = 2 * complex(ell.eta1_dq(ctx)) * t - complex(ell.zeta_dq(t, ctx))
        except LameError:
            return None
        return F, D, t
    return state


def _half_period_state(i: int, K: int):
    """q -> (2 eta1 + e_i, its q-derivative, omega_i), scaled by max(1, |2 eta1|)."""
    def state(q: complex, _ref):
        try:
            ctx = ell.make_context(q, K)
            G, dG = _coincidence_residuals(ctx)
            scale = max(1.0, abs(2 * complex(ell.eta1(ctx))))
        except LameError:
            return None
        return G[i] / scale, dG[i] / scale, complex(ell.half_periods(ctx)[i])
    return state


def _damped_newton(q: complex, ref, state, o: dict, radius: float):
    """Newton in q with capped, backtracked steps kept within radius of the start."""
    q0 = q
    cur = state(q, ref)
    for _ in range(o["polish_iter"]):
        if cur is None:
            return None
        F, D, ref = cur
        if abs(F) <= o["polish_tol"]:
            return q, ref
        if D == 0:
            return None
        step = -F / D
        if abs(step) > o["polish_step"]:
            step *= o["polish_step"] / abs(step)
        for _ in range(o["polish_backtrack"]):
            qn = q + step
            nxt = None
            if 0 < abs(qn) < 1 and abs(qn - q0) <= radius:
                nxt = state(qn, ref)
            if nxt is not None and abs(nxt[0]) < abs(F):
                break
            step /= 2
        else:
            return None
        q, cur = qn, nxt
    return None


def polish_candidate(q: complex, t0: Optional[complex], m: int, K: int = None,
                     opts: dict = None, radius: float = None,
                     half_period: Optional[int] = None) -> Optional[BranchCandidate]:
    """Refine an approximate root of the branch conditions.

    Roots farther than radius from q are not accepted: a Newton run that
    wanders off to a neighbouring solution returns None instead.  With
    half_period set (or t0 within half_period_tol of one) the coincidence
    equation 2 eta1 + e_i = 0 is tried first, then the general conditions.
    """
    o = {**DEFAULTS, **(opts or {})}
    K = K or ell.DEFAULTS["trunc_K"]
    radius = o["polish_radius"] if radius is None else radius
    if half_period is None and t0 is not None:
        ctx = ell.make_context(q, K)
        dist, i = min((lattice_distance(t0, w, ctx), i) for i, w in enumerate(ell.half_periods(ctx)))
        half_period = i if dist < o["half_period_tol"] else None
    res = None
    if half_period is not None:
        res = _damped_newton(q, None, _half_period_state(half_period, K), o, radius)
    if res is None and t0 is not None:
        res = _damped_newton(q, complex(t0), _general_state(m, K, o), o, radius)
    if res is None:
        return None
    q, t = res
    ctx = ell.make_context(q, K)
    t = canonical_t0(t, ctx)
    m_new, frac = sheet_index(t, ctx)
    if frac > 1e-6:
        return None
    E = 2 * complex(ell.eta1(ctx))
    F1 = abs(E + complex(ell.wp(t, ctx)))
    F2 = abs(exponent(t, ctx) - m_new * PI * 1j)
    return BranchCandidate(SpectralPoint(q, E, t, m_new), (F1, F2))


def classify(candidate: BranchCandidate, K: int = None, opts: dict = None) -> BranchCandidate:
    """Mark coincidences 2 eta1 = -e_i; everything else is a branch point."""
    o = {**DEFAULTS, **(opts or {})}
    ctx = ell.make_context(candidate.point.q, K or ell.DEFAULTS["trunc_K"])
    c = ell.constants(ctx)
    gaps = [abs(2 * complex(c.eta1) + complex(e)) / PI ** 2 for e in c.e]
    i = int(np.argmin(gaps))
    candidate.coincidence_gap = gaps[i]
    if gaps[i] <= o["class_tol"]:
        candidate.classification = (Classification.E1, Classification.E2, Classification.E3)[i]
    else:
        candidate.classification = Classification.BRANCH
    return candidate


# ── Scan ─────────────────────────────────────────────────────
@dataclass
class ScanRegion:
    re: Tuple[float, float] = (0.0, 0.92)
    im: Tuple[float, float] = (0.0, 0.92)
    max_abs_q: float = 0.92

    def contains(self, q: complex, slack: float = 1e-6) -> bool:
        return (self.re[0] - slack <= q.real <= self.re[1] + slack
                and self.im[0] - slack <= q.imag <= self.im[1] + slack
                and abs(q) < self.max_abs_q)


class GridPoint(NamedTuple):
    q: complex
    t0: complex
    r: complex                  # exponent / (pi i)
    dr: complex                 # dr/dq along wp(t0) = -2 eta1
    G: List[complex]            # 2 eta1 + e_i
    dG: List[complex]


def _scan_row(args) -> List[Optional[GridPoint]]:
    """GridPoint for each grid point of one row; None where no t0 was found."""
    im, res, K, max_abs_q, min_abs_q = args
    out = []
    seed = None
    for re_ in res:
        q = complex(re_, im)
        if abs(q) >= max_abs_q or abs(q) < min_abs_q:
            out.append(None)
            seed = None
            continue
        try:
            ctx = ell.make_context(q, K)
            E = 2 * complex(ell.eta1(ctx))
            t0 = solve_t0(q, E, seed, ctx)
            D = 2 * complex(ell.eta1_dq(ctx)) * t0 - complex(ell.zeta_dq(t0, ctx))
            G, dG = _coincidence_residuals(ctx)
            out.append(GridPoint(q, t0, exponent(t0, ctx) / (PI * 1j), D / (PI * 1j), G, dG))
            seed = t0
        except Exception as e:
            logger.warning("scan point q=%s skipped: %s", q, e)
            out.append(None)
            seed = None
    return out


def _predicted_seeds(p: GridPoint, m_range: Tuple[int, int], reach: float, min_abs_q: float):
    """(q, t0, m, half_period) where one linear step from p lands within reach.

    Roots between grid points with r far from an integer at every node are
    only caught this way.
    """
    out = []
    if p.dr != 0:
        for m in range(m_range[0], m_range[1] + 1):
            qs = p.q - (p.r - m) / p.dr
            if abs(qs - p.q) <= reach and abs(qs) >= min_abs_q:
                out.append((qs, p.t0, m, None))
    for i in range(3):
        if p.dG[i] != 0:
            qs = p.q - p.G[i] / p.dG[i]
            if abs(qs - p.q) <= reach and abs(qs) >= min_abs_q:
                out.append((qs, p.t0, int(round(p.r.real)), i))
    return out


def branch_scan(region: ScanRegion, grid: Tuple[int, int] = (30, 30),
                m_range: Tuple[int, int] = None, K: int = None,
                opts: dict = None, jobs: int = 1) -> List[BranchCandidate]:
    """Grid search for (q, t0, m) with 2 eta1 = -wp(t0) and exponent in m pi i Z."""
    o = {**DEFAULTS, **(opts or {})}
    m_range = tuple(m_range or o["m_range"])
    K = K or ell.DEFAULTS["trunc_K"]
    if region.max_abs_q > o["max_abs_q"]:
        raise ValueError(f"scan region must lie inside |q| < {o['max_abs_q']}")
    nx, ny = grid
    res = np.linspace(region.re[0], region.re[1], nx)
    ims = np.linspace(region.im[0], region.im[1], ny)
    h = max((region.re[1] - region.re[0]) / max(nx - 1, 1),
            (region.im[1] - region.im[0]) / max(ny - 1, 1))
    work = [(float(im), [float(r) for r in res], K, region.max_abs_q, o["min_abs_q"]) for im in ims]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_scan_row, work))
    else:
        rows = [_scan_row(w) for w in work]

    dist = np.full((ny, nx), np.inf)
    for j, row in enumerate(rows):
        for i, cell in enumerate(row):
            if cell is not None:
                dist[j, i] = abs(cell.r - round(cell.r.real))

    seeds = []
    for j in range(ny):
        for i in range(nx):
            d = dist[j, i]
            if not np.isfinite(d):
                continue
            p = rows[j][i]
            nb = dist[max(0, j - 1):j + 2, max(0, i - 1):i + 2]
            if d < o["near_integer"] or (d <= nb.min() and d < o["local_min_cap"]):
                seeds.append((p.q, p.t0, int(round(p.r.real)), None))
            seeds += _predicted_seeds(p, m_range, o["seed_reach"] * h, o["min_abs_q"])
    logger.info("scan: %d grid points, %d seeds for polishing", int(np.isfinite(dist).sum()), len(seeds))

    radius = o["scan_radius"] * h
    found: List[BranchCandidate] = []
    for q, t0, m, half in seeds:
        if any(abs(q - f.point.q) < h / 4 for f in found):
            continue
        try:
            cand = polish_candidate(q, t0, m, K, o, radius=radius, half_period=half)
        except LameError as e:
            logger.warning("polishing from q=%s failed: %s", q, e)
            continue
        if cand is None:
            continue
        p = cand.point
        if abs(p.q) < o["min_abs_q"]:
            continue
        if not region.contains(p.q) or not m_range[0] <= p.m <= m_range[1]:
            continue
        if any(abs(p.q - f.point.q) < o["dedup_tol"] for f in found):
            continue
        found.append(classify(cand, K, o))
    found.sort(key=lambda c: (round(abs(c.point.q), 9), c.point.q.real))
    return found


def candidate_near(q: complex, K: int = None, opts: dict = None) -> Optional[BranchCandidate]:
    """Polish and classify the solution of the branch conditions within polish_radius of q."""
    K = K or ell.DEFAULTS["trunc_K"]
    ctx = ell.make_context(q, K)
    t0 = solve_t0(q, 2 * complex(ell.eta1(ctx)), ctx=ctx, opts=opts)
    m, _ = sheet_index(t0, ctx)
    cand = polish_candidate(q, t0, m, K, opts)
    return classify(cand, K, opts) if cand is not None else None
