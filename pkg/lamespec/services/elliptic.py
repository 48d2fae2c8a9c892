"""
Weierstrass functions for the lattice (1, tau) from truncated nome series.

    wp(x)   = -2 eta1 + pi^2 / sin^2(pi x) - 8 pi^2 sum k L_k cos(2 k pi x)
    zeta(x) =  2 eta1 x + pi cot(pi x)    + 4 pi   sum   L_k sin(2 k pi x)
    eta1    =  pi^2 (1/6 - 4 sum k L_k),      L_k = q^{2k} / (1 - q^{2k})

Every sum runs over exactly k = 1..K.  The trigonometric factors are never
formed on their own: q^{2k} e^{+-2k pi i x} is built as (q^2 e^{+-2 pi i x})^k
so that a large |Im x| cannot overflow a term whose product is small.
"""

import cmath, functools, logging, math
from dataclasses import dataclass, field
from typing import Tuple

import mpmath
import numpy as np

from ..errors import PoleProximityError, SeriesDivergenceError

logger = logging.getLogger(__name__)

DEFAULTS = {
    "trunc_K": 200,
    "pole_tol": 1e-8,
    "dps": 50,          # decimal digits in extended mode
}

PI = math.pi


# ── Context ──────────────────────────────────────────────────
@dataclass(frozen=True)
class QContext:
    """A nome with its truncation order and the cached Lambert factors.

    Immutable: a new q or K means a new context, so the caches can never
    go stale.
    """

    q: complex
    K: int = DEFAULTS["trunc_K"]
    extended: bool = False
    dps: int = DEFAULTS["dps"]
    tau: complex = field(init=False, repr=False)
    _ks: object = field(init=False, repr=False, compare=False)
    _q2k: object = field(init=False, repr=False, compare=False)
    _g: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"truncation order K must be >= 1, got {self.K}")
        if self.extended:
            with mpmath.workdps(self.dps):
                q = mpmath.mpc(self.q)
                if abs(q) >= 1:
                    raise SeriesDivergenceError(f"|q| = {float(abs(q))} >= 1, nome series diverge")
                q2 = q * q
                q2k, g, p = [], [], mpmath.mpf(1)
                for _ in range(self.K):
                    p *= q2
                    q2k.append(p)
                    g.append(1 / (1 - p))
                tau = (mpmath.log(q) / (mpmath.pi * 1j)) if q != 0 else mpmath.mpc(0, mpmath.inf)
            object.__setattr__(self, "q", q)
            object.__setattr__(self, "_ks", list(range(1, self.K + 1)))
        else:
            q = complex(self.q)
            if abs(q) >= 1:
                raise SeriesDivergenceError(f"|q| = {abs(q)} >= 1, nome series diverge")
            ks = np.arange(1, self.K + 1)
            q2k = np.power(q * q, ks)
            g = 1.0 / (1.0 - q2k)
            tau = cmath.log(q) / (PI * 1j) if q != 0 else complex(0.0, math.inf)
            object.__setattr__(self, "q", q)
            object.__setattr__(self, "_ks", ks)
        object.__setattr__(self, "_q2k", q2k)
        object.__setattr__(self, "_g", g)
        object.__setattr__(self, "tau", tau)

    @property
    def im_tau(self) -> float:
        return float(self.tau.imag)

    def with_q(self, q: complex) -> "QContext":
        return QContext(q, self.K, self.extended, self.dps)


def make_context(q: complex, K: int = None, extended: bool = False) -> QContext:
    return QContext(q, K or DEFAULTS["trunc_K"], extended)


@dataclass(frozen=True)
class EllipticConstants:
    eta1: complex
    eta3: complex
    e1: complex
    e2: complex
    e3: complex

    @property
    def e(self) -> Tuple[complex, complex, complex]:
        return (self.e1, self.e2, self.e3)

    def sum_residual(self) -> float:
        return abs(self.e1 + self.e2 + self.e3)

    def legendre_residual(self, tau: complex) -> float:
        return abs(self.eta1 * tau - self.eta3 - PI * 1j)


# ── Precision ────────────────────────────────────────────────
def _precision(fn):
    """Run fn at the working precision of its QContext argument."""
    @functools.wraps(fn)
    def inner(*args, **kw):
        ctx = next(a for a in (*args, *kw.values()) if isinstance(a, QContext))
        if ctx.extended:
            with mpmath.workdps(ctx.dps):
                return fn(*args, **kw)
        return fn(*args, **kw)
    return inner


# ── Series kernels ───────────────────────────────────────────
def _ops(ctx: QContext):
    return mpmath if ctx.extended else cmath


def _lambert(ctx: QContext, x, p: int):
    """(sum k^p L_k cos 2k pi x, sum k^p L_k sin 2k pi x)."""
    if ctx.extended:
        with mpmath.workdps(ctx.dps):
            x = mpmath.mpc(x)
            w = mpmath.exp(2j * mpmath.pi * x)
            a, b = ctx.q ** 2 * w, ctx.q ** 2 / w
            ak, bk = mpmath.mpc(1), mpmath.mpc(1)
            c, s = mpmath.mpc(0), mpmath.mpc(0)
            for k, g in zip(ctx._ks, ctx._g):
                ak *= a
                bk *= b
                wk = g * mpmath.mpf(k) ** p
                c += wk * (ak + bk) / 2
                s += wk * (ak - bk) / 2j
            return c, s
    x = complex(x)
    w = cmath.exp(2j * PI * x)
    q2 = ctx.q * ctx.q
    ak = np.power(q2 * w, ctx._ks)
    bk = np.power(q2 / w, ctx._ks)
    wk = ctx._g * ctx._ks.astype(float) ** p
    return complex(np.sum(wk * (ak + bk)) / 2), complex(np.sum(wk * (ak - bk)) / 2j)


def _lambert_dq(ctx: QContext, x, p: int):
    """As _lambert with L_k replaced by dL_k/dq = 2k q^{2k-1} / (1 - q^{2k})^2."""
    if ctx.q == 0:
        return 0j, 0j
    if ctx.extended:
        with mpmath.workdps(ctx.dps):
            x = mpmath.mpc(x)
            w = mpmath.exp(2j * mpmath.pi * x)
            a, b = ctx.q ** 2 * w, ctx.q ** 2 / w
            ak, bk = mpmath.mpc(1), mpmath.mpc(1)
            c, s = mpmath.mpc(0), mpmath.mpc(0)
            for k, g in zip(ctx._ks, ctx._g):
                ak *= a
                bk *= b
                wk = 2 * mpmath.mpf(k) ** (p + 1) * g * g / ctx.q
                c += wk * (ak + bk) / 2
                s += wk * (ak - bk) / 2j
            return c, s
    x = complex(x)
    w = cmath.exp(2j * PI * x)
    q2 = ctx.q * ctx.q
    ak = np.power(q2 * w, ctx._ks)
    bk = np.power(q2 / w, ctx._ks)
    wk = 2 * ctx._ks.astype(float) ** (p + 1) * ctx._g * ctx._g / ctx.q
    return complex(np.sum(wk * (ak + bk)) / 2), complex(np.sum(wk * (ak - bk)) / 2j)


def _check_growth(x, ctx: QContext):
    im = abs(complex(x).imag)
    if abs(complex(ctx.q)) ** 2 * math.exp(2 * PI * im) >= 1:
        logger.warning("series at Im x = %.4g lose convergence for |q| = %.4g",
                       im, abs(complex(ctx.q)))


def reduce_argument(x, ctx: QContext):
    """Split x = x_red + n tau with |Im x_red| <= Im(tau)/2; returns (x_red, n)."""
    if ctx.q == 0:
        return x, 0
    n = int(round(float(complex(x).imag) / ctx.im_tau))
    return x - n * ctx.tau, n


def _guard_pole(x, ctx: QContext, pole_tol: float):
    s = _ops(ctx).sin(_ops(ctx).pi * x)
    if abs(s) < pole_tol:
        raise PoleProximityError(f"x = {complex(x)} is within {pole_tol} of a lattice point")
    return s


# ── Public API ───────────────────────────────────────────────
@_precision
def eta1(ctx: QContext):
    """eta1 = zeta(1/2); even in q."""
    pi = _ops(ctx).pi
    c, _ = _lambert(ctx, 0, 1)
    return pi ** 2 * (mpmath.mpf(1) / 6 if ctx.extended else 1 / 6) - 4 * pi ** 2 * c


@_precision
def eta1_dq(ctx: QContext):
    c, _ = _lambert_dq(ctx, 0, 1)
    return -4 * _ops(ctx).pi ** 2 * c


@_precision
def wp(x, ctx: QContext, reduce: bool = True, pole_tol: float = None):
    """Weierstrass p-function at x."""
    if reduce:
        x, _ = reduce_argument(x, ctx)
    else:
        _check_growth(x, ctx)
    ops = _ops(ctx)
    s = _guard_pole(x, ctx, pole_tol or DEFAULTS["pole_tol"])
    c, _ = _lambert(ctx, x, 1)
    return -2 * eta1(ctx) + ops.pi ** 2 / s ** 2 - 8 * ops.pi ** 2 * c


@_precision
def wp_prime(x, ctx: QContext, reduce: bool = True, pole_tol: float = None):
    """Term-by-term derivative of wp; odd in x."""
    if reduce:
        x, _ = reduce_argument(x, ctx)
    else:
        _check_growth(x, ctx)
    ops = _ops(ctx)
    s = _guard_pole(x, ctx, pole_tol or DEFAULTS["pole_tol"])
    _, sn = _lambert(ctx, x, 2)
    return -2 * ops.pi ** 3 * ops.cos(ops.pi * x) / s ** 3 + 16 * ops.pi ** 3 * sn


@_precision
def zeta(x, ctx: QContext, reduce: bool = True, pole_tol: float = None):
    """Weierstrass zeta-function; zeta(x + tau) = zeta(x) + 2 eta3 is used for reduction."""
    n = 0
    if reduce:
        x, n = reduce_argument(x, ctx)
    else:
        _check_growth(x, ctx)
    ops = _ops(ctx)
    s = _guard_pole(x, ctx, pole_tol or DEFAULTS["pole_tol"])
    _, sn = _lambert(ctx, x, 0)
    e1 = eta1(ctx)
    out = 2 * e1 * x + ops.pi * ops.cos(ops.pi * x) / s + 4 * ops.pi * sn
    if n:
        out += 2 * n * (e1 * ctx.tau - ops.pi * 1j)
    return out


@_precision
def wp_dq(x, ctx: QContext):
    """Partial derivative of wp in q at fixed x.

    The series run at x_red = x - n tau; moving tau with q adds -n tau'(q) wp'(x_red).
    """
    x_red, n = reduce_argument(x, ctx)
    c, _ = _lambert_dq(ctx, x_red, 1)
    out = -2 * eta1_dq(ctx) - 8 * _ops(ctx).pi ** 2 * c
    if n:
        out -= n * _tau_dq(ctx) * wp_prime(x_red, ctx, reduce=False)
    return out


@_precision
def zeta_dq(x, ctx: QContext):
    """Partial derivative of zeta in q at fixed x, quasi-period term included."""
    x_red, n = reduce_argument(x, ctx)
    _, sn = _lambert_dq(ctx, x_red, 0)
    h, dh = eta1(ctx), eta1_dq(ctx)
    out = 2 * dh * x_red + 4 * _ops(ctx).pi * sn
    if n:
        dtau = _tau_dq(ctx)
        out += n * dtau * wp(x_red, ctx, reduce=False) + 2 * n * (dh * ctx.tau + h * dtau)
    return out


def _tau_dq(ctx: QContext):
    """d tau / dq = 1 / (pi i q)."""
    return 1 / (_ops(ctx).pi * 1j * ctx.q)


def half_periods(ctx: QContext):
    """(omega1, omega2, omega3) = (1/2, -1/2 - tau/2, tau/2)."""
    return (0.5, -0.5 - ctx.tau / 2, ctx.tau / 2)


@_precision
def _wp_at_tau_half(ctx: QContext, sign: int):
    """wp(tau/2) (sign=+1) or wp((1+tau)/2) (sign=-1), written in integer powers of q.

    Same truncated series as wp, with sin^2(pi tau/2) = -(1-q)^2/(4q) and
    cos(k pi tau) = (q^k + q^-k)/2 substituted, so q = 0 needs no special case.
    """
    pi = _ops(ctx).pi
    q = sign * ctx.q
    if ctx.extended:
        with mpmath.workdps(ctx.dps):
            tail = mpmath.mpc(0)
            qk = mpmath.mpc(1)
            for k, g in zip(ctx._ks, ctx._g):
                qk *= q
                tail += k * g * (qk ** 3 + qk)
    else:
        qk = np.power(q, ctx._ks)
        tail = complex(np.sum(ctx._ks * ctx._g * (qk ** 3 + qk)))
    return -2 * eta1(ctx) - 4 * pi ** 2 * q / (1 - q) ** 2 - 4 * pi ** 2 * tail


@_precision
def constants(ctx: QContext) -> EllipticConstants:
    """e_i = wp(omega_i), eta1 from its series, eta3 from the Legendre relation."""
    e1_ = wp(0.5, ctx)
    h1 = eta1(ctx)
    if ctx.q == 0:
        eta3 = complex(0.0, math.inf) if not ctx.extended else mpmath.mpc(0, mpmath.inf)
    else:
        eta3 = h1 * ctx.tau - _ops(ctx).pi * 1j
    return EllipticConstants(eta1=h1, eta3=eta3, e1=e1_,
                             e2=_wp_at_tau_half(ctx, -1), e3=_wp_at_tau_half(ctx, +1))


def truncation_bound(ctx: QContext, p: int = 1, im_x: float = 0.0) -> float:
    """Bound on the dropped tail 8 pi^2 sum_{k>K} k^p |L_k| e^{2k pi |Im x|}."""
    r = abs(complex(ctx.q)) ** 2 * math.exp(2 * PI * abs(im_x))
    if r >= 1:
        return math.inf
    K = ctx.K
    g = 1 / (1 - abs(complex(ctx.q)) ** 2)
    # sum_{k>K} k^p r^k <= (K+1)^p r^{K+1} / (1-r)^{p+1}
    return 8 * PI ** 2 * g * (K + 1) ** p * r ** (K + 1) / (1 - r) ** (p + 1)


def identity_residuals(x: complex, ctx: QContext, h: float = 1e-5):
    """[(name, residual, tolerance)] for the standard identities at x."""
    x = complex(x)
    c = constants(ctx)
    e = [complex(v) for v in c.e]
    h1 = complex(c.eta1)
    p, dp, z = complex(wp(x, ctx)), complex(wp_prime(x, ctx)), complex(zeta(x, ctx))
    scale = 1 + abs(p)
    rows = [
        ("e1 + e2 + e3 = 0", abs(sum(e)), 1e-9 * (1 + max(abs(v) for v in e))),
        ("wp(x + 1) = wp(x)", abs(complex(wp(x + 1, ctx)) - p), 1e-9 * scale),
        ("wp(-x) = wp(x)", abs(complex(wp(-x, ctx)) - p), 1e-9 * scale),
        ("zeta(x + 1) = zeta(x) + 2 eta1", abs(complex(zeta(x + 1, ctx)) - z - 2 * h1), 1e-9 * (1 + abs(z))),
        ("zeta(-x) = -zeta(x)", abs(complex(zeta(-x, ctx)) + z), 1e-9 * (1 + abs(z))),
        ("wp'^2 = 4 prod(wp - e_i)",
         abs(dp * dp - 4 * (p - e[0]) * (p - e[1]) * (p - e[2])), 1e-8 * (1 + abs(dp)) ** 2),
        ("-zeta' = wp", abs(-(complex(zeta(x + h, ctx)) - complex(zeta(x - h, ctx))) / (2 * h) - p),
         1e-5 * scale),
    ]
    if ctx.q != 0:
        rows.insert(1, ("eta1 tau - eta3 = pi i", c.legendre_residual(ctx.tau), 1e-9 * (1 + abs(h1))))
        rows.append(("wp(x + tau) = wp(x)", abs(complex(wp(x + ctx.tau, ctx, reduce=True)) - p),
                     1e-9 * scale))
    return rows
