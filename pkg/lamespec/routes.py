"""Flask routes – JSON API over the numerical services."""

import logging

from flask import Blueprint, request, jsonify

from .errors import ConfigError, LameError
from .services import elliptic, monodromy, perturbation
from .services.exports import frac_str
from .services.trig_basis import ModelParams

logger = logging.getLogger(__name__)

api = Blueprint("api", __name__, url_prefix="/api")

MAX_KMAX = 120


@api.errorhandler(ConfigError)
def api_bad_request(e):
    return jsonify(success=False, error=str(e)), 400


@api.errorhandler(ValueError)
def api_value_error(e):
    return jsonify(success=False, error=str(e)), 400


@api.errorhandler(LameError)
def api_numerical_error(e):
    logger.warning("numerical failure: %s", e)
    return jsonify(success=False, error=str(e)), 422


@api.errorhandler(Exception)
def api_error(e):
    logger.exception("API error")
    return jsonify(success=False, error=str(e)), 500


# ── Parameter parsing ────────────────────────────────────────
def _int_arg(name: str, default: int, lo: int = 0, hi: int = None) -> int:
    raw = request.args.get(name)
    try:
        v = default if raw is None else int(raw)
    except ValueError:
        raise ConfigError([f"{name}: not an integer: {raw!r}"])
    if v < lo or (hi is not None and v > hi):
        raise ConfigError([f"{name}: must lie in [{lo}, {hi if hi is not None else 'inf'}]"])
    return v


def _complex(raw, name: str) -> complex:
    try:
        if isinstance(raw, (list, tuple)):
            re_, im = raw
        else:
            parts = str(raw).split(",")
            re_, im = (parts + ["0"])[:2]
        return complex(float(re_), float(im))
    except (TypeError, ValueError):
        raise ConfigError([f"{name}: expected 're,im', got {raw!r}"])


def _pair(z: complex):
    z = complex(z)
    return [z.real, z.imag]


# ── API: Series ──────────────────────────────────────────────
@api.route("/series")
def get_series():
    n = _int_arg("n", 1, lo=1)
    m = _int_arg("m", 0)
    kmax = _int_arg("kmax", 10, hi=MAX_KMAX)
    series, _ = perturbation.expand(m, kmax, ModelParams(n))
    return jsonify(success=True, series={
        "n": n, "m": m, "k_max": kmax, "units": "pi^2",
        "coeffs": [frac_str(c) for c in series.coeffs],
    })


@api.route("/radius")
def get_radius():
    n = _int_arg("n", 1, lo=1)
    m = _int_arg("m", 0)
    kmax = _int_arg("kmax", 60, hi=MAX_KMAX)
    kmin = _int_arg("kmin", 0) or None      # 0: top third of the orders
    series, _ = perturbation.expand(m, kmax, ModelParams(n))
    est = perturbation.estimate_radius(series, kmin)
    return jsonify(success=True, radius={
        "n": n, "m": m, "k_max": kmax, "k_min": est.k_min, "radius": est.radius,
        "tail_radius": est.tail_radius, "a": est.a, "b": est.b, "points": est.points,
    })


# ── API: Elliptic values ─────────────────────────────────────
@api.route("/wp-eval")
def wp_eval():
    q = _complex(request.args.get("q", "0.2,0"), "q")
    x = _complex(request.args.get("x", "0.31,0.05"), "x")
    K = _int_arg("K", elliptic.DEFAULTS["trunc_K"], lo=1)
    ctx = elliptic.make_context(q, K)
    c = elliptic.constants(ctx)
    return jsonify(success=True, values={
        "q": _pair(q), "x": _pair(x), "K": K,
        "wp": _pair(elliptic.wp(x, ctx)),
        "wp_prime": _pair(elliptic.wp_prime(x, ctx)),
        "zeta": _pair(elliptic.zeta(x, ctx)),
        "eta1": _pair(c.eta1),
        "e": [_pair(v) for v in c.e],
        "exponent": _pair(monodromy.exponent(x, ctx)),
        "truncation_bound": elliptic.truncation_bound(ctx, im_x=x.imag),
    })


# ── API: Classification ──────────────────────────────────────
@api.route("/classify", methods=["POST"])
def classify():
    body = request.get_json(force=True, silent=True) or {}
    if "q" not in body:
        return jsonify(success=False, error="No q provided"), 400
    q = _complex(body["q"], "q")
    if not 0 < abs(q) < 1:
        raise ConfigError(["q: must satisfy 0 < |q| < 1"])
    cand = monodromy.candidate_near(q, body.get("K"))
    if cand is None:
        return jsonify(success=False, error=f"no solution of the branch conditions near {q}"), 422
    return jsonify(success=True, candidate=cand.to_dict(),
                   coincidence_gap=cand.coincidence_gap)
