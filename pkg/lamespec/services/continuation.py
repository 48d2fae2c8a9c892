"""
Analytic continuation of eigenvalues in q by tracking (t0, m).

Along a path in the q-plane the pair is kept on
    zeta(t0) - 2 eta1 t0 + m pi i = 0,    E = -wp(t0),
with a tangent predictor and a Newton corrector in t0.  Going once around a
branch point moves E_j onto another eigenvalue of the same family; the
resulting permutations are the monodromy data.
"""

import logging, math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import (ContinuationStallError, NoConvergenceError, ParityMismatchError,
                      PoleProximityError, UnmatchedStateError)
from . import elliptic as ell
from .monodromy import SpectralPoint, canonical_t0, sheet_index, solve_t0
from .perturbation import RationalSeries, evaluate, expand_many
from .trig_basis import ModelParams

logger = logging.getLogger(__name__)

PI = math.pi

DEFAULTS = {
    "corrector_tol": 1e-11,
    "corrector_iter": 8,
    "max_halvings": 12,
    "jump_ratio": 0.5,        # corrector may move t0 by this fraction of the predicted step
    "jump_floor": 1e-4,
    "near_branch": 1e-3,      # |E - 2 eta1| / pi^2 below which steps are capped
    "line_step": 0.005,
    "residual_tol": 1e-9,
    "match_tol": 1e-4,        # pi^2 units
    "tie_tol": 1e-6,
    "index_tol": 1e-6,        # |r - m| accepted when seeding from the series
}


# ── Paths ────────────────────────────────────────────────────
@dataclass
class PathSpec:
    """A discretized path in the q-plane; ``nodes`` are visited in order."""

    kind: str
    nodes: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=complex)
        if self.nodes.size == 0:
            raise ValueError("path has no nodes")
        if np.any(np.abs(self.nodes) >= 1) or np.any(self.nodes == 0):
            raise ValueError("path must stay inside 0 < |q| < 1")

    @classmethod
    def polyline(cls, waypoints: Sequence[complex], line_step: float = None) -> "PathSpec":
        step = line_step or DEFAULTS["line_step"]
        pts = [complex(w) for w in waypoints]
        return cls("polyline", _polyline_nodes(pts, step), {"waypoints": pts})

    @classmethod
    def cycle(cls, anchor: complex, rho: float, q_base: float, steps: int = 400,
              line_step: float = None) -> "PathSpec":
        """q_base -> Re a -> a - i rho, once anticlockwise around a, then back the same way."""
        a = complex(anchor)
        if not 0 < rho < a.imag:
            raise ValueError(f"cycle radius {rho} must lie in (0, Im a = {a.imag})")
        step = line_step or DEFAULTS["line_step"]
        foot, low = complex(a.real, 0), a - 1j * rho
        out = _polyline_nodes([complex(q_base), foot, low], step)
        theta = -PI / 2 + 2 * PI * np.arange(1, steps + 1) / steps
        circle = a + rho * np.exp(1j * theta)
        circle[-1] = low
        back = _polyline_nodes([low, foot, complex(q_base)], step)[1:]
        nodes = np.concatenate([out, circle, back])
        return cls("cycle", nodes, {"anchor": a, "rho": rho, "q_base": q_base, "steps": steps})

    @property
    def s(self) -> np.ndarray:
        """Arc-length parameter of the nodes, normalized to [0, 1]."""
        d = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(self.nodes)))])
        return d / d[-1] if d[-1] > 0 else d

    def reversed(self) -> "PathSpec":
        return PathSpec(self.kind, self.nodes[::-1].copy(), dict(self.meta, reversed=True))


def _polyline_nodes(pts: List[complex], step: float) -> np.ndarray:
    nodes = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        if a == b:
            continue
        n = max(1, math.ceil(abs(b - a) / step))
        nodes += [a + (b - a) * j / n for j in range(1, n)] + [b]
    return np.array(nodes)


@dataclass
class Trajectory:
    path: PathSpec
    states: List[SpectralPoint]
    s: List[float]
    newton_iterations: int = 0
    halvings: int = 0
    sheet_moves: List[Tuple[float, int]] = field(default_factory=list)   # (s, lattice shift)
    residual_violations: List[Tuple[float, float]] = field(default_factory=list)   # (s, residual)

    @property
    def initial(self) -> SpectralPoint:
        return self.states[0]

    @property
    def final(self) -> SpectralPoint:
        return self.states[-1]

    def records(self) -> List[dict]:
        return [{"s": float(s), "q": [p.q.real, p.q.imag], "E": [p.E.real, p.E.imag],
                 "t0": [p.t0.real, p.t0.imag], "m": p.m} for s, p in zip(self.s, self.states)]


# ── Single steps ─────────────────────────────────────────────
def _correct(t: complex, m: int, ctx, o: dict) -> Optional[Tuple[complex, int]]:
    """Newton on g(t) = zeta(t) - 2 eta1 t + m pi i at fixed q."""
    h = complex(ell.eta1(ctx))
    tol = o["corrector_tol"] * (1 + abs(m))
    try:
        for it in range(o["corrector_iter"] + 1):
            g = complex(ell.zeta(t, ctx)) - 2 * h * t + m * PI * 1j
            if abs(g) <= tol:
                return t, it
            if it == o["corrector_iter"]:
                return None
            dg = -complex(ell.wp(t, ctx)) - 2 * h
            if dg == 0:
                return None
            t -= g / dg
    except PoleProximityError:
        return None
    return None


def _tangent(p: SpectralPoint, K: int) -> complex:
    """dt0/dq on the curve g(t, q) = 0."""
    ctx = ell.make_context(p.q, K)
    try:
        gt = -complex(ell.wp(p.t0, ctx)) - 2 * complex(ell.eta1(ctx))
        gq = complex(ell.zeta_dq(p.t0, ctx)) - 2 * complex(ell.eta1_dq(ctx)) * p.t0
    except PoleProximityError:
        return 0j
    return -gq / gt if gt != 0 else 0j


def _normalize(t: complex, m: int, ctx) -> Tuple[complex, int, int]:
    """Move t0 back by whole periods once |Im t0| passes Im(tau)/2; m follows."""
    n = 0
    if abs(t.imag) > ctx.im_tau / 2:
        n = int(round(t.imag / ctx.im_tau))
        t -= n * ctx.tau
        m -= 2 * n
    if abs(t.real) > 1:
        t -= round(t.real)
    return t, m, n


def _advance(p: SpectralPoint, q_new: complex, K: int, o: dict):
    t_pred = p.t0 + _tangent(p, K) * (q_new - p.q)
    ctx = ell.make_context(q_new, K)
    res = _correct(t_pred, p.m, ctx, o)
    if res is None:
        return None
    t, its = res
    if abs(t - t_pred) > max(o["jump_ratio"] * abs(t_pred - p.t0), o["jump_floor"]):
        return None
    return ctx, t, its


def _check_residual(traj: "Trajectory", p: SpectralPoint, s: float, K: int, o: dict):
    r = max(p.residuals(ell.make_context(p.q, K)))
    if r > o["residual_tol"]:
        if not traj.residual_violations:
            logger.warning("state residual %.2e above %.0e at s=%.4f (q=%s)",
                           r, o["residual_tol"], s, p.q)
        traj.residual_violations.append((s, r))


# ── Public API ───────────────────────────────────────────────
def init_state(m_index: int, q_start: float, series: Optional[RationalSeries] = None,
               params: ModelParams = None, K: int = None, k_max: int = 30,
               opts: dict = None) -> SpectralPoint:
    """The (t0, m) representative of E_{m_index} at q_start, refined onto the exact curve."""
    o = {**DEFAULTS, **(opts or {})}
    params = params or ModelParams()
    K = K or ell.DEFAULTS["trunc_K"]
    if series is None:
        series = expand_many([m_index], k_max, params)[0]
    q = complex(q_start)
    ctx = ell.make_context(q, K)
    E = evaluate(series, q)
    t0 = solve_t0(q, E, ctx=ctx)
    m, frac = sheet_index(t0, ctx)
    if frac > o["index_tol"]:
        raise NoConvergenceError(
            f"series value of E_{m_index} at q={q} gives exponent/(pi i) off an integer by {frac:.2e}")
    if m % 2 != m_index % 2:
        raise ParityMismatchError(f"E_{m_index} landed on sheet m={m} of the wrong family")
    res = _correct(t0, m, ctx, o)
    if res is None:
        raise NoConvergenceError(f"could not refine t0 for E_{m_index} at q={q}")
    t = canonical_t0(res[0], ctx)
    m, _ = sheet_index(t, ctx)
    return SpectralPoint(q, complex(-ell.wp(t, ctx)), t, m)


def continue_along(state: SpectralPoint, path: PathSpec, K: int = None,
                   opts: dict = None) -> Trajectory:
    """Track state through every node of path; raises ContinuationStallError on step underflow.

    Every state is checked against residual_tol; failures are collected in
    Trajectory.residual_violations rather than raised.
    """
    o = {**DEFAULTS, **(opts or {})}
    K = K or ell.DEFAULTS["trunc_K"]
    if abs(path.nodes[0] - state.q) > 1e-12:
        raise ValueError(f"path starts at {path.nodes[0]}, state is at {state.q}")
    s_vals = path.s
    traj = Trajectory(path, [state], [0.0])
    _check_residual(traj, state, 0.0, K, o)
    cur = state
    floor = 2.0 ** -o["max_halvings"]

    for i in range(1, len(path.nodes)):
        qa, qb = cur.q, complex(path.nodes[i])
        if qb == qa:
            traj.states.append(cur)
            traj.s.append(float(s_vals[i]))
            continue
        done, h = 0.0, 1.0
        while 1.0 - done > 1e-12:
            ctx_cur = ell.make_context(cur.q, K)
            near = abs(cur.E - 2 * complex(ell.eta1(ctx_cur))) < o["near_branch"] * PI ** 2
            step = min(h, 1.0 - done, 0.25 if near else 1.0)
            target = qb if done + step >= 1.0 - 1e-12 else qa + (qb - qa) * (done + step)
            res = _advance(cur, target, K, o)
            if res is None:
                h = step / 2
                traj.halvings += 1
                if h < floor:
                    s_here = float(s_vals[i - 1] + (s_vals[i] - s_vals[i - 1]) * done)
                    raise ContinuationStallError(
                        f"step underflow at q={target:.6f} (|E - 2 eta1| = "
                        f"{abs(cur.E - 2 * complex(ell.eta1(ctx_cur))):.3e})", q=target, s=s_here)
                continue
            ctx, t, its = res
            traj.newton_iterations += its
            t, m, shift = _normalize(t, cur.m, ctx)
            if shift:
                traj.sheet_moves.append((float(s_vals[i]), shift))
                logger.debug("lattice move by %d tau at q=%s, m -> %d", shift, target, m)
            cur = SpectralPoint(target, complex(-ell.wp(t, ctx)), t, m)
            done += step
            h = min(1.0, 2 * step)
        traj.states.append(cur)
        traj.s.append(float(s_vals[i]))
        _check_residual(traj, cur, float(s_vals[i]), K, o)
    return traj


# ── Permutations ─────────────────────────────────────────────
@dataclass
class PermutationResult:
    anchor: Optional[complex]
    indices: List[int]
    mapping: Dict[int, int]
    rho: float
    trajectories: Dict[int, Trajectory] = field(default_factory=dict, repr=False)

    @property
    def parity(self) -> str:
        return "even" if self.indices[0] % 2 == 0 else "odd"

    def cycles(self) -> List[Tuple[int, ...]]:
        seen, out = set(), []
        for j in self.indices:
            if j in seen:
                continue
            cyc, k = [], j
            while k not in seen:
                seen.add(k)
                cyc.append(k)
                k = self.mapping[k]
            out.append(tuple(cyc))
        return out

    def notation(self, fixed: bool = True) -> str:
        """Cycle notation, e.g. "(0 2)(4)(6)"."""
        return "".join("(" + " ".join(map(str, c)) + ")" for c in self.cycles()
                       if fixed or len(c) > 1)

    def moved(self) -> List[int]:
        return [j for j in self.indices if self.mapping[j] != j]

    def to_dict(self) -> dict:
        return {
            "anchor": [self.anchor.real, self.anchor.imag] if self.anchor is not None else None,
            "parity": self.parity,
            "rho": self.rho,
            "perm": [[j, self.mapping[j]] for j in self.indices],
            "cycles": self.notation(),
        }


def _run_one(args):
    state, path, K, opts = args
    return continue_along(state, path, K, opts)


def loop_permutation(path: PathSpec, indices: Sequence[int], params: ModelParams = None,
                     K: int = None, series_k_max: int = 30, opts: dict = None, jobs: int = 1,
                     series: Optional[Dict[int, RationalSeries]] = None) -> PermutationResult:
    """Continue each E_j around a closed path and match the end states to the starts."""
    o = {**DEFAULTS, **(opts or {})}
    params = params or ModelParams()
    K = K or ell.DEFAULTS["trunc_K"]
    indices = list(indices)
    if len({j % 2 for j in indices}) != 1:
        raise ValueError("indices must share one parity")
    q_base = complex(path.nodes[0])
    if abs(path.nodes[-1] - q_base) > 1e-12:
        raise ValueError("path must be closed")
    if series is None:
        series = dict(zip(indices, expand_many(indices, series_k_max, params)))
    starts = {j: init_state(j, q_base, series[j], params, K, opts=o) for j in indices}

    work = [(starts[j], path, K, o) for j in indices]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trajs = dict(zip(indices, pool.map(_run_one, work)))
    else:
        trajs = {j: _run_one(w) for j, w in zip(indices, work)}

    mapping: Dict[int, int] = {}
    for j in indices:
        end = trajs[j].final
        _, r2 = end.residuals(ell.make_context(end.q, K))
        if r2 > o["residual_tol"]:
            raise UnmatchedStateError(f"E_{j}: final state fails the residual check ({r2:.2e})")
        dist = sorted((abs(end.E - starts[i].E) / PI ** 2, i) for i in indices)
        if dist[0][0] > o["match_tol"]:
            raise UnmatchedStateError(
                f"E_{j} ended at E/pi^2 = {end.E / PI ** 2:.6f}, no start within {o['match_tol']}")
        if len(dist) > 1 and dist[1][0] - dist[0][0] < o["tie_tol"]:
            raise UnmatchedStateError(f"E_{j}: ambiguous match between E_{dist[0][1]} and E_{dist[1][1]}")
        mapping[j] = dist[0][1]
    if sorted(mapping.values()) != sorted(indices):
        raise UnmatchedStateError(f"end states do not form a permutation: {mapping}")

    return PermutationResult(path.meta.get("anchor"), indices, mapping,
                             path.meta.get("rho"), trajs)


def monodromy_permutation(anchor: complex, indices: Sequence[int], q_base: float = 0.2,
                          rho: float = 0.02, steps: int = 400, params: ModelParams = None,
                          K: int = None, series_k_max: int = 30, opts: dict = None,
                          jobs: int = 1,
                          series: Optional[Dict[int, RationalSeries]] = None) -> PermutationResult:
    """Permutation of E_j, j in indices, produced by the cycle around anchor."""
    o = {**DEFAULTS, **(opts or {})}
    path = PathSpec.cycle(anchor, rho, q_base, steps, o["line_step"])
    result = loop_permutation(path, indices, params, K, series_k_max, o, jobs, series)
    logger.info("cycle around %s: %s", anchor, result.notation())
    return result


# ── Evidence ─────────────────────────────────────────────────
def connectivity_evidence(results: Sequence[PermutationResult]) -> List[List[int]]:
    """Components of the graph joining j to perm(j) over all results.

    One component for a family is evidence that its eigenvalues are branches
    of one analytic function; it is not a proof.
    """
    parent: Dict[int, int] = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for r in results:
        for j, k in r.mapping.items():
            parent[find(j)] = find(k)
    comps: Dict[int, List[int]] = {}
    for x in list(parent):
        comps.setdefault(find(x), []).append(x)
    return sorted(sorted(c) for c in comps.values())


def compatibility_report(results: Sequence[PermutationResult], radii: Dict[int, float],
                         tol: float = 0.02) -> List[dict]:
    """Compare |a| with the fitted radius of every eigenvalue the cycle at a moves.

    A branch point of E_j bounds its radius from above, so radius <= |a| + tol
    is required; ``tight`` marks the anchors that set the radius.
    """
    rows = []
    for r in results:
        if r.anchor is None:
            continue
        for j in r.moved():
            if j not in radii:
                continue
            d = radii[j] - abs(r.anchor)
            rows.append({
                "anchor": [r.anchor.real, r.anchor.imag],
                "abs_anchor": abs(r.anchor),
                "index": j,
                "radius": radii[j],
                "difference": d,
                "consistent": d <= tol,
                "tight": abs(d) <= tol,
            })
    return rows
