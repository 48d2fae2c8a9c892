"""
Command-line entry point.

    lame.py series            exact coefficient tables
    lame.py radius            convergence-radius fits
    lame.py scan              branch-point search in the q-plane
    lame.py continue          continuation along cycles / polylines
    lame.py wp-eval           elliptic values and identity checks
    lame.py reproduce-tables  every reference check in one run
    lame.py serve             JSON API

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse, logging, math, os, sys
from typing import Dict, List, Optional

from . import __version__
from .config import load_run_config, RunConfig
from .errors import ConfigError, ContinuationStallError, FitError, LameError
from .services import continuation, elliptic, exports, monodromy, perturbation, reference
from .services.trig_basis import ModelParams

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


# ── Shared pieces ────────────────────────────────────────────
def _outdir(cfg: RunConfig, name: str) -> str:
    path = os.path.join(cfg.out, name)
    os.makedirs(path, exist_ok=True)
    return path


def _radii(series, k_min: int) -> Dict[int, Optional[perturbation.RadiusEstimate]]:
    out = {}
    for s in series:
        if s.order == 0:
            out[s.m] = None
            continue
        try:
            out[s.m] = perturbation.estimate_radius(s, k_min)
        except FitError as e:
            logger.warning("no radius for E_%d: %s", s.m, e)
            out[s.m] = None
    return out


def _fmt_q(q: complex) -> str:
    return f"{q.real:.6f}{q.imag:+.6f}i"


# ── Commands ─────────────────────────────────────────────────
def cmd_series(cfg: RunConfig, args) -> int:
    b = cfg.block("series")
    k_max = cfg.k_max("series")
    series = perturbation.expand_many(b["m"], k_max, ModelParams(b["n"]), cfg.jobs)
    est = _radii(series, cfg.block("radius")["k_min"])
    radii = {m: (e.radius if e else None) for m, e in est.items()}
    out = _outdir(cfg, "series")
    exports.write_series(out, series, radii, cfg.to_dict(), xlsx=cfg.xlsx)
    if b["n"] == 1:
        df = reference.coefficient_comparison(series)
        exports.write_comparison(out, df, cfg.to_dict())
        for _, r in df[df["suspect"]].iterrows():
            print(f"E_{r['m']} q^{r['power']}: computed {r['computed']}, published {r['published']}"
                  f" -> {'match' if r['match'] else 'MISMATCH'}")
    print(exports.series_table(series, radii), end="")
    return EXIT_OK


def cmd_radius(cfg: RunConfig, args) -> int:
    b = cfg.block("radius")
    k_max = cfg.k_max("radius")
    series = perturbation.expand_many(b["m"], k_max, ModelParams(b["n"]), cfg.jobs)
    est = _radii(series, b["k_min"])
    exports.write_radius(_outdir(cfg, "radius"), est, cfg.to_dict())
    for m, e in est.items():
        known = reference.KNOWN_RADII.get(m) if b["n"] == 1 else None
        shown = "n/a" if e is None else f"{e.radius:.3f} (tail {e.tail_radius:.3f})"
        print(f"E_{m}: radius {shown}" + (f"  known {known:.3f}" if known else ""))
    return EXIT_OK


def _scan(cfg: RunConfig):
    s = cfg.block("scan")
    region = monodromy.ScanRegion(tuple(s["re"]), tuple(s["im"]), s["max_abs_q"])
    return monodromy.branch_scan(region, tuple(s["grid"]), tuple(s["m_range"]), K=cfg.trunc_K,
                                 opts={"near_integer": s["near_integer"]}, jobs=cfg.jobs)


def cmd_scan(cfg: RunConfig, args) -> int:
    cands = _scan(cfg)
    exports.write_scan(_outdir(cfg, "scan"), cands, cfg.to_dict(), xlsx=cfg.xlsx)
    print(exports.scan_summary(cands), end="")
    return EXIT_OK


def _continue_opts(cfg: RunConfig) -> dict:
    return {"residual_tol": cfg.tol}


def cmd_continue(cfg: RunConfig, args) -> int:
    c = cfg.block("continue")
    out = _outdir(cfg, "continue")
    opts = _continue_opts(cfg)
    params = ModelParams()
    series = dict(zip(c["indices"], perturbation.expand_many(
        c["indices"], c["series_k_max"], params, cfg.jobs)))
    results = []
    written = {}

    if c.get("path"):
        path = continuation.PathSpec.polyline([complex(*p) for p in c["path"]["waypoints"]])
        closed = abs(path.nodes[-1] - path.nodes[0]) < 1e-12
        if closed:
            res = continuation.loop_permutation(path, c["indices"], params, cfg.trunc_K,
                                                c["series_k_max"], opts, cfg.jobs, series)
            results.append(res)
            trajs = res.trajectories
        else:
            trajs = {}
            for j in c["indices"]:
                st = continuation.init_state(j, path.nodes[0], series[j], params, cfg.trunc_K, opts=opts)
                trajs[j] = continuation.continue_along(st, path, cfg.trunc_K, opts)
        for j, tr in trajs.items():
            exports.write_trajectory(os.path.join(out, f"path_E{j}.jsonl"), tr, cfg.to_dict(),
                                     {"index": j})
            written[f"path_E{j}"] = tr
            print(f"E_{j}: end E/pi^2 = {tr.final.E.real / math.pi ** 2:.10f}"
                  f"{tr.final.E.imag / math.pi ** 2:+.10f}i")

    for i, a in enumerate(c.get("anchors") or []):
        res = continuation.monodromy_permutation(complex(*a), c["indices"], c["q_base"], c["rho"],
                                                 c["steps"], params, cfg.trunc_K,
                                                 c["series_k_max"], opts, cfg.jobs, series)
        results.append(res)
        for j, tr in res.trajectories.items():
            exports.write_trajectory(os.path.join(out, f"cycle{i}_E{j}.jsonl"), tr, cfg.to_dict(),
                                     {"anchor": [res.anchor.real, res.anchor.imag], "index": j})
            written[f"cycle{i}_E{j}"] = tr

    for r in results:
        label = _fmt_q(r.anchor) if r.anchor is not None else "path"
        print(f"{label}: {r.notation()}")
    exports.write_permutations(out, results, cfg.to_dict(),
                               evidence=continuation.connectivity_evidence(results))
    bad = {name: tr.residual_violations for name, tr in written.items() if tr.residual_violations}
    for name, v in bad.items():
        s, worst = max(v, key=lambda sv: sv[1])
        print(f"residual check failed: {name}: {len(v)} states above {cfg.tol:.0e} "
              f"(worst {worst:.2e} at s={s:.4f})", file=sys.stderr)
    return EXIT_NUMERIC if bad else EXIT_OK


def cmd_wp_eval(cfg: RunConfig, args) -> int:
    w = cfg.block("wp_eval")
    q, x = complex(*w["q"]), complex(*w["x"])
    ctx = elliptic.make_context(q, cfg.trunc_K)
    c = elliptic.constants(ctx)
    for name, v in (("wp", elliptic.wp(x, ctx)), ("wp'", elliptic.wp_prime(x, ctx)),
                    ("zeta", elliptic.zeta(x, ctx)), ("eta1", c.eta1),
                    ("e1", c.e1), ("e2", c.e2), ("e3", c.e3),
                    ("exponent", monodromy.exponent(x, ctx))):
        v = complex(v)
        print(f"{name:10s} {v.real:+.15e} {v.imag:+.15e}i")

    rows = list(elliptic.identity_residuals(x, ctx))
    if ctx.q != 0:
        shift = monodromy.exponent(x + ctx.tau, ctx) - monodromy.exponent(x, ctx)
        rows.append(("exponent(x + tau) - exponent(x) = 2 pi i", abs(shift - 2j * math.pi), 1e-9))
    rows.append(("exponent(-x) = -exponent(x)",
                 abs(monodromy.exponent(-x, ctx) + monodromy.exponent(x, ctx)), 1e-9))
    ok = True
    for name, res, tol in rows:
        passed = res <= tol
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name:44s} {res:.3e}")
    return EXIT_OK if ok else EXIT_NUMERIC


def _near(q: complex, pts, tol: float) -> bool:
    return any(abs(q - p) <= tol for p in pts)


def cmd_reproduce_tables(cfg: RunConfig, args) -> int:
    """Coefficients, radii, scan membership, classification, permutations, compatibility."""
    out = _outdir(cfg, "reproduce")
    report: dict = {**exports.provenance(cfg.to_dict())}
    ok = True
    params = ModelParams(1)

    # coefficients and radii
    ms = sorted(reference.KNOWN_RADII)
    series = perturbation.expand_many(ms, cfg.k_max("radius"), params, cfg.jobs)
    df = reference.coefficient_comparison(series)
    exports.write_comparison(out, df, cfg.to_dict())
    regular = df[~df["suspect"]]
    coeff_ok = bool(regular["match"].all())
    suspect = df[df["suspect"]]
    report["coefficients"] = {
        "checked": int(len(regular)), "all_match": coeff_ok,
        "suspect": [{"m": int(r["m"]), "power": int(r["power"]), "computed": r["computed"],
                     "published": r["published"], "match": bool(r["match"])}
                    for _, r in suspect.iterrows()],
    }
    ok &= coeff_ok
    print(f"coefficients: {len(regular)} checked, {'all match' if coeff_ok else 'MISMATCH'}")
    for row in report["coefficients"]["suspect"]:
        print(f"  E_{row['m']} q^{row['power']}: computed {row['computed']}, published "
              f"{row['published']} -> {'match' if row['match'] else 'mismatch'}")

    est = _radii(series, cfg.block("radius")["k_min"])
    radii = {m: e.radius for m, e in est.items() if e}
    rad_rows = []
    for m in ms:
        known = reference.KNOWN_RADII[m]
        got = radii.get(m)
        good = got is not None and abs(got - known) <= 0.02
        ok &= good
        rad_rows.append({"m": m, "radius": got, "known": known, "ok": good})
        print(f"radius E_{m}: {'n/a' if got is None else f'{got:.3f}'} (known {known:.3f})"
              f" {'ok' if good else 'OFF'}")
    report["radii"] = rad_rows

    # scan
    cands = _scan(cfg)
    exports.write_scan(out, cands, cfg.to_dict(), xlsx=cfg.xlsx)
    expected = reference.PERIODIC_CANDIDATES + reference.ANTIPERIODIC_CANDIDATES
    found = [c.point.q for c in cands]
    missing = [q for q in expected if not _near(q, found, 1e-4)]
    extra = [q for q in found if not _near(q, expected, 1e-3)]
    ok &= not missing
    report["scan"] = {"found": len(found), "missing": [[q.real, q.imag] for q in missing],
                      "extra": [[q.real, q.imag] for q in extra]}
    print(f"scan: {len(found)} candidates, {len(missing)} missing, {len(extra)} unlisted")

    # classification
    cls_rows = []
    for q, i in reference.COINCIDENCES:
        cand = monodromy.candidate_near(q, cfg.trunc_K)
        got = cand.classification.value if cand else None
        good = got == f"e{i}"
        ok &= good
        cls_rows.append({"q": [q.real, q.imag], "expected": f"e{i}", "class": got, "ok": good})
        print(f"class {_fmt_q(q)}: {got} (expected e{i})")
    for a in reference.CYCLE_PERMUTATIONS:
        cand = monodromy.candidate_near(a, cfg.trunc_K)
        got = cand.classification.value if cand else None
        good = got == "branch"
        ok &= good
        cls_rows.append({"q": [a.real, a.imag], "expected": "branch", "class": got, "ok": good})
        print(f"class {_fmt_q(a)}: {got} (expected branch)")
    report["classification"] = cls_rows

    # permutations
    c = cfg.block("continue")
    results = []
    perm_rows = []
    for a, want in reference.CYCLE_PERMUTATIONS.items():
        res = continuation.monodromy_permutation(a, sorted(want), c["q_base"], c["rho"], c["steps"],
                                                 params, cfg.trunc_K, c["series_k_max"],
                                                 _continue_opts(cfg), cfg.jobs)
        results.append(res)
        good = res.mapping == want
        ok &= good
        perm_rows.append({**res.to_dict(), "ok": good})
        print(f"cycle {_fmt_q(a)}: {res.notation()} {'ok' if good else 'DIFFERS'}")
    report["permutations"] = perm_rows
    report["connectivity_evidence"] = continuation.connectivity_evidence(results)
    compat = continuation.compatibility_report(results, radii)
    report["compatibility"] = compat
    for row in compat:
        print(f"|a| = {row['abs_anchor']:.6f} vs radius E_{row['index']} = {row['radius']:.3f}"
              f" {'tight' if row['tight'] else ('consistent' if row['consistent'] else 'INCONSISTENT')}")
        ok &= row["consistent"]

    report["ok"] = bool(ok)
    exports.write_json(os.path.join(out, "reproduce.json"), report)
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_serve(cfg: RunConfig, args) -> int:
    from . import create_app
    create_app().run(host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {
    "series": cmd_series,
    "radius": cmd_radius,
    "scan": cmd_scan,
    "continue": cmd_continue,
    "wp-eval": cmd_wp_eval,
    "reproduce-tables": cmd_reproduce_tables,
    "serve": cmd_serve,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int, help="worker processes")
    common.add_argument("--kmax", type=int, help="series order (series and radius)")
    common.add_argument("--trunc-K", dest="trunc_K", type=int, help="nome-series truncation")
    common.add_argument("--tol", type=float, help="residual tolerance")
    common.add_argument("--slow", action="store_true", help="k_max = 110, K = 300")
    common.add_argument("--xlsx", action="store_true", help="also write spreadsheets")

    p = argparse.ArgumentParser(prog="lame.py", description=__doc__.strip().splitlines()[0])
    p.add_argument("--version", action="version", version=f"lamespec {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "serve":
            sp.add_argument("--host", default="127.0.0.1")
            sp.add_argument("--port", type=int, default=5000)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_run_config(args.config, slow=args.slow, xlsx=args.xlsx, trunc_K=args.trunc_K,
                              tol=args.tol, jobs=args.jobs, out=args.out, k_max=args.kmax)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as e:
        for problem in e.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except ContinuationStallError as e:
        print(f"continuation stalled at q = {_fmt_q(complex(e.q))} (s = {e.s:.6f}): {e}",
              file=sys.stderr)
        return EXIT_NUMERIC
    except LameError as e:
        logger.error("numerical failure: %s", e)
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
