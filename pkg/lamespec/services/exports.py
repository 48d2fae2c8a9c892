"""
Output writers: JSON, JSON-lines, CSV (pandas) and XLSX (openpyxl).

Every file carries the resolved run configuration and the library version.
JSON is written with sorted keys and CSV with fixed float formatting, so a
rerun with the same configuration reproduces them byte for byte.
"""

import json, logging, os
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import pandas as pd
from openpyxl.styles import Font, PatternFill
from openpyxl.utils import get_column_letter

logger = logging.getLogger(__name__)

HEADER_FILL = PatternFill("solid", fgColor="DDEBF7")


def _version() -> str:
    from .. import __version__
    return __version__


def provenance(config: dict) -> dict:
    return {"version": _version(), "config": config}


def frac_str(c: Fraction) -> str:
    return f"{c.numerator}/{c.denominator}"


def write_json(path: str, doc) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info("wrote %s", path)
    return path


def _write_csv(path: str, df: pd.DataFrame, config: dict) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(f"# lamespec {_version()} config={json.dumps(config, sort_keys=True)}\n")
        df.to_csv(f, index=False, float_format="%.17g")
    logger.info("wrote %s", path)
    return path


def _write_xlsx(path: str, sheets: Dict[str, pd.DataFrame], config: dict) -> str:
    """One sheet per frame plus a "config" sheet; bold shaded header rows."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with pd.ExcelWriter(path, engine="openpyxl") as writer:
        for name, df in sheets.items():
            df.to_excel(writer, sheet_name=name, index=False)
            ws = writer.sheets[name]
            for cell in ws[1]:
                cell.font = Font(bold=True)
                cell.fill = HEADER_FILL
            for i, col in enumerate(df.columns, start=1):
                width = max([len(str(col))] + [len(str(v)) for v in df[col].head(200)])
                ws.column_dimensions[get_column_letter(i)].width = min(60, width + 2)
        meta = pd.DataFrame({"key": ["version", "config"],
                             "value": [_version(), json.dumps(config, sort_keys=True)]})
        meta.to_excel(writer, sheet_name="config", index=False)
    logger.info("wrote %s", path)
    return path


# ── Series ───────────────────────────────────────────────────
def series_frame(series: Sequence) -> pd.DataFrame:
    rows = []
    for s in series:
        for k, c in enumerate(s.coeffs):
            rows.append({"n": s.n, "m": s.m, "k": k, "power": 2 * k,
                         "numerator": str(c.numerator), "denominator": str(c.denominator),
                         "float": float(c)})
    return pd.DataFrame(rows, columns=["n", "m", "k", "power", "numerator", "denominator", "float"])


def series_document(series: Sequence, radii: Dict[int, Optional[float]], config: dict) -> dict:
    return {
        **provenance(config),
        "units": "pi^2",
        "series": [{"n": s.n, "m": s.m, "k_max": s.order,
                    "coeffs": [frac_str(c) for c in s.coeffs],
                    "radius": radii.get(s.m)} for s in series],
    }


def _term(c: Fraction, k: int) -> str:
    body = frac_str(c) if c.denominator != 1 else str(c.numerator)
    return body if k == 0 else f"{body} q^{2 * k}"


def series_table(series: Sequence, radii: Dict[int, Optional[float]], terms: int = 8) -> str:
    """Plain-text table: E_m(q) = pi^2 (c0 + c1 q^2 + ...) | radius."""
    lines = []
    for s in series:
        shown = " + ".join(_term(c, k) for k, c in enumerate(s.coeffs[:terms]))
        if s.order >= terms:
            shown += " + ..."
        r = radii.get(s.m)
        lines.append(f"E_{s.m}(q) = pi^2 ({shown})  |  radius {'n/a' if r is None else f'{r:.3f}'}")
    return "\n".join(lines) + "\n"


def write_series(out_dir: str, series: Sequence, radii: Dict[int, Optional[float]],
                 config: dict, xlsx: bool = True) -> List[str]:
    paths = [write_json(os.path.join(out_dir, "series.json"), series_document(series, radii, config)),
             _write_csv(os.path.join(out_dir, "series.csv"), series_frame(series), config)]
    path = os.path.join(out_dir, "series_table.txt")
    with open(path, "w") as f:
        f.write(f"# lamespec {_version()} config={json.dumps(config, sort_keys=True)}\n")
        f.write(series_table(series, radii))
    paths.append(path)
    if xlsx:
        paths.append(_write_xlsx(os.path.join(out_dir, "series.xlsx"),
                                 {"coefficients": series_frame(series)}, config))
    return paths


def write_radius(out_dir: str, estimates: Dict[int, object], config: dict) -> List[str]:
    rows = [{"m": m, "radius": e.radius if e else None, "tail_radius": e.tail_radius if e else None,
             "a": e.a if e else None, "b": e.b if e else None, "points": e.points if e else 0,
             "k_min": e.k_min if e else None}
            for m, e in estimates.items()]
    df = pd.DataFrame(rows, columns=["m", "radius", "tail_radius", "a", "b", "points", "k_min"])
    return [write_json(os.path.join(out_dir, "radius.json"), {**provenance(config), "radii": rows}),
            _write_csv(os.path.join(out_dir, "radius.csv"), df, config)]


def write_comparison(out_dir: str, df: pd.DataFrame, config: dict) -> str:
    return _write_csv(os.path.join(out_dir, "coefficient_check.csv"), df, config)


# ── Scan ─────────────────────────────────────────────────────
def scan_frame(candidates: Sequence) -> pd.DataFrame:
    rows = []
    for c in candidates:
        d = c.to_dict()
        rows.append({"family": c.point.family, "q_re": d["q"][0], "q_im": d["q"][1],
                     "abs_q": abs(c.point.q), "t0_re": d["t0"][0], "t0_im": d["t0"][1],
                     "m": d["m"], "residual": d["residual"], "class": d["class"],
                     "coincidence_gap": c.coincidence_gap})
    return pd.DataFrame(rows, columns=["family", "q_re", "q_im", "abs_q", "t0_re", "t0_im",
                                       "m", "residual", "class", "coincidence_gap"])


def scan_summary(candidates: Sequence) -> str:
    out = []
    for fam in ("periodic", "anti-periodic"):
        part = [c for c in candidates if c.point.family == fam]
        out.append(f"{fam} ({len(part)})")
        for c in part:
            q = c.point.q
            out.append(f"  q = {q.real:.6f}{q.imag:+.6f}i   m = {c.point.m:+d}   {c.classification.value}")
    return "\n".join(out) + "\n"


def write_scan(out_dir: str, candidates: Sequence, config: dict, xlsx: bool = True) -> List[str]:
    paths = [write_json(os.path.join(out_dir, "scan.json"),
                        {**provenance(config), "candidates": [c.to_dict() for c in candidates]})]
    path = os.path.join(out_dir, "scan_summary.txt")
    with open(path, "w") as f:
        f.write(f"# lamespec {_version()} config={json.dumps(config, sort_keys=True)}\n")
        f.write(scan_summary(candidates))
    paths.append(path)
    if xlsx:
        df = scan_frame(candidates)
        paths.append(_write_xlsx(os.path.join(out_dir, "scan.xlsx"), {
            "periodic": df[df["family"] == "periodic"],
            "anti-periodic": df[df["family"] == "anti-periodic"],
        }, config))
    return paths


# ── Continuation ─────────────────────────────────────────────
def write_trajectory(path: str, traj, config: dict, label: dict = None) -> str:
    """JSON-lines: a header record, then one record per path node."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as f:
        head = {"type": "header", **provenance(config), **(label or {}),
                "halvings": traj.halvings, "newton_iterations": traj.newton_iterations,
                "sheet_moves": [[s, n] for s, n in traj.sheet_moves],
                "residual_violations": [[s, r] for s, r in traj.residual_violations]}
        f.write(json.dumps(head, sort_keys=True) + "\n")
        for rec in traj.records():
            f.write(json.dumps(rec, sort_keys=True) + "\n")
    logger.info("wrote %s", path)
    return path


def write_permutations(out_dir: str, results: Sequence, config: dict,
                       evidence: List[List[int]] = None, compatibility: List[dict] = None) -> str:
    doc = {**provenance(config), "permutations": [r.to_dict() for r in results]}
    if evidence is not None:
        doc["connectivity_evidence"] = evidence
    if compatibility is not None:
        doc["compatibility"] = compatibility
    return write_json(os.path.join(out_dir, "permutations.json"), doc)
