import copy, json, os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from dotenv import load_dotenv

from .errors import ConfigError

load_dotenv()


class Config:
    TRUNC_K = int(os.getenv("LAME_TRUNC_K", "200"))
    KMAX = int(os.getenv("LAME_KMAX", "60"))
    SLOW_KMAX = int(os.getenv("LAME_SLOW_KMAX", "110"))
    SLOW_TRUNC_K = int(os.getenv("LAME_SLOW_TRUNC_K", "300"))
    OUTPUT_DIR = os.getenv("LAME_OUTPUT_DIR", "outputs")
    JOBS = int(os.getenv("LAME_JOBS", "1"))
    LOG_LEVEL = os.getenv("LAME_LOG_LEVEL", "INFO")
    JSON_SORT_KEYS = False


# ── Default command blocks ───────────────────────────────────
BLOCK_DEFAULTS: Dict[str, dict] = {
    "series": {"n": 1, "m": [0, 1, 2, 3, 4, 5, 7], "k_max": None},
    "radius": {"n": 1, "m": [0, 2, 4, 1, 3, 7], "k_max": None, "k_min": None},
    "scan": {
        "re": [0.0, 0.92], "im": [0.0, 0.92], "max_abs_q": 0.92,
        "grid": [40, 40], "m_range": [-6, 6], "near_integer": 0.02,
    },
    "continue": {
        "anchors": [[0.258666, 0.697448]], "indices": [0, 2, 4, 6],
        "q_base": 0.2, "rho": 0.02, "steps": 400, "series_k_max": 30,
        "path": None,
    },
    "wp_eval": {"q": [0.2, 0.0], "x": [0.31, 0.05]},
}


@dataclass
class RunConfig:
    """Fully resolved configuration of one CLI run."""

    trunc_K: int = Config.TRUNC_K
    tol: float = 1e-9
    jobs: int = Config.JOBS
    out: str = Config.OUTPUT_DIR
    slow: bool = False
    xlsx: bool = False
    blocks: Dict[str, dict] = field(default_factory=lambda: copy.deepcopy(BLOCK_DEFAULTS))

    def block(self, name: str) -> dict:
        return self.blocks[name]

    def k_max(self, name: str) -> int:
        k = self.blocks[name].get("k_max")
        if k is None:
            return Config.SLOW_KMAX if self.slow else Config.KMAX
        return int(k)

    def to_dict(self) -> dict:
        d = {"trunc_K": self.trunc_K, "tol": self.tol, "jobs": self.jobs,
             "out": self.out, "slow": self.slow, "xlsx": self.xlsx}
        d.update(copy.deepcopy(self.blocks))
        return d


def _is_pair(v) -> bool:
    return isinstance(v, (list, tuple)) and len(v) == 2 and all(
        isinstance(x, (int, float)) for x in v)


def validate(cfg: RunConfig) -> RunConfig:
    """Collect every field problem and raise a single ConfigError."""
    problems: List[str] = []
    if not isinstance(cfg.trunc_K, int) or cfg.trunc_K < 1:
        problems.append("trunc_K: must be a positive integer")
    if not isinstance(cfg.tol, (int, float)) or cfg.tol <= 0:
        problems.append("tol: must be positive")
    if not isinstance(cfg.jobs, int) or cfg.jobs < 1:
        problems.append("jobs: must be a positive integer")

    for name in ("series", "radius"):
        b = cfg.blocks[name]
        if not isinstance(b.get("n"), int) or b["n"] < 1:
            problems.append(f"{name}.n: must be an integer >= 1")
        ms = b.get("m")
        if not isinstance(ms, list) or not all(isinstance(m, int) and m >= 0 for m in ms):
            problems.append(f"{name}.m: must be a list of non-negative integers")
        k = b.get("k_max")
        if k is not None and (not isinstance(k, int) or k < 0):
            problems.append(f"{name}.k_max: must be a non-negative integer")
    kmin = cfg.blocks["radius"].get("k_min")
    if kmin is not None and (not isinstance(kmin, int) or kmin < 1):
        problems.append("radius.k_min: must be null or a positive integer")

    s = cfg.blocks["scan"]
    for axis in ("re", "im"):
        if not _is_pair(s.get(axis)) or s[axis][0] > s[axis][1]:
            problems.append(f"scan.{axis}: must be [low, high]")
    if not isinstance(s.get("max_abs_q"), (int, float)) or not 0 < s["max_abs_q"] <= 0.95:
        problems.append("scan.max_abs_q: must lie in (0, 0.95]")
    elif _is_pair(s.get("re")) and _is_pair(s.get("im")):
        if min(abs(s["re"][0]), abs(s["re"][1])) ** 2 + min(abs(s["im"][0]), abs(s["im"][1])) ** 2 >= 1:
            problems.append("scan: region lies outside |q| < 1")
    g = s.get("grid")
    if not (isinstance(g, list) and len(g) == 2 and all(isinstance(x, int) and x >= 2 for x in g)):
        problems.append("scan.grid: must be [nx, ny] with nx, ny >= 2")
    mr = s.get("m_range")
    if not (isinstance(mr, list) and len(mr) == 2 and all(isinstance(x, int) for x in mr) and mr[0] <= mr[1]):
        problems.append("scan.m_range: must be [m_low, m_high] integers")
    if not isinstance(s.get("near_integer"), (int, float)) or not 0 < s["near_integer"] < 0.5:
        problems.append("scan.near_integer: must lie in (0, 0.5)")

    c = cfg.blocks["continue"]
    anchors = c.get("anchors") or []
    if not all(_is_pair(a) and abs(complex(*a)) < 1 for a in anchors):
        problems.append("continue.anchors: each anchor must be [re, im] with |q| < 1")
    idx = c.get("indices")
    if not (isinstance(idx, list) and idx and all(isinstance(i, int) and i >= 0 for i in idx)):
        problems.append("continue.indices: must be a non-empty list of non-negative integers")
    elif len({i % 2 for i in idx}) != 1:
        problems.append("continue.indices: all indices must share one parity")
    if not isinstance(c.get("q_base"), (int, float)) or not 0 < c["q_base"] <= 0.3:
        problems.append("continue.q_base: must lie in (0, 0.3]")
    if not isinstance(c.get("rho"), (int, float)) or c["rho"] <= 0:
        problems.append("continue.rho: must be positive")
    if not isinstance(c.get("steps"), int) or c["steps"] < 4:
        problems.append("continue.steps: must be an integer >= 4")
    path = c.get("path")
    if path is not None:
        pts = path.get("waypoints") if isinstance(path, dict) else None
        if not (isinstance(pts, list) and pts and all(_is_pair(p) and 0 < abs(complex(*p)) < 1 for p in pts)):
            problems.append("continue.path.waypoints: list of [re, im] with 0 < |q| < 1")

    w = cfg.blocks["wp_eval"]
    if not _is_pair(w.get("q")) or abs(complex(*w["q"])) >= 1:
        problems.append("wp_eval.q: must be [re, im] with |q| < 1")
    if not _is_pair(w.get("x")):
        problems.append("wp_eval.x: must be [re, im]")

    if problems:
        raise ConfigError(problems)
    return cfg


def load_run_config(path: Optional[str] = None, **overrides) -> RunConfig:
    """Read a JSON config file (optional), merge block values, apply flag overrides."""
    cfg = RunConfig()
    if path:
        try:
            with open(path) as f:
                doc = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError([f"config: cannot read {path}: {e}"])
        if not isinstance(doc, dict):
            raise ConfigError(["config: top level must be an object"])
        unknown = [k for k in doc if k not in BLOCK_DEFAULTS and k not in
                   ("trunc_K", "tol", "jobs", "out", "slow", "xlsx")]
        if unknown:
            raise ConfigError([f"{k}: unknown field" for k in unknown])
        for k in ("trunc_K", "tol", "jobs", "out", "slow", "xlsx"):
            if k in doc:
                setattr(cfg, k, doc[k])
        if cfg.slow is True and "trunc_K" not in doc:
            cfg.trunc_K = Config.SLOW_TRUNC_K
        for name in BLOCK_DEFAULTS:
            if name in doc:
                if not isinstance(doc[name], dict):
                    raise ConfigError([f"{name}: must be an object"])
                cfg.blocks[name].update(doc[name])

    if overrides.get("xlsx"):
        cfg.xlsx = True
    if overrides.get("slow"):
        cfg.slow = True
        cfg.trunc_K = Config.SLOW_TRUNC_K
    for k in ("trunc_K", "tol", "jobs", "out"):
        if overrides.get(k) is not None:
            setattr(cfg, k, overrides[k])
    if overrides.get("k_max") is not None:
        for name in ("series", "radius"):
            cfg.blocks[name]["k_max"] = overrides["k_max"]
    return validate(cfg)
