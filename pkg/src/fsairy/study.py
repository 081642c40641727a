"""Study configuration, execution and CSV persistence.

A config is a flat ``key = value`` text file; ``#`` starts a comment.  Every
key is parsed and validated before any computation, and outputs are written
in sorted parameter order so reruns give byte-identical files.
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, FsAiryError
from .fredholm import RuleParams, airy2_joint, gap_probability, gap_probability_topline
from .kernels import kernel_airy_extended, kernel_rescaled
from .rwalk import fs_stationary_cdf, scaled_cdf, scaled_cdf_sup_error
from .sampling import simulate_dyson_fs, top_path_statistics

KINDS = ("kernel-convergence", "theorem1", "tw2-table", "sde-vs-fredholm", "rw-scaling")


def parse_grid(text: str) -> list[float]:
    """``a:b:n`` (inclusive, n points) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {text!r} must look like a:b:n")
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise ValueError("grid needs at least one point")
        return [float(v) for v in np.linspace(a, b, n)]
    if not text:
        return []
    return [float(v) for v in text.split(",")]


def parse_int_list(text: str) -> list[int]:
    text = text.strip()
    return [int(v) for v in text.split(",")] if text else []


def parse_pairs(text: str) -> list[tuple[float, float]]:
    """``a:b,c:d`` -> ``[(a, b), (c, d)]``."""
    out = []
    for item in text.split(","):
        a, b = item.split(":")
        out.append((float(a), float(b)))
    return out


def _pos_int(v):
    n = int(v)
    if n < 1:
        raise ValueError("must be a positive integer")
    return n


def _pos_float(v):
    x = float(v)
    if not (x > 0 and math.isfinite(x)):
        raise ValueError("must be positive and finite")
    return x


def _nonempty(parser):
    def parse(v):
        out = parser(v)
        if not out:
            raise ValueError("must not be empty")
        return out
    return parse


def _positive_ints(v):
    out = _nonempty(parse_int_list)(v)
    if any(m < 1 for m in out):
        raise ValueError("entries must be >= 1")
    return out


# key -> (parser, default); None default means required
_COMMON = {"output_dir": (str, "."), "n_panels": (_pos_int, "8"), "n_per_panel": (_pos_int, "40")}
_SCHEMA = {
    "kernel-convergence": {
        "m_list": (_positive_ints, None),
        "xi_grid": (_nonempty(parse_grid), "-1,0,1"),
        "tau_pairs": (parse_pairs, "0:0,0.5:0"),
    },
    "theorem1": {
        "m_list": (_positive_ints, None),
        "s_grid": (_nonempty(parse_grid), "-2:2:5"),
    },
    "tw2-table": {"s_grid": (_nonempty(parse_grid), "-5:3:50")},
    "sde-vs-fredholm": {
        "m": (_pos_int, "3"),
        "n_paths": (_pos_int, "200"),
        "t_end": (_pos_float, "20"),
        "dt": (_pos_float, "1e-3"),
        "seed": (int, "0"),
        "burn_in": (float, "2"),
        "record_every": (_pos_int, "20"),
        "s_grid": (_nonempty(parse_grid), "2.5:9.5:15"),
    },
    "rw-scaling": {
        "n_list": (_positive_ints, "500,1000,2000,4000"),
        "t": (float, "0"),
        "s_grid": (_nonempty(parse_grid), "0.25:5:20"),
    },
}


@dataclass(frozen=True)
class StudyConfig:
    kind: str
    params: dict
    raw: dict = field(default_factory=dict)

    @property
    def output_dir(self) -> Path:
        return Path(self.params["output_dir"])

    @property
    def rule_params(self) -> RuleParams:
        return RuleParams(n_panels=self.params["n_panels"], n_per_panel=self.params["n_per_panel"])

    def config_hash(self) -> str:
        text = "\n".join(f"{k}={self.raw[k]}" for k in sorted(self.raw) if k != "output_dir")
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def parse_config_text(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        raw[key.replace("-", "_")] = value
    return raw


def build_config(raw: dict, overrides: dict | None = None) -> StudyConfig:
    """Validate every key of a raw config; raises :class:`ConfigError` naming the key."""
    raw = dict(raw)
    for k, v in (overrides or {}).items():
        raw[k.replace("-", "_")] = v
    kind = raw.get("kind")
    if kind is None:
        raise ConfigError("kind", "missing study kind")
    if kind not in KINDS:
        raise ConfigError("kind", f"unknown study kind {kind!r}; expected one of {', '.join(KINDS)}")
    schema = {**_COMMON, **_SCHEMA[kind]}
    unknown = sorted(set(raw) - set(schema) - {"kind"})
    if unknown:
        raise ConfigError(unknown[0], f"unknown key for study {kind!r}")
    params = {}
    resolved = {"kind": kind}
    for key, (parser, default) in schema.items():
        text = raw.get(key, default)
        if text is None:
            raise ConfigError(key, "required key is missing")
        try:
            params[key] = parser(text)
        except (ValueError, TypeError) as exc:
            raise ConfigError(key, f"invalid value {text!r}: {exc}") from None
        resolved[key] = text
    if kind == "sde-vs-fredholm" and params["dt"] > 1e-3:
        raise ConfigError("dt", "dt must be <= 1e-3")
    return StudyConfig(kind, params, resolved)


def load_config(path, overrides: dict | None = None) -> StudyConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    return build_config(parse_config_text(text), overrides)


def worker_count() -> int:
    env = os.environ.get("FS_AIRY_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cap))
        except ValueError:
            pass
    return cap


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class CsvTable:
    name: str
    columns: list
    rows: list = field(default_factory=list)

    def render(self, config_hash: str) -> str:
        buf = io.StringIO()
        buf.write(f"# config_hash={config_hash}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()


@dataclass
class StudyResult:
    tables: list
    summary: list
    failures: int = 0
    paths: list = field(default_factory=list)


def _run_rows(tasks, fn):
    """Evaluate ``fn(task)`` concurrently; results come back in task order."""
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        return list(pool.map(_guard(fn), tasks))


def _guard(fn):
    def run(task):
        try:
            return fn(task), ""
        except FsAiryError as exc:
            return None, f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return run


def _nan_tuple(n):
    return (math.nan,) * n


def _study_tw2(cfg):
    rp = cfg.rule_params
    grid = sorted(cfg.params["s_grid"])
    res = _run_rows(grid, lambda s: airy2_joint([0.0], [s], rp))
    table = CsvTable("tw2_table.csv", ["S", "F2", "err_est", "trunc_bound", "status"])
    fails = 0
    for s, (r, err) in zip(grid, res):
        vals = (r.value, r.quadrature_error_estimate, r.truncation_budget) if r else _nan_tuple(3)
        fails += bool(err)
        table.rows.append([s, *vals, err or "ok"])
    f2 = [row[1] for row in table.rows if row[-1] == "ok"]
    monotone = all(b >= a - 1e-12 for a, b in zip(f2, f2[1:]))
    return StudyResult([table], [f"F2 monotone on grid: {monotone}"], fails)


def _study_theorem1(cfg):
    rp = cfg.rule_params
    grid = sorted(cfg.params["s_grid"])
    ms = sorted(set(cfg.params["m_list"]))
    tw = dict(zip(grid, _run_rows(grid, lambda s: airy2_joint([0.0], [s], rp))))
    tasks = [(m, s) for m in ms for s in grid]
    res = _run_rows(tasks, lambda ms_: gap_probability_topline(ms_[0], [0.0], [ms_[1]], rp))
    table = CsvTable("theorem1.csv", ["M", "S", "gap_prob", "gap_err_est", "gap_trunc_bound",
                                      "tw2", "tw2_err_est", "abs_err", "status"])
    fails = 0
    max_err = {}
    for (m, s), (r, err) in zip(tasks, res):
        t, terr = tw[s]
        err = err or terr
        fails += bool(err)
        if r and t:
            diff = abs(r.value - t.value)
            max_err[m] = max(max_err.get(m, 0.0), diff)
            table.rows.append([m, s, r.value, r.quadrature_error_estimate, r.truncation_budget,
                               t.value, t.quadrature_error_estimate, diff, "ok"])
        else:
            table.rows.append([m, s, *_nan_tuple(6), err])
    summ = CsvTable("theorem1_summary.csv", ["M", "max_err"], [[m, max_err[m]] for m in sorted(max_err)])
    lines = [f"M={m} max_err={max_err[m]:.6g}" for m in sorted(max_err)]
    return StudyResult([table, summ], lines, fails)


def _study_kernel(cfg):
    xi = sorted(cfg.params["xi_grid"])
    pairs = sorted(cfg.params["tau_pairs"])
    ms = sorted(set(cfg.params["m_list"]))
    points = [(a, ta, b, tb) for ta, tb in pairs for a in xi for b in xi]
    airy = dict(zip(points, _run_rows(points, lambda p: float(kernel_airy_extended(*p)))))
    tasks = [(m, p) for m in ms for p in points]
    res = _run_rows(tasks, lambda mp: float(kernel_rescaled(mp[0], *mp[1])))
    table = CsvTable("kernel_convergence.csv",
                     ["M", "xi_i", "tau_i", "xi_j", "tau_j", "k_rescaled", "k_airy", "abs_diff", "status"])
    fails = 0
    worst = {}
    for (m, p), (v, err) in zip(tasks, res):
        a, aerr = airy[p]
        err = err or aerr
        fails += bool(err)
        if err:
            table.rows.append([m, *p, *_nan_tuple(3), err])
            continue
        worst[m] = max(worst.get(m, 0.0), abs(v - a))
        table.rows.append([m, *p, v, a, abs(v - a), "ok"])
    lines = [f"M={m} max_abs_diff={worst[m]:.6g}" for m in sorted(worst)]
    return StudyResult([table], lines, fails)


def _study_sde(cfg):
    p = cfg.params
    grid = sorted(p["s_grid"])
    ens = simulate_dyson_fs(p["m"], None, p["t_end"], p["dt"], p["seed"], n_paths=p["n_paths"],
                            record_every=p["record_every"], burn_in=p["burn_in"])
    stats = top_path_statistics(ens, [], grid)
    rp = cfg.rule_params
    res = _run_rows(grid, lambda s: gap_probability(p["m"], [0.0], [s], rp))
    table = CsvTable("sde_vs_fredholm.csv",
                     ["S", "empirical_cdf", "mc_se", "fredholm", "fredholm_err_est", "abs_diff", "status"])
    fails = 0
    for i, (s, (r, err)) in enumerate(zip(grid, res)):
        fails += bool(err)
        if r is None:
            table.rows.append([s, stats.cdf[i], stats.cdf_se[i], *_nan_tuple(3), err])
            continue
        table.rows.append([s, stats.cdf[i], stats.cdf_se[i], r.value, r.quadrature_error_estimate,
                           abs(stats.cdf[i] - r.value), "ok"])
    ok = [row for row in table.rows if row[-1] == "ok"]
    fred = np.array([row[3] for row in ok])
    emp = np.array([row[1] for row in ok])
    tv = 0.5 * float(np.abs(np.diff(np.r_[0.0, emp, 1.0]) - np.diff(np.r_[0.0, fred, 1.0])).sum())
    lines = [f"binned TV distance={tv:.6g}", f"rejections={ens.rejections}"]
    return StudyResult([table], lines, fails)


def _study_rw(cfg):
    p = cfg.params
    ns = sorted(set(p["n_list"]))
    grid = sorted(p["s_grid"])
    fs = fs_stationary_cdf(grid)
    res = _run_rows(ns, lambda n: (scaled_cdf(n, p["t"], grid), scaled_cdf_sup_error(n, p["t"])))
    table = CsvTable("rw_scaling.csv", ["N", "S", "scaled_cdf", "fs_cdf", "abs_err", "status"])
    summ = CsvTable("rw_scaling_summary.csv", ["N", "sup_err"])
    fails = 0
    for n, (r, err) in zip(ns, res):
        fails += bool(err)
        if r is None:
            table.rows.extend([n, s, *_nan_tuple(3), err] for s in grid)
            continue
        vals, sup = r
        for s, v, f in zip(grid, vals, fs):
            table.rows.append([n, s, float(v), float(f), abs(float(v) - float(f)), "ok"])
        summ.rows.append([n, sup])
    lines = [f"N={row[0]} sup_err={row[1]:.6g}" for row in summ.rows]
    return StudyResult([table, summ], lines, fails)


_RUNNERS = {
    "kernel-convergence": _study_kernel,
    "theorem1": _study_theorem1,
    "tw2-table": _study_tw2,
    "sde-vs-fredholm": _study_sde,
    "rw-scaling": _study_rw,
}


def run_study(cfg: StudyConfig) -> StudyResult:
    """Compute a study and write its CSV files into ``cfg.output_dir``."""
    result = _RUNNERS[cfg.kind](cfg)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    h = cfg.config_hash()
    for table in result.tables:
        path = out / table.name
        path.write_text(table.render(h))
        result.paths.append(path)
    return result
