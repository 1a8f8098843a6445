"""Seeded, parallel Monte Carlo experiments.

Replication ``r`` draws from ``RngStream(seed, r)``; different sample sizes
and ingredients within a replication use child streams.  Replications run on
a thread pool, results are collected in replication order, so the output
files do not depend on the number of threads.  Wall time is written to a
separate ``<stem>.timing.json`` to keep the CSV and JSON outputs
byte-identical between runs.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy import stats
from scipy.optimize import minimize_scalar

from . import __version__
from .coupling import coupling_distance, dyadic_coupling
from .errors import ConfigError, FitError
from .gamma import K_MAX, check_order, psi, quantile_upper_bracket, shorack_constant, shorack_limit
from .gaussian import DEFAULT_GRID_POINTS, bridge_grid_for, sample_brownian_bridge, shorack_covariance, shorack_from_bridge, shorack_grid
from .oscillation import kappa, mws_window, rate_values, stute_conditions_check
from .rng import RngStream
from .spacings import beta_process, gc_statistic, lil_statistic, reduced_process, sample_exponential_spacings, sup_r2

SCHEMA = "v1"
THREADS_ENV = "SPACINGS_LAB_THREADS"

EXPERIMENTS = ("gc_curve", "cov_check", "rate_slopes", "oscillation_ratio", "lil_check", "constants_audit")
FILE_STEMS = {
    "gc_curve": "gc",
    "cov_check": "covcheck",
    "rate_slopes": "rates",
    "oscillation_ratio": "oscillation",
    "lil_check": "lil",
    "constants_audit": "constants",
}

DEFAULT_THRESHOLDS = {
    "gc_curve": {},
    "cov_check": {"source": "spacings", "x_multipliers": [0.5, 1.0, 2.0], "abs_tol": 0.03,
                  "n_se": 3.0, "grid_points": DEFAULT_GRID_POINTS},
    "rate_slopes": {"r2_slope_band": [-0.33, -0.17], "coupling_slope_band": [-0.65, -0.40],
                    "ratio_band_over_K": [0.3, 2.0], "ci_level": 0.95},
    "oscillation_ratio": {"d_exponent": 0.5, "mws_alpha": 1.0, "mws_c": 1.0,
                          "part1_band": [0.7, 1.3], "part2_factor": 1.2},
    "lil_check": {"lil_quantile": 0.99, "lil_max": 3.0, "mu_tolerance": 0.01},
    "constants_audit": {"grid_points": 2001},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment run.

    ``k_schedule`` is ``{"fixed": k}`` or ``{"power": delta}`` with
    ``k = ceil(N**delta)`` and ``0 < delta < 1/4``.  ``thresholds`` override
    the per-experiment policy constants in ``DEFAULT_THRESHOLDS``;
    ``k_list`` is used by ``constants_audit`` only.
    """

    experiment: str
    k_schedule: dict = field(default_factory=lambda: {"fixed": 1})
    N_list: tuple = ()
    reps: int = 1
    seed: int = 0
    output_path: str = "results"
    thresholds: dict = field(default_factory=dict)
    k_list: tuple | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment", f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        ks = self.k_schedule
        if not isinstance(ks, dict) or len(ks) != 1 or next(iter(ks)) not in ("fixed", "power"):
            raise ConfigError("k_schedule", 'expected {"fixed": k} or {"power": delta}')
        kind, value = next(iter(ks.items()))
        if kind == "fixed":
            try:
                check_order(value)
            except ValueError as exc:
                raise ConfigError("k_schedule", str(exc)) from None
        elif not (isinstance(value, (int, float)) and 0.0 < value < 0.25):
            raise ConfigError("k_schedule", f"power schedule needs 0 < delta < 0.25, got {value!r}")
        n_list = tuple(self.N_list)
        if any(isinstance(n, bool) or not isinstance(n, int) or n < 1 for n in n_list):
            raise ConfigError("N_list", "entries must be positive integers")
        if any(b <= a for a, b in zip(n_list, n_list[1:])):
            raise ConfigError("N_list", "must be strictly increasing")
        if not n_list and self.experiment != "constants_audit":
            raise ConfigError("N_list", "must not be empty")
        object.__setattr__(self, "N_list", n_list)
        if isinstance(self.reps, bool) or not isinstance(self.reps, int) or self.reps < 1:
            raise ConfigError("reps", "must be an integer >= 1")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if not isinstance(self.output_path, str) or not self.output_path:
            raise ConfigError("output_path", "must be a non-empty string")
        if not isinstance(self.thresholds, dict):
            raise ConfigError("thresholds", "must be a mapping")
        unknown = set(self.thresholds) - set(DEFAULT_THRESHOLDS[self.experiment])
        if unknown:
            raise ConfigError("thresholds", f"unknown keys {sorted(unknown)} for {self.experiment}")
        if self.k_list is not None:
            k_list = tuple(self.k_list)
            if not k_list or any(isinstance(k, bool) or not isinstance(k, int) or not 1 <= k <= K_MAX for k in k_list):
                raise ConfigError("k_list", f"entries must be integers in [1, {K_MAX}]")
            object.__setattr__(self, "k_list", k_list)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config", "top-level JSON value must be an object")
        names = set(cls.__dataclass_fields__)
        unknown = set(data) - names
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration field")
        if "experiment" not in data:
            raise ConfigError("experiment", "missing")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError("config", f"file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON in {path}: {exc}") from None
        return cls.from_dict(data)

    def policy(self) -> dict:
        return {**DEFAULT_THRESHOLDS[self.experiment], **self.thresholds}

    def k_for(self, N: int) -> int:
        kind, value = next(iter(self.k_schedule.items()))
        if kind == "fixed":
            return int(value)
        # N**delta can land an ulp above an exact integer, e.g. (10**5)**0.2
        return max(1, math.ceil(N**value * (1.0 - 1e-12)))

    def to_dict(self, *, with_output_path: bool = False) -> dict:
        """Config echo with the effective thresholds; the output location is
        left out by default so outputs do not depend on where they are written."""
        out = asdict(self)
        if not with_output_path:
            del out["output_path"]
        out["N_list"] = list(self.N_list)
        out["k_list"] = None if self.k_list is None else list(self.k_list)
        out["thresholds"] = self.policy()
        return out


class SlopeFit(NamedTuple):
    slope: float
    intercept: float
    residual: float
    slope_se: float
    ci_low: float
    ci_high: float
    n_points: int


def slope_fit(points, level: float = 0.95) -> SlopeFit:
    """Ordinary least squares line through ``(log N, log statistic)`` points.

    ``residual`` is the Euclidean norm of the residuals; the confidence
    interval for the slope uses Student's t with ``n - 2`` degrees of freedom.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise FitError("need at least 3 points (x, y)")
    if not np.all(np.isfinite(pts)):
        raise FitError("points must be finite")
    x, y = pts[:, 0], pts[:, 1]
    if np.unique(x).size != x.size:
        raise FitError("abscissae must be distinct")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    rss = float(resid @ resid)
    dof = x.size - 2
    se = math.sqrt(rss / dof / sxx)
    half = float(stats.t.ppf(0.5 + level / 2.0, dof)) * se
    return SlopeFit(slope, intercept, math.sqrt(rss), se, slope - half, slope + half, int(x.size))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list
    aggregates: list
    summary: dict
    metadata: dict
    wall_time: float = 0.0
    files: dict = field(default_factory=dict)


def _aggregate(values) -> dict:
    v = np.asarray(values, dtype=float)
    return {
        "median": float(np.median(v)),
        "mean": float(np.mean(v)),
        "se": float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else float("nan"),
        "q10": float(np.quantile(v, 0.10)),
        "q90": float(np.quantile(v, 0.90)),
        "q99": float(np.quantile(v, 0.99)),
    }


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ConfigError("threads", f"{THREADS_ENV}={env!r} is not an integer") from None
        else:
            threads = os.cpu_count() or 1
    if threads < 1:
        raise ConfigError("threads", "must be >= 1")
    return threads


def _map_reps(fn: Callable[[int], list], reps: int, threads: int) -> list:
    # executor.map yields in submission order, which fixes the reduction order
    if threads == 1:
        chunks = [fn(r) for r in range(reps)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(fn, range(reps)))
    return [row for chunk in chunks for row in chunk]


def _per_n(records, keys, N_list):
    out = []
    for N in N_list:
        rows = [r for r in records if r["N"] == N]
        agg = {"N": N, "k": rows[0]["k"], "reps": len(rows)}
        for key in keys:
            for stat, val in _aggregate([r[key] for r in rows]).items():
                agg[f"{key}_{stat}"] = val
        out.append(agg)
    return out


def _fit_or_none(xs, ys, level=0.95):
    try:
        return slope_fit(list(zip(np.log(xs), np.log(ys))), level)._asdict()
    except FitError:
        return None


# experiments ---------------------------------------------------------------

def _gc_curve(cfg, threads):
    def one(r):
        base = RngStream(cfg.seed, r)
        rows = []
        for i, N in enumerate(cfg.N_list):
            k = cfg.k_for(N)
            s = sample_exponential_spacings(base.child(i), N, k)
            rows.append({"N": N, "k": k, "rep": r, "gc": gc_statistic(s)})
        return rows

    records = _map_reps(one, cfg.reps, threads)
    aggregates = _per_n(records, ["gc"], cfg.N_list)
    med = [a["gc_median"] for a in aggregates]
    summary = {"median_gc": med, "decreasing": bool(all(b < a for a, b in zip(med, med[1:])))}
    return records, aggregates, summary


@lru_cache(maxsize=8)
def _bridge_grid(k, n_points, xs):
    return bridge_grid_for(k, shorack_grid(k, n_points, include=xs))


def _cov_check(cfg, threads):
    pol = cfg.policy()
    source = pol["source"]
    if source not in ("spacings", "shorack"):
        raise ConfigError("thresholds", f"source must be 'spacings' or 'shorack', got {source!r}")

    def points(N):
        k = cfg.k_for(N)
        return k, tuple(float(m * k) for m in pol["x_multipliers"])

    def one(r):
        base = RngStream(cfg.seed, r)
        rows = []
        for i, N in enumerate(cfg.N_list):
            k, xs = points(N)
            if source == "spacings":
                vals = beta_process(sample_exponential_spacings(base.child(i), N, k))(np.array(xs))
            else:
                grid = _bridge_grid(k, int(pol["grid_points"]), xs)
                vals = shorack_from_bridge(sample_brownian_bridge(base.child(i), grid), k, np.array(xs)).values
            row = {"N": N, "k": k, "rep": r}
            row.update({f"x{j}": float(v) for j, v in enumerate(vals)})
            rows.append(row)
        return rows

    records = _map_reps(one, cfg.reps, threads)
    keys = [f"x{j}" for j in range(len(pol["x_multipliers"]))]
    aggregates = _per_n(records, keys, cfg.N_list)
    checks = []
    for N in cfg.N_list:
        k, xs = points(N)
        mat = np.array([[row[key] for key in keys] for row in records if row["N"] == N])
        centred = mat - mat.mean(axis=0)
        reps = mat.shape[0]
        for a in range(len(xs)):
            for b in range(a, len(xs)):
                prod = centred[:, a] * centred[:, b]
                mc = float(prod.sum() / (reps - 1)) if reps > 1 else float("nan")
                se = float(np.std(prod, ddof=1) / math.sqrt(reps)) if reps > 1 else float("nan")
                theory = shorack_covariance(k, xs[a], xs[b])
                tol = max(pol["abs_tol"], pol["n_se"] * se)
                checks.append({"N": N, "k": k, "x": xs[a], "y": xs[b], "mc": mc, "theory": theory,
                               "abs_err": abs(mc - theory), "se": se, "tol": tol,
                               "ok": bool(abs(mc - theory) <= tol)})
    summary = {"covariances": checks, "all_ok": bool(all(c["ok"] for c in checks))}
    return records, aggregates, summary


def _rate_slopes(cfg, threads):
    pol = cfg.policy()

    def one(r):
        base = RngStream(cfg.seed, r)
        rows = []
        for i, N in enumerate(cfg.N_list):
            k = cfg.k_for(N)
            stream = base.child(i)
            r2 = sup_r2(sample_exponential_spacings(stream.child(0), N, k))
            cd = coupling_distance(dyadic_coupling(stream.child(1), N))
            rows.append({"N": N, "k": k, "rep": r, "sup_r2": r2, "coupling_distance": cd})
        return rows

    records = _map_reps(one, cfg.reps, threads)
    aggregates = _per_n(records, ["sup_r2", "coupling_distance"], cfg.N_list)
    ns = np.array(cfg.N_list, dtype=float)
    level = pol["ci_level"]
    fit_r2 = _fit_or_none(ns, [a["sup_r2_median"] for a in aggregates], level)
    fit_cd = _fit_or_none(ns, [a["coupling_distance_median"] for a in aggregates], level)
    summary = {"fit_sup_r2": fit_r2, "fit_coupling_distance": fit_cd}
    if fit_r2 and fit_cd:
        lo, hi = pol["r2_slope_band"]
        clo, chi = pol["coupling_slope_band"]
        summary["r2_slope_in_band"] = bool(lo <= fit_r2["slope"] <= hi)
        summary["coupling_slope_in_band"] = bool(clo <= fit_cd["slope"] <= chi)
        summary["cis_disjoint"] = bool(fit_cd["ci_high"] < fit_r2["ci_low"])
    last = aggregates[-1]
    N_top = cfg.N_list[-1]
    if N_top >= 16:
        k = last["k"]
        ratio = last["sup_r2_median"] / rate_values(N_top, 0.5).a_N
        rlo, rhi = pol["ratio_band_over_K"]
        K = shorack_constant(k)
        summary.update({"ratio_N": N_top, "ratio_sup_r2_over_a_N": ratio, "K_k": K,
                        "ratio_in_band": bool(rlo * K <= ratio <= rhi * K)})
    return records, aggregates, summary


def _oscillation_ratio(cfg, threads):
    pol = cfg.policy()

    def widths(N):
        return N ** -pol["d_exponent"], mws_window(N, pol["mws_alpha"], pol["mws_c"])

    def one(r):
        base = RngStream(cfg.seed, r)
        rows = []
        for i, N in enumerate(cfg.N_list):
            k = cfg.k_for(N)
            proc = reduced_process(sample_exponential_spacings(base.child(i), N, k))
            d1, mws = widths(N)
            rows.append({"N": N, "k": k, "rep": r,
                         "ratio_part1": kappa(proc, d1).value / rate_values(N, d1).q_N,
                         "ratio_part2": kappa(proc, mws.d).value / rate_values(N, mws.d).q_N})
        return rows

    records = _map_reps(one, cfg.reps, threads)
    aggregates = _per_n(records, ["ratio_part1", "ratio_part2"], cfg.N_list)
    per_n = []
    for agg in aggregates:
        N = agg["N"]
        d1, mws = widths(N)
        st = stute_conditions_check(N, d1, agg["k"])
        p2 = float(np.quantile([r["ratio_part2"] for r in records if r["N"] == N], 0.90))
        lo, hi = pol["part1_band"]
        per_n.append({"N": N, "d_part1": d1, "d_part2": mws.d, "bound_part2": mws.bound,
                      "stute": {"s1": st.s1, "s2": st.s2, "s3": st.s3, "s4": st.s4, "s5": st.s5,
                                "s5_literal": st.s5_literal, "values": st.values, "thresholds": st.thresholds},
                      "median_part1": agg["ratio_part1_median"], "q90_part2": p2,
                      "part1_in_band": bool(lo <= agg["ratio_part1_median"] <= hi),
                      "part2_ok": bool(p2 <= pol["part2_factor"] * mws.bound)})
    return records, aggregates, {"per_N": per_n}


def _lil_check(cfg, threads):
    pol = cfg.policy()

    def one(r):
        base = RngStream(cfg.seed, r)
        rows = []
        for i, N in enumerate(cfg.N_list):
            k = cfg.k_for(N)
            s = sample_exponential_spacings(base.child(i), N, k)
            rows.append({"N": N, "k": k, "rep": r, "lil": lil_statistic(s), "mu_minus_1": s.mu - 1.0})
        return rows

    records = _map_reps(one, cfg.reps, threads)
    aggregates = _per_n(records, ["lil"], cfg.N_list)
    per_n = []
    for N in cfg.N_list:
        lil = [r["lil"] for r in records if r["N"] == N]
        dev = [abs(r["mu_minus_1"]) for r in records if r["N"] == N]
        q = float(np.quantile(lil, pol["lil_quantile"]))
        n_far = int(sum(v > pol["mu_tolerance"] for v in dev))
        per_n.append({"N": N, "lil_quantile": q, "lil_ok": bool(q < pol["lil_max"]),
                      "mu_far_count": n_far, "max_abs_mu_minus_1": float(max(dev))})
    return records, aggregates, {"per_N": per_n}


def sup_psi(k: int, grid_points: int = 2001) -> float:
    """``sup_x psi(x)`` by a grid search refined with bounded Brent steps."""
    top = quantile_upper_bracket(k)
    x = np.linspace(0.0, top, grid_points)
    vals = psi(k, x)
    j = int(np.argmax(vals))
    lo, hi = x[max(j - 1, 0)], x[min(j + 1, x.size - 1)]
    res = minimize_scalar(lambda t: -psi(k, t), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12 * max(1.0, k)})
    return float(max(vals[j], -res.fun))


def _constants_audit(cfg, threads):
    pol = cfg.policy()
    k_list = cfg.k_list or tuple(range(1, 1001))
    K0 = shorack_limit()
    records, gaps = [], []
    for k in k_list:
        K = shorack_constant(k)
        records.append({"k": k, "K_k": K, "K0": K0, "abs_gap": abs(K - K0)})
        gaps.append(abs(K * K * math.sqrt(k) - sup_psi(k, int(pol["grid_points"]))))
    ks = np.array(k_list)
    Ks = np.array([r["K_k"] for r in records])
    order = np.argsort(ks)
    summary = {
        "max_abs_K2_sqrtk_minus_sup_psi": float(max(gaps)),
        "max_abs_K2_minus_sup_psi_over_sqrtk": float(max(g / math.sqrt(k) for g, k in zip(gaps, k_list))),
        "strictly_increasing": bool(np.all(np.diff(Ks[order]) > 0)),
        "below_limit": bool(np.all(Ks < K0)),
    }
    if 1000 in k_list:
        summary["abs_gap_k1000"] = abs(shorack_constant(1000) - K0)
    return records, [], summary


_RUNNERS = {
    "gc_curve": _gc_curve,
    "cov_check": _cov_check,
    "rate_slopes": _rate_slopes,
    "oscillation_ratio": _oscillation_ratio,
    "lil_check": _lil_check,
    "constants_audit": _constants_audit,
}


# output --------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def records_csv(config: ExperimentConfig, records: list) -> str:
    """CSV text: schema line, config line, header, one row per record."""
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA}\n")
    buf.write("# config=" + json.dumps(_clean(config.to_dict()), sort_keys=True, separators=(",", ":")) + "\n")
    if records:
        writer = csv.writer(buf, lineterminator="\n")
        header = list(records[0])
        writer.writerow(header)
        for rec in records:
            writer.writerow([_cell(rec[h]) for h in header])
    return buf.getvalue()


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def write_result(result: ExperimentResult, fmt: str = "csv") -> dict:
    """Write records (CSV or JSON), summary JSON and timing JSON; return the paths."""
    cfg = result.config
    out_dir = cfg.output_path
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot create output directory {out_dir}: {exc.strerror}") from exc
    stem = FILE_STEMS[cfg.experiment]
    files = {}
    if fmt == "csv":
        files["records"] = os.path.join(out_dir, f"{stem}.csv")
        _write(files["records"], records_csv(cfg, result.records))
    elif fmt == "json":
        files["records"] = os.path.join(out_dir, f"{stem}.records.json")
        _write(files["records"], json.dumps({"schema": SCHEMA, "config": _clean(cfg.to_dict()),
                                             "records": _clean(result.records)}, indent=1, sort_keys=True) + "\n")
    else:
        raise ConfigError("format", f"expected 'csv' or 'json', got {fmt!r}")
    summary = {"schema": SCHEMA, "config": cfg.to_dict(), "metadata": result.metadata,
               "aggregates": result.aggregates, "summary": result.summary}
    files["summary"] = os.path.join(out_dir, f"{stem}.json")
    _write(files["summary"], json.dumps(_clean(summary), indent=1, sort_keys=True) + "\n")
    files["timing"] = os.path.join(out_dir, f"{stem}.timing.json")
    _write(files["timing"], json.dumps({"wall_time_seconds": result.wall_time}) + "\n")
    result.files = files
    return files


def run_experiment(config: ExperimentConfig, *, threads: int | None = None, write: bool = True,
                   fmt: str = "csv") -> ExperimentResult:
    """Run the configured experiment and (by default) write its output files."""
    n_threads = resolve_threads(threads)
    start = time.perf_counter()
    records, aggregates, summary = _RUNNERS[config.experiment](config, n_threads)
    wall = time.perf_counter() - start
    metadata = {"code_version": __version__, "schema": SCHEMA, "experiment": config.experiment}
    result = ExperimentResult(config, records, aggregates, _clean(summary), metadata, wall)
    if write:
        write_result(result, fmt)
    return result
