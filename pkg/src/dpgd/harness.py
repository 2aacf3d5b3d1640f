"""Configuration-driven synthetic-data experiments.

Each experiment expands a parameter grid into cells, runs seeded trials
per cell, and emits a ResultTable whose CSV is the sole contract with
the figure renderer:

    cell_id,<param columns>,metric,mean,stderr,trials,rho_spent,seed_lo,seed_hi

Trial j of cell k draws from stream_id mix(k, j) of the master seed, so
any cell can be re-run in isolation and adding trials never perturbs
earlier draws.
"""

import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import accountant
from .baselines import adassp_fit, default_adassp_bounds, ols_with_ci
from .data import ANISOTROPIC, ISOTROPIC, GenerativeSpec, RngStream, \
    generate_dataset, ols_solve
from .engine import GdConfig, run
from .intervals import CiConfig, CiMethod, build_interval, collect_estimates

_MIX = 0x9E3779B97F4A7C15
_MASK = (1 << 63) - 1

EXPERIMENT_NAMES = (
    "fixed_ratio", "cost_of_privacy", "clip_heatmap", "bias_variance",
    "coverage", "ci_length", "error_vs_clip",
    "anisotropic_fixed_ratio", "anisotropic_coverage",
    "anisotropic_clip_heatmap",
)

# Shared defaults: p=10, gamma = 5*sqrt(p), rho = 0.015, sigma = 1,
# eta = 1/4 unless an experiment overrides them.
_COMMON_DEFAULTS = {
    "trials": 100,
    "rho": 0.015,
    "sigma": 1.0,
    "eta": 0.25,
    "seed": 20240901,
    "design": ISOTROPIC,
    "output_name": None,
}

_SPECIFIC_DEFAULTS = {
    "fixed_ratio": {
        "p_values": [10, 20, 40, 80],
        "ratio": 100,
        "steps": 10,
        "gamma_multiplier": 5.0,
        "rho": 0.05,
        "trials": 50,
    },
    "cost_of_privacy": {
        "p": 10,
        "n_values": [2000, 4000, 8000, 16000, 32000, 64000],
        "steps": 30,
        "gamma_multiplier": 5.0,
        "rho": 0.1,
    },
    "clip_heatmap": {
        "p_values": [5, 10, 20, 50],
        "ratio": 100,
        "multipliers": [0.5, 1.0, 2.0, 5.0, 10.0],
        "steps": 10,
        "trials": 20,
    },
    "bias_variance": {
        "p": 10,
        "n": 1000,
        "gamma_values": [0.05, 0.5, 2.0, 8.0, 16.0, 30.0],
        "steps": 50,
        "trials": 200,
    },
    "coverage": {
        "p": 10,
        "n": 1000,
        "total_iterations": [320, 520, 1020],
        "m": 10,
        "burn_in": 20,
        "alpha": 0.05,
        "gamma_multiplier": 5.0,
        "tail_window": 1,
    },
    "error_vs_clip": {
        "p": 10,
        "n": 1000,
        "gamma_values": [0.05, 0.5, 2.0, 8.0, 16.0, 30.0],
        "steps": 50,
    },
}
_SPECIFIC_DEFAULTS["ci_length"] = dict(_SPECIFIC_DEFAULTS["coverage"])


def _base_name(name):
    return name[len("anisotropic_"):] if name.startswith("anisotropic_") \
        else name


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    params: dict

    def __getattr__(self, key):
        # fetched via __dict__ so pickling, which probes attributes before
        # the instance is populated, cannot recurse through this hook
        params = self.__dict__.get("params")
        if params is None or key not in params:
            raise AttributeError(key)
        return params[key]


def parse_config(raw):
    """Build an ExperimentConfig from a JSON-style dict; unknown keys
    are errors so experiment definitions stay auditable."""
    raw = dict(raw)
    name = raw.pop("name", None)
    if name not in EXPERIMENT_NAMES:
        raise ValueError(f"unknown experiment name {name!r}")
    base = _base_name(name)
    params = dict(_COMMON_DEFAULTS)
    params.update(_SPECIFIC_DEFAULTS[base])
    if name.startswith("anisotropic_"):
        params["design"] = ANISOTROPIC
    unknown = set(raw) - set(params)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    params.update(raw)
    if params["trials"] < 1:
        raise ValueError("trials must be at least 1")
    if params["output_name"] is None:
        params["output_name"] = name
    return ExperimentConfig(name=name, params=params)


def load_config(path):
    with open(path) as fh:
        return parse_config(json.load(fh))


def trial_stream(master_seed, cell_index, trial):
    """Stream for trial `trial` of cell `cell_index` (splitmix-style)."""
    stream_id = (cell_index * _MIX + trial) & _MASK
    return RngStream(seed=master_seed, stream_id=stream_id)


@dataclass
class ResultTable:
    param_names: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def append(self, cell_id, params, metric, values=None, *, mean=None,
               stderr=None, trials=None, rho_spent=0.0, seed_lo=0,
               seed_hi=None):
        if values is not None:
            values = np.asarray(values, dtype=float)
            trials = values.size
            mean = float(values.mean())
            stderr = (float(values.std(ddof=1) / math.sqrt(trials))
                      if trials > 1 else 0.0)
        if seed_hi is None:
            seed_hi = trials - 1
        self.rows.append({
            "cell_id": cell_id, **params, "metric": metric,
            "mean": mean, "stderr": stderr, "trials": trials,
            "rho_spent": rho_spent, "seed_lo": seed_lo, "seed_hi": seed_hi,
        })

    def values(self, metric, **param_filter):
        """Mean column of rows matching the metric and parameter values."""
        out = []
        for row in self.rows:
            if row["metric"] != metric:
                continue
            if all(row.get(k) == v for k, v in param_filter.items()):
                out.append(row["mean"])
        return out

    def header(self):
        return (["cell_id"] + self.param_names
                + ["metric", "mean", "stderr", "trials", "rho_spent",
                   "seed_lo", "seed_hi"])

    def write_csv(self, path):
        cols = self.header()
        rows = sorted(self.rows,
                      key=lambda r: (str(r["cell_id"]), str(r["metric"])))
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for row in rows:
                fh.write(",".join(_format(row.get(c, "")) for c in cols)
                         + "\n")


def _format(value):
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _make_data(cfg, stream, p, n):
    spec = GenerativeSpec(p=p, n=n, sigma=cfg.sigma, design=cfg.design)
    return generate_dataset(spec, stream)


def _l2(a, b):
    return float(np.linalg.norm(a - b))


# --- fixed ratio: p grows with n = ratio * p -------------------------------

def _fixed_ratio_cells(cfg):
    return [{"p": int(p), "n": int(cfg.ratio * p)} for p in cfg.p_values]


def _fixed_ratio_cell(cfg, k, cell):
    p, n = cell["p"], cell["n"]
    gamma = cfg.gamma_multiplier * math.sqrt(p)
    lam = accountant.calibrate_noise(cfg.rho, gamma, n, cfg.steps)
    x_bound, y_bound = default_adassp_bounds(p, cfg.sigma)
    per_method = {m: {"to_ols": [], "to_star": []}
                  for m in ("dpgd", "ols", "adassp")}
    clip_frac = []
    for j in range(cfg.trials):
        root = trial_stream(cfg.seed, k, j)
        data, theta_star = _make_data(cfg, root.child(0), p, n)
        thetahat = ols_solve(data)
        gd = GdConfig(gamma=gamma, lam=lam, eta=cfg.eta, steps=cfg.steps,
                      stream=root.child(1), keep_noise=False)
        traj = run(data, gd)
        per_method["dpgd"]["to_ols"].append(_l2(traj.final, thetahat))
        per_method["dpgd"]["to_star"].append(_l2(traj.final, theta_star))
        clip_frac.append(traj.clip_counts.sum() / (n * cfg.steps))
        per_method["ols"]["to_ols"].append(0.0)
        per_method["ols"]["to_star"].append(_l2(thetahat, theta_star))
        ada = adassp_fit(data, cfg.rho, x_bound, y_bound, root.child(2))
        per_method["adassp"]["to_ols"].append(_l2(ada.estimate, thetahat))
        per_method["adassp"]["to_star"].append(_l2(ada.estimate, theta_star))
    table = ResultTable(param_names=["p", "n", "method"])
    cell_id = f"c{k:03d}"
    for method, errs in per_method.items():
        spent = 0.0 if method == "ols" else cfg.rho
        params = {"p": p, "n": n, "method": method}
        table.append(cell_id, params, "l2_error_to_ols", errs["to_ols"],
                     rho_spent=spent)
        table.append(cell_id, params, "l2_error_to_theta_star",
                     errs["to_star"], rho_spent=spent)
    table.append(cell_id, {"p": p, "n": n, "method": "dpgd"},
                 "clip_fraction", clip_frac, rho_spent=cfg.rho)
    return table.rows


# --- cost of privacy: fixed p, n grows -------------------------------------

def _cost_of_privacy_cells(cfg):
    return [{"p": int(cfg.p), "n": int(n)} for n in cfg.n_values]


def _cost_of_privacy_cell(cfg, k, cell):
    p, n = cell["p"], cell["n"]
    gamma = cfg.gamma_multiplier * math.sqrt(p)
    lam = accountant.calibrate_noise(cfg.rho, gamma, n, cfg.steps)
    privacy_err, sampling_err = [], []
    for j in range(cfg.trials):
        root = trial_stream(cfg.seed, k, j)
        data, theta_star = _make_data(cfg, root.child(0), p, n)
        thetahat = ols_solve(data)
        gd = GdConfig(gamma=gamma, lam=lam, eta=cfg.eta, steps=cfg.steps,
                      stream=root.child(1), keep_noise=False)
        traj = run(data, gd)
        privacy_err.append(_l2(traj.final, thetahat))
        sampling_err.append(_l2(thetahat, theta_star))
    table = ResultTable(param_names=["p", "n", "method"])
    cell_id = f"c{k:03d}"
    table.append(cell_id, {"p": p, "n": n, "method": "dpgd"},
                 "l2_error_to_ols", privacy_err, rho_spent=cfg.rho)
    table.append(cell_id, {"p": p, "n": n, "method": "ols"},
                 "l2_error_to_theta_star", sampling_err)
    return table.rows


# --- clip heatmap: (p, gamma multiplier) grid ------------------------------

def _clip_heatmap_cells(cfg):
    return [{"p": int(p), "n": int(cfg.ratio * p), "gamma_multiplier": mult}
            for p in cfg.p_values for mult in cfg.multipliers]


def _clip_heatmap_cell(cfg, k, cell):
    p, n, mult = cell["p"], cell["n"], cell["gamma_multiplier"]
    gamma = mult * math.sqrt(p)
    lam = accountant.calibrate_noise(cfg.rho, gamma, n, cfg.steps)
    fracs = []
    for j in range(cfg.trials):
        root = trial_stream(cfg.seed, k, j)
        data, _ = _make_data(cfg, root.child(0), p, n)
        gd = GdConfig(gamma=gamma, lam=lam, eta=cfg.eta, steps=cfg.steps,
                      stream=root.child(1), keep_noise=False)
        traj = run(data, gd)
        fracs.append(traj.clip_counts.sum() / (n * cfg.steps))
    table = ResultTable(param_names=["p", "n", "gamma_multiplier", "method"])
    table.append(f"c{k:03d}", {**cell, "method": "dpgd"}, "clip_fraction",
                 fracs, rho_spent=cfg.rho)
    return table.rows


# --- bias/variance and error-vs-clip over a gamma grid ---------------------

def _gamma_grid_cells(cfg):
    return [{"p": int(cfg.p), "n": int(cfg.n), "gamma": float(g)}
            for g in cfg.gamma_values]


def _gamma_grid_cell(cfg, k, cell, with_decomposition):
    p, n, gamma = cell["p"], cell["n"], cell["gamma"]
    lam = accountant.calibrate_noise(cfg.rho, gamma, n, cfg.steps)
    errors = np.empty((cfg.trials, p))
    fracs, sq_errors = [], []
    if with_decomposition:
        # bias and variance are per-instance notions: hold the dataset
        # fixed and let the trials vary only the mechanism noise
        fixed = _make_data(cfg, trial_stream(cfg.seed, k, 0).child(0), p, n)
    for j in range(cfg.trials):
        root = trial_stream(cfg.seed, k, j)
        data, _ = fixed if with_decomposition \
            else _make_data(cfg, root.child(0), p, n)
        thetahat = ols_solve(data)
        gd = GdConfig(gamma=gamma, lam=lam, eta=cfg.eta, steps=cfg.steps,
                      stream=root.child(1), keep_noise=False)
        traj = run(data, gd)
        errors[j] = traj.final - thetahat
        sq_errors.append(float(errors[j] @ errors[j]))
        fracs.append(traj.clip_counts.sum() / (n * cfg.steps))
    table = ResultTable(param_names=["p", "n", "gamma", "method"])
    cell_id = f"c{k:03d}"
    params = {**cell, "method": "dpgd"}
    if with_decomposition:
        mean_err = errors.mean(axis=0)
        sq_bias = float(mean_err @ mean_err)
        variance = float(((errors - mean_err) ** 2).sum(axis=1).mean())
        table.append(cell_id, params, "sq_bias", mean=sq_bias, stderr=0.0,
                     trials=cfg.trials, rho_spent=cfg.rho)
        table.append(cell_id, params, "variance_trace", mean=variance,
                     stderr=0.0, trials=cfg.trials, rho_spent=cfg.rho)
        table.append(cell_id, params, "total_error", sq_errors,
                     rho_spent=cfg.rho)
    else:
        table.append(cell_id, params, "l2_error_to_ols",
                     np.sqrt(sq_errors), rho_spent=cfg.rho)
    table.append(cell_id, params, "clip_fraction", fracs, rho_spent=cfg.rho)
    return table.rows


# --- coverage and CI length ------------------------------------------------

_CI_METHODS = (CiMethod.INDEPENDENT_RUNS, CiMethod.CHECKPOINTS,
               CiMethod.BATCHED_MEANS)


def _ci_schedule(cfg, method, total):
    """Spacing that fits the iteration budget, or None if infeasible."""
    if method is CiMethod.INDEPENDENT_RUNS:
        spacing = total // cfg.m - cfg.burn_in
        if spacing < max(1, cfg.tail_window):
            return None
        return CiConfig(method=method, m=cfg.m, spacing=spacing,
                        burn_in=cfg.burn_in, alpha=cfg.alpha,
                        tail_window=cfg.tail_window)
    spacing = (total - cfg.burn_in) // cfg.m
    if spacing < 1:
        return None
    return CiConfig(method=method, m=cfg.m, spacing=spacing,
                    burn_in=cfg.burn_in, alpha=cfg.alpha)


def _coverage_cells(cfg):
    cells = []
    for total in cfg.total_iterations:
        for method in _CI_METHODS:
            cells.append({"total_iterations": int(total),
                          "method": method.value})
        cells.append({"total_iterations": int(total), "method": "ols"})
    return cells


def _coverage_cell(cfg, k, cell):
    p, n = int(cfg.p), int(cfg.n)
    total, method = cell["total_iterations"], cell["method"]
    gamma = cfg.gamma_multiplier * math.sqrt(p)
    table = ResultTable(param_names=["p", "n", "total_iterations", "method",
                                     "m", "spacing"])
    cell_id = f"c{k:03d}"
    if method == "ols":
        lengths = []
        for j in range(cfg.trials):
            root = trial_stream(cfg.seed, k, j)
            data, _ = _make_data(cfg, root.child(0), p, n)
            res = ols_with_ci(data, cfg.alpha)
            lengths.append(float(np.mean(res.ci_hi - res.ci_lo)))
        table.append(cell_id, {"p": p, "n": n, "total_iterations": total,
                               "method": "ols", "m": 0, "spacing": 0},
                     "ci_length", lengths)
        return table.rows

    ci = _ci_schedule(cfg, CiMethod(method), total)
    if ci is None:
        return []
    coverages, lengths = [], []
    for j in range(cfg.trials):
        root = trial_stream(cfg.seed, k, j)
        data, _ = _make_data(cfg, root.child(0), p, n)
        thetahat = ols_solve(data)
        gd = GdConfig(gamma=gamma, lam=0.0, eta=cfg.eta, steps=1,
                      stream=root.child(1), keep_noise=False)
        estimates = collect_estimates(data, gd, ci, rho=cfg.rho)
        interval = build_interval(estimates, cfg.alpha,
                                  privacy_spend=cfg.rho)
        coverages.append(float(interval.covers(thetahat).mean()))
        lengths.append(float(np.mean(2.0 * interval.half_width)))
    params = {"p": p, "n": n, "total_iterations": total, "method": method,
              "m": cfg.m, "spacing": ci.spacing}
    table.append(cell_id, params, "coverage", coverages, rho_spent=cfg.rho)
    table.append(cell_id, params, "ci_length", lengths, rho_spent=cfg.rho)
    return table.rows


# --- dispatch --------------------------------------------------------------

_PLANNERS = {
    "fixed_ratio": (_fixed_ratio_cells, _fixed_ratio_cell,
                    ["p", "n", "method"]),
    "cost_of_privacy": (_cost_of_privacy_cells, _cost_of_privacy_cell,
                        ["p", "n", "method"]),
    "clip_heatmap": (_clip_heatmap_cells, _clip_heatmap_cell,
                     ["p", "n", "gamma_multiplier", "method"]),
    "bias_variance": (_gamma_grid_cells,
                      lambda cfg, k, cell: _gamma_grid_cell(cfg, k, cell,
                                                            True),
                      ["p", "n", "gamma", "method"]),
    "error_vs_clip": (_gamma_grid_cells,
                      lambda cfg, k, cell: _gamma_grid_cell(cfg, k, cell,
                                                            False),
                      ["p", "n", "gamma", "method"]),
    "coverage": (_coverage_cells, _coverage_cell,
                 ["p", "n", "total_iterations", "method", "m", "spacing"]),
}
_PLANNERS["ci_length"] = _PLANNERS["coverage"]


def _runner_for(name):
    return _PLANNERS[_base_name(name)]


def _run_cell_task(args):
    cfg, k, cell = args
    _, cell_fn, _ = _runner_for(cfg.name)
    return cell_fn(cfg, k, cell)


def run_experiment(cfg, jobs=1):
    """Execute every cell of the experiment and return a ResultTable."""
    plan_fn, cell_fn, param_names = _runner_for(cfg.name)
    cells = plan_fn(cfg)
    tasks = [(cfg, k, cell) for k, cell in enumerate(cells)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell_task, tasks))
    else:
        results = [cell_fn(cfg, k, cell) for _, k, cell in tasks]
    table = ResultTable(param_names=param_names)
    omitted = []
    for (_, k, cell), rows in zip(tasks, results):
        if not rows:
            omitted.append({"cell_index": k, **cell})
        table.rows.extend(rows)
    table.meta = {"name": cfg.name, "config": cfg.params,
                  "omitted": omitted}
    return table


# Named entry points mirroring the experiment list.

def run_fixed_ratio(cfg, jobs=1):
    return run_experiment(cfg, jobs)


def run_cost_of_privacy(cfg, jobs=1):
    return run_experiment(cfg, jobs)


def run_clip_heatmap(cfg, jobs=1):
    return run_experiment(cfg, jobs)


def run_bias_variance(cfg, jobs=1):
    return run_experiment(cfg, jobs)


def run_coverage_and_length(cfg, jobs=1):
    return run_experiment(cfg, jobs)


def run_anisotropic_suite(cfg, jobs=1):
    if not cfg.name.startswith("anisotropic_"):
        raise ValueError("expected an anisotropic_* experiment name")
    return run_experiment(cfg, jobs)


def write_outputs(table, cfg, out_dir):
    """Write <name>.csv and <name>.meta.json into out_dir."""
    import os
    os.makedirs(out_dir, exist_ok=True)
    name = cfg.output_name
    csv_path = os.path.join(out_dir, f"{name}.csv")
    meta_path = os.path.join(out_dir, f"{name}.meta.json")
    table.write_csv(csv_path)
    with open(meta_path, "w") as fh:
        json.dump(table.meta, fh, indent=2, sort_keys=True)
    return csv_path, meta_path
