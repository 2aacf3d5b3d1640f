"""Command-line interface.

Subcommands: accountant, fit, check-conditions, ci, baseline, experiment.
All emit JSON on stdout (the ci subcommand also prints the per-coordinate
interval table as CSV).
"""

import argparse
import json
import math
import sys

import numpy as np

from . import accountant as acct
from . import harness
from .baselines import adassp_fit, ols_with_ci
from .conditions import check_conditions, noise_ratio_certificate
from .data import RngStream, load_dataset, ols_solve
from .engine import GdConfig, run, tail_average
from .intervals import CiConfig, build_interval, collect_estimates


def _emit(obj):
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _cmd_accountant(args):
    if args.epsilon is not None:
        if args.delta is None:
            raise SystemExit("--epsilon requires --delta")
        rho = acct.dp_to_zcdp(args.epsilon, args.delta)
        _emit({"rho": rho, "epsilon": args.epsilon, "delta": args.delta})
        return
    if args.rho is None or args.gamma is None or args.n is None \
            or args.steps is None:
        raise SystemExit("need --rho --gamma --n --steps (or --epsilon)")
    lam = acct.calibrate_noise(args.rho, args.gamma, args.n, args.steps)
    deltas = args.deltas or [1e-6]
    _emit({
        "rho": args.rho,
        "lambda": lam,
        "sensitivity": acct.gradient_sensitivity(args.gamma, args.n),
        "epsilon": {f"{d:g}": acct.zcdp_to_dp(args.rho, d) for d in deltas},
    })


def _gd_config(args, n, p):
    gamma = math.inf if args.no_clip else (args.gamma
                                           or 5.0 * math.sqrt(p))
    if args.rho is not None:
        if math.isinf(gamma):
            raise SystemExit("--rho needs a finite clipping threshold")
        lam = acct.calibrate_noise(args.rho, gamma, n, args.steps)
    else:
        lam = args.noise_scale or 0.0
    return GdConfig(gamma=gamma, lam=lam, eta=args.eta, steps=args.steps,
                    stream=RngStream(seed=args.seed))


def _cmd_fit(args):
    data = load_dataset(args.data)
    config = _gd_config(args, data.n, data.p)
    traj = run(data, config)
    estimate = tail_average(traj, args.tail_window)
    if args.dump_trajectory:
        header = ",".join(["t"] + [f"theta_{j+1}" for j in range(data.p)]
                          + ["clips"])
        body = np.column_stack([
            np.arange(1, config.steps + 1), traj.iterates,
            traj.clip_counts])
        np.savetxt(args.dump_trajectory, body, delimiter=",", header=header,
                   comments="", fmt="%.17g")
    _emit({
        "estimate": estimate.tolist(),
        "clip_fraction": float(traj.clip_counts.sum()
                               / (data.n * config.steps)),
        "lambda": config.lam,
        "rho_spent": (args.rho if args.rho is not None else None),
        "steps": config.steps,
    })


def _cmd_check_conditions(args):
    data = load_dataset(args.data)
    theta = np.loadtxt(args.theta, delimiter=",", skiprows=0).ravel()
    report = check_conditions(data, theta, args.sigma, args.eta, args.steps,
                              args.c0)
    out = report.to_dict()
    if args.gamma is not None and args.noise_scale is not None \
            and args.beta is not None:
        out["noise_ratio_certificate"] = noise_ratio_certificate(
            report, args.gamma, args.eta, args.noise_scale, data.n,
            args.steps, data.p, args.beta)
    _emit(out)


def _cmd_ci(args):
    data = load_dataset(args.data)
    gamma = args.gamma or 5.0 * math.sqrt(data.p)
    gd = GdConfig(gamma=gamma, lam=0.0, eta=args.eta, steps=1,
                  stream=RngStream(seed=args.seed), keep_noise=False)
    ci = CiConfig(method=args.method, m=args.m, spacing=args.spacing,
                  burn_in=args.burn_in, alpha=args.alpha)
    estimates = collect_estimates(data, gd, ci, rho=args.rho)
    interval = build_interval(estimates, args.alpha,
                              privacy_spend=args.rho)
    print("coord,center,lo,hi")
    for j in range(data.p):
        print(f"{j+1},{interval.center[j]:.17g},{interval.lo[j]:.17g},"
              f"{interval.hi[j]:.17g}")
    _emit({
        "privacy_spend": args.rho,
        "method": args.method,
        "m": args.m,
        "spacing": args.spacing,
        "total_steps": ci.total_steps(),
    })


def _cmd_baseline(args):
    data = load_dataset(args.data)
    if args.method == "ols":
        res = ols_with_ci(data, args.alpha)
        _emit({
            "method": res.method,
            "estimate": res.estimate.tolist(),
            "ci_lo": res.ci_lo.tolist(),
            "ci_hi": res.ci_hi.tolist(),
            "privacy_spend": res.privacy_spend,
        })
        return
    if args.rho is None:
        raise SystemExit("adassp requires --rho")
    x_bound = args.x_bound or math.sqrt(data.p)
    y_bound = args.y_bound or 1.5 * math.sqrt(2.0)
    res = adassp_fit(data, args.rho, x_bound, y_bound,
                     RngStream(seed=args.seed))
    _emit({
        "method": res.method,
        "estimate": res.estimate.tolist(),
        "privacy_spend": res.privacy_spend,
    })


def _cmd_experiment(args):
    with open(args.config) as fh:
        raw = json.load(fh)
    if raw.get("name") is None:
        raw["name"] = args.name
    elif raw["name"] != args.name:
        raise SystemExit(
            f"config names {raw['name']!r} but {args.name!r} was requested")
    if args.master_seed is not None:
        raw["seed"] = args.master_seed
    cfg = harness.parse_config(raw)
    table = harness.run_experiment(cfg, jobs=args.jobs)
    csv_path, meta_path = harness.write_outputs(table, cfg, args.out)
    _emit({"csv": csv_path, "meta": meta_path, "rows": len(table.rows)})


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dpgd",
        description="Differentially private gradient descent for "
                    "linear regression")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("accountant", help="zCDP accounting")
    p.add_argument("--rho", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--deltas", type=float, nargs="+")
    p.add_argument("--epsilon", type=float)
    p.set_defaults(func=_cmd_accountant)

    p = sub.add_parser("fit", help="run DP-GD on a CSV dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--rho", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--noise-scale", dest="noise_scale", type=float)
    p.add_argument("--eta", type=float, default=0.25)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-clip", action="store_true")
    p.add_argument("--tail-window", dest="tail_window", type=int, default=1)
    p.add_argument("--dump-trajectory", dest="dump_trajectory")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("check-conditions",
                       help="evaluate the no-clipping clauses")
    p.add_argument("--data", required=True)
    p.add_argument("--theta", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--eta", type=float, default=0.25)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--c0", type=float, required=True)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--lambda", dest="noise_scale", type=float)
    p.set_defaults(func=_cmd_check_conditions)

    p = sub.add_parser("ci", help="confidence intervals from DP-GD")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=["runs", "checkpoints", "batched"],
                   required=True)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--spacing", type=int, required=True)
    p.add_argument("--burn-in", dest="burn_in", type=int, default=20)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--gamma", type=float)
    p.add_argument("--eta", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_ci)

    p = sub.add_parser("baseline", help="OLS or AdaSSP comparison fit")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=["ols", "adassp"], required=True)
    p.add_argument("--rho", type=float)
    p.add_argument("--x-bound", dest="x_bound", type=float)
    p.add_argument("--y-bound", dest="y_bound", type=float)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("experiment", help="run a configured experiment")
    p.add_argument("name", choices=list(harness.EXPERIMENT_NAMES))
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--master-seed", dest="master_seed", type=int)
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
