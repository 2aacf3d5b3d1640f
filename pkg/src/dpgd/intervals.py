"""Per-coordinate Student-t confidence intervals for the OLS solution,
built from noisy-gradient-descent output.

Three ways to harvest the m estimates:
  independent runs — m separate executions, final (or tail-averaged)
    iterate of each;
  checkpoints — one long run, every spacing-th iterate after burn-in;
  batched means — one long run, means of m disjoint contiguous batches.
"""

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import accountant
from .engine import run, tail_average
from .studentt import t_quantile


class CiMethod(str, Enum):
    INDEPENDENT_RUNS = "runs"
    CHECKPOINTS = "checkpoints"
    BATCHED_MEANS = "batched"


@dataclass(frozen=True)
class CiConfig:
    """Schedule for estimate collection.

    spacing is the per-segment step count T; burn-in steps are executed
    but discarded (once for checkpoints/batched means, per run for
    independent runs). tail_window > 1 averages the final few iterates of
    each independent run.
    """

    method: CiMethod
    m: int
    spacing: int
    burn_in: int = 20
    alpha: float = 0.05
    tail_window: int = 1

    def __post_init__(self):
        object.__setattr__(self, "method", CiMethod(self.method))
        if self.m < 2:
            raise ValueError("need m >= 2 estimates")
        if self.spacing < 1:
            raise ValueError("spacing must be at least 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not 1 <= self.tail_window <= self.spacing:
            raise ValueError("tail_window must lie in [1, spacing]")

    def total_steps(self):
        """Gradient steps executed by the whole procedure."""
        if self.method is CiMethod.INDEPENDENT_RUNS:
            return self.m * (self.burn_in + self.spacing)
        return self.burn_in + self.m * self.spacing


@dataclass(frozen=True)
class IntervalSet:
    """Centers and half-widths of the per-coordinate intervals."""

    center: np.ndarray
    half_width: np.ndarray
    estimates: np.ndarray      # (m, p)
    privacy_spend: float = 0.0

    @property
    def lo(self):
        return self.center - self.half_width

    @property
    def hi(self):
        return self.center + self.half_width

    def covers(self, target):
        """Boolean per-coordinate coverage of a target vector."""
        return (self.lo <= target) & (target <= self.hi)


def collect_estimates(data, gd, ci, rho=None):
    """Produce the m estimate vectors for the chosen method.

    When rho is given, the noise scale is recalibrated so the entire
    procedure (all runs and all steps, burn-in included) spends exactly
    rho; this requires a finite clipping threshold. Otherwise gd.lam is
    used as-is and the caller owns the accounting.
    """
    if rho is not None:
        if math.isinf(gd.gamma):
            raise ValueError("budget calibration needs a finite gamma")
        lam = accountant.calibrate_noise(rho, gd.gamma, data.n,
                                         ci.total_steps())
        gd = dataclasses.replace(gd, lam=lam)

    if ci.method is CiMethod.INDEPENDENT_RUNS:
        steps = ci.burn_in + ci.spacing
        estimates = []
        for ell in range(ci.m):
            cfg = dataclasses.replace(gd, steps=steps,
                                      stream=gd.stream.child(ell))
            traj = run(data, cfg)
            estimates.append(tail_average(traj, ci.tail_window))
        return estimates

    cfg = dataclasses.replace(gd, steps=ci.total_steps())
    traj = run(data, cfg)
    if ci.method is CiMethod.CHECKPOINTS:
        # theta_{burn_in + ell*spacing}; iterates[k] holds theta_{k+1}
        return [traj.iterates[ci.burn_in + ell * ci.spacing - 1]
                for ell in range(1, ci.m + 1)]
    return [traj.iterates[ci.burn_in + ell * ci.spacing:
                          ci.burn_in + (ell + 1) * ci.spacing].mean(axis=0)
            for ell in range(ci.m)]


def build_interval(estimates, alpha, privacy_spend=0.0):
    """Student-t interval: mean_j +/- t_{alpha/2,m-1} * s_j / sqrt(m)."""
    est = np.asarray(estimates, dtype=float)
    if est.ndim == 1:
        est = est[:, None]
    m = est.shape[0]
    if m < 2:
        raise ValueError("need at least two estimates")
    center = est.mean(axis=0)
    sample_sd = est.std(axis=0, ddof=1)
    quantile = t_quantile(alpha / 2.0, m - 1)
    half_width = quantile * sample_sd / math.sqrt(m)
    return IntervalSet(center=center, half_width=half_width, estimates=est,
                       privacy_spend=privacy_spend)
