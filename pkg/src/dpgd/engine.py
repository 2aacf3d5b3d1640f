"""Clipped noisy gradient descent for least squares, and its exact
no-clipping iterate distribution.

The update is
    theta_t = theta_{t-1} - eta * gbar_t + eta * z_t,
    gbar_t = (1/n) sum_i CLIP_gamma(-x_i (y_i - x_i^T theta_{t-1})),
    z_t ~ N(0, lam^2 I).

Without clipping the iterate is exactly Gaussian:
    theta_t ~ N(thetahat + M^t (theta0 - thetahat), eta^2 lam^2 A_t),
    M = I - eta*Sigma,  D = M^2,  A_t = (I - D)^{-1} (I - D^t).
"""

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, RngStream, empirical_covariance, ols_solve


class SingularGeometry(ValueError):
    """Raised when I - D is singular and the geometric series diverges."""


@dataclass(frozen=True)
class GdConfig:
    """Hyperparameters for one gradient-descent run.

    gamma = inf disables clipping entirely; keep_noise retains the drawn
    noise vectors on the trajectory (needed for coupling checks, can be
    switched off to bound memory on long runs).
    """

    gamma: float
    lam: float
    eta: float
    steps: int
    stream: RngStream
    theta0: np.ndarray | None = None
    keep_noise: bool = True

    def __post_init__(self):
        if not (self.gamma > 0):
            raise ValueError("gamma must be positive (inf disables clipping)")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.theta0 is not None:
            theta0 = np.asarray(self.theta0, dtype=float).ravel()
            object.__setattr__(self, "theta0", theta0)


@dataclass(frozen=True)
class Trajectory:
    """Iterates theta_1..theta_T with clip counts and the noise stream."""

    iterates: np.ndarray      # (T, p)
    clip_counts: np.ndarray   # (T,)
    noise: np.ndarray | None  # (T, p), None when dropped
    config: GdConfig

    @property
    def final(self):
        return self.iterates[-1]


@dataclass(frozen=True)
class IterateLaw:
    """Exact Gaussian law of the t-th unclipped iterate."""

    t: int
    mean: np.ndarray
    covariance: np.ndarray


def clip(v, gamma):
    """Norm clipping: v * min(1, gamma/||v||). Zero maps to zero."""
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm <= gamma or norm == 0.0:
        return v.copy()
    return v * (gamma / norm)


def _clipped_gradients(X, residuals, gamma):
    """Per-example clipped gradients CLIP_gamma(-x_i r_i) and clip count.

    Shared by run() and huber_objective() so the two compute identical
    arithmetic.
    """
    grads = -X * residuals[:, None]
    if math.isinf(gamma):
        return grads, 0
    norms = np.linalg.norm(grads, axis=1)
    over = norms > gamma
    count = int(np.count_nonzero(over))
    if count:
        grads = grads.copy()
        grads[over] *= (gamma / norms[over])[:, None]
    return grads, count


def run(data, config):
    """Execute the gradient-descent recurrence; deterministic given config.

    One N(0, lam^2 I) vector is drawn per step, before the next step's
    draw, so runs sharing a stream share their noise sequence exactly.
    """
    theta = (np.zeros(data.p) if config.theta0 is None
             else config.theta0.copy())
    if theta.shape[0] != data.p:
        raise ValueError("theta0 length must match the data dimension")
    g = config.stream.generator()
    T = config.steps
    iterates = np.empty((T, data.p))
    clip_counts = np.empty(T, dtype=int)
    noise = np.empty((T, data.p)) if config.keep_noise else None
    for t in range(T):
        residuals = data.y - data.X @ theta
        grads, n_clipped = _clipped_gradients(data.X, residuals, config.gamma)
        gbar = grads.mean(axis=0)
        z = config.lam * g.standard_normal(data.p)
        theta = theta - config.eta * gbar + config.eta * z
        iterates[t] = theta
        clip_counts[t] = n_clipped
        if noise is not None:
            noise[t] = z
    return Trajectory(iterates=iterates, clip_counts=clip_counts,
                      noise=noise, config=config)


def coupled_run(data, config):
    """Run clipped and unclipped descent on the same noise sequence.

    Both runs draw exactly p normals per step from the shared stream, so
    the sequences align; if the clipped run never clips, the two
    trajectories are bit-identical.
    """
    if math.isinf(config.gamma):
        raise ValueError("coupled_run needs a finite clipping threshold")
    unclipped_cfg = dataclasses.replace(config, gamma=math.inf)
    return run(data, config), run(data, unclipped_cfg)


def geometric_noise_factor(sigma_mat, eta, t, method="closed_form"):
    """The matrix A_t = sum_{i=1}^t D^{i-1} with D = (I - eta*Sigma)^2.

    method "closed_form" evaluates (I - D)^{-1} (I - D^t) in the
    eigenbasis of Sigma; "partial_sum" accumulates the powers explicitly
    and exists as an independent cross-check.
    """
    w, q = np.linalg.eigh(sigma_mat)
    d = (1.0 - eta * w) ** 2
    if method == "partial_sum":
        p = sigma_mat.shape[0]
        acc = np.zeros(p)
        power = np.ones(p)
        for _ in range(t):
            acc = acc + power
            power = power * d
        return (q * acc) @ q.T
    if np.any(np.abs(1.0 - d) < 1e-14):
        raise SingularGeometry("I - D is singular; geometric sum undefined")
    a = (1.0 - d ** t) / (1.0 - d)
    return (q * a) @ q.T


def iterate_law(data, config, t):
    """Exact mean and covariance of theta_t assuming no clipping occurs."""
    if t < 1:
        raise ValueError("t must be at least 1")
    thetahat = ols_solve(data)
    sigma = empirical_covariance(data).sigma_hat
    w, q = np.linalg.eigh(sigma)
    contraction = 1.0 - config.eta * w
    d = contraction ** 2
    if np.any(np.abs(1.0 - d) < 1e-14):
        raise SingularGeometry("I - D is singular; stationary law undefined")
    theta0 = (np.zeros(data.p) if config.theta0 is None else config.theta0)
    mean = thetahat + q @ (contraction ** t * (q.T @ (theta0 - thetahat)))
    a = (1.0 - d ** t) / (1.0 - d)
    cov = (config.eta * config.lam) ** 2 * ((q * a) @ q.T)
    cov = 0.5 * (cov + cov.T)
    return IterateLaw(t=t, mean=mean, covariance=cov)


def huber_objective(data, theta, gamma):
    """Huberized least-squares loss whose gradient is the clipped gradient.

    Each datum uses transition point B_i = gamma/||x_i|| (infinite for a
    zero covariate row, i.e. plain squared loss):
        l(theta) = r^2/2            when |r| <= B_i
                 = B_i(|r| - B_i/2) otherwise.
    Returns (loss, grad) with grad = (1/n) sum CLIP_gamma(-x_i r_i),
    computed by the same arithmetic as the descent step.
    """
    if not (gamma > 0):
        raise ValueError("gamma must be positive")
    theta = np.asarray(theta, dtype=float).ravel()
    residuals = data.y - data.X @ theta
    row_norms = np.linalg.norm(data.X, axis=1)
    with np.errstate(divide="ignore"):
        b = np.where(row_norms > 0, gamma / np.where(row_norms > 0,
                                                     row_norms, 1.0), np.inf)
    abs_r = np.abs(residuals)
    quad = abs_r <= b
    losses = np.where(quad, 0.5 * residuals ** 2,
                      np.where(np.isinf(b), 0.5 * residuals ** 2,
                               b * (abs_r - 0.5 * b)))
    grads, _ = _clipped_gradients(data.X, residuals, gamma)
    return float(losses.mean()), grads.mean(axis=0)


def tail_average(traj, window):
    """Mean of the last `window` iterates."""
    T = traj.iterates.shape[0]
    if not 1 <= window <= T:
        raise ValueError("window must lie in [1, T]")
    return traj.iterates[T - window:].mean(axis=0)
