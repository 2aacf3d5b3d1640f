"""zCDP accounting for DP-GD.

Sensitivity here is for replace-one adjacency on a fixed-size dataset:
swapping one example changes the averaged clipped gradient by at most
2*gamma/n in l2 norm.
"""

import math
from dataclasses import dataclass


class InfiniteNoise(ValueError):
    """Raised when a zero privacy budget would require unbounded noise."""


@dataclass(frozen=True)
class PrivacyBudget:
    """A zCDP privacy spend."""

    rho: float

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")

    def epsilon(self, delta):
        """The (epsilon, delta)-DP guarantee implied at this delta."""
        return zcdp_to_dp(self.rho, delta)


@dataclass(frozen=True)
class MechanismSpec:
    """Parameters of a T-step clipped-gradient Gaussian mechanism."""

    clip_threshold: float
    n: int
    steps: int
    noise_scale: float

    def __post_init__(self):
        if self.clip_threshold <= 0 or self.n < 1 or self.steps < 1:
            raise ValueError("invalid mechanism parameters")
        if self.noise_scale <= 0:
            raise ValueError("noise scale must be positive")

    def total_budget(self):
        """rho for running all steps at this noise scale."""
        delta = gradient_sensitivity(self.clip_threshold, self.n)
        per_step = step_cost(delta, self.noise_scale)
        total = PrivacyBudget(0.0)
        for _ in range(self.steps):
            total = compose(total, per_step)
        return total


def gradient_sensitivity(gamma, n):
    """Replace-one sensitivity 2*gamma/n of the averaged clipped gradient."""
    if gamma <= 0 or n < 1:
        raise ValueError("need gamma > 0 and n >= 1")
    return 2.0 * gamma / n


def step_cost(delta_sens, lam):
    """Gaussian-mechanism cost: sensitivity delta at noise scale lam."""
    if lam <= 0:
        raise ValueError("noise scale must be positive")
    if delta_sens < 0:
        raise ValueError("sensitivity must be nonnegative")
    return PrivacyBudget(rho=delta_sens ** 2 / (2.0 * lam ** 2))


def compose(a, b):
    """zCDP composition is additive."""
    return PrivacyBudget(rho=a.rho + b.rho)


def calibrate_noise(rho, gamma, n, steps):
    """Smallest lam with T composed Gaussian steps costing exactly rho.

    Inverts lam^2 >= 2*T*gamma^2 / (rho*n^2).
    """
    if rho < 0 or gamma <= 0 or n < 1 or steps < 1:
        raise ValueError("invalid calibration inputs")
    if rho == 0:
        raise InfiniteNoise("rho = 0 requires infinite noise")
    return gamma * math.sqrt(2.0 * steps / rho) / n


def zcdp_to_dp(rho, delta):
    """epsilon such that rho-zCDP implies (epsilon, delta)-DP."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    return rho + 2.0 * math.sqrt(rho * math.log(1.0 / delta))


def dp_to_zcdp(epsilon, delta):
    """Largest rho whose (epsilon, delta) conversion stays within epsilon.

    Closed form from the quadratic in sqrt(rho):
    sqrt(rho) = sqrt(L + epsilon) - sqrt(L) with L = ln(1/delta).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    log_term = math.log(1.0 / delta)
    root = math.sqrt(log_term + epsilon) - math.sqrt(log_term)
    return root ** 2
