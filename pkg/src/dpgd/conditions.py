"""Deterministic no-clipping certificate for a concrete dataset.

Five clauses are checked against a witness vector theta (typically the
true parameter of a synthetic instance):
  (i)   1/2 I <= Sigma <= 2 I and ||I - eta*Sigma|| <= 7/8,
  (ii)  ||x_i|| <= c0 sqrt(p),
  (iii) |y_i - x_i^T theta| <= c0 sigma,
  (iv)  |x_i^T (I - eta*Sigma)^t theta| <= c0,
  (v)   |sum_j (y_j - x_j^T theta) x_i^T A_t x_j| <= c0 sigma sqrt(n p),
        A_t = (I - (I - eta*Sigma)^t) Sigma^{-1},
for all i in [n], t in [T]. When all clauses hold with theta0 = 0, the
noise-ratio certificate bounds the clip probability by beta.
"""

import math
from dataclasses import dataclass

import numpy as np

from .data import empirical_covariance


class SingularCovariance(ValueError):
    """Raised when Sigma is singular, making clause (v) unevaluable."""


@dataclass(frozen=True)
class ConditionReport:
    """Pass/fail and relative margins for the five clauses.

    Margins are (bound - achieved)/bound, so they are dimensionless and
    negative exactly when the clause is violated. worst_index holds the
    (i, t) pair attaining the worst margin, with -1 for axes a clause
    does not range over.
    """

    c0: float
    sigma: float
    eta: float
    T: int
    theta_ref: np.ndarray
    clause_pass: tuple
    clause_margin: tuple
    worst_index: tuple

    @property
    def all_pass(self):
        return all(self.clause_pass)

    def to_dict(self):
        return {
            "c0": self.c0,
            "sigma": self.sigma,
            "eta": self.eta,
            "T": self.T,
            "clause_pass": list(self.clause_pass),
            "clause_margin": list(self.clause_margin),
            "worst_index": [list(ix) for ix in self.worst_index],
            "all_pass": self.all_pass,
        }


def _upper_bound_margin(achieved, bound):
    # Relative slack for "achieved <= bound". Both sides zero counts as a
    # full pass (margin 1); a zero bound with a positive value is a
    # maximal violation (margin -1).
    if bound == 0:
        return 1.0 if achieved == 0 else -1.0
    return (bound - achieved) / bound


def check_conditions(data, theta_ref, sigma, eta, T, c0):
    """Evaluate all five clauses exactly over every i in [n], t in [T]."""
    theta_ref = np.asarray(theta_ref, dtype=float).ravel()
    if theta_ref.shape[0] != data.p:
        raise ValueError("theta_ref length must equal the data dimension")
    if T < 1:
        raise ValueError("T must be at least 1")
    n, p = data.n, data.p
    cov = empirical_covariance(data)
    w, q = np.linalg.eigh(cov.sigma_hat)
    contraction = 1.0 - eta * w

    # (i) spectrum: lambda_min >= 1/2, lambda_max <= 2, ||I-eta*Sigma|| <= 7/8
    op_norm = float(np.max(np.abs(contraction)))
    margin_i = min(
        _upper_bound_margin(0.5, cov.lambda_min),  # lower bound, flipped
        _upper_bound_margin(cov.lambda_max, 2.0),
        _upper_bound_margin(op_norm, 7.0 / 8.0),
    )
    pass_i = margin_i >= 0

    # (ii) covariate norms
    row_norms = np.linalg.norm(data.X, axis=1)
    worst_ii = int(np.argmax(row_norms))
    margin_ii = _upper_bound_margin(float(row_norms[worst_ii]),
                                    c0 * math.sqrt(p))

    # (iii) residual magnitudes at the witness
    residuals = data.y - data.X @ theta_ref
    abs_res = np.abs(residuals)
    worst_iii = int(np.argmax(abs_res))
    margin_iii = _upper_bound_margin(float(abs_res[worst_iii]), c0 * sigma)

    # (iv) and (v): sweep t, tracking the worst statistic and its indices.
    theta_eig = q.T @ theta_ref
    worst_iv = (0.0, -1, -1)
    xq = data.X @ q  # rows of X in the eigenbasis
    singular = bool(np.any(np.abs(w) < 1e-14))
    resid_eig = q.T @ (data.X.T @ residuals)
    worst_v = (0.0, -1, -1)
    for t in range(1, T + 1):
        mt = contraction ** t
        stat_iv = np.abs(xq @ (mt * theta_eig))
        i_star = int(np.argmax(stat_iv))
        if stat_iv[i_star] > worst_iv[0]:
            worst_iv = (float(stat_iv[i_star]), i_star, t)
        if not singular:
            # x_i^T A_t X^T r with A_t = (I - M^t) Sigma^{-1}
            a_t = (1.0 - mt) / w
            stat_v = np.abs(xq @ (a_t * resid_eig))
            i_star = int(np.argmax(stat_v))
            if stat_v[i_star] > worst_v[0]:
                worst_v = (float(stat_v[i_star]), i_star, t)
    margin_iv = _upper_bound_margin(worst_iv[0], c0)
    if singular:
        raise SingularCovariance(
            "Sigma is singular; clause (v) cannot be evaluated")
    margin_v = _upper_bound_margin(worst_v[0],
                                   c0 * sigma * math.sqrt(n * p))

    margins = (margin_i, margin_ii, margin_iii, margin_iv, margin_v)
    return ConditionReport(
        c0=c0, sigma=sigma, eta=eta, T=T, theta_ref=theta_ref,
        clause_pass=tuple(m >= 0 for m in margins),
        clause_margin=margins,
        worst_index=((-1, -1), (worst_ii, -1), (worst_iii, -1),
                     worst_iv[1:], worst_v[1:]),
    )


def noise_ratio_certificate(report, gamma, eta, lam, n, T, p, beta):
    """True iff the two no-clipping inequalities hold:

        gamma >= 4 c0^2 sigma sqrt(p)   and
        gamma/(eta*lam) >= 64 c0^2 p sqrt(ln(2nT/beta)).

    Combined with an all-pass report (for a run started at theta0 = 0),
    this certifies clip probability at most beta.
    """
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    c0 = report.c0
    threshold_ok = gamma >= 4.0 * c0 ** 2 * report.sigma * math.sqrt(p)
    if lam == 0:
        ratio_ok = True
    else:
        ratio_ok = (gamma / (eta * lam)
                    >= 64.0 * c0 ** 2 * p * math.sqrt(math.log(2 * n * T / beta)))
    return threshold_ok and ratio_ok
