"""Regression data model, synthetic data generation, and the OLS solver."""

import dataclasses
from dataclasses import dataclass

import numpy as np


class SingularDesign(ValueError):
    """Raised when X^T X is singular or too ill-conditioned to solve."""

    def __init__(self, message, smallest_eigenvalue):
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by (seed, stream_id).

    Identical (seed, stream_id) always yields bit-identical draws. The
    optional path extends the key so helpers (e.g. per-run substreams)
    can derive independent streams without colliding with any other
    (seed, stream_id) pair.
    """

    seed: int
    stream_id: int = 0
    path: tuple = ()

    def __post_init__(self):
        if self.seed < 0 or self.stream_id < 0:
            raise ValueError("seed and stream_id must be nonnegative")

    def generator(self):
        entropy = [self.seed, self.stream_id, *self.path]
        return np.random.default_rng(np.random.SeedSequence(entropy))

    def child(self, index):
        """Derived stream, independent of this one and of its siblings."""
        return dataclasses.replace(self, path=self.path + (int(index),))


@dataclass(frozen=True)
class Dataset:
    """A regression instance: covariates X (n x p) and responses y (n)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("X must be an n x p matrix with n, p >= 1")
        if y.shape[0] != X.shape[0]:
            raise ValueError("y length must equal the number of rows of X")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ValueError("X and y entries must be finite")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


ISOTROPIC = "isotropic"
ANISOTROPIC = "anisotropic"


@dataclass(frozen=True)
class GenerativeSpec:
    """Synthetic-data setting: y_i = x_i^T theta* + noise.

    theta_star None means "draw uniformly from the unit sphere"; an
    explicit vector must have norm at most 1.
    """

    p: int
    n: int
    sigma: float = 1.0
    design: str = ISOTROPIC
    theta_star: np.ndarray | None = None

    def __post_init__(self):
        if self.p < 1 or self.n < 1:
            raise ValueError("need p >= 1 and n >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.design not in (ISOTROPIC, ANISOTROPIC):
            raise ValueError(f"unknown design {self.design!r}")
        if self.theta_star is not None:
            theta = np.asarray(self.theta_star, dtype=float).ravel()
            if theta.shape[0] != self.p:
                raise ValueError("theta_star length must equal p")
            if np.linalg.norm(theta) > 1 + 1e-12:
                raise ValueError("explicit theta_star must have norm <= 1")
            object.__setattr__(self, "theta_star", theta)


@dataclass(frozen=True)
class CovarianceSummary:
    """Empirical covariance (1/n) X^T X with its extreme eigenvalues."""

    sigma_hat: np.ndarray
    lambda_min: float
    lambda_max: float


def random_rotation(p, rng):
    """Haar-random rotation matrix: orthogonal with determinant +1."""
    return _rotation(p, rng.generator())


def _rotation(p, generator):
    # QR of a Gaussian matrix, sign-corrected so R has positive diagonal
    # (this makes Q Haar distributed); flip one column if det(Q) = -1.
    z = generator.standard_normal((p, p))
    q, r = np.linalg.qr(z)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def _anisotropic_population(p, generator):
    """Population eigenvalues and rotation for the anisotropic design.

    Lambda_11 = 2, Lambda_22 = 1 (when p >= 2), the rest Unif([1, 2]).
    """
    lam = np.empty(p)
    lam[0] = 2.0
    if p >= 2:
        lam[1] = 1.0
    if p >= 3:
        lam[2:] = generator.uniform(1.0, 2.0, size=p - 2)
    u = _rotation(p, generator)
    return lam, u


def generate_dataset(spec, rng):
    """Draw a Dataset from a GenerativeSpec; returns (dataset, theta_star)."""
    g = rng.generator()
    if spec.theta_star is not None:
        theta = spec.theta_star
    else:
        theta = g.standard_normal(spec.p)
        theta = theta / np.linalg.norm(theta)

    if spec.design == ISOTROPIC:
        X = g.standard_normal((spec.n, spec.p))
    else:
        lam, u = _anisotropic_population(spec.p, g)
        sqrt_cov = (u * np.sqrt(lam)) @ u.T
        X = g.standard_normal((spec.n, spec.p)) @ sqrt_cov

    y = X @ theta
    if spec.sigma > 0:
        y = y + spec.sigma * g.standard_normal(spec.n)
    return Dataset(X=X, y=y), theta


def empirical_covariance(data):
    """Empirical covariance Sigma = (1/n) X^T X with eigenvalue range."""
    sigma = data.X.T @ data.X / data.n
    sigma = 0.5 * (sigma + sigma.T)
    eigs = np.linalg.eigvalsh(sigma)
    return CovarianceSummary(sigma_hat=sigma, lambda_min=float(eigs[0]),
                             lambda_max=float(eigs[-1]))


def ols_solve(data, cond_cap=1e12):
    """Least-squares solution (X^T X)^{-1} X^T y.

    Solves the normal equations via Cholesky; falls back to a symmetric
    eigendecomposition solve if the factorization fails numerically.
    Raises SingularDesign when X^T X is singular or its condition number
    exceeds cond_cap.
    """
    xtx = data.X.T @ data.X
    xtx = 0.5 * (xtx + xtx.T)
    xty = data.X.T @ data.y
    eigs = np.linalg.eigvalsh(xtx)
    lo, hi = float(eigs[0]), float(eigs[-1])
    if lo <= 0 or hi / lo > cond_cap:
        raise SingularDesign(
            f"X^T X is singular or ill-conditioned (min eigenvalue {lo:g})",
            smallest_eigenvalue=lo)
    try:
        from scipy.linalg import cho_factor, cho_solve
        theta = cho_solve(cho_factor(xtx, lower=True), xty)
    except np.linalg.LinAlgError:
        w, q = np.linalg.eigh(xtx)
        theta = q @ ((q.T @ xty) / w)
    return theta


def save_dataset(data, path):
    """Write the dataset as CSV with header x1,...,xp,y."""
    header = ",".join([f"x{j + 1}" for j in range(data.p)] + ["y"])
    body = np.column_stack([data.X, data.y])
    np.savetxt(path, body, delimiter=",", header=header, comments="",
               fmt="%.17g")


def load_dataset(path):
    """Read a dataset written by save_dataset."""
    body = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Dataset(X=body[:, :-1], y=body[:, -1])
