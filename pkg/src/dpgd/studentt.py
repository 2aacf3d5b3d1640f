"""Student's t distribution: CDF via the regularized incomplete beta
function and the upper-tail quantile via Newton refinement.

The incomplete beta continued fraction is the classical Lentz-style
evaluation; the quantile starts from the normal approximation and
Newton-iterates on the CDF, with a bisection safeguard.
"""

import math
from statistics import NormalDist

_EPS = 3e-16
_TINY = 1e-300
_STD_NORMAL = NormalDist()


def _beta_cf(a, b, x):
    """Continued fraction for the incomplete beta function."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, 4000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a, b, x):
    """I_x(a, b), the regularized incomplete beta function."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def t_cdf(x, df):
    """P[T_df <= x]."""
    if df < 1:
        raise ValueError("df must be at least 1")
    if x == 0.0:
        return 0.5
    tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5,
                                             df / (df + x * x))
    return 1.0 - tail if x > 0 else tail


def _t_pdf(x, df):
    log_pdf = (math.lgamma(0.5 * (df + 1)) - math.lgamma(0.5 * df)
               - 0.5 * math.log(df * math.pi)
               - 0.5 * (df + 1) * math.log1p(x * x / df))
    return math.exp(log_pdf)


def t_quantile(alpha, df):
    """q with P[T_df > q] = alpha, accurate well beyond 1e-6.

    alpha is the upper-tail probability; alpha = 0.5 gives 0 and values
    above 0.5 give negative quantiles by symmetry.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if df < 1:
        raise ValueError("df must be at least 1")
    if alpha == 0.5:
        return 0.0
    if alpha > 0.5:
        return -t_quantile(1.0 - alpha, df)

    target = 1.0 - alpha
    x = _STD_NORMAL.inv_cdf(target)
    if df <= 2:
        # heavy tails: the normal start can be far off, widen the bracket
        x = max(x, 1.0)
    lo, hi = 0.0, x
    while t_cdf(hi, df) < target:
        lo, hi = hi, hi * 2.0
    for _ in range(100):
        f = t_cdf(x, df) - target
        if abs(f) < 1e-14:
            break
        if f > 0:
            hi = min(hi, x)
        else:
            lo = max(lo, x)
        step = f / _t_pdf(x, df)
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) < 1e-13 * max(1.0, abs(x)):
            x = x_new
            break
        x = x_new
    return x
