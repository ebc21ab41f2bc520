"""Independent reference computations used by the tests.

These deliberately take a different route from the package: explicit
Gaussian pdfs instead of Cholesky/logistic algebra, direct loops instead of
vectorized code.
"""

import numpy as np
from scipy.stats import multivariate_normal


def direct_pair_sd(mu_u, sigma_u, mu_v, sigma_v):
    """P_u / F(mu_u) + P_v / F(mu_v) - 1 with explicit density values."""
    gu = multivariate_normal(mean=mu_u, cov=sigma_u)
    gv = multivariate_normal(mean=mu_v, cov=sigma_v)
    pu, pv = gu.pdf(mu_u), gv.pdf(mu_v)
    return pu / (pu + gv.pdf(mu_u)) + pv / (gu.pdf(mu_v) + pv) - 1.0


def direct_model_sd(moments, weight=None):
    """Double loop over ordered pairs; ``weight(u, v)`` switches to the weighted mean."""
    ids = list(moments)
    num = den = 0.0
    for u in ids:
        for v in ids:
            s = 0.0 if u == v else direct_pair_sd(*moments[u], *moments[v])
            w = 1.0 if weight is None else weight(u, v)
            num += w * s
            den += w
    return num / den


def random_spd(rng, d, scale=1.0):
    a = rng.normal(size=(d, d))
    return scale * (a @ a.T / d + 0.2 * np.eye(d))


def running_min(values):
    out, cur = [], None
    for v in values:
        cur = v if cur is None or v < cur else cur
        out.append(cur)
    return out
