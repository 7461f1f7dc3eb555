"""Exact first and second moments of the mixture distribution.

Marginally a variable is the mixture sum_c psi_c Categorical(phi_p^c) over
its numeric level codes.  Within a cluster variables are independent, so
every cross moment reduces to sums over cluster means:

    E[x_p]            = sum_c psi_c f_{p,c}
    Cov(x_p, x_q)     = sum_c psi_c (f_{p,c} - E x_p)(f_{q,c} - E x_q),  p != q
    Var(x_p)          = sum_c psi_c Var_c(x_p) + sum_c psi_c (f_{p,c} - E x_p)^2

with f_{p,c} the mean of variable p inside cluster c.  These formulas are
exact, not sample estimates; generated data should agree with them up to
sampling error.  ``brute_force_moments`` recomputes everything by full
enumeration of the joint support as an independent check for small specs.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .model import ClusterSpec, ProfileMatrix, SpecError


def cluster_means(profile: ProfileMatrix) -> np.ndarray:
    """C x P matrix of within-cluster means f_{p,c} = sum_x x * phi(x)."""
    out = np.empty((profile.cluster_count, profile.variable_count))
    for p, domain in enumerate(profile.variables):
        levels = np.asarray(domain.levels, dtype=float)
        for c in range(profile.cluster_count):
            out[c, p] = levels @ profile.cell(c, p).as_array()
    return out


def cluster_variances(profile: ProfileMatrix) -> np.ndarray:
    """C x P matrix of within-cluster variances."""
    out = np.empty((profile.cluster_count, profile.variable_count))
    for p, domain in enumerate(profile.variables):
        levels = np.asarray(domain.levels, dtype=float)
        for c in range(profile.cluster_count):
            probs = profile.cell(c, p).as_array()
            mean = levels @ probs
            out[c, p] = (levels - mean) ** 2 @ probs
    return out


def marginal_mean(weights: np.ndarray, means_p: np.ndarray) -> float:
    """Mixture mean of one variable from its per-cluster means."""
    return float(weights @ means_p)


def marginal_variance(weights: np.ndarray, variances_p: np.ndarray, means_p: np.ndarray) -> float:
    """Mixture variance: mean of within variances plus variance of means.

    The decomposition keeps the result exactly zero when every cluster is
    degenerate at the same level, which the naive E[x^2] - (E x)^2 form
    does not.
    """
    grand = weights @ means_p
    within = weights @ variances_p
    between = weights @ (means_p - grand) ** 2
    return float(within + between)


def marginal_covariance(weights: np.ndarray, means_p: np.ndarray, means_q: np.ndarray) -> float:
    """Mixture covariance of two distinct variables from cluster means.

    Centering before the weighted product keeps the value exactly zero for
    noise columns, whose cluster means are all equal.
    """
    dev_p = means_p - weights @ means_p
    dev_q = means_q - weights @ means_q
    return float(weights @ (dev_p * dev_q))


def equal_weight_covariance(means_p: np.ndarray, means_q: np.ndarray) -> float:
    """Covariance under equal cluster weights, as a sum over cluster pairs.

    With psi_c = 1/C for all c,

        Cov(x_p, x_q) = (1/C^2) sum_{c < c'} (f_{p,c} - f_{p,c'})(f_{q,c} - f_{q,c'}),

    which makes explicit that only cluster pairs on which both columns'
    means differ contribute.
    """
    c_count = len(means_p)
    total = 0.0
    for a, b in combinations(range(c_count), 2):
        total += (means_p[a] - means_p[b]) * (means_q[a] - means_q[b])
    return total / c_count**2


def within_group_covariance(f_hp: float, f_lp: float, f_hq: float, f_lq: float) -> float:
    """Covariance of two columns whose H/L pattern coincides, balanced design.

    Each column takes its H mean on half the total weight and its L mean on
    the other half, in lockstep, so

        Cov(x_p, x_q) = (1/4) (f_H,p - f_L,p)(f_H,q - f_L,q).
    """
    return 0.25 * (f_hp - f_lp) * (f_hq - f_lq)


@dataclass(frozen=True)
class MomentMatrices:
    """Exact mixture moments for a full spec."""

    means: np.ndarray
    variances: np.ndarray
    covariance: np.ndarray
    correlation: np.ndarray


def moment_matrices(profile: ProfileMatrix, clusters: ClusterSpec) -> MomentMatrices:
    """Means, variances, covariance and correlation for every variable.

    The covariance diagonal carries the full variances (within plus
    between).  Correlations involving a constant column are NaN.
    """
    weights = clusters.weight_array()
    f = cluster_means(profile)
    v = cluster_variances(profile)
    p_count = profile.variable_count
    means = weights @ f
    variances = np.array([marginal_variance(weights, v[:, p], f[:, p]) for p in range(p_count)])
    cov = np.empty((p_count, p_count))
    dev = f - means
    for p in range(p_count):
        for q in range(p_count):
            if p == q:
                cov[p, q] = variances[p]
            else:
                cov[p, q] = weights @ (dev[:, p] * dev[:, q])
    sd = np.sqrt(variances)
    with np.errstate(divide="ignore", invalid="ignore"):
        cor = cov / np.outer(sd, sd)
    cor[np.isinf(cor)] = np.nan
    np.fill_diagonal(cor, np.where(sd > 0.0, 1.0, np.nan))
    return MomentMatrices(means, variances, cov, cor)


# Enumeration ceiling for the brute-force check; beyond this the joint
# support is too large to visit.
_MAX_ENUMERATION = 10**6


def brute_force_moments(profile: ProfileMatrix, clusters: ClusterSpec) -> MomentMatrices:
    """Moments by full enumeration of the joint support.

    Visits every point of the product support of all variables, accumulates
    its mixture probability, and forms moments directly.  Exponential in P;
    guarded at 10**6 support points.  Exists to cross-check the closed
    forms, not for production use.
    """
    sizes = [domain.size for domain in profile.variables]
    total = int(np.prod(sizes, dtype=object))
    if total > _MAX_ENUMERATION:
        raise SpecError(f"brute force enumeration needs {total} points, limit is {_MAX_ENUMERATION}")
    weights = clusters.weight_array()
    p_count = profile.variable_count
    grids = np.indices(sizes).reshape(p_count, total)
    # values[j, p]: level code of variable p at support point j
    values = np.empty((total, p_count))
    for p, domain in enumerate(profile.variables):
        values[:, p] = np.asarray(domain.levels, dtype=float)[grids[p]]
    prob = np.zeros(total)
    for c in range(clusters.cluster_count):
        cell_prob = np.ones(total)
        for p in range(p_count):
            cell_prob *= profile.cell(c, p).as_array()[grids[p]]
        prob += weights[c] * cell_prob
    means = prob @ values
    centered = values - means
    cov = (centered * prob[:, None]).T @ centered
    variances = np.diag(cov).copy()
    sd = np.sqrt(variances)
    with np.errstate(divide="ignore", invalid="ignore"):
        cor = cov / np.outer(sd, sd)
    cor[np.isinf(cor)] = np.nan
    np.fill_diagonal(cor, np.where(sd > 0.0, 1.0, np.nan))
    return MomentMatrices(means, variances, cov, cor)
