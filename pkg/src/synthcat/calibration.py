"""Solving for the low profile that meets a dependence target.

Pattern-identical columns in the balanced design share the covariance

    Cov = (f_H - f_L)^2 / 4

where f_H and f_L are the two cluster means a column alternates between.
Calibration fixes the high profile and solves for the low one so that Cov,
or the corresponding correlation Cov / Var, hits a requested target.

Two one-parameter families are supported.  A binary column on levels
(0, 1) is parameterised by its mean f, vector (1 - f, f); covariance
targets invert in closed form and correlation targets bisect on f_L.  A
three-level column on (0, 1, 2) holds a Hardy-Weinberg genotype count with
reference-allele probability p, vector (p^2, 2p(1-p), (1-p)^2), mean
2 - 2p; again the covariance inverts in closed form and the correlation is
bisected on p_L.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .model import (
    DependenceTarget,
    GroupStructure,
    InfeasibleTargetError,
    ProbabilityVector,
    SpecError,
)

# Bisection solutions are accepted when the implied target misses the
# requested one by less than this.
RESIDUAL_TOLERANCE = 1e-10
_MAX_BISECTION_STEPS = 200


def hardy_weinberg_probs(allele_prob: float) -> tuple[float, float, float]:
    """Genotype distribution (p^2, 2p(1-p), (1-p)^2) over counts (0, 1, 2).

    The level codes count the minor allele, so the mean is 2 - 2p.  At the
    boundaries p = 0 or 1 the distribution is degenerate; allowed, but
    flagged because a degenerate column carries no signal.
    """
    if not 0.0 <= allele_prob <= 1.0:
        raise SpecError(f"allele probability must lie in [0, 1], got {allele_prob!r}")
    if allele_prob in (0.0, 1.0):
        warnings.warn(f"allele probability {allele_prob} gives a degenerate genotype column")
    p = allele_prob
    return (p * p, 2.0 * p * (1.0 - p), (1.0 - p) * (1.0 - p))


def hardy_weinberg_moments(allele_prob: float) -> tuple[float, float]:
    """Mean and variance of the genotype count, 2 - 2p and 2p(1 - p)."""
    p = allele_prob
    return (2.0 - 2.0 * p, 2.0 * p * (1.0 - p))


def binary_mixture_variance(high_mean: float, low_mean: float) -> float:
    """Variance of an equal-weight mix of Bernoulli(f_H) and Bernoulli(f_L)."""
    m = 0.5 * (high_mean + low_mean)
    return m * (1.0 - m)


def snp_mixture_variance(high_allele: float, low_allele: float) -> float:
    """Variance of an equal-weight mix of two genotype-count distributions.

    E[x^2] under Hardy-Weinberg(p) is 2(1 - p)(2 - p) and the mixture mean
    is 2 - pH - pL, so

        V = (1-pH)(2-pH) + (1-pL)(2-pL) - (2 - pH - pL)^2.
    """
    ph, pl = high_allele, low_allele
    second = (1.0 - ph) * (2.0 - ph) + (1.0 - pl) * (2.0 - pl)
    mean = 2.0 - ph - pl
    return second - mean * mean


def binary_pair_dependence(high_mean: float, low_mean: float) -> tuple[float, float]:
    """(covariance, correlation) of two pattern-identical binary columns."""
    cov = 0.25 * (high_mean - low_mean) ** 2
    var = binary_mixture_variance(high_mean, low_mean)
    return cov, cov / var if var > 0.0 else math.nan


def snp_pair_dependence(high_allele: float, low_allele: float) -> tuple[float, float]:
    """(covariance, correlation) of two pattern-identical genotype columns."""
    cov = (high_allele - low_allele) ** 2
    var = snp_mixture_variance(high_allele, low_allele)
    return cov, cov / var if var > 0.0 else math.nan


def _bisect(g, lo: float, hi: float, context: str) -> float:
    """Root of a decreasing g with g(lo) > 0 > g(hi)."""
    g_lo = g(lo)
    g_hi = g(hi)
    if not (g_lo > 0.0 > g_hi):
        raise InfeasibleTargetError(f"{context}: no admissible solution brackets the target")
    for _ in range(_MAX_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _check_probability(value: float, name: str) -> None:
    if not 0.0 < value < 1.0:
        raise SpecError(f"{name} must lie strictly inside (0, 1), got {value!r}")


def calibrate_binary_covariance(high_mean: float, covariance: float) -> float:
    """Low mean hitting a within-group covariance, f_L = f_H - 2 sqrt(Cov).

    Feasible for 0 < Cov <= (f_H / 2)^2; beyond that the low mean would be
    negative.
    """
    _check_probability(high_mean, "high mean")
    limit = (0.5 * high_mean) ** 2
    if not 0.0 < covariance <= limit:
        raise InfeasibleTargetError(
            f"binary covariance target {covariance!r} outside (0, {limit!r}] for high mean {high_mean!r}"
        )
    return high_mean - 2.0 * math.sqrt(covariance)


def calibrate_binary_correlation(high_mean: float, correlation: float) -> float:
    """Low mean hitting a within-group correlation, by bisection on f_L.

    The correlation (f_H - f_L)^2 / (4 V) decreases in f_L on [0, f_H];
    its supremum at f_L = 0 is f_H / (2 - f_H), so only targets below that
    are attainable.
    """
    _check_probability(high_mean, "high mean")
    if not 0.0 < correlation < 1.0:
        raise InfeasibleTargetError(f"correlation target must lie in (0, 1), got {correlation!r}")
    limit = high_mean / (2.0 - high_mean)
    if correlation >= limit:
        raise InfeasibleTargetError(
            f"binary correlation target {correlation!r} not below the ceiling "
            f"{limit!r} for high mean {high_mean!r}"
        )

    def gap(low_mean: float) -> float:
        var = binary_mixture_variance(high_mean, low_mean)
        return (high_mean - low_mean) - 2.0 * math.sqrt(correlation * var)

    low = _bisect(gap, 0.0, high_mean, "binary correlation")
    _verify(correlation, binary_pair_dependence(high_mean, low)[1], "binary correlation")
    return low


def calibrate_snp_covariance(high_allele: float, covariance: float) -> float:
    """Low allele probability hitting a covariance, p_L = p_H - sqrt(Cov).

    Feasible for 0 < Cov < p_H^2, keeping p_L inside (0, p_H).
    """
    _check_probability(high_allele, "high allele probability")
    limit = high_allele * high_allele
    if not 0.0 < covariance < limit:
        raise InfeasibleTargetError(
            f"genotype covariance target {covariance!r} outside (0, {limit!r}) "
            f"for high allele probability {high_allele!r}"
        )
    return high_allele - math.sqrt(covariance)


def calibrate_snp_correlation(high_allele: float, correlation: float) -> float:
    """Low allele probability hitting a correlation, by bisection on p_L.

    The correlation (p_H - p_L)^2 / V rises from 0 at p_L = p_H to p_H at
    p_L = 0 (where V = p_H exactly), so targets at or above p_H are
    unattainable.
    """
    _check_probability(high_allele, "high allele probability")
    if not 0.0 < correlation < 1.0:
        raise InfeasibleTargetError(f"correlation target must lie in (0, 1), got {correlation!r}")
    if correlation >= high_allele:
        raise InfeasibleTargetError(
            f"genotype correlation target {correlation!r} not below the ceiling "
            f"{high_allele!r} (the high allele probability)"
        )

    def gap(low_allele: float) -> float:
        var = snp_mixture_variance(high_allele, low_allele)
        return (high_allele - low_allele) - math.sqrt(correlation * var)

    low = _bisect(gap, 0.0, high_allele, "genotype correlation")
    _verify(correlation, snp_pair_dependence(high_allele, low)[1], "genotype correlation")
    return low


def _verify(target: float, achieved: float, context: str) -> None:
    if not abs(achieved - target) < RESIDUAL_TOLERANCE:
        raise InfeasibleTargetError(
            f"{context}: solver residual {abs(achieved - target)!r} exceeds {RESIDUAL_TOLERANCE}"
        )


@dataclass(frozen=True)
class GroupCalibration:
    """Solved profiles for one group of pattern-identical columns."""

    group: int
    target: DependenceTarget | None
    high: ProbabilityVector
    low: ProbabilityVector
    low_parameter: float | None
    covariance: float
    correlation: float


@dataclass(frozen=True)
class CalibrationResult:
    family: str
    levels: tuple[int, ...]
    groups: tuple[GroupCalibration, ...]


def _binary_vector(mean: float) -> ProbabilityVector:
    return ProbabilityVector((1.0 - mean, mean))


def calibrate_group(
    groups: GroupStructure,
    family: str,
    high_prob: float | None = None,
    high: tuple[float, ...] | None = None,
    low: tuple[float, ...] | None = None,
) -> CalibrationResult:
    """Solve every group's target, producing its (H, L) profile pair.

    ``family`` picks the parameterisation: 'binary' and 'snp' solve targets
    against a shared high parameter ``high_prob`` (the high mean, or the
    high allele probability); 'explicit' takes literal ``high`` and ``low``
    vectors, accepts no targets, and reports the dependence they imply for
    binary or genotype level codes.
    """
    if family == "explicit":
        if groups.targets is not None:
            raise SpecError("explicit family: profiles are fixed, targets cannot be solved")
        if high is None or low is None:
            raise SpecError("explicit family: both H and L vectors are required")
        if len(high) != len(low):
            raise SpecError("explicit family: H and L lengths disagree")
        levels = tuple(range(len(high)))
        codes = [float(x) for x in levels]
        f_h = sum(x * p for x, p in zip(codes, high))
        f_l = sum(x * p for x, p in zip(codes, low))
        cov = 0.25 * (f_h - f_l) ** 2
        var_h = sum((x - f_h) ** 2 * p for x, p in zip(codes, high))
        var_l = sum((x - f_l) ** 2 * p for x, p in zip(codes, low))
        var = 0.5 * (var_h + var_l) + 0.25 * (f_h - f_l) ** 2
        cor = cov / var if var > 0.0 else math.nan
        solved = tuple(
            GroupCalibration(
                group=v,
                target=None,
                high=ProbabilityVector(tuple(high)),
                low=ProbabilityVector(tuple(low)),
                low_parameter=None,
                covariance=cov,
                correlation=cor,
            )
            for v in range(1, groups.group_count + 1)
        )
        return CalibrationResult(family, levels, solved)

    if family not in ("binary", "snp"):
        raise SpecError(f"unknown family {family!r}")
    if high_prob is None:
        raise SpecError(f"{family} family: the shared high parameter is required")
    if groups.targets is None:
        raise SpecError(f"{family} family: per-group targets are required")

    levels = (0, 1) if family == "binary" else (0, 1, 2)
    solved = []
    for v, target in enumerate(groups.targets, start=1):
        if family == "binary":
            if target.kind == "covariance":
                low_param = calibrate_binary_covariance(high_prob, target.value)
            else:
                low_param = calibrate_binary_correlation(high_prob, target.value)
            cov, cor = binary_pair_dependence(high_prob, low_param)
            high_vec = _binary_vector(high_prob)
            low_vec = _binary_vector(low_param)
        else:
            if target.kind == "covariance":
                low_param = calibrate_snp_covariance(high_prob, target.value)
            else:
                low_param = calibrate_snp_correlation(high_prob, target.value)
            cov, cor = snp_pair_dependence(high_prob, low_param)
            high_vec = ProbabilityVector(hardy_weinberg_probs(high_prob))
            low_vec = ProbabilityVector(hardy_weinberg_probs(low_param))
        solved.append(
            GroupCalibration(
                group=v,
                target=target,
                high=high_vec,
                low=low_vec,
                low_parameter=low_param,
                covariance=cov,
                correlation=cor,
            )
        )
    return CalibrationResult(family, levels, tuple(solved))
