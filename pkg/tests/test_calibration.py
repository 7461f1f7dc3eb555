"""Calibration: genotype family, closed forms, bisection round-trips."""

import math

import numpy as np
import pytest

from synthcat.calibration import (
    binary_mixture_variance,
    binary_pair_dependence,
    calibrate_binary_correlation,
    calibrate_binary_covariance,
    calibrate_group,
    calibrate_snp_correlation,
    calibrate_snp_covariance,
    hardy_weinberg_moments,
    hardy_weinberg_probs,
    snp_mixture_variance,
    snp_pair_dependence,
)
from synthcat.model import (
    ClusterSpec,
    DependenceTarget,
    GroupStructure,
    InfeasibleTargetError,
    ProfileMatrix,
    SpecError,
    VariableDomain,
)
from synthcat.moments import moment_matrices


class TestHardyWeinberg:
    def test_known_vectors(self):
        assert hardy_weinberg_probs(0.25) == pytest.approx((0.0625, 0.375, 0.5625))
        assert hardy_weinberg_probs(0.95) == pytest.approx((0.9025, 0.095, 0.0025))
        assert hardy_weinberg_probs(0.5) == pytest.approx((0.25, 0.5, 0.25))

    def test_vectors_always_normalise(self):
        for p in np.linspace(0.01, 0.99, 50):
            assert sum(hardy_weinberg_probs(p)) == pytest.approx(1.0, abs=1e-15)

    def test_moments(self):
        mean, var = hardy_weinberg_moments(0.25)
        assert mean == pytest.approx(1.5)
        assert var == pytest.approx(0.375)
        mean, var = hardy_weinberg_moments(0.95)
        assert mean == pytest.approx(0.1)
        assert var == pytest.approx(0.095)

    def test_boundary_warns(self):
        with pytest.warns(UserWarning, match="degenerate"):
            hardy_weinberg_probs(1.0)
        with pytest.raises(SpecError):
            hardy_weinberg_probs(1.5)

    def test_moments_match_direct_expectation(self):
        for p in np.linspace(0.05, 0.95, 19):
            probs = np.asarray(hardy_weinberg_probs(p))
            codes = np.array([0.0, 1.0, 2.0])
            mean, var = hardy_weinberg_moments(p)
            assert mean == pytest.approx(codes @ probs, abs=1e-14)
            assert var == pytest.approx((codes - mean) ** 2 @ probs, abs=1e-14)


class TestMixtureVariances:
    def test_binary(self):
        # Mix of Bernoulli(0.9) and Bernoulli(0.1) is marginally Bernoulli(0.5).
        assert binary_mixture_variance(0.9, 0.1) == pytest.approx(0.25)

    def test_snp_special_points(self):
        for ph in (0.3, 0.5, 0.95):
            assert snp_mixture_variance(ph, ph) == pytest.approx(2 * ph * (1 - ph))
            assert snp_mixture_variance(ph, 0.0) == pytest.approx(ph)

    def test_snp_matches_exact_mixture_moments(self):
        rng = np.random.default_rng(8)
        variables = (VariableDomain("s", (0, 1, 2)),)
        for _ in range(25):
            ph, pl = rng.uniform(0.05, 0.95, size=2)
            from synthcat.model import ProbabilityVector

            profile = ProfileMatrix(
                variables,
                (
                    (ProbabilityVector(hardy_weinberg_probs(ph)),),
                    (ProbabilityVector(hardy_weinberg_probs(pl)),),
                ),
            )
            matrices = moment_matrices(profile, ClusterSpec.uniform(2, 10))
            assert snp_mixture_variance(ph, pl) == pytest.approx(
                matrices.variances[0], abs=1e-13
            )


class TestBinarySolvers:
    def test_covariance_closed_form(self):
        low = calibrate_binary_covariance(0.8, 0.04)
        assert low == pytest.approx(0.8 - 2 * 0.2)
        cov, _ = binary_pair_dependence(0.8, low)
        assert cov == pytest.approx(0.04, abs=1e-15)

    def test_covariance_feasibility(self):
        limit = (0.8 / 2) ** 2
        assert calibrate_binary_covariance(0.8, limit) == pytest.approx(0.0)
        with pytest.raises(InfeasibleTargetError):
            calibrate_binary_covariance(0.8, limit + 1e-9)
        with pytest.raises(InfeasibleTargetError):
            calibrate_binary_covariance(0.8, 0.0)

    def test_correlation_round_trip(self):
        for high in (0.6, 0.8, 0.95):
            ceiling = high / (2 - high)
            for target in np.linspace(0.05, ceiling - 0.02, 12):
                low = calibrate_binary_correlation(high, float(target))
                _, cor = binary_pair_dependence(high, low)
                assert cor == pytest.approx(target, abs=1e-10)

    def test_correlation_ceiling(self):
        ceiling = 0.8 / (2 - 0.8)
        with pytest.raises(InfeasibleTargetError, match="ceiling"):
            calibrate_binary_correlation(0.8, ceiling)
        with pytest.raises(InfeasibleTargetError):
            calibrate_binary_correlation(0.8, 1.0)


class TestSnpSolvers:
    def test_covariance_closed_form_is_literal(self):
        # The solver must be exactly high - sqrt(cov), bit for bit.
        assert calibrate_snp_covariance(0.95, 0.45) == 0.95 - math.sqrt(0.45)

    def test_covariance_round_trip(self):
        for cov in np.arange(0.1, 0.451, 0.05):
            low = calibrate_snp_covariance(0.95, float(cov))
            achieved, _ = snp_pair_dependence(0.95, low)
            assert achieved == pytest.approx(cov, abs=1e-12)

    def test_covariance_feasibility(self):
        with pytest.raises(InfeasibleTargetError):
            calibrate_snp_covariance(0.95, 0.95**2)
        with pytest.raises(InfeasibleTargetError):
            calibrate_snp_covariance(0.95, 0.0)
        with pytest.raises(SpecError):
            calibrate_snp_covariance(1.0, 0.1)

    def test_correlation_round_trip(self):
        for target in (0.4, 0.5, 0.6, 0.7, 0.8):
            low = calibrate_snp_correlation(0.95, target)
            _, cor = snp_pair_dependence(0.95, low)
            assert cor == pytest.approx(target, abs=1e-10)
            assert 0.0 < low < 0.95

    def test_correlation_round_trip_near_the_ceiling(self):
        low = calibrate_snp_correlation(0.99, 0.98)
        _, cor = snp_pair_dependence(0.99, low)
        assert cor == pytest.approx(0.98, abs=1e-10)

    def test_correlation_ceiling_is_the_high_parameter(self):
        with pytest.raises(InfeasibleTargetError, match="ceiling"):
            calibrate_snp_correlation(0.95, 0.95)
        with pytest.raises(InfeasibleTargetError, match="ceiling"):
            calibrate_snp_correlation(0.95, 0.96)

    def test_solutions_are_seedless_and_repeatable(self):
        first = [calibrate_snp_correlation(0.95, t) for t in (0.4, 0.6, 0.8)]
        second = [calibrate_snp_correlation(0.95, t) for t in (0.4, 0.6, 0.8)]
        assert first == second


class TestCalibrateGroup:
    def structure(self, kind, values):
        return GroupStructure(
            sizes=(2, 2, 5, 3),
            targets=tuple(DependenceTarget(kind, v) for v in values),
        )

    def test_snp_shared_covariance(self):
        result = calibrate_group(self.structure("covariance", [0.45] * 4), "snp", high_prob=0.95)
        assert result.levels == (0, 1, 2)
        for g in result.groups:
            assert g.low_parameter == 0.95 - math.sqrt(0.45)
            assert g.covariance == pytest.approx(0.45, abs=1e-12)
            assert g.high.probs == pytest.approx(hardy_weinberg_probs(0.95))

    def test_snp_mixed_correlations(self):
        result = calibrate_group(
            self.structure("correlation", [0.4, 0.5, 0.6, 0.7]), "snp", high_prob=0.95
        )
        for g, target in zip(result.groups, (0.4, 0.5, 0.6, 0.7)):
            assert g.correlation == pytest.approx(target, abs=1e-10)

    def test_binary_family(self):
        result = calibrate_group(
            self.structure("correlation", [0.2, 0.3, 0.2, 0.1]), "binary", high_prob=0.8
        )
        assert result.levels == (0, 1)
        for g, target in zip(result.groups, (0.2, 0.3, 0.2, 0.1)):
            assert g.correlation == pytest.approx(target, abs=1e-10)
            assert g.high.probs == pytest.approx((0.2, 0.8))

    def test_explicit_family_reports_implied_dependence(self):
        structure = GroupStructure(sizes=(3, 3, 3, 3))
        high = hardy_weinberg_probs(0.95)
        low = hardy_weinberg_probs(0.25)
        result = calibrate_group(structure, "explicit", high=high, low=low)
        f_h, _ = hardy_weinberg_moments(0.95)
        f_l, _ = hardy_weinberg_moments(0.25)
        expected_cov = 0.25 * (f_h - f_l) ** 2
        for g in result.groups:
            assert g.covariance == pytest.approx(expected_cov, abs=1e-14)
            assert g.target is None

    def test_explicit_family_rejects_targets(self):
        with pytest.raises(SpecError, match="targets"):
            calibrate_group(
                self.structure("covariance", [0.1] * 4), "explicit",
                high=(0.5, 0.5), low=(0.9, 0.1),
            )

    def test_missing_requirements(self):
        with pytest.raises(SpecError, match="high parameter"):
            calibrate_group(self.structure("covariance", [0.1] * 4), "snp")
        with pytest.raises(SpecError, match="targets"):
            calibrate_group(GroupStructure(sizes=(2, 2)), "snp", high_prob=0.9)
        with pytest.raises(SpecError, match="family"):
            calibrate_group(self.structure("covariance", [0.1] * 4), "poisson", high_prob=0.9)

    def test_infeasible_group_is_reported(self):
        with pytest.raises(InfeasibleTargetError):
            calibrate_group(
                self.structure("correlation", [0.4, 0.96, 0.4, 0.4]), "snp", high_prob=0.95
            )
