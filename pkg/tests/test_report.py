"""Pipeline, artifact writers, manifests, and the CLI surface."""

import json
import math

import numpy as np
import pytest

from synthcat.association import AssociationMatrix
from synthcat.cli import main
from synthcat.model import GroupStructure, SpecError, load_config
from synthcat.moments import moment_matrices
from synthcat.generator import build_spec
from synthcat.report import (
    build_run,
    compare_matrices,
    run_from_manifest,
    run_pipeline,
    summarize_groups,
    within_group_averages,
    write_matrix_csv,
)

H_PROBS = [0.9025, 0.095, 0.0025]
L_PROBS = [0.0625, 0.375, 0.5625]


def explicit_config(seed=5):
    """Four groups of sizes (2,2,5,3) with literal genotype vectors."""
    return {
        "seed": seed,
        "clusters": {"n": 600},
        "groups": {
            "k": 4,
            "sizes": [2, 2, 5, 3],
            "family": "explicit",
            "H": H_PROBS,
            "L": L_PROBS,
        },
    }


def snp_config(seed=9, kind="correlation", values=(0.4, 0.5, 0.6, 0.7)):
    return {
        "seed": seed,
        "clusters": {"n": 400},
        "groups": {
            "k": 4,
            "sizes": [2, 2, 2, 2],
            "family": "snp",
            "pH": 0.95,
            "targets": [{kind: v} for v in values],
        },
    }


class TestWithinGroupAverages:
    def groups(self, sizes=(2, 2), noise=0):
        return GroupStructure(sizes=sizes, noise_count=noise)

    def test_identity_blocks_average_zero(self):
        matrix = AssociationMatrix(np.eye(4), ("a", "b", "c", "d"), "pearson")
        assert within_group_averages(matrix, self.groups()) == [0.0, 0.0]

    def test_singleton_group_is_nan(self):
        matrix = AssociationMatrix(np.eye(2), ("a", "b"), "pearson")
        out = within_group_averages(matrix, self.groups(sizes=(1, 1)))
        assert all(math.isnan(v) for v in out)

    def test_dimension_mismatch(self):
        matrix = AssociationMatrix(np.eye(3), ("a", "b", "c"), "pearson")
        with pytest.raises(SpecError, match="dimension"):
            within_group_averages(matrix, self.groups())

    def test_trailing_noise_columns_are_ignored(self):
        values = np.eye(5)
        values[4, 0] = values[0, 4] = 0.9
        matrix = AssociationMatrix(values, ("a", "b", "c", "d", "n1"), "pearson")
        out = within_group_averages(matrix, self.groups(noise=1))
        assert out == [0.0, 0.0]

    def test_recovers_shared_group_covariance(self):
        built = build_spec(load_config(snp_config(kind="covariance", values=(0.2,) * 4)))
        moments = moment_matrices(built.spec.profile, built.spec.clusters)
        names = tuple(v.name for v in built.spec.profile.variables)
        matrix = AssociationMatrix(moments.covariance, names, "covariance")
        out = within_group_averages(matrix, built.groups)
        assert out == pytest.approx([0.2] * 4, abs=1e-12)


class TestSummaries:
    def test_fields_and_gap(self):
        built = build_spec(load_config(snp_config()))
        moments = moment_matrices(built.spec.profile, built.spec.clusters)
        names = tuple(v.name for v in built.spec.profile.variables)
        theoretical = AssociationMatrix(moments.correlation, names, "pearson")
        rows = summarize_groups(built.groups, theoretical, theoretical)
        assert [s.group for s in rows] == [1, 2, 3, 4]
        assert [s.size for s in rows] == [2, 2, 2, 2]
        assert [s.target_kind for s in rows] == ["correlation"] * 4
        assert [s.target_value for s in rows] == [0.4, 0.5, 0.6, 0.7]
        for s in rows:
            assert s.theoretical == pytest.approx(s.target_value, abs=1e-9)
            assert s.gap == 0.0

    def test_explicit_groups_have_no_target(self):
        result = build_run(load_config(explicit_config()))
        assert result.summaries is not None
        assert all(s.target_kind is None for s in result.summaries)


class TestCompareMatrices:
    def test_identical_matrices(self):
        values = np.array([[1.0, 0.4], [0.4, 1.0]])
        matrix = AssociationMatrix(values, ("a", "b"), "pearson")
        report = compare_matrices(matrix, matrix)
        assert report.max_abs_gap == 0.0
        assert report.mean_abs_gap == 0.0
        assert report.sign_agreement == 1.0

    def test_nan_cells_are_excluded(self):
        base = np.array([[1.0, np.nan], [np.nan, 1.0]])
        matrix = AssociationMatrix(base, ("a", "b"), "pearson")
        report = compare_matrices(matrix, matrix)
        assert report.max_abs_gap == 0.0
        assert math.isnan(report.sign_agreement)

    def test_dimension_mismatch(self):
        a = AssociationMatrix(np.eye(2), ("a", "b"), "pearson")
        b = AssociationMatrix(np.eye(3), ("a", "b", "c"), "pearson")
        with pytest.raises(SpecError, match="dimensions"):
            compare_matrices(a, b)

    def test_sample_tracks_theory(self):
        result = build_run(load_config(snp_config(seed=31)))
        names = tuple(v.name for v in result.built.spec.profile.variables)
        theoretical = AssociationMatrix(result.moments.correlation, names, "pearson")
        report = compare_matrices(theoretical, result.sample_pearson)
        assert report.mean_abs_gap < 0.05
        assert report.sign_agreement == 1.0


class TestBuildRun:
    @pytest.mark.filterwarnings("ignore:identifiability")
    def test_profile_config_has_no_summaries(self):
        config = load_config(
            {
                "seed": 2,
                "clusters": {"C": 2, "n": 40},
                "variables": [{"name": "a", "levels": [0, 1]}],
                "profile": [[[0.2, 0.8]], [[0.8, 0.2]]],
            }
        )
        result = build_run(config)
        assert result.summaries is None
        assert result.dataset.subjects == 40

    def test_covariance_targets_compare_on_covariance_scale(self):
        result = build_run(load_config(snp_config(kind="covariance", values=(0.3,) * 4)))
        for s in result.summaries:
            assert s.theoretical == pytest.approx(0.3, abs=1e-12)
            assert abs(s.sample - 0.3) < 0.15

    def test_correlation_targets_compare_on_correlation_scale(self):
        result = build_run(load_config(snp_config(seed=12)))
        for s, target in zip(result.summaries, (0.4, 0.5, 0.6, 0.7)):
            assert s.theoretical == pytest.approx(target, abs=1e-9)
            assert abs(s.sample - target) < 0.15

    def test_noise_columns_flow_through(self):
        config = snp_config(seed=8)
        config["noise"] = [
            {"name": "a1", "levels": [0, 1, 2], "probs": [0.25, 0.5, 0.25]}
        ]
        result = build_run(load_config(config))
        assert result.dataset.values.shape == (400, 9)
        assert len(result.summaries) == 4


class TestWriters:
    def test_matrix_csv_round_trip(self, tmp_path):
        values = np.array([[1.0, 0.5], [0.5, 1.0]])
        path = tmp_path / "m.csv"
        write_matrix_csv(path, values, ("a", "b"))
        lines = path.read_text().strip().splitlines()
        assert lines[0] == ",a,b"
        parsed = np.array(
            [[float(x) for x in line.split(",")[1:]] for line in lines[1:]]
        )
        assert np.array_equal(parsed, values)

    def test_nan_renders_as_nan(self, tmp_path):
        path = tmp_path / "m.csv"
        write_matrix_csv(path, np.array([[1.0, np.nan], [np.nan, 1.0]]), ("a", "b"))
        assert "nan" in path.read_text()


class TestPipeline:
    def test_explicit_run_writes_seven_artifacts(self, tmp_path):
        paths = run_pipeline(explicit_config(), tmp_path / "run")
        assert sorted(paths) == [
            "allocation.txt",
            "dataset.csv",
            "group_summary.csv",
            "manifest.json",
            "sample_pearson.csv",
            "theoretical_correlation.csv",
            "theoretical_covariance.csv",
        ]
        header = (tmp_path / "run" / "dataset.csv").read_text().splitlines()[0]
        assert header.split(",") == [f"x{p}" for p in range(1, 13)]

    def test_targeted_run_adds_the_calibration_report(self, tmp_path):
        paths = run_pipeline(snp_config(), tmp_path / "run")
        assert "calibration_report.csv" in paths
        lines = paths["calibration_report.csv"].read_text().strip().splitlines()
        assert len(lines) == 5
        assert lines[1].startswith("1,snp,correlation,0.4,")

    def test_group_summary_reproduces_targets(self, tmp_path):
        paths = run_pipeline(snp_config(), tmp_path / "run")
        lines = paths["group_summary.csv"].read_text().strip().splitlines()
        targets = [float(line.split(",")[3]) for line in lines[1:]]
        theoretical = [float(line.split(",")[4]) for line in lines[1:]]
        assert targets == [0.4, 0.5, 0.6, 0.7]
        assert theoretical == pytest.approx(targets, abs=1e-9)

    def test_two_runs_are_byte_identical(self, tmp_path):
        first = run_pipeline(explicit_config(), tmp_path / "a")
        second = run_pipeline(explicit_config(), tmp_path / "b")
        for name in first:
            assert first[name].read_bytes() == second[name].read_bytes()

    def test_thread_count_never_changes_bytes(self, tmp_path):
        serial = run_pipeline(explicit_config(), tmp_path / "a", threads=1)
        parallel = run_pipeline(explicit_config(), tmp_path / "b", threads=8)
        for name in serial:
            assert serial[name].read_bytes() == parallel[name].read_bytes()

    def test_seed_override_is_recorded_and_matters(self, tmp_path):
        base = run_pipeline(explicit_config(), tmp_path / "a")
        overridden = run_pipeline(explicit_config(), tmp_path / "b", seed=99)
        manifest = json.loads(overridden["manifest.json"].read_text())
        assert manifest["seed"] == 99
        assert manifest["config"]["seed"] == 99
        assert base["dataset.csv"].read_bytes() != overridden["dataset.csv"].read_bytes()

    def test_manifest_hashes_match_files(self, tmp_path):
        paths = run_pipeline(explicit_config(), tmp_path / "run")
        manifest = json.loads(paths["manifest.json"].read_text())
        import hashlib

        for name, recorded in manifest["artifacts"].items():
            assert hashlib.sha256(paths[name].read_bytes()).hexdigest() == recorded

    def test_rerun_from_manifest(self, tmp_path):
        paths = run_pipeline(snp_config(), tmp_path / "a", shuffle=True)
        rerun = run_from_manifest(paths["manifest.json"], tmp_path / "b")
        for name in paths:
            assert paths[name].read_bytes() == rerun[name].read_bytes()

    def test_tampered_manifest_is_caught(self, tmp_path):
        paths = run_pipeline(explicit_config(), tmp_path / "a")
        manifest = json.loads(paths["manifest.json"].read_text())
        manifest["artifacts"]["dataset.csv"] = "0" * 64
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(manifest))
        with pytest.raises(SpecError, match="hash mismatch"):
            run_from_manifest(bad, tmp_path / "b")


def write_config(tmp_path, config, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


class TestCli:
    def test_generate(self, tmp_path, capsys):
        config = write_config(tmp_path, explicit_config())
        assert main(["generate", "--config", config, "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "dataset.csv").exists()
        assert (tmp_path / "o" / "allocation.txt").exists()
        assert "600 x 12" in capsys.readouterr().out

    def test_moments(self, tmp_path):
        config = write_config(tmp_path, explicit_config())
        assert main(["moments", "--config", config, "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "theoretical_covariance.csv").exists()
        assert (tmp_path / "o" / "theoretical_correlation.csv").exists()

    def test_calibrate(self, tmp_path):
        config = write_config(tmp_path, snp_config())
        assert main(["calibrate", "--config", config, "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "calibration_report.csv").exists()

    def test_calibrate_needs_groups(self, tmp_path, capsys):
        config = write_config(
            tmp_path,
            {
                "seed": 2,
                "clusters": {"C": 2, "n": 40},
                "variables": [{"name": "a", "levels": [0, 1]}],
                "profile": [[[0.2, 0.8]], [[0.8, 0.2]]],
            },
        )
        assert main(["calibrate", "--config", config, "--out", str(tmp_path / "o")]) == 2
        assert "error" in capsys.readouterr().err

    def test_infeasible_target_exits_three(self, tmp_path, capsys):
        config = write_config(tmp_path, snp_config(values=(0.4, 0.99, 0.4, 0.4)))
        assert main(["calibrate", "--config", config, "--out", str(tmp_path / "o")]) == 3
        assert "error" in capsys.readouterr().err

    def test_associate_from_csv(self, tmp_path):
        data = tmp_path / "data.csv"
        data.write_text("a,b\n0,1\n1,0\n0,1\n1,1\n")
        out = tmp_path / "o"
        assert main(["associate", "--data", str(data), "--measure", "v", "--out", str(out)]) == 0
        assert (out / "v_matrix.csv").exists()
        assert (out / "v_long.csv").read_text().startswith("p,q,value")

    def test_associate_from_config(self, tmp_path):
        config = write_config(tmp_path, explicit_config())
        out = tmp_path / "o"
        assert main(["associate", "--config", config, "--measure", "tauc", "--out", str(out)]) == 0
        assert (out / "tauc_matrix.csv").exists()

    def test_associate_needs_exactly_one_source(self, tmp_path, capsys):
        config = write_config(tmp_path, explicit_config())
        data = tmp_path / "data.csv"
        data.write_text("a\n0\n1\n")
        out = str(tmp_path / "o")
        assert main(["associate", "--out", out]) == 2
        assert main(["associate", "--config", config, "--data", str(data), "--out", out]) == 2
        capsys.readouterr()

    def test_associate_rejects_bad_csv(self, tmp_path, capsys):
        data = tmp_path / "data.csv"
        data.write_text("a,b\n0,x\n")
        assert main(["associate", "--data", str(data), "--out", str(tmp_path / "o")]) == 2
        assert "integer CSV" in capsys.readouterr().err

    def test_report(self, tmp_path):
        config = write_config(tmp_path, snp_config())
        out = tmp_path / "o"
        assert main(["report", "--config", config, "--out", str(out)]) == 0
        comparison = json.loads((out / "comparison.json").read_text())
        assert set(comparison) == {"max_abs_gap", "mean_abs_gap", "sign_agreement"}
        assert (out / "group_summary.csv").exists()

    def test_pipeline(self, tmp_path):
        config = write_config(tmp_path, explicit_config())
        out = tmp_path / "o"
        assert main(["pipeline", "--config", config, "--out", str(out)]) == 0
        assert (out / "manifest.json").exists()

    def test_seed_flag_changes_output(self, tmp_path):
        config = write_config(tmp_path, explicit_config())
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["generate", "--config", config, "--out", str(a), "--seed", "1"]) == 0
        assert main(["generate", "--config", config, "--out", str(b), "--seed", "2"]) == 0
        assert (a / "dataset.csv").read_bytes() != (b / "dataset.csv").read_bytes()

    def test_missing_config_file(self, tmp_path, capsys):
        missing = str(tmp_path / "nope.json")
        assert main(["generate", "--config", missing, "--out", str(tmp_path / "o")]) == 2
        capsys.readouterr()

    def test_malformed_json(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["generate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
        capsys.readouterr()

    def test_bad_spec_config(self, tmp_path, capsys):
        config = write_config(tmp_path, {"clusters": {"n": 10}})
        assert main(["generate", "--config", config, "--out", str(tmp_path / "o")]) == 2
        assert "error" in capsys.readouterr().err
