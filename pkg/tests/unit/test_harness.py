"""
Tests for the experiment harness: configuration, manifests, emission,
experiment validation, the runner and the command line.
"""

import json
import sys
import os

import numpy as np
import pandas as pd
import pytest

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..', 'src'))

from nradial_sle_lab import __version__
from nradial_sle_lab.harness import cli
from nradial_sle_lab.harness.config import (
    DEFAULT_OUT_DIR,
    OUT_DIR_ENV,
    ConfigValidationError,
    ExperimentConfig,
    as_float_list,
    as_int_list,
    coerce,
    load_config,
    resolve_out_dir,
)
from nradial_sle_lab.harness.emit import SCHEMAS, emit, schema_versions, to_frame
from nradial_sle_lab.harness.experiments.approx import DiscreteApproxExperiment
from nradial_sle_lab.harness.experiments.base import ExperimentResult
from nradial_sle_lab.harness.experiments.decay import DecayFitExperiment
from nradial_sle_lab.harness.experiments.dyson import DysonExperiment
from nradial_sle_lab.harness.experiments.identities import IdentitySuiteExperiment
from nradial_sle_lab.harness.experiments.lattice import LatticeExperiment, loop_check_domains, lookup_sum
from nradial_sle_lab.harness.experiments.trace import LoewnerTraceExperiment
from nradial_sle_lab.harness.manifest import ExperimentManifest, canonical_json, jsonable
from nradial_sle_lab.harness.runner import (
    EXPERIMENTS,
    MANIFEST_NAME,
    SUMMARY_NAME,
    AcceptanceFailure,
    build_experiment,
    run_experiment,
)

SMALL_LATTICE = {
    "domain": "rect 3x3",
    "starts": "0,0; 2,2",
    "target": "1,1",
    "c_values": "0",
    "betas": "1",
    "loop_max_sites": 4,
}


def write_ini(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestConfig:
    """Test INI parsing and override precedence."""

    def test_coerce(self):
        """Test value coercion."""
        assert coerce(" 3 ") == 3
        assert coerce("0.5") == 0.5
        assert coerce("1e-4") == 1e-4
        assert coerce("yes") is True
        assert coerce("Off") is False
        assert coerce("rect 4x4") == "rect 4x4"

    def test_lists(self):
        """Test comma-separated lists."""
        assert as_float_list("1, 1.5,2", "times") == [1.0, 1.5, 2.0]
        assert as_float_list(3, "times") == [3.0]
        assert as_int_list("4, 5, 6", "h") == [4, 5, 6]
        with pytest.raises(ConfigValidationError, match="times"):
            as_float_list("1, x", "times")
        with pytest.raises(ConfigValidationError, match="integers"):
            as_int_list("1.5", "h")

    def test_experiment_config_validation(self):
        """Test kind, seed and thread validation."""
        with pytest.raises(ConfigValidationError, match="unknown experiment kind") as info:
            ExperimentConfig(kind="portfolio")
        assert info.value.field == "kind"
        with pytest.raises(ConfigValidationError, match="seed"):
            ExperimentConfig(kind="dyson", seed=-1)
        with pytest.raises(ConfigValidationError, match="threads"):
            ExperimentConfig(kind="dyson", threads=0)

    def test_out_dir_precedence(self, monkeypatch):
        """Test CLI over environment over file over default."""
        monkeypatch.delenv(OUT_DIR_ENV, raising=False)
        assert resolve_out_dir() == DEFAULT_OUT_DIR
        assert resolve_out_dir(file_value="from-file") == "from-file"
        monkeypatch.setenv(OUT_DIR_ENV, "from-env")
        assert resolve_out_dir(file_value="from-file") == "from-env"
        assert resolve_out_dir("from-cli", "from-file") == "from-cli"

    def test_load_config(self, tmp_path, monkeypatch):
        """Test reading sections and applying overrides."""
        monkeypatch.delenv(OUT_DIR_ENV, raising=False)
        path = write_ini(tmp_path / "decay.ini", (
            "[experiment]\nkind = decay-fit\nseed = 7\nthreads = 2\nout_dir = runs\n\n"
            "[params]\nalpha = 1\ntimes = 1, 2, 3\n\n[acceptance]\nslope_rel_tol = 0.1\n"
        ))
        config = load_config(path)
        assert config.kind == "decay-fit"
        assert config.seed == 7
        assert config.threads == 2
        assert config.out_dir == "runs"
        assert config.params == {"alpha": 1, "times": "1, 2, 3"}
        assert config.acceptance == {"slope_rel_tol": 0.1}
        assert config.source == str(path)

        overridden = load_config(path, kind="decay-fit", seed=1, threads=4, out_dir="elsewhere")
        assert (overridden.seed, overridden.threads, overridden.out_dir) == (1, 4, "elsewhere")

    def test_load_config_defaults(self, monkeypatch):
        """Test that a subcommand alone yields a default config."""
        monkeypatch.delenv(OUT_DIR_ENV, raising=False)
        config = load_config(None, kind="lattice")
        assert config.params == {}
        assert config.seed == 0
        assert config.threads == 1
        assert config.source is None

    def test_load_config_errors(self, tmp_path):
        """Test kind conflicts, missing kinds and unreadable files."""
        path = write_ini(tmp_path / "trace.ini", "[experiment]\nkind = loewner-trace\n")
        with pytest.raises(ConfigValidationError, match="but the command runs"):
            load_config(path, kind="lattice")
        with pytest.raises(ConfigValidationError, match="kind: missing"):
            load_config(write_ini(tmp_path / "empty.ini", "[params]\nn = 2\n"))
        with pytest.raises(ConfigValidationError, match="cannot read"):
            load_config(tmp_path / "absent.ini", kind="lattice")
        with pytest.raises(ConfigValidationError, match="cannot parse"):
            load_config(write_ini(tmp_path / "broken.ini", "no section header\n"), kind="lattice")


class TestManifest:
    """Test manifest hashing and persistence."""

    def make(self, **overrides):
        fields = dict(kind="lattice", params={"cap": 0, "domain": "rect 4x4"}, acceptance={"enforce": True},
                      seed=3)
        fields.update(overrides)
        return ExperimentManifest(**fields)

    def test_hash_ignores_run_details(self):
        """Test that wall-clock time, outputs and checks do not affect the hash."""
        first = self.make()
        second = self.make(wall_clock_seconds=12.5, outputs=["lattice.csv"], checks={"positive": True})
        assert first.hash == second.hash
        assert len(first.hash) == 64
        assert first.hash12 == first.hash[:12]
        assert first.run_name == f"lattice-{first.hash12}"
        assert first.version == __version__

    def test_hash_tracks_inputs(self):
        """Test that seed, parameters and thresholds change the hash."""
        base = self.make()
        assert self.make(seed=4).hash != base.hash
        assert self.make(params={"cap": 1, "domain": "rect 4x4"}).hash != base.hash
        assert self.make(acceptance={"enforce": False}).hash != base.hash
        assert self.make(params={"domain": "rect 4x4", "cap": 0}).hash == base.hash

    def test_passed(self):
        """Test the pass flag."""
        assert self.make(checks={"a": True, "b": True}).passed
        assert not self.make(checks={"a": True, "b": False}).passed

    def test_write_and_read(self, tmp_path):
        """Test that a written manifest reads back with the same hash."""
        manifest = self.make(step_counts={"rows": np.int64(8)}, checks={"positive": True})
        path = manifest.write(tmp_path / MANIFEST_NAME)
        payload = json.loads(path.read_text(encoding="utf-8"))
        assert payload["hash"] == manifest.hash
        assert payload["step_counts"] == {"rows": 8}
        assert ExperimentManifest.read(path).hash == manifest.hash

    def test_jsonable(self):
        """Test the JSON default hook."""
        assert jsonable(np.float64(0.5)) == 0.5
        assert jsonable(np.arange(3)) == [0, 1, 2]
        with pytest.raises(TypeError):
            jsonable(object())
        assert canonical_json({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'


class TestEmit:
    """Test CSV and JSON emission."""

    def test_header_only_csv(self, tmp_path):
        """Test that empty results still carry the header."""
        path = emit([], "csv", tmp_path / "lattice.csv", schema="lattice")
        assert path.read_text(encoding="utf-8") == "beta,c,n,partition_sum\n"

    def test_csv_column_order(self, tmp_path):
        """Test that columns follow the schema and floats round-trip."""
        rows = [{"partition_sum": 0.1, "n": 1, "c": -2.0, "beta": 1.0 / 3.0}]
        path = emit(rows, "csv", tmp_path / "out" / "lattice.csv", schema="lattice")
        frame = pd.read_csv(path, float_precision="round_trip")
        assert list(frame.columns) == SCHEMAS["lattice"].columns
        assert frame["beta"].iloc[0] == 1.0 / 3.0
        assert frame["partition_sum"].iloc[0] == 0.1

    def test_missing_columns(self):
        """Test that incomplete rows are rejected."""
        with pytest.raises(ValueError, match="lack columns"):
            to_frame([{"beta": 1.0}], "lattice")

    def test_json(self, tmp_path):
        """Test that JSON output records the manifest hash."""
        path = emit({"order": 1.1, "values": np.array([1.0, 2.0])}, "json", tmp_path / "s.json",
                    manifest_hash="abc")
        payload = json.loads(path.read_text(encoding="utf-8"))
        assert payload == {"order": 1.1, "values": [1.0, 2.0], "manifest_hash": "abc"}

    def test_unknown_format(self, tmp_path):
        """Test the format check."""
        with pytest.raises(ValueError, match="format"):
            emit([], "parquet", tmp_path / "x.parquet")

    def test_schema_versions(self):
        """Test the version map."""
        assert schema_versions(["lattice", "trace"]) == {"lattice": 1, "trace": 1}


class TestExperimentValidation:
    """Test parameter validation of every experiment kind."""

    def test_registry(self):
        """Test that every kind has an experiment."""
        assert set(EXPERIMENTS) == {"identity-suite", "dyson", "loewner-trace", "decay-fit",
                                    "discrete-approx", "lattice"}

    def test_unknown_parameter(self):
        """Test that unknown parameters name themselves."""
        with pytest.raises(ConfigValidationError) as info:
            LatticeExperiment({"bogus": 1})
        assert info.value.field == "bogus"

    def test_defaults_validate(self):
        """Test that every kind accepts its own defaults."""
        for cls in EXPERIMENTS.values():
            experiment = cls()
            assert experiment.acceptance["enforce"] is True
            assert set(experiment.params) == set(cls.default_params)

    def test_detailed_balance_defaults(self):
        """Test that detailed balance runs 40 bins over 10^6 samples by default."""
        experiment = DysonExperiment()
        assert experiment.params["db_bins"] == 40
        assert experiment.params["db_paths"] == 1_000_000

    def test_trace_kappa_bound(self):
        """Test that kappa >= 8 is rejected for the n-radial law."""
        with pytest.raises(ConfigValidationError, match="κ < 8") as info:
            LoewnerTraceExperiment({"kappa": 9.0})
        assert info.value.field == "kappa"
        with pytest.raises(ConfigValidationError, match="refine"):
            LoewnerTraceExperiment({"refine": -1})

    def test_approx_validation(self):
        """Test the approximation parameters."""
        with pytest.raises(ConfigValidationError, match="kappa"):
            DiscreteApproxExperiment({"kappa": 8.0})
        with pytest.raises(ConfigValidationError, match="h_exponents"):
            DiscreteApproxExperiment({"h_exponents": "4, 5"})
        with pytest.raises(ConfigValidationError, match="start"):
            DiscreteApproxExperiment({"start": "1, -1"})

    def test_decay_validation(self):
        """Test the decay-fit parameters."""
        with pytest.raises(ConfigValidationError, match="times"):
            DecayFitExperiment({"times": "1, 2"})
        with pytest.raises(ConfigValidationError, match="method"):
            DecayFitExperiment({"method": "guess"})

    def test_dyson_validation(self):
        """Test the Dyson parameters."""
        with pytest.raises(ConfigValidationError, match="checks"):
            DysonExperiment({"checks": "martingale, telepathy"})
        with pytest.raises(ConfigValidationError, match="alpha >= 1/4"):
            DysonExperiment({"alpha": 0.2})
        DysonExperiment({"alpha": 0.2, "checks": "feynman-kac"})
        with pytest.raises(ConfigValidationError, match="theta0"):
            DysonExperiment({"theta0": "0.1, 0.2, 0.3"}).start_config()

    def test_start_config_membership(self):
        """Test that start angles must be ordered, span less than pi and clear the gap floor."""
        with pytest.raises(ConfigValidationError, match="increase strictly"):
            DysonExperiment({"theta0": "1.0, 0.2"}).start_config()
        with pytest.raises(ConfigValidationError, match="theta0"):
            DysonExperiment({"theta0": "0.0, 3.2"}).start_config()
        with pytest.raises(ConfigValidationError, match="above 0.02"):
            DysonExperiment({"theta0": "0.0, 0.01"}).start_config()
        cfg = DysonExperiment({"theta0": "0.3, 1.9"}).start_config()
        assert cfg.angles == pytest.approx((0.3, 1.9))

    def test_identity_validation(self):
        """Test the identity-suite parameters."""
        with pytest.raises(ConfigValidationError, match="fd_min_gap"):
            IdentitySuiteExperiment({"fd_min_gap": 1.0})
        with pytest.raises(ConfigValidationError, match="n_max"):
            IdentitySuiteExperiment({"n_min": 4, "n_max": 3})

    def test_lattice_validation(self):
        """Test the lattice parameters."""
        with pytest.raises(ConfigValidationError, match="starts"):
            LatticeExperiment({**SMALL_LATTICE, "starts": "0,0; 5,5"})
        with pytest.raises(ConfigValidationError, match="boundary"):
            LatticeExperiment({**SMALL_LATTICE, "starts": "1,1; 0,0"})
        with pytest.raises(ConfigValidationError, match="n_values"):
            LatticeExperiment({**SMALL_LATTICE, "n_values": "1, 3"})
        with pytest.raises(ConfigValidationError, match="loop_max_len"):
            LatticeExperiment({**SMALL_LATTICE, "loop_max_len": 7})
        with pytest.raises(ConfigValidationError, match="domain"):
            LatticeExperiment({**SMALL_LATTICE, "domain": "hexagon"})

    def test_build_experiment(self):
        """Test that build_experiment forwards seed and mapper."""
        config = ExperimentConfig(kind="lattice", params=dict(SMALL_LATTICE), seed=5)
        experiment = build_experiment(config, mapper=map)
        assert isinstance(experiment, LatticeExperiment)
        assert experiment.seed == 5
        assert experiment.mapper is map


class TestExperimentExecution:
    """Test small experiment runs."""

    def test_identity_suite(self):
        """Test that a small identity suite passes."""
        result = IdentitySuiteExperiment({"n_min": 2, "n_max": 3, "n_configs": 200, "fd_configs": 5,
                                          "alphas": "1"}, seed=1).execute()
        table = result.tables["identity_checks"]
        assert set(table["check"]) == {"cot_identity", "gradient", "laplacian", "product_points",
                                       "parameter_formulas"}
        assert table.loc[table["check"] == "cot_identity", "passed"].all()
        assert table.loc[table["check"] == "parameter_formulas", "passed"].all()
        assert result.summary["n_checks"] == len(table)

    def test_dyson_step_size_and_variance_rows(self):
        """Test the step-size row and the variance-reduction row at t >= 2."""
        result = DysonExperiment({"checks": "feynman-kac, step-size", "alpha": 1.0, "fk_times": "0.5, 2",
                                  "step_t": 0.5, "n_paths": 2000, "dt": 1e-2, "batch_size": 500},
                                 seed=6).execute()
        assert set(result.checks) == {"feynman-kac[t=0.5]", "feynman-kac[t=2.0]", "fk-variance[t=2.0]",
                                      "step_size"}
        assert result.checks["fk-variance[t=2.0]"]
        quantities = list(result.tables["estimates"]["quantity"])
        assert quantities.count("fk_dt") == quantities.count("fk_dt_half") == 1
        table = result.tables["dyson_checks"]
        assert table.loc[table["check"] == "step_size", "threshold"].item() == 1.0

    def test_trace_refinement_table(self):
        """Test that refine adds one displacement row per halving."""
        result = LoewnerTraceExperiment({"t_end": 0.05, "dt": 5e-3, "stride": 2, "boundary_points": 2,
                                         "refine": 2}, seed=3).execute()
        table = result.tables["trace_refinement"]
        assert list(table.columns) == ["level", "dt", "max_displacement", "scaled_displacement"]
        assert list(table["level"]) == [1, 2]
        assert len(result.summary["refinement"]) == 2
        assert set(result.checks) == {"capacity", "boundary_derivative"}

    def test_loop_check_domains(self):
        """Test the loop-check domain list."""
        names = [d.name for d in loop_check_domains(4)]
        assert names == ["two-site", "rect1x3", "rect1x4", "rect2x2"]
        assert all(len(d) <= 12 for d in loop_check_domains(12))

    def test_lattice(self):
        """Test a small lattice run."""
        result = LatticeExperiment(dict(SMALL_LATTICE)).execute()
        assert result.passed
        assert set(result.checks) == {"two_site_determinant", "two_site_enumeration", "loop_agreement",
                                      "pair_bound", "positive"}
        table = result.tables["lattice"]
        assert list(table.columns) == ["beta", "c", "n", "partition_sum"]
        assert len(table) == 2
        assert lookup_sum(table, 1, 0.0, 1.0) > lookup_sum(table, 2, 0.0, 1.0) > 0
        assert result.summary["two_site_F_determinant"] == pytest.approx(16.0 / 15.0, abs=1e-12)
        assert result.summary["loop_checks_passed"] == result.summary["loop_checks_total"]


class TestRunner:
    """Test the runner's file layout and acceptance handling."""

    def test_run_writes_outputs(self, tmp_path):
        """Test the run directory contents."""
        config = ExperimentConfig(kind="lattice", params=dict(SMALL_LATTICE), out_dir=str(tmp_path))
        manifest = run_experiment(config)
        run_dir = tmp_path / manifest.run_name
        assert manifest.outputs == ["lattice.csv", "loop_checks.csv", SUMMARY_NAME]
        for name in manifest.outputs + [MANIFEST_NAME]:
            assert (run_dir / name).exists()
        summary = json.loads((run_dir / SUMMARY_NAME).read_text(encoding="utf-8"))
        assert summary["manifest_hash"] == manifest.hash
        assert summary["schemas"] == {"lattice": 1, "loop_checks": 1}
        assert manifest.wall_clock_seconds >= 0.0
        assert manifest.step_counts["rows"] == 2

    def test_acceptance_failure(self, tmp_path, mocker):
        """Test that failed checks raise unless enforcement is off."""
        failing = ExperimentResult(tables={"lattice": pd.DataFrame()},
                                   checks={"positive": False, "pair_bound": True})
        mocker.patch.object(LatticeExperiment, "execute", return_value=failing)

        config = ExperimentConfig(kind="lattice", params=dict(SMALL_LATTICE), out_dir=str(tmp_path))
        with pytest.raises(AcceptanceFailure) as info:
            run_experiment(config)
        assert info.value.failed == ["positive"]
        run_dir = tmp_path / info.value.manifest.run_name
        assert (run_dir / "lattice.csv").read_text(encoding="utf-8") == "beta,c,n,partition_sum\n"

        relaxed = ExperimentConfig(kind="lattice", params=dict(SMALL_LATTICE),
                                   acceptance={"enforce": False}, out_dir=str(tmp_path))
        assert not run_experiment(relaxed).passed

    def test_invalid_params(self, tmp_path):
        """Test that invalid parameters surface as ConfigValidationError."""
        config = ExperimentConfig(kind="lattice", params={"domain": "rect 0x3"}, out_dir=str(tmp_path))
        with pytest.raises(ConfigValidationError):
            run_experiment(config)


class TestCli:
    """Test argument parsing and exit codes."""

    def test_parser(self):
        """Test subcommands and flags."""
        args = cli.build_parser().parse_args(["lattice", "--seed", "3", "--threads", "2", "--out-dir", "x"])
        assert (args.command, args.seed, args.threads, args.out_dir) == ("lattice", 3, 2, "x")
        assert args.config is None
        with pytest.raises(SystemExit):
            cli.build_parser().parse_args(["portfolio"])

    def test_success(self, mocker):
        """Test exit code 0 and the forwarded overrides."""
        manifest = ExperimentManifest(kind="lattice", params={}, acceptance={}, seed=3,
                                      outputs=["lattice.csv"])
        run = mocker.patch("nradial_sle_lab.harness.cli.run", return_value=manifest)
        assert cli.main(["lattice", "--seed", "3", "--log-level", "WARNING"]) == cli.EXIT_OK
        run.assert_called_once_with(None, kind="lattice", seed=3, threads=None, out_dir=None)

    def test_subcommand_maps_to_kind(self, mocker):
        """Test that short subcommands resolve to experiment kinds."""
        manifest = ExperimentManifest(kind="decay-fit", params={}, acceptance={}, seed=0)
        run = mocker.patch("nradial_sle_lab.harness.cli.run", return_value=manifest)
        cli.main(["decay", "--config", "decay.ini", "--log-level", "ERROR"])
        assert run.call_args.kwargs["kind"] == "decay-fit"
        assert run.call_args.args == ("decay.ini",)

    @pytest.mark.parametrize("error, code", [
        (ConfigValidationError("kappa", "must satisfy κ < 8"), cli.EXIT_VALIDATION),
        (RuntimeError("boom"), cli.EXIT_RUNTIME),
        (OSError("disk full"), cli.EXIT_RUNTIME),
    ])
    def test_error_codes(self, mocker, error, code):
        """Test the mapping from failures to exit codes."""
        mocker.patch("nradial_sle_lab.harness.cli.run", side_effect=error)
        assert cli.main(["trace", "--log-level", "CRITICAL"]) == code

    def test_acceptance_code(self, mocker):
        """Test exit code 4 on failed acceptance."""
        manifest = ExperimentManifest(kind="lattice", params={}, acceptance={}, seed=0,
                                      checks={"positive": False})
        mocker.patch("nradial_sle_lab.harness.cli.run", side_effect=AcceptanceFailure(manifest))
        assert cli.main(["lattice", "--log-level", "CRITICAL"]) == cli.EXIT_ACCEPTANCE
