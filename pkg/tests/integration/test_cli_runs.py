"""
End-to-end runs of the nradial-lab command line.

These tests drive cli.main with small config files and check the exit codes,
the run directory layout and reproducibility of the emitted files.
"""

import json
import sys
import os
from pathlib import Path

import pandas as pd
import pytest

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..', 'src'))

from nradial_sle_lab.harness import cli
from nradial_sle_lab.harness.config import OUT_DIR_ENV
from nradial_sle_lab.harness.manifest import ExperimentManifest

CONFIG_DIR = Path(__file__).resolve().parents[2] / "configs"

DYSON_INI = """
[experiment]
kind = dyson
seed = 11

[params]
checks = martingale
n_paths = 2048
batch_size = 256
t = 0.2
dt = 0.002

[acceptance]
enforce = false
"""

LATTICE_INI = """
[experiment]
kind = lattice
seed = 0

[params]
domain = rect 3x3
starts = 0,0; 2,2
target = 1,1
c_values = 0
betas = 0.5, 1
loop_max_sites = 4
"""

TRACE_INI = """
[experiment]
kind = loewner-trace
seed = 5

[params]
n = 2
kappa = {kappa}
t_end = 0.2
dt = 0.002
stride = 5

[acceptance]
enforce = false
"""


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch):
    """Keep a developer's NRADIAL_OUT_DIR out of the runs."""
    monkeypatch.delenv(OUT_DIR_ENV, raising=False)


def write_config(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def only_run_dir(out_dir, kind):
    runs = sorted(Path(out_dir).glob(f"{kind}-*"))
    assert len(runs) == 1
    return runs[0]


class TestCliRoundTrip:
    """Test complete runs through the command line."""

    def test_lattice_run(self, tmp_path):
        """Test a lattice run and its outputs."""
        config = write_config(tmp_path, "lattice.ini", LATTICE_INI)
        code = cli.main(["lattice", "--config", config, "--out-dir", str(tmp_path / "out"),
                         "--log-level", "WARNING"])
        assert code == cli.EXIT_OK

        run_dir = only_run_dir(tmp_path / "out", "lattice")
        manifest = ExperimentManifest.read(run_dir / "manifest.json")
        assert run_dir.name == manifest.run_name
        assert manifest.passed
        assert manifest.params["domain"] == "rect 3x3"
        assert manifest.params["loop_max_len"] == 20

        table = pd.read_csv(run_dir / "lattice.csv")
        assert list(table.columns) == ["beta", "c", "n", "partition_sum"]
        assert len(table) == 4
        assert (table["partition_sum"] > 0).all()
        summary = json.loads((run_dir / "summary.json").read_text(encoding="utf-8"))
        assert summary["manifest_hash"] == manifest.hash
        assert summary["checks"]["pair_bound"] is True

    def test_out_dir_from_environment(self, tmp_path, monkeypatch):
        """Test that NRADIAL_OUT_DIR applies when no flag is given."""
        monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path / "env-out"))
        config = write_config(tmp_path, "lattice.ini", LATTICE_INI)
        assert cli.main(["lattice", "--config", config, "--log-level", "WARNING"]) == cli.EXIT_OK
        only_run_dir(tmp_path / "env-out", "lattice")

    def test_acceptance_failure_exit_code(self, tmp_path):
        """Test exit code 4 when an enforced threshold cannot be met."""
        config = write_config(tmp_path, "lattice.ini", LATTICE_INI + "\n[acceptance]\ntwo_site_tol = -1\n")
        code = cli.main(["lattice", "--config", config, "--out-dir", str(tmp_path),
                         "--log-level", "CRITICAL"])
        assert code == cli.EXIT_ACCEPTANCE
        run_dir = only_run_dir(tmp_path, "lattice")
        manifest = ExperimentManifest.read(run_dir / "manifest.json")
        assert manifest.checks["two_site_enumeration"] is False

    def test_kappa_above_eight(self, tmp_path, capsys):
        """Test that kappa = 9 is refused before any work is done."""
        config = write_config(tmp_path, "trace.ini", TRACE_INI.format(kappa=9))
        code = cli.main(["trace", "--config", config, "--out-dir", str(tmp_path / "out"),
                         "--log-level", "ERROR"])
        assert code == cli.EXIT_VALIDATION
        assert "κ < 8" in capsys.readouterr().err
        assert not (tmp_path / "out").exists()

    def test_kind_conflict(self, tmp_path):
        """Test that a config for another kind is a validation error."""
        config = write_config(tmp_path, "lattice.ini", LATTICE_INI)
        assert cli.main(["dyson", "--config", config, "--log-level", "CRITICAL"]) == cli.EXIT_VALIDATION

    def test_trace_run(self, tmp_path):
        """Test a short two-curve trace."""
        config = write_config(tmp_path, "trace.ini", TRACE_INI.format(kappa=4))
        code = cli.main(["trace", "--config", config, "--out-dir", str(tmp_path), "--log-level", "WARNING"])
        assert code == cli.EXIT_OK
        run_dir = only_run_dir(tmp_path, "loewner-trace")
        table = pd.read_csv(run_dir / "trace.csv")
        assert list(table.columns) == ["curve_index", "t", "re", "im", "accuracy_flag"]
        assert set(table["curve_index"]) == {0, 1}
        summary = json.loads((run_dir / "summary.json").read_text(encoding="utf-8"))
        assert summary["summary"]["capacity_error"] < 1e-6


class TestReproducibility:
    """Test that equal seeds give byte-identical files."""

    def run_dyson(self, tmp_path, out_name, threads):
        config = write_config(tmp_path, "dyson.ini", DYSON_INI)
        out_dir = tmp_path / out_name
        code = cli.main(["dyson", "--config", config, "--threads", str(threads), "--out-dir", str(out_dir),
                         "--log-level", "WARNING"])
        assert code == cli.EXIT_OK
        return only_run_dir(out_dir, "dyson")

    def test_same_seed_same_bytes(self, tmp_path):
        """Test that repeated runs reproduce every CSV exactly."""
        first = self.run_dyson(tmp_path, "a", threads=1)
        second = self.run_dyson(tmp_path, "b", threads=1)
        assert first.name == second.name
        for name in ("dyson_checks.csv", "estimates.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_thread_count_does_not_change_results(self, tmp_path):
        """Test that the worker count is invisible in the outputs."""
        single = self.run_dyson(tmp_path, "single", threads=1)
        pooled = self.run_dyson(tmp_path, "pooled", threads=3)
        assert single.name == pooled.name
        for name in ("dyson_checks.csv", "estimates.csv"):
            assert (single / name).read_bytes() == (pooled / name).read_bytes()

    def test_seed_changes_results(self, tmp_path):
        """Test that a different seed moves the estimate."""
        first = self.run_dyson(tmp_path, "a", threads=1)
        config = write_config(tmp_path, "dyson.ini", DYSON_INI)
        assert cli.main(["dyson", "--config", config, "--seed", "12", "--out-dir", str(tmp_path / "c"),
                         "--log-level", "WARNING"]) == cli.EXIT_OK
        other = only_run_dir(tmp_path / "c", "dyson")
        assert first.name != other.name
        assert (first / "estimates.csv").read_bytes() != (other / "estimates.csv").read_bytes()


@pytest.mark.slow
class TestAcceptanceConfigs:
    """Run the shipped configs at full scale."""

    @pytest.mark.parametrize("command, config", [
        ("identities", "identities.ini"),
        ("dyson", "dyson.ini"),
        ("trace", "trace.ini"),
        ("decay", "decay.ini"),
        ("approx", "approx.ini"),
        ("lattice", "lattice.ini"),
    ])
    def test_config_passes(self, tmp_path, command, config):
        """Test that a shipped config meets its acceptance criteria."""
        code = cli.main([command, "--config", str(CONFIG_DIR / config), "--threads", "4",
                         "--out-dir", str(tmp_path), "--log-level", "INFO"])
        assert code == cli.EXIT_OK
