"""
Experiment runner.

Builds the experiment for a config, owns the worker pool, writes result
files under <out_dir>/<kind>-<hash12>/ and records the manifest.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Optional, Type, Union

from loguru import logger

from .config import ConfigValidationError, ExperimentConfig, load_config
from .emit import emit, schema_versions
from .experiments.approx import DiscreteApproxExperiment
from .experiments.base import BaseExperiment, ExperimentResult
from .experiments.decay import DecayFitExperiment
from .experiments.dyson import DysonExperiment
from .experiments.identities import IdentitySuiteExperiment
from .experiments.lattice import LatticeExperiment
from .experiments.trace import LoewnerTraceExperiment
from .manifest import ExperimentManifest

EXPERIMENTS: Dict[str, Type[BaseExperiment]] = {
    cls.kind: cls
    for cls in (IdentitySuiteExperiment, DysonExperiment, LoewnerTraceExperiment,
                DecayFitExperiment, DiscreteApproxExperiment, LatticeExperiment)
}

MANIFEST_NAME = "manifest.json"
SUMMARY_NAME = "summary.json"


class AcceptanceFailure(RuntimeError):
    """Raised when a run completes but an enforced acceptance check fails."""

    def __init__(self, manifest: ExperimentManifest):
        failed = sorted(name for name, ok in manifest.checks.items() if not ok)
        super().__init__(f"{manifest.kind}: acceptance checks failed: {failed}")
        self.manifest = manifest
        self.failed = failed


def build_experiment(config: ExperimentConfig, mapper=None) -> BaseExperiment:
    """
    Instantiate and validate the experiment for a config.

    Raises:
        ConfigValidationError: If the kind is unknown or a parameter is invalid
    """
    cls = EXPERIMENTS.get(config.kind)
    if cls is None:
        raise ConfigValidationError("kind", f"unknown experiment kind {config.kind!r}")
    try:
        return cls(config.params, config.acceptance, seed=config.seed, mapper=mapper)
    except ConfigValidationError:
        raise
    except ValueError as e:
        raise ConfigValidationError("params", str(e)) from e


def write_outputs(result: ExperimentResult, manifest: ExperimentManifest, run_dir: Path) -> None:
    """Emit every table as CSV plus the summary JSON; record the paths in the manifest."""
    for name, table in result.tables.items():
        emit(table, "csv", run_dir / f"{name}.csv", schema=name)
        manifest.outputs.append(f"{name}.csv")
    summary = {
        "kind": manifest.kind,
        "schemas": schema_versions(result.tables),
        "checks": result.checks,
        "summary": result.summary,
    }
    emit(summary, "json", run_dir / SUMMARY_NAME, manifest_hash=manifest.hash)
    manifest.outputs.append(SUMMARY_NAME)


def run_experiment(config: ExperimentConfig) -> ExperimentManifest:
    """
    Run a parsed config and write its outputs.

    Returns:
        The manifest of the run

    Raises:
        ConfigValidationError: On invalid parameters
        AcceptanceFailure: If an enforced acceptance check failed
    """
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        mapper = pool.map if config.threads > 1 else None
        experiment = build_experiment(config, mapper)
        manifest = ExperimentManifest(
            kind=config.kind,
            params=dict(experiment.params),
            acceptance=dict(experiment.acceptance),
            seed=config.seed,
        )
        run_dir = Path(config.out_dir) / manifest.run_name
        logger.info(f"Running {experiment} into {run_dir}")

        started = time.perf_counter()
        result = experiment.execute()
        manifest.wall_clock_seconds = time.perf_counter() - started

    manifest.step_counts = dict(result.step_counts)
    manifest.checks = dict(result.checks)
    write_outputs(result, manifest, run_dir)
    manifest.write(run_dir / MANIFEST_NAME)

    if manifest.passed:
        logger.info(
            f"{manifest.kind} passed all {len(manifest.checks)} checks ({manifest.wall_clock_seconds:.1f}s)")
    else:
        logger.warning(f"{manifest.kind} failed checks: {[k for k, v in manifest.checks.items() if not v]}")
        if experiment.acceptance.get("enforce", True):
            raise AcceptanceFailure(manifest)
    return manifest


def run(config_path: Optional[Union[str, Path]], kind: Optional[str] = None, seed: Optional[int] = None,
        threads: Optional[int] = None, out_dir: Optional[str] = None) -> ExperimentManifest:
    """
    Load a config file, apply overrides and run it.

    Args:
        config_path: INI config (None for the kind's defaults)
        kind: Experiment kind implied by the caller
        seed: Seed override
        threads: Worker pool size override
        out_dir: Output directory override

    Returns:
        ExperimentManifest
    """
    config = load_config(config_path, kind=kind, seed=seed, threads=threads, out_dir=out_dir)
    return run_experiment(config)
