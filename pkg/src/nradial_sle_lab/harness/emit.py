"""
Result emission: CSV tables and JSON summaries.

Every table has a registered schema (column list and version). CSV files
carry exactly the schema's columns in order; JSON summaries carry the
manifest hash and the schema versions of the tables they accompany.
"""

import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, NamedTuple, Optional, Union

import pandas as pd
from loguru import logger

from .manifest import jsonable


class TableSchema(NamedTuple):
    version: int
    columns: List[str]


SCHEMAS: Dict[str, TableSchema] = {
    "identity_checks": TableSchema(1, ["check", "n", "alpha", "max_error", "threshold", "passed"]),
    "dyson_checks": TableSchema(1, ["check", "statistic", "threshold", "passed"]),
    "estimates": TableSchema(1, ["quantity", "t", "mean", "std_error", "n_samples"]),
    "decay": TableSchema(1, ["t", "mean", "std_error"]),
    "trace": TableSchema(1, ["curve_index", "t", "re", "im", "accuracy_flag"]),
    "trace_refinement": TableSchema(1, ["level", "dt", "max_displacement", "scaled_displacement"]),
    "approx": TableSchema(1, ["h", "run_id", "K", "truncated_flag"]),
    "lattice": TableSchema(1, ["beta", "c", "n", "partition_sum"]),
    "loop_checks": TableSchema(1, ["domain", "sites", "determinant", "enumerated", "tail_bound", "passed"]),
}

Results = Union[pd.DataFrame, Iterable[Mapping[str, Any]], Mapping[str, Any]]


def to_frame(results: Results, schema: Optional[str] = None) -> pd.DataFrame:
    """Build a frame with the schema's columns (header only when results are empty)."""
    frame = results if isinstance(results, pd.DataFrame) else pd.DataFrame(list(results))
    if schema is None:
        return frame
    columns = SCHEMAS[schema].columns
    missing = [c for c in columns if c not in frame.columns]
    if missing and len(frame):
        raise ValueError(f"results for {schema} lack columns {missing}")
    return frame.reindex(columns=columns)


def emit(results: Results, fmt: str, path: Union[str, Path], schema: Optional[str] = None,
         manifest_hash: Optional[str] = None) -> Path:
    """
    Write results as CSV or JSON.

    Args:
        results: Table (frame or records) for CSV, mapping for JSON
        fmt: "csv" or "json"
        path: Destination file
        schema: Registered table schema for CSV output
        manifest_hash: Hash recorded in JSON output

    Returns:
        The written path

    Raises:
        ValueError: If the format is unknown
        OSError: If the file cannot be written (message includes the path)
    """
    path = Path(path)
    fmt = fmt.lower()
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            frame = to_frame(results, schema)
            frame.to_csv(path, index=False, quoting=csv.QUOTE_MINIMAL, lineterminator="\n",
                         float_format="%.17g", encoding="utf-8")
        else:
            payload = dict(results) if isinstance(results, Mapping) else {"records": list(results)}
            if manifest_hash is not None:
                payload["manifest_hash"] = manifest_hash
            path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=jsonable,
                                       ensure_ascii=False), encoding="utf-8")
    except OSError as e:
        raise OSError(f"Cannot write results to {path}: {e}") from e

    logger.debug(f"Wrote {fmt.upper()} output {path}")
    return path


def schema_versions(names: Iterable[str]) -> Dict[str, int]:
    """Version map for the given table schemas."""
    return {name: SCHEMAS[name].version for name in names}
