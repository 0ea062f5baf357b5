"""Readers for the run-directory contract: typed CSV tables + manifest.

Every parse failure is reported as SchemaError with the offending file
and line so a corrupted artifact names itself.
"""

from __future__ import annotations

import csv
import json
import os


class SchemaError(Exception):
    """A CSV or manifest that does not match its declared schema."""

    def __init__(self, path: str, line: int, message: str):
        self.path = str(path)
        self.line = int(line)
        self.message = message
        super().__init__(f"{self.path}:{self.line}: {message}")


def read_table(path: str, columns: dict) -> dict:
    """Read a CSV with the exact header `columns` keeps (name -> converter).

    Returns {column: list of converted values}; the lists may be empty
    (a header-only file is a valid, empty table).
    """
    expect = list(columns)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(path, 1, f"empty file; expected header {','.join(expect)}")
        if header != expect:
            raise SchemaError(
                path, 1, f"expected header {','.join(expect)}, got {','.join(header)}"
            )
        table = {name: [] for name in expect}
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(expect):
                raise SchemaError(
                    path, line_no, f"expected {len(expect)} fields, got {len(row)}"
                )
            for (name, convert), cell in zip(columns.items(), row):
                try:
                    table[name].append(convert(cell))
                except ValueError:
                    raise SchemaError(
                        path,
                        line_no,
                        f"column {name!r}: {cell!r} is not a valid {convert.__name__}",
                    ) from None
    return table


# the producer's schemas, keyed by artifact filename
PROFILE_COLUMNS = {"k": int, "p_k": float, "q_k": float}
COVERAGE_LOSS_COLUMNS = {"alpha": float, "D": int, "m": int, "loss": float}
COVERAGE_FRONTIER_COLUMNS = {
    "alpha": float,
    "D": int,
    "k_analytic": float,
    "k_extracted": float,
}
DYNAMICS_LOSS_COLUMNS = {
    "kernel": str,
    "alpha": float,
    "beta": float,
    "tau": float,
    "loss": float,
    "prefactor_ratio": float,
}
RECORDS_COLUMNS = {
    "sweep": str,
    "alpha": float,
    "axis": str,
    "value": int,
    "seed": int,
    "delta_L": float,
    "k_star": float,
    "k_minus": int,
    "k_plus": int,
    "steps": int,
    "wallclock_s": float,
}
FITS_COLUMNS = {
    "series": str,
    "alpha": float,
    "slope": float,
    "intercept": float,
    "r2": float,
    "n": int,
    "window_lo": float,
    "window_hi": float,
}


def read_manifest(run_dir: str) -> dict:
    """Load manifest.json; the returned dict gains an `id` (the run-dir
    name, which the producer timestamps uniquely)."""
    path = os.path.join(run_dir, "manifest.json")
    if not os.path.exists(path):
        raise SchemaError(path, 1, "missing manifest.json; not a run directory?")
    with open(path) as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as err:
            raise SchemaError(path, err.lineno, f"invalid JSON: {err.msg}") from None
    for field in ("command", "outputs"):
        if field not in manifest:
            raise SchemaError(path, 1, f"manifest is missing the {field!r} field")
    manifest["id"] = os.path.basename(os.path.normpath(run_dir))
    return manifest
