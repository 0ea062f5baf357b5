"""Figure rendering for frontier-lab run directories.

This package touches the producer only through its on-disk contract:
the CSV schemas and manifest.json of a run directory. It never imports
the producing package.
"""

from scaling_plots.io import SchemaError, read_manifest, read_table
from scaling_plots.families import FAMILIES, FigureJob, TheoryOverlay, render

__all__ = [
    "FAMILIES",
    "FigureJob",
    "SchemaError",
    "TheoryOverlay",
    "read_manifest",
    "read_table",
    "render",
]
