"""render: one run directory in, one figure out.

    render --family loss-scaling --run runs/20260101-120000-analytic --out loss.png

Exit codes: 0 drawn, 1 all series empty (no file written), 2 bad
arguments or schema-violating inputs.
"""

from __future__ import annotations

import argparse
import sys

from scaling_plots.families import FAMILIES, FigureJob, TheoryOverlay, render
from scaling_plots.io import SchemaError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="render", description=__doc__.split("\n")[0])
    parser.add_argument("--family", required=True, choices=FAMILIES)
    parser.add_argument("--run", required=True, metavar="DIR", help="run directory")
    parser.add_argument("--out", required=True, metavar="FILE", help="image file (.png/.svg/.pdf)")
    parser.add_argument(
        "--alpha", type=float, default=None,
        help="overlay exponent α (default: the CSV's own alpha column)",
    )
    parser.add_argument(
        "--beta", type=float, default=None,
        help="kernel exponent β for compute-axis overlays",
    )
    parser.add_argument(
        "--gamma", type=float, default=None,
        help="capacity exponent γ for model-axis overlays",
    )
    parser.add_argument("--dpi", type=int, default=150)
    args = parser.parse_args(argv)

    try:
        job = FigureJob.from_run(
            args.family,
            args.run,
            args.out,
            TheoryOverlay(alpha=args.alpha, beta=args.beta, gamma=args.gamma),
            dpi=args.dpi,
        )
        result = render(job)
    except SchemaError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    for message in result.warnings:
        print(f"warning: {message}", file=sys.stderr)
    if result.out_path is None:
        print(
            f"error: {args.family}: no drawable series in {args.run}; no figure written",
            file=sys.stderr,
        )
        return 1
    print(result.out_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
