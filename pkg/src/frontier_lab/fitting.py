"""Power-law exponent fits on log-log axes.

loglog_fit runs ordinary least squares on (log x, log y).  Unless a
window is given, the lowest and highest 10% of the *log-x range* are
trimmed first — resource sweeps warm up at the left edge and saturate at
the right, and both regions bias the slope.  The window is recorded in
resource units in the result.  infer_beta inverts the compute-law
exponent s = (alpha-1)/(alpha*beta) to read the implicit-bias exponent
off a fitted compute slope.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass


class InsufficientDataError(ValueError):
    """Fewer than 3 points fall inside the fit window."""


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float  # log-space: log y = slope * log x + intercept
    r2: float
    n_points: int
    window: tuple[float, float]  # resource units

    def predict(self, x: float) -> float:
        """Fitted y at resource value x."""
        return math.exp(self.intercept + self.slope * math.log(x))


def loglog_fit(points, window: tuple[float, float] | None = None) -> PowerLawFit:
    """OLS fit of log y on log x over a resource window.

    points: iterable of (x, y) with x > 0 (y > 0 required inside the
    window).  window: optional (lo, hi) in resource units; by default
    10% of the log-x range is trimmed at each end.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if not pts:
        raise InsufficientDataError("no points supplied")
    for x, _y in pts:
        if x <= 0:
            raise ValueError(f"non-positive resource value x = {x:g}")

    if window is None:
        logs = [math.log(x) for x, _ in pts]
        lo, hi = min(logs), max(logs)
        trim = 0.1 * (hi - lo)
        window = (math.exp(lo + trim), math.exp(hi - trim))
    lo, hi = float(window[0]), float(window[1])
    if not 0 < lo <= hi:
        raise ValueError(f"window must satisfy 0 < lo <= hi, got ({lo:g}, {hi:g})")

    inside = [(x, y) for x, y in pts if lo <= x <= hi]
    if len(inside) < 3:
        raise InsufficientDataError(
            f"only {len(inside)} points inside the window [{lo:g}, {hi:g}]; need >= 3"
        )
    for x, y in inside:
        if y <= 0:
            raise ValueError(f"non-positive y = {y:g} at x = {x:g} inside the window")

    lx = [math.log(x) for x, _ in inside]
    ly = [math.log(y) for _, y in inside]
    n = len(inside)
    mx = math.fsum(lx) / n
    my = math.fsum(ly) / n
    sxx = math.fsum((u - mx) ** 2 for u in lx)
    if sxx == 0.0:
        raise ValueError("all in-window x coincide; slope is undefined")
    sxy = math.fsum((u - mx) * (v - my) for u, v in zip(lx, ly))
    slope = sxy / sxx
    intercept = my - slope * mx
    ss_res = math.fsum((v - (intercept + slope * u)) ** 2 for u, v in zip(lx, ly))
    ss_tot = math.fsum((v - my) ** 2 for v in ly)
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return PowerLawFit(slope=slope, intercept=intercept, r2=r2, n_points=n, window=(lo, hi))


def infer_beta(alpha: float, compute_slope: float) -> float:
    """Implicit-bias exponent from a compute-loss slope magnitude:
    beta = (alpha - 1) / (alpha * |slope|)."""
    if alpha <= 1:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    if compute_slope <= 0:
        raise ValueError(
            f"compute_slope must be the positive slope magnitude, got {compute_slope}"
        )
    return (alpha - 1.0) / (alpha * compute_slope)


_FITS_HEADER = ["series", "alpha", "slope", "intercept", "r2", "n", "window_lo", "window_hi"]


def append_fit(path, series: str, alpha: float, fit: PowerLawFit) -> None:
    """Append one fit row to a fits.csv (creating it with a header)."""
    new_file = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(_FITS_HEADER)
        writer.writerow(
            [
                series,
                repr(float(alpha)),
                repr(fit.slope),
                repr(fit.intercept),
                repr(fit.r2),
                fit.n_points,
                repr(fit.window[0]),
                repr(fit.window[1]),
            ]
        )


def read_fits(path) -> list[dict]:
    """Read a fits.csv back as a list of typed dicts."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != _FITS_HEADER:
            raise ValueError(f"{path}: expected header {_FITS_HEADER}, got {reader.fieldnames}")
        rows = []
        for row in reader:
            rows.append(
                {
                    "series": row["series"],
                    "alpha": float(row["alpha"]),
                    "slope": float(row["slope"]),
                    "intercept": float(row["intercept"]),
                    "r2": float(row["r2"]),
                    "n": int(row["n"]),
                    "window_lo": float(row["window_lo"]),
                    "window_hi": float(row["window_hi"]),
                }
            )
    return rows
