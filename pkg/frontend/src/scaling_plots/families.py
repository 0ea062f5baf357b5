"""The four figure families.

Each renderer consumes the CSVs of one run directory and draws onto a
fresh figure: scaling families get log-log axes, and theory overlays
are dashed lines whose exponent is prescribed (from the data's own
alpha column or the job's overlay parameters) while the intercept is
least-squares fitted to the series it annotates. All styling is fixed
module constants so identical inputs render identically.
"""

from __future__ import annotations

import glob
import math
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from scaling_plots.io import (
    COVERAGE_FRONTIER_COLUMNS,
    COVERAGE_LOSS_COLUMNS,
    DYNAMICS_LOSS_COLUMNS,
    PROFILE_COLUMNS,
    RECORDS_COLUMNS,
    SchemaError,
    read_manifest,
    read_table,
)

FAMILIES = ("rank-profiles", "frontier-scaling", "loss-scaling", "alpha-grid")

_STYLE = {
    "figure.figsize": (7.0, 5.0),
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 8,
    "svg.hashsalt": "scaling-plots",
}

_AXIS_LABEL = {
    "data-D": "dataset size D",
    "compute-tau": "steps τ",
    "model-N": "hidden width N",
}


@dataclass(frozen=True)
class TheoryOverlay:
    """Optional exponent sources for the dashed predicted-slope lines."""

    alpha: float | None = None
    beta: float | None = None
    gamma: float | None = None


@dataclass(frozen=True)
class FigureJob:
    family: str
    run_dir: str
    inputs: tuple[str, ...]
    out_path: str
    theory: TheoryOverlay = field(default_factory=TheoryOverlay)
    dpi: int = 150

    @classmethod
    def from_run(cls, family, run_dir, out_path, theory=None, dpi=150):
        if family not in FAMILIES:
            raise ValueError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
        read_manifest(run_dir)  # fails early when this is not a run directory
        return cls(
            family,
            run_dir,
            tuple(_discover(family, run_dir)),
            out_path,
            theory if theory is not None else TheoryOverlay(),
            dpi,
        )


@dataclass
class RenderResult:
    drawn: int
    warnings: list
    out_path: str | None


def _discover(family: str, run_dir: str) -> list[str]:
    def present(*names):
        paths = (os.path.join(run_dir, n) for n in names)
        return [p for p in paths if os.path.exists(p)]

    if family == "rank-profiles":
        return sorted(glob.glob(os.path.join(run_dir, "profiles", "*.csv")))
    if family == "frontier-scaling":
        return present("coverage_frontier.csv", "records.csv")
    if family == "loss-scaling":
        return present("coverage_loss.csv", "dynamics_loss.csv", "records.csv")
    if family == "alpha-grid":
        return present("coverage_loss.csv")
    raise ValueError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")


def _theory_line(ax, x, y, exponent: float, label: str) -> None:
    """Dashed power law of the given exponent, intercept fitted to (x, y)."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return
    c = float(np.mean(np.log(y[keep]) - exponent * np.log(x[keep])))
    grid = np.geomspace(x[keep].min(), x[keep].max(), 64)
    ax.plot(grid, np.exp(c) * grid**exponent, "--", color="0.35", lw=1.2, label=label)


def _groups(values):
    """Distinct values in first-seen order (CSV rows are already sorted)."""
    seen = []
    for v in values:
        if v not in seen:
            seen.append(v)
    return seen


def _pick(table, column, rows):
    return [table[column][i] for i in rows]


# --- renderers ---------------------------------------------------------------


def _render_rank_profiles(fig, job):
    ax = fig.add_subplot()
    drawn, warnings = 0, []
    for path in job.inputs:
        table = read_table(path, PROFILE_COLUMNS)
        if not table["k"]:
            warnings.append(f"{os.path.basename(path)}: empty series, skipped")
            continue
        label = os.path.splitext(os.path.basename(path))[0]
        label = label[len("profile-"):] if label.startswith("profile-") else label
        ax.plot(table["k"], table["q_k"], lw=1.3, label=label)
        drawn += 1
    if drawn:
        ax.set_xscale("log")
        ax.set_xlabel("rank k")
        ax.set_ylabel("residual q_k")
        ax.set_ylim(bottom=-0.03)
        ax.set_title("Per-rank residual profiles")
        ax.legend(ncol=2 if drawn > 6 else 1)
        fig.tight_layout(rect=(0, 0.045, 1, 1))
    return drawn, warnings


def _frontier_exponent(axis, alpha, theory):
    if axis == "data-D":
        return 1.0 / alpha
    if axis == "compute-tau":
        return None if theory.beta is None else 1.0 / (alpha * theory.beta)
    if axis == "model-N":
        return theory.gamma
    return None


def _loss_exponent(axis, alpha, theory):
    if axis == "data-D":
        return -(alpha - 1.0) / alpha
    if axis == "compute-tau":
        return None if theory.beta is None else -(alpha - 1.0) / (alpha * theory.beta)
    if axis == "model-N":
        return None if theory.gamma is None else -theory.gamma * (alpha - 1.0)
    return None


def _render_frontier_scaling(fig, job):
    drawn, warnings, panels = 0, [], []

    for path in job.inputs:
        name = os.path.basename(path)
        if name == "coverage_frontier.csv":
            table = read_table(path, COVERAGE_FRONTIER_COLUMNS)
            if not table["D"]:
                warnings.append(f"{name}: empty series, skipped")
                continue
            panels.append(("analytic coverage frontier", "dataset size D", table))
        else:  # records.csv
            table = read_table(path, RECORDS_COLUMNS)
            if not table["value"]:
                warnings.append(f"{name}: empty series, skipped")
                continue
            panels.append(("trained-network frontier", None, table))

    for i, (title, xlabel, table) in enumerate(panels):
        ax = fig.add_subplot(1, len(panels), i + 1)
        if "k_analytic" in table:
            for alpha in _groups(table["alpha"]):
                rows = [j for j, a in enumerate(table["alpha"]) if a == alpha]
                d = _pick(table, "D", rows)
                extracted = _pick(table, "k_extracted", rows)
                dots, = ax.plot(d, extracted, "o", ms=4, label=f"extracted, α={alpha:g}")
                ax.plot(
                    d,
                    _pick(table, "k_analytic", rows),
                    "-",
                    lw=1,
                    alpha=0.6,
                    color=dots.get_color(),
                    label=f"analytic, α={alpha:g}",
                )
                a = job.theory.alpha if job.theory.alpha is not None else alpha
                _theory_line(ax, d, extracted, 1.0 / a, f"slope 1/α = {1.0 / a:.3f}")
                drawn += 1
        else:
            axis, alpha = table["axis"][0], table["alpha"][0]
            xlabel = _AXIS_LABEL.get(axis, axis)
            ax.plot(table["value"], table["k_star"], "o", ms=4, label=f"k* ({axis})")
            a = job.theory.alpha if job.theory.alpha is not None else alpha
            exponent = _frontier_exponent(axis, a, job.theory)
            if exponent is not None:
                _theory_line(
                    ax, table["value"], table["k_star"], exponent, f"slope {exponent:.3f}"
                )
            drawn += 1
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("frontier rank k*")
        ax.set_title(title)
        ax.legend()

    if drawn:
        fig.set_size_inches(6.0 * max(len(panels), 1), 4.6)
        fig.tight_layout(rect=(0, 0.05, 1, 1))
    return drawn, warnings


def _render_loss_scaling(fig, job):
    drawn, warnings, panels = 0, [], []

    for path in job.inputs:
        name = os.path.basename(path)
        if name == "coverage_loss.csv":
            table = read_table(path, COVERAGE_LOSS_COLUMNS)
            if not table["D"]:
                warnings.append(f"{name}: empty series, skipped")
                continue
            panels.append(("coverage", table))
        elif name == "dynamics_loss.csv":
            table = read_table(path, DYNAMICS_LOSS_COLUMNS)
            if not table["tau"]:
                warnings.append(f"{name}: empty series, skipped")
                continue
            panels.append(("dynamics", table))
        else:  # records.csv
            table = read_table(path, RECORDS_COLUMNS)
            if not table["value"]:
                warnings.append(f"{name}: empty series, skipped")
                continue
            panels.append(("nn", table))

    for i, (kind, table) in enumerate(panels):
        ax = fig.add_subplot(1, len(panels), i + 1)
        if kind == "coverage":
            for alpha in _groups(table["alpha"]):
                rows = [j for j, a in enumerate(table["alpha"]) if a == alpha]
                d, loss = _pick(table, "D", rows), _pick(table, "loss", rows)
                ax.plot(d, loss, "o-", ms=4, lw=1, label=f"α={alpha:g}")
                a = job.theory.alpha if job.theory.alpha is not None else alpha
                want = -(a - 1.0) / a
                _theory_line(ax, d, loss, want, f"slope {want:.3f}")
                drawn += 1
            ax.set_xlabel("dataset size D")
            ax.set_title("coverage-limited loss")
        elif kind == "dynamics":
            for kernel in _groups(table["kernel"]):
                rows = [j for j, k in enumerate(table["kernel"]) if k == kernel]
                tau, loss = _pick(table, "tau", rows), _pick(table, "loss", rows)
                ax.plot(tau, loss, "o-", ms=4, lw=1, label=kernel)
                a = job.theory.alpha if job.theory.alpha is not None else table["alpha"][rows[0]]
                b = job.theory.beta if job.theory.beta is not None else table["beta"][rows[0]]
                want = -(a - 1.0) / (a * b)
                _theory_line(ax, tau, loss, want, f"slope {want:.3f}")
                drawn += 1
            ax.set_xlabel("steps τ")
            ax.set_title("optimization-limited loss")
        else:
            axis, alpha = table["axis"][0], table["alpha"][0]
            ax.plot(table["value"], table["delta_L"], "o", ms=4, label=f"ΔL ({axis})")
            a = job.theory.alpha if job.theory.alpha is not None else alpha
            exponent = _loss_exponent(axis, a, job.theory)
            if exponent is not None:
                _theory_line(
                    ax, table["value"], table["delta_L"], exponent, f"slope {exponent:.3f}"
                )
            ax.set_xlabel(_AXIS_LABEL.get(axis, axis))
            ax.set_title("trained-network loss")
            drawn += 1
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_ylabel("reducible loss ΔL")
        ax.legend()

    if drawn:
        fig.set_size_inches(5.4 * max(len(panels), 1), 4.4)
        fig.tight_layout(rect=(0, 0.05, 1, 1))
    return drawn, warnings


def _render_alpha_grid(fig, job):
    warnings = []
    if not job.inputs:
        return 0, warnings
    table = read_table(job.inputs[0], COVERAGE_LOSS_COLUMNS)
    alphas = _groups(table["alpha"])
    if not alphas:
        return 0, [f"{os.path.basename(job.inputs[0])}: empty series, skipped"]

    ncols = min(3, len(alphas))
    nrows = math.ceil(len(alphas) / ncols)
    for i, alpha in enumerate(alphas):
        ax = fig.add_subplot(nrows, ncols, i + 1)
        rows = [j for j, a in enumerate(table["alpha"]) if a == alpha]
        d = np.array(_pick(table, "D", rows), float)
        loss = np.array(_pick(table, "loss", rows), float)
        ax.plot(d, loss, "o-", ms=3.5, lw=1)
        want = -(alpha - 1.0) / alpha
        _theory_line(ax, d, loss, want, f"slope {want:.3f}")
        got = float(np.polyfit(np.log(d), np.log(loss), 1)[0]) if len(d) >= 2 else float("nan")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_title(f"α = {alpha:g}   (fit {got:.3f} / theory {want:.3f})", fontsize=9)
        ax.set_xlabel("dataset size D")
        ax.set_ylabel("loss")
        ax.legend()
    fig.set_size_inches(4.2 * ncols, 3.4 * nrows)
    fig.suptitle("Coverage loss across α", y=0.99)
    fig.tight_layout(rect=(0, 0.05, 1, 0.96))
    return len(alphas), warnings


_RENDERERS = {
    "rank-profiles": _render_rank_profiles,
    "frontier-scaling": _render_frontier_scaling,
    "loss-scaling": _render_loss_scaling,
    "alpha-grid": _render_alpha_grid,
}


def _metadata_for(path: str):
    """Strip the writer's timestamps so identical inputs give identical bytes."""
    ext = os.path.splitext(path)[1].lower()
    if ext == ".png":
        return {"Software": "scaling-plots"}
    if ext == ".svg":
        return {"Date": None}
    if ext == ".pdf":
        return {"CreationDate": None}
    return None


def render(job: FigureJob) -> RenderResult:
    """Draw one family from one run directory.

    Returns the result without raising on empty series (they are skipped
    with a warning; out_path is None when nothing was drawable). Schema
    violations raise SchemaError naming the file and line.
    """
    manifest = read_manifest(job.run_dir)
    with plt.rc_context(_STYLE):
        fig = plt.figure()
        try:
            drawn, warnings = _RENDERERS[job.family](fig, job)
            if drawn == 0:
                return RenderResult(0, warnings, None)
            fig.text(
                0.99,
                0.006,
                f"source: {manifest['id']} · {manifest['command']} · "
                f"v{manifest.get('version', '?')}",
                ha="right",
                fontsize=7,
                color="0.45",
            )
            fig.savefig(job.out_path, dpi=job.dpi, metadata=_metadata_for(job.out_path))
        finally:
            plt.close(fig)
    return RenderResult(drawn, warnings, job.out_path)
