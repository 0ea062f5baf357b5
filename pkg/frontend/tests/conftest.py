"""Golden run directories, produced through the producer's own CLI —
the only coupling is the installed command plus the CSV/manifest
contract it writes."""

import subprocess
import sys

import pytest

_ANALYTIC = [
    "analytic.alphas=[1.3,1.5,1.7]",
    "analytic.frontier_alphas=[1.5,2.0]",
    "analytic.data_max=1e5",
    "analytic.data_points=5",
    "analytic.tau_points=5",
]

_NN = [
    "nn.vocab=120",
    "nn.hidden=32",
    "nn.grid_min=200",
    "nn.grid_max=3200",
    "nn.grid_points=5",
    "nn.seeds=[0]",
    "nn.epochs=2",
    "nn.batch=32",
]


def _produce(command: str, out_root, overrides) -> str:
    proc = subprocess.run(
        [sys.executable, "-m", "frontier_lab.cli", command, f"run.out_root={out_root}"]
        + overrides,
        capture_output=True,
        text=True,
        check=True,
    )
    for line in proc.stdout.splitlines():
        if line.startswith("artifacts: "):
            return line.split(": ", 1)[1]
    raise RuntimeError(f"producer printed no artifacts line:\n{proc.stdout}")


@pytest.fixture(scope="session")
def analytic_run(tmp_path_factory) -> str:
    return _produce("analytic", tmp_path_factory.mktemp("runs"), _ANALYTIC)


@pytest.fixture(scope="session")
def nn_run(tmp_path_factory) -> str:
    return _produce("nn-sweep", tmp_path_factory.mktemp("runs"), _NN)
