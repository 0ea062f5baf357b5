"""Command-line front end: run the standard pipelines and drop their
artifacts (CSV tables + manifest) into a timestamped run directory.

Commands
    analytic   coverage + optimization laws, no training
    nn-sweep   train the synthetic network along one resource axis
    dln        deep-chain gradient flow trajectories and rate recovery
    plan       budget-split tables for a bottleneck cost model
    verify     run the full verification registry, exit 0 iff all pass

Configuration is TOML: built-in defaults, optionally overlaid by
--config FILE, then by positional KEY=VALUE overrides (dotted keys,
TOML-literal values), e.g.

    frontier-lab nn-sweep nn.axis=model-N nn.grid_min=10 nn.grid_max=1000
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
import time

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from frontier_lab import allocator, coverage, dln, dynamics, fitting, nnlab
from frontier_lab.frontier import extract_frontier, write_profile_csv
from frontier_lab.zipf import make_zipf

COMMANDS = ("analytic", "nn-sweep", "dln", "plan", "verify")

DEFAULTS = {
    "run": {"seed": 0, "out_root": "runs", "jobs": 0},  # jobs 0: all cores
    "analytic": {
        "alphas": [1.3, 1.5, 1.7, 1.9, 2.1],
        "data_min": 1e3,
        "data_max": 1e7,
        "data_points": 9,
        "min_count": 1,
        "frontier_alphas": [1.5, 2.0],
        "profile_alpha": 1.5,
        "kernel_alpha": 1.5,
        "kernel_beta": 2.0,
        "kernel_c": 1.0,
        "kernel_r": 2.0,
        "tau_min": 1e6,
        "tau_max": 1e9,
        "tau_points": 9,
    },
    "nn": {
        "alpha": 1.5,
        "vocab": 1000,
        "hidden": 2000,
        "batch": 64,
        "lr": 0.1,
        "momentum": 0.9,
        "init_std": 0.1,
        "axis": "data-D",
        "grid_min": 1000,
        "grid_max": 100000,
        "grid_points": 6,
        "steps": 10000,
        "epochs": 10,
        "seeds": [0, 1, 2],
    },
    "dln": {
        "depth": 2,
        "zeta": 1.0,
        "eta": 1.0,
        "alpha": 1.5,
        "vocab": 1000,
        "target_scale": 1.0,
        "ranks": [1, 4, 16, 64],
    },
    "plan": {
        "alpha": 1.5,
        "beta": 2.0,
        "gamma": 0.5,
        "coef_n": 1.0,
        "coef_d": 1.0,
        "coef_tau": 1.0,
        "flops_per_unit": 6.0,
        "budget_min": 1e6,
        "budget_max": 1e12,
        "budget_points": 7,
        "regime": "both",
    },
    "verify": {"scale": "full"},
}


class UsageError(Exception):
    pass


def _flat_keys(tree: dict, prefix: str = "") -> list[str]:
    out = []
    for key, value in tree.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            out.extend(_flat_keys(value, f"{dotted}."))
        else:
            out.append(dotted)
    return out


def _coerce(dotted: str, value, reference):
    """Fit an override/file value to the type of the built-in default."""
    if isinstance(reference, bool):
        if isinstance(value, bool):
            return value
    elif isinstance(reference, int):
        if isinstance(value, bool):
            raise UsageError(f"{dotted}: expected an integer, got {value!r}")
        if isinstance(value, int):
            return value
        if isinstance(value, float) and value == int(value):
            return int(value)
    elif isinstance(reference, float):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif isinstance(reference, list):
        if isinstance(value, list):
            return list(value)
    elif isinstance(reference, str):
        if isinstance(value, str):
            return value
    raise UsageError(
        f"{dotted}: expected {type(reference).__name__}, got {value!r}"
    )


def _set_key(config: dict, dotted: str, value) -> None:
    node, ref = config, DEFAULTS
    parts = dotted.split(".")
    for part in parts[:-1]:
        if not isinstance(ref.get(part), dict):
            raise UsageError(
                f"unknown key {dotted!r}; valid keys: {', '.join(_flat_keys(DEFAULTS))}"
            )
        node, ref = node[part], ref[part]
    leaf = parts[-1]
    if leaf not in ref or isinstance(ref[leaf], dict):
        raise UsageError(
            f"unknown key {dotted!r}; valid keys: {', '.join(_flat_keys(DEFAULTS))}"
        )
    node[leaf] = _coerce(dotted, value, ref[leaf])


def _merge_file(config: dict, tree: dict, prefix: str = "") -> None:
    for key, value in tree.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            if not isinstance(DEFAULTS_lookup(dotted), dict):
                raise UsageError(
                    f"unknown section {dotted!r}; valid keys: "
                    f"{', '.join(_flat_keys(DEFAULTS))}"
                )
            _merge_file(config, value, f"{dotted}.")
        else:
            _set_key(config, dotted, value)


def DEFAULTS_lookup(dotted: str):
    node = DEFAULTS
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            return None
        node = node[part]
    return node


def load_config(config_file: str | None, overrides) -> dict:
    """Defaults <- config file <- KEY=VALUE overrides, validated against
    the default tree (unknown keys are usage errors).  A FRONTIER_LAB_SEED
    environment variable supplies run.seed when nothing else sets it."""
    config = copy.deepcopy(DEFAULTS)
    seed_set = False
    if config_file is not None:
        with open(config_file, "rb") as fh:
            tree = tomllib.load(fh)
        seed_set = isinstance(tree.get("run"), dict) and "seed" in tree["run"]
        _merge_file(config, tree)
    for item in overrides:
        key, _, raw = item.partition("=")
        if not _:
            raise UsageError(f"override {item!r} is not KEY=VALUE")
        key = key.strip()
        try:
            value = tomllib.loads(f"v = {raw}")["v"]
        except tomllib.TOMLDecodeError:
            value = raw
        _set_key(config, key, value)
        seed_set = seed_set or key == "run.seed"
    env_seed = os.environ.get("FRONTIER_LAB_SEED")
    if env_seed is not None and not seed_set:
        try:
            config["run"]["seed"] = int(env_seed)
        except ValueError:
            raise UsageError(f"FRONTIER_LAB_SEED must be an integer, got {env_seed!r}")
    return config


def _make_run_dir(out_root: str, command: str) -> str:
    stamp = time.strftime("%Y%m%d-%H%M%S", time.gmtime())
    base = os.path.join(out_root, f"{stamp}-{command}")
    path, i = base, 1
    while os.path.exists(path):
        i += 1
        path = f"{base}-{i}"
    os.makedirs(path)
    return path


def _write_manifest(run_dir: str, command: str, config: dict, seeds, started: str) -> None:
    outputs = []
    for dirpath, _, files in os.walk(run_dir):
        for fname in files:
            if fname == "manifest.json":
                continue
            outputs.append(os.path.relpath(os.path.join(dirpath, fname), run_dir))
    try:
        from importlib.metadata import version

        pkg_version = version("frontier-lab")
    except Exception:
        pkg_version = "unknown"
    manifest = {
        "command": command,
        "version": pkg_version,
        "config": config,
        "seeds": seeds,
        "outputs": sorted(outputs),
        "started": started,
        "finished": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    with open(os.path.join(run_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _int_grid(lo: float, hi: float, n: int) -> list[int]:
    grid = np.unique(
        np.round(np.logspace(math.log10(lo), math.log10(hi), int(n))).astype(np.int64)
    )
    return [int(v) for v in grid]


def _write_csv(path: str, header: list[str], rows) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [repr(float(v)) if isinstance(v, float) else v for v in row]
            )


# --- commands ---------------------------------------------------------------


def _cmd_analytic(config: dict, run_dir: str) -> int:
    cfg = config["analytic"]
    fits_path = os.path.join(run_dir, "fits.csv")
    d_grid = _int_grid(cfg["data_min"], cfg["data_max"], cfg["data_points"])

    rows = []
    for alpha in cfg["alphas"]:
        model = make_zipf(float(alpha))
        pts = []
        for d in d_grid:
            loss = coverage.coverage_loss(
                coverage.CoverageConfig(model, d, cfg["min_count"])
            )
            rows.append((float(alpha), d, cfg["min_count"], loss))
            pts.append((float(d), loss))
        fitting.append_fit(
            fits_path, f"coverage-a{alpha:g}", float(alpha), fitting.loglog_fit(pts)
        )
    _write_csv(
        os.path.join(run_dir, "coverage_loss.csv"),
        ["alpha", "D", "m", "loss"],
        rows,
    )

    rows = []
    for alpha in cfg["frontier_alphas"]:
        model = make_zipf(float(alpha))
        pts = []
        for d in d_grid:
            cc = coverage.CoverageConfig(model, d, cfg["min_count"])
            k_ana = coverage.coverage_frontier(cc)
            profile = coverage.coverage_profile(cc, k_max=max(64, int(4 * k_ana) + 8))
            k_hat = extract_frontier(profile, 0.5).k_star
            rows.append((float(alpha), d, k_ana, k_hat))
            pts.append((float(d), k_hat))
        fitting.append_fit(
            fits_path, f"frontier-a{alpha:g}", float(alpha), fitting.loglog_fit(pts)
        )
    _write_csv(
        os.path.join(run_dir, "coverage_frontier.csv"),
        ["alpha", "D", "k_analytic", "k_extracted"],
        rows,
    )

    profile_dir = os.path.join(run_dir, "profiles")
    os.makedirs(profile_dir, exist_ok=True)
    alpha = float(cfg["profile_alpha"])
    model = make_zipf(alpha)
    showcase = [d_grid[0], d_grid[len(d_grid) // 2], d_grid[-1]]
    for d in showcase:
        cc = coverage.CoverageConfig(model, d, cfg["min_count"])
        k_max = min(50_000, max(64, int(4 * coverage.coverage_frontier(cc)) + 8))
        ks = np.arange(1, k_max + 1)
        profile = coverage.coverage_profile(cc, k_max)
        write_profile_csv(
            os.path.join(profile_dir, f"profile-coverage-a{alpha:g}-D{d}.csv"),
            ks,
            model.p(ks),
            profile.residuals,
        )

    alpha = float(cfg["kernel_alpha"])
    model = make_zipf(alpha)
    kernels = [
        ("exponential", dynamics.exponential_kernel(cfg["kernel_c"], cfg["kernel_beta"])),
        (
            f"rational-r{cfg['kernel_r']:g}",
            dynamics.rational_kernel(cfg["kernel_r"], cfg["kernel_c"], cfg["kernel_beta"]),
        ),
    ]
    taus = np.logspace(
        math.log10(cfg["tau_min"]), math.log10(cfg["tau_max"]), int(cfg["tau_points"])
    )
    rows = []
    for label, kernel in kernels:
        s, pref = dynamics.compute_prefactor(model, kernel)
        pts = []
        for tau in taus:
            loss = dynamics.asymptotic_loss(model, kernel, float(tau))
            ratio = loss / (pref * float(tau) ** (-s))
            rows.append((label, alpha, cfg["kernel_beta"], float(tau), loss, ratio))
            pts.append((float(tau), loss))
        fitting.append_fit(fits_path, f"compute-{label}", alpha, fitting.loglog_fit(pts))
    _write_csv(
        os.path.join(run_dir, "dynamics_loss.csv"),
        ["kernel", "alpha", "beta", "tau", "loss", "prefactor_ratio"],
        rows,
    )
    return 0


def _cmd_nn_sweep(config: dict, run_dir: str, jobs: int) -> int:
    cfg = config["nn"]
    base = nnlab.ExperimentConfig(
        vocab=cfg["vocab"],
        alpha=float(cfg["alpha"]),
        hidden=cfg["hidden"],
        dataset=None,
        steps=cfg["steps"],
        lr=float(cfg["lr"]),
        momentum=float(cfg["momentum"]),
        batch=cfg["batch"],
        init_std=float(cfg["init_std"]),
        seed=config["run"]["seed"],
    )
    grid = _int_grid(cfg["grid_min"], cfg["grid_max"], cfg["grid_points"])
    profile_dir = os.path.join(run_dir, "profiles")
    os.makedirs(profile_dir, exist_ok=True)
    cells = nnlab.sweep(
        base,
        cfg["axis"],
        grid,
        seeds=cfg["seeds"],
        out_dir=profile_dir,
        epochs=cfg["epochs"],
        jobs=jobs,
    )
    nnlab.write_records_csv(
        os.path.join(run_dir, "records.csv"), [c.record for c in cells]
    )
    fits_path = os.path.join(run_dir, "fits.csv")
    alpha = float(cfg["alpha"])
    loss_pts = [(float(c.record.value), c.record.delta_l) for c in cells]
    fitting.append_fit(
        fits_path, f"{cfg['axis']}-delta_L", alpha, fitting.loglog_fit(loss_pts)
    )
    k_pts = [(float(c.record.value), c.record.k_star) for c in cells]
    fitting.append_fit(
        fits_path, f"{cfg['axis']}-k_star", alpha, fitting.loglog_fit(k_pts)
    )
    return 0


def _cmd_dln(config: dict, run_dir: str) -> int:
    cfg = config["dln"]
    model = make_zipf(float(cfg["alpha"]), support=cfg["vocab"])
    flow = dln.DlnConfig(
        depth=cfg["depth"],
        zeta=float(cfg["zeta"]),
        eta=float(cfg["eta"]),
        model=model,
        target_scale=float(cfg["target_scale"]),
    )
    traj_dir = os.path.join(run_dir, "trajectories")
    os.makedirs(traj_dir, exist_ok=True)
    ranks = [int(k) for k in cfg["ranks"]]
    rows = []
    for k in ranks:
        traj = dln.simulate_flow(flow, k, dln._horizon(flow, k))
        _write_csv(
            os.path.join(traj_dir, f"traj-L{flow.depth}-z{flow.zeta:g}-k{k}.csv"),
            ["t", "u", "q"],
            zip(traj.t, traj.u, traj.q),
        )
        rows.append(
            (
                k,
                float(model.p(k)),
                dln._decay_rate(flow, k),
                dln._refined_decay_rate(flow, k, traj),
            )
        )
    _write_csv(
        os.path.join(run_dir, "dln_rates.csv"),
        ["rank", "p", "rate_predicted", "rate_measured"],
        rows,
    )
    beta_hat = dln.recover_beta(flow, ranks)
    summary = {
        "depth": flow.depth,
        "zeta": flow.zeta,
        "eta": flow.eta,
        "alpha": model.alpha,
        "ranks": ranks,
        "beta_recovered": beta_hat,
        "beta_predicted": dln.beta_from_depth(flow.depth, flow.zeta),
    }
    with open(os.path.join(run_dir, "dln_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(
        f"depth {flow.depth}, zeta {flow.zeta:g}: recovered beta "
        f"{beta_hat:.4f} (predicted {summary['beta_predicted']:.4f})"
    )
    return 0


def _cmd_plan(config: dict, run_dir: str) -> int:
    cfg = config["plan"]
    model = allocator.BottleneckModel.from_task(
        alpha=float(cfg["alpha"]),
        beta=float(cfg["beta"]),
        gamma=float(cfg["gamma"]),
        a=float(cfg["coef_n"]),
        b=float(cfg["coef_d"]),
        g=float(cfg["coef_tau"]),
        flops_per_unit=float(cfg["flops_per_unit"]),
    )
    regimes = ("kaplan", "chinchilla") if cfg["regime"] == "both" else (cfg["regime"],)
    if any(r not in ("kaplan", "chinchilla") for r in regimes):
        raise UsageError("plan.regime must be kaplan, chinchilla, or both")
    budgets = np.logspace(
        math.log10(cfg["budget_min"]),
        math.log10(cfg["budget_max"]),
        int(cfg["budget_points"]),
    )
    rows = []
    for regime in regimes:
        for budget in budgets:
            if regime == "kaplan":
                opt = allocator.kaplan_optimum(model, float(budget))
                second = opt.tau_opt
            else:
                opt = allocator.chinchilla_optimum(model, float(budget))
                second = opt.d_opt
            rows.append((regime, float(budget), opt.n_opt, second, opt.loss))
    _write_csv(
        os.path.join(run_dir, "plan.csv"),
        ["regime", "budget", "n_opt", "second_resource", "loss"],
        rows,
    )
    with open(os.path.join(run_dir, "plan.json"), "w") as fh:
        json.dump(
            {
                "exponents": {
                    "alpha_n": model.alpha_n,
                    "alpha_d": model.alpha_d,
                    "alpha_tau": model.alpha_tau,
                },
                "rows": [
                    dict(
                        zip(("regime", "budget", "n_opt", "second_resource", "loss"), r)
                    )
                    for r in rows
                ],
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    print(
        f"exponents: alpha_N = {model.alpha_n:.4f}, alpha_D = {model.alpha_d:.4f}, "
        f"alpha_tau = {model.alpha_tau:.4f}"
    )
    print(f"{'regime':<11} {'budget':>10} {'N_opt':>12} {'second':>12} {'loss':>10}")
    for regime, budget, n_opt, second, loss in rows:
        print(f"{regime:<11} {budget:>10.2e} {n_opt:>12.4e} {second:>12.4e} {loss:>10.4e}")
    return 0


def _cmd_verify(config: dict, run_dir: str) -> int:
    from frontier_lab import acceptance

    quick = config["verify"]["scale"] == "quick"
    results = acceptance.run_checks(
        quick=quick, progress=lambda msg: print(msg, flush=True)
    )
    width = max(len(r.name) for r in results)
    failed = 0
    lines = []
    for r in results:
        status = "SKIP" if r.passed is None else ("PASS" if r.passed else "FAIL")
        failed += status == "FAIL"
        lines.append(f"{r.name:<{width}}  {status}  {r.seconds:7.1f}s  {r.detail}")
    print("\n".join(lines))
    print(f"{sum(r.passed for r in results if r.passed is not None)} passed, "
          f"{failed} failed, {sum(r.passed is None for r in results)} skipped")
    _write_csv(
        os.path.join(run_dir, "verify_results.csv"),
        ["name", "status", "seconds", "detail"],
        [
            (
                r.name,
                "SKIP" if r.passed is None else ("PASS" if r.passed else "FAIL"),
                r.seconds,
                r.detail,
            )
            for r in results
        ],
    )
    return 1 if failed else 0


def run(command: str, config_file: str | None = None, overrides=()) -> tuple[int, str | None]:
    """Resolve configuration, execute one command, and write its manifest.

    Returns (exit_code, run_dir).  Usage problems return code 2 without
    creating a run directory.
    """
    if command not in COMMANDS:
        raise UsageError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    try:
        config = load_config(config_file, overrides)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2, None
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2, None

    jobs = config["run"]["jobs"] or os.cpu_count() or 1
    started = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    run_dir = _make_run_dir(config["run"]["out_root"], command)
    seeds = {"root": config["run"]["seed"]}
    if command == "nn-sweep":
        seeds["cells"] = list(config["nn"]["seeds"])
    try:
        if command == "analytic":
            code = _cmd_analytic(config, run_dir)
        elif command == "nn-sweep":
            code = _cmd_nn_sweep(config, run_dir, jobs)
        elif command == "dln":
            code = _cmd_dln(config, run_dir)
        elif command == "plan":
            code = _cmd_plan(config, run_dir)
        else:
            code = _cmd_verify(config, run_dir)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2, run_dir
    _write_manifest(run_dir, command, config, seeds, started)
    print(f"artifacts: {run_dir}")
    return code, run_dir


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="frontier-lab",
        description="Analytic scaling-law laboratory: coverage, dynamics, "
        "deep chains, budget plans, and their verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("analytic", "coverage + optimization laws (no training)"),
        ("nn-sweep", "train the synthetic network along one resource axis"),
        ("dln", "deep-chain gradient-flow trajectories and rate recovery"),
        ("plan", "budget-split tables for a bottleneck cost model"),
        ("verify", "run the verification registry; exit 0 iff all checks pass"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="FILE", default=None, help="TOML config file")
        p.add_argument(
            "--jobs",
            type=int,
            default=None,
            metavar="N",
            help="worker processes for sweeps (default: available cores)",
        )
        if name == "verify":
            p.add_argument(
                "--quick",
                action="store_true",
                help="skip the checks that need full-scale network training",
            )
        p.add_argument(
            "overrides",
            nargs="*",
            metavar="KEY=VALUE",
            help="config overrides, e.g. nn.alpha=1.3",
        )
    args = parser.parse_args(argv)
    overrides = list(args.overrides)
    if args.jobs is not None:
        overrides.append(f"run.jobs={args.jobs}")
    if getattr(args, "quick", False):
        overrides.append("verify.scale=quick")
    code, _ = run(args.command, args.config, overrides)
    return code


if __name__ == "__main__":
    sys.exit(main())
