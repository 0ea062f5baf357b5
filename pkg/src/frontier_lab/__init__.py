"""Analytic laboratory for resource-limited learning on Zipf tasks.

The package models one mechanism three ways — a learner that masters
patterns in frequency order down a power-law distribution — and checks
that they agree: closed-form coverage/optimization laws, stochastic
residual contraction, deep-chain gradient flow, and an actual trained
network.  A max-of-bottlenecks allocator turns the measured exponents
into compute-budget plans.
"""

from frontier_lab.allocator import (
    BottleneckModel,
    ChinchillaOptimum,
    KaplanOptimum,
    chinchilla_optimum,
    joint_loss,
    kaplan_optimum,
    turnover_tau,
)
from frontier_lab.coverage import (
    CoverageConfig,
    coverage_frontier,
    coverage_loss,
    coverage_profile,
    residual_proxy,
    residual_proxy_m,
)
from frontier_lab.dln import (
    DlnConfig,
    FlowInstabilityError,
    HorizonError,
    beta_from_depth,
    effective_rate,
    logistic_reference,
    measure_decay_rate,
    recover_beta,
    simulate_flow,
)
from frontier_lab.dynamics import (
    DynamicsConfig,
    IntegrabilityError,
    KernelSpec,
    asymptotic_loss,
    compute_prefactor,
    custom_kernel,
    expected_profile,
    expected_residual,
    exponential_kernel,
    mellin,
    rational_kernel,
    simulate_residuals,
)
from frontier_lab.fitting import (
    InsufficientDataError,
    PowerLawFit,
    append_fit,
    infer_beta,
    loglog_fit,
    read_fits,
)
from frontier_lab.frontier import (
    FrontierExtraction,
    ResidualProfile,
    SandwichReport,
    extract_frontier,
    make_profile,
    read_profile_csv,
    sandwich_check,
    write_profile_csv,
)
from frontier_lab.nnlab import (
    DivergenceError,
    ExperimentConfig,
    SweepCell,
    SweepRecord,
    read_records_csv,
    sweep,
    train_run,
    write_records_csv,
)
from frontier_lab.zipf import (
    DivergentNormalizationError,
    ZipfModel,
    frontier_loss,
    make_zipf,
    tail_mass,
    weighted_residual_sum,
)

__version__ = "0.1.0"

__all__ = [
    "BottleneckModel",
    "ChinchillaOptimum",
    "CoverageConfig",
    "DivergenceError",
    "DivergentNormalizationError",
    "DlnConfig",
    "DynamicsConfig",
    "ExperimentConfig",
    "FlowInstabilityError",
    "FrontierExtraction",
    "HorizonError",
    "InsufficientDataError",
    "IntegrabilityError",
    "KaplanOptimum",
    "KernelSpec",
    "PowerLawFit",
    "ResidualProfile",
    "SandwichReport",
    "SweepCell",
    "SweepRecord",
    "ZipfModel",
    "append_fit",
    "asymptotic_loss",
    "beta_from_depth",
    "chinchilla_optimum",
    "compute_prefactor",
    "coverage_frontier",
    "coverage_loss",
    "coverage_profile",
    "custom_kernel",
    "effective_rate",
    "expected_profile",
    "expected_residual",
    "exponential_kernel",
    "extract_frontier",
    "frontier_loss",
    "infer_beta",
    "joint_loss",
    "kaplan_optimum",
    "logistic_reference",
    "loglog_fit",
    "make_profile",
    "make_zipf",
    "measure_decay_rate",
    "mellin",
    "rational_kernel",
    "read_fits",
    "read_profile_csv",
    "read_records_csv",
    "recover_beta",
    "residual_proxy",
    "residual_proxy_m",
    "sandwich_check",
    "simulate_flow",
    "simulate_residuals",
    "sweep",
    "tail_mass",
    "train_run",
    "turnover_tau",
    "weighted_residual_sum",
    "write_profile_csv",
    "write_records_csv",
]
