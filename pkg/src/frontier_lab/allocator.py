"""Max-bottleneck loss model and compute-optimal resource allocation.

The joint reducible loss of a run with N parameters, D samples, and tau
optimizer steps is modeled as the tightest of three power-law bottlenecks

    L(N, D, tau) = max(A N^-aN, B D^-aD, G tau^-aT),

each term the saturated loss if that resource alone were binding.  Under
a compute budget C = flops_per_unit * N * tau (data-abundant) the
optimum balances capacity against optimization:

    N_opt = [(A/G) * (C/f)^aT]^(1/(aN+aT)),   tau_opt = C / (f * N_opt),

so N_opt grows like C^(aT/(aN+aT)).  With C = f * N * D (data-limited)
the same balance against the data term gives N_opt ~ C^(aD/(aN+aD)).
The turnover step count tau* is where the optimization bottleneck stops
binding: G tau^-aT = max(static terms).

When the exponents come from one underlying task (Zipf alpha, bias beta,
capacity efficiency gamma) they are linked: aN = gamma*(alpha-1),
aD = (alpha-1)/alpha, aT = (alpha-1)/(alpha*beta) — see from_task().
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple


@dataclass(frozen=True)
class BottleneckModel:
    """Coefficients (A, B, G) and exponents of the three loss terms."""

    a: float
    alpha_n: float
    b: float
    alpha_d: float
    g: float
    alpha_tau: float
    flops_per_unit: float = 6.0

    def __post_init__(self):
        for name in ("a", "alpha_n", "b", "alpha_d", "g", "alpha_tau", "flops_per_unit"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_task(
        cls,
        alpha: float,
        beta: float,
        gamma: float,
        a: float = 1.0,
        b: float = 1.0,
        g: float = 1.0,
        flops_per_unit: float = 6.0,
    ) -> "BottleneckModel":
        """Exponents induced by one Zipf task: alpha_n = gamma*(alpha-1),
        alpha_d = (alpha-1)/alpha, alpha_tau = (alpha-1)/(alpha*beta)."""
        if alpha <= 1:
            raise ValueError(f"task construction needs alpha > 1, got {alpha}")
        if beta <= 0 or gamma <= 0:
            raise ValueError("beta and gamma must be positive")
        return cls(
            a=a,
            alpha_n=gamma * (alpha - 1.0),
            b=b,
            alpha_d=(alpha - 1.0) / alpha,
            g=g,
            alpha_tau=(alpha - 1.0) / (alpha * beta),
            flops_per_unit=flops_per_unit,
        )

    def eps_n(self, n: float) -> float:
        return self.a * n ** (-self.alpha_n)

    def eps_d(self, d: float) -> float:
        return self.b * d ** (-self.alpha_d)

    def eps_tau(self, tau: float) -> float:
        return self.g * tau ** (-self.alpha_tau)


def joint_loss(model: BottleneckModel, n: float, d: float, tau: float) -> float:
    """max of the three bottleneck terms at (N, D, tau)."""
    if min(n, d, tau) < 1:
        raise ValueError("N, D, and tau must all be >= 1")
    return max(model.eps_n(n), model.eps_d(d), model.eps_tau(tau))


def turnover_tau(model: BottleneckModel, n: float, d: float) -> float:
    """Step count tau* where optimization meets the static bottleneck:
    solves G tau^-aT = max(A N^-aN, B D^-aD)."""
    if min(n, d) < 1:
        raise ValueError("N and D must be >= 1")
    eps_stat = max(model.eps_n(n), model.eps_d(d))
    return (eps_stat / model.g) ** (-1.0 / model.alpha_tau)


class KaplanOptimum(NamedTuple):
    n_opt: float
    tau_opt: float
    loss: float


class ChinchillaOptimum(NamedTuple):
    n_opt: float
    d_opt: float
    loss: float


def kaplan_optimum(model: BottleneckModel, budget: float) -> KaplanOptimum:
    """Data-abundant optimum under C = flops_per_unit * N * tau.

    Balances the capacity and optimization terms
    A N^-aN = G (C/(f N))^-aT in closed form.
    """
    if budget <= 0:
        raise ValueError(f"budget must be positive, got {budget}")
    f = model.flops_per_unit
    n_opt = ((model.a / model.g) * (budget / f) ** model.alpha_tau) ** (
        1.0 / (model.alpha_n + model.alpha_tau)
    )
    tau_opt = budget / (f * n_opt)
    return KaplanOptimum(n_opt, tau_opt, model.eps_n(n_opt))


def chinchilla_optimum(model: BottleneckModel, budget: float) -> ChinchillaOptimum:
    """Data-limited optimum under C = flops_per_unit * N * D.

    Balances the capacity and coverage terms A N^-aN = B (C/(f N))^-aD.
    """
    if budget <= 0:
        raise ValueError(f"budget must be positive, got {budget}")
    f = model.flops_per_unit
    n_opt = ((model.a / model.b) * (budget / f) ** model.alpha_d) ** (
        1.0 / (model.alpha_n + model.alpha_d)
    )
    d_opt = budget / (f * n_opt)
    return ChinchillaOptimum(n_opt, d_opt, model.eps_n(n_opt))
