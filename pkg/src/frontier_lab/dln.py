"""Depth-L linear-network gradient flow, one pattern at a time.

Under balanced initialization a depth-L linear chain collapses to one
effective weight u_k per pattern obeying

    du/dt = eta * L * p_k * u^(2 - 2/L) * (u*_k - u),      u(0) = u0,

with target u*_k = target_scale * p_k^zeta.  The normalized residual is
q = (u - u*)^2 / u*^2.  Near convergence u*-u decays exponentially at
rate 2*eta*L*Lambda_k with Lambda_k = p_k * u*_k^(2-2/L), so measuring
log-rate against log-p across ranks recovers the implicit-bias exponent

    beta = slope + 1 = 2 + zeta*(2 - 2/L):

one power of p from the sampling frequency plus zeta*(2-2/L) from the
target scale entering the degenerate u^(2-2/L) factor.

L = 2 is the logistic equation with the closed form
u(t) = u* A e^(2 eta Lambda t) / (1 + A e^(2 eta Lambda t)),
A = u0/(u* - u0), used as the integrator's reference; deeper nets start
in a u^(2-2/L) plateau whose escape time sets the horizon heuristics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import expit

from frontier_lab.zipf import ZipfModel

_RATE_FIT_WINDOW = (1e-8, 1e-2)  # q range where the decay law is asymptotic


class FlowInstabilityError(RuntimeError):
    """The integrated effective weight left (0, u*] beyond tolerance."""


class HorizonError(RuntimeError):
    """A trajectory had not reached its convergence phase by t_end."""


@dataclass(frozen=True)
class DlnConfig:
    """Effective-weight gradient flow over the patterns of a Zipf model.

    zeta >= 0: target scale exponent (u*_k = target_scale * p_k^zeta);
    zeta = 0 gives rank-independent targets.  Negative zeta (targets
    growing down-rank) is rejected as unlearnable-in-order.
    u0 defaults to 1e-4 * min_k u*_k (finite support), small enough to
    be "near zero" but clear of the u^(2-2/L) stall at exactly 0.
    """

    depth: int
    zeta: float
    eta: float
    model: ZipfModel
    u0: float | None = None
    target_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "depth", int(self.depth))
        if self.depth < 2:
            raise ValueError(f"depth must be >= 2, got {self.depth}")
        if self.zeta < 0:
            raise ValueError(f"zeta must be >= 0, got {self.zeta}")
        if self.eta <= 0 or self.target_scale <= 0:
            raise ValueError("eta and target_scale must be positive")
        if self.u0 is None:
            if not self.model.is_finite:
                raise ValueError("u0 must be given explicitly for unbounded support")
            u_min = self.target_scale * float(np.min(self.model.frequencies())) ** self.zeta
            object.__setattr__(self, "u0", 1e-4 * u_min)
        if self.u0 <= 0:
            raise ValueError(f"u0 must be positive, got {self.u0}")
        if self.model.is_finite:
            u_min = self.target_scale * float(np.min(self.model.frequencies())) ** self.zeta
            if self.u0 >= u_min:
                raise ValueError(
                    f"u0 = {self.u0:.3g} must lie below the smallest target {u_min:.3g}"
                )

    def target(self, k: int) -> float:
        """u*_k = target_scale * p_k^zeta."""
        return self.target_scale * float(self.model.p(k)) ** self.zeta


def effective_rate(p: float, u_star: float, L: int) -> float:
    """Lambda = p * u_star^(2 - 2/L), the per-pattern convergence rate scale."""
    if u_star <= 0:
        raise ValueError(f"u_star must be positive, got {u_star}")
    if int(L) < 2:
        raise ValueError(f"depth must be >= 2, got {L}")
    return p * u_star ** (2.0 - 2.0 / int(L))


def beta_from_depth(L: int, zeta: float) -> float:
    """Implicit-bias exponent 2 + zeta * (2 - 2/L) of a depth-L chain."""
    if int(L) < 1:
        raise ValueError(f"depth must be >= 1, got {L}")
    if zeta < 0:
        raise ValueError(f"zeta must be >= 0, got {zeta}")
    return 2.0 + zeta * (2.0 - 2.0 / int(L))


class FlowTrajectory(NamedTuple):
    t: np.ndarray
    u: np.ndarray
    q: np.ndarray


def _decay_rate(config: DlnConfig, k: int) -> float:
    """Predicted late-time decay rate of q_k: 2 * eta * L * Lambda_k."""
    return 2.0 * config.eta * config.depth * effective_rate(
        float(config.model.p(k)), config.target(k), config.depth
    )


def _horizon(config: DlnConfig, k: int) -> float:
    """t_end heuristic: twice the init-plateau escape plus ~16 e-foldings
    of q past it (enough to push q well below the fit window floor)."""
    L, eta, u0 = config.depth, config.eta, config.u0
    p, u_star = float(config.model.p(k)), config.target(k)
    if L == 2:
        escape = math.log(u_star / u0) / (2.0 * eta * effective_rate(p, u_star, 2))
    else:
        a = 1.0 - 2.0 / L
        escape = u0 ** (-a) / (a * eta * L * p * u_star)
    return 2.0 * escape + 36.0 / _decay_rate(config, k)


def _integrate(config: DlnConfig, k: int, t_grid: np.ndarray) -> FlowTrajectory:
    """Adaptive RK45 solve of the rank-k effective-weight ODE, sampled on
    an explicit time grid.  Raises FlowInstabilityError if u escapes
    (0, u*] beyond tolerance."""
    u_star = config.target(k)
    p = float(config.model.p(k))
    if p <= 0:
        raise ValueError(f"rank {k} lies outside the model support")
    if config.u0 >= u_star:
        raise ValueError(
            f"rank {k}: u0 = {config.u0:.3g} must start below u* = {u_star:.3g}"
        )
    rate = config.eta * config.depth * p
    a = 2.0 - 2.0 / config.depth

    def rhs(_t, y):
        u = y[0]
        return [rate * u**a * (u_star - u)]

    sol = solve_ivp(
        rhs,
        (0.0, float(t_grid[-1])),
        [config.u0],
        method="RK45",
        rtol=1e-9,
        atol=1e-14 * u_star,
        dense_output=True,
    )
    if not sol.success:
        raise FlowInstabilityError(f"rank {k}: integrator failed: {sol.message}")
    u = sol.sol(t_grid)[0]
    if np.any(u <= 0.0) or np.any(u > u_star * (1.0 + 1e-6)):
        raise FlowInstabilityError(
            f"rank {k}: u left (0, u*] (range [{u.min():.3g}, {u.max():.3g}], "
            f"u* = {u_star:.3g})"
        )
    q = (u - u_star) ** 2 / u_star**2
    return FlowTrajectory(t=t_grid, u=u, q=q)


def simulate_flow(
    config: DlnConfig, k: int, t_end: float, n_points: int = 600
) -> FlowTrajectory:
    """Integrate the effective-weight ODE for rank k up to t_end.

    Explicit adaptive RK45 at local tolerance 1e-9, sampled on a
    log-spaced time grid (t = 0 prepended).  Raises FlowInstabilityError
    if u escapes (0, u*] beyond tolerance.
    """
    if t_end <= 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    t = np.concatenate(([0.0], np.geomspace(t_end * 1e-7, t_end, n_points - 1)))
    return _integrate(config, k, t)


def logistic_reference(config: DlnConfig, k: int, t) -> np.ndarray:
    """Closed-form depth-2 trajectory u* A e^(2 eta Lambda t)/(1 + A e^(...)),
    evaluated overflow-free as u* * sigmoid(2 eta Lambda t + log A)."""
    if config.depth != 2:
        raise ValueError("the logistic closed form only holds at depth 2")
    u_star = config.target(k)
    lam = effective_rate(float(config.model.p(k)), u_star, 2)
    log_a = math.log(config.u0) - math.log(u_star - config.u0)
    return u_star * expit(2.0 * config.eta * lam * np.asarray(t, dtype=float) + log_a)


def measure_decay_rate(traj: FlowTrajectory) -> float:
    """Late-time exponential decay rate of q, fitted over q in [1e-8, 1e-2]."""
    lo, hi = _RATE_FIT_WINDOW
    mask = (traj.q >= lo) & (traj.q <= hi)
    if int(mask.sum()) < 3:
        raise HorizonError(
            f"only {int(mask.sum())} trajectory points inside the q fit window "
            f"[{lo:g}, {hi:g}]; extend t_end or densify the grid"
        )
    slope = np.polyfit(traj.t[mask], np.log(traj.q[mask]), 1)[0]
    return -float(slope)


def _refined_decay_rate(config: DlnConfig, k: int, traj: FlowTrajectory) -> float:
    """measure_decay_rate on a linear re-solve across the fit window.

    The standard log-spaced grid can straddle the whole decay window in
    a point or two when the init plateau dominates the horizon (depth
    > 2), so bracket the window on the coarse trajectory and resample
    it linearly before fitting.
    """
    lo, hi = _RATE_FIT_WINDOW
    below_hi = np.nonzero(traj.q < hi)[0]
    below_lo = np.nonzero(traj.q < lo)[0]
    if len(below_hi) == 0 or len(below_lo) == 0:
        raise HorizonError(
            f"rank {k}: trajectory never decays through the fit window "
            f"[{lo:g}, {hi:g}]; extend t_end"
        )
    t_a = traj.t[max(below_hi[0] - 1, 0)]
    t_b = traj.t[below_lo[0]]
    return measure_decay_rate(_integrate(config, k, np.linspace(t_a, t_b, 160)))


def recover_beta(config: DlnConfig, ranks) -> float:
    """Fit the implicit-bias exponent from measured per-rank decay rates.

    Integrates each rank to a per-rank horizon, measures the late-time
    decay rate of q, regresses log(rate) on log(p), and returns
    slope + 1 (the extra 1 restores the sampling-frequency power that
    the per-pattern flow already contains).
    """
    ranks = sorted(int(k) for k in ranks)
    if len(ranks) < 4:
        raise ValueError(f"need at least 4 ranks, got {len(ranks)}")
    pk = np.array([float(config.model.p(k)) for k in ranks])
    if np.any(pk <= 0):
        raise ValueError("all ranks must lie inside the model support")
    decades = math.log10(pk.max() / pk.min())
    if decades < 1.5:
        raise ValueError(
            f"ranks span only {decades:.2f} decades of p_k; need >= 1.5"
        )
    rates = []
    for k in ranks:
        t_end = _horizon(config, k)
        traj = simulate_flow(config, k, t_end)
        if traj.q[-1] > 0.1:
            raise HorizonError(
                f"rank {k}: q = {traj.q[-1]:.3g} > 0.1 at t_end = {t_end:.3g}; "
                "trajectory not yet in its convergence phase"
            )
        rates.append(_refined_decay_rate(config, k, traj))
    slope = np.polyfit(np.log(pk), np.log(rates), 1)[0]
    return float(slope) + 1.0
