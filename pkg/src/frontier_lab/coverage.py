"""Coverage residuals for i.i.d. Zipf sampling.

After D independent draws, the chance that rank k was seen fewer than m
times is the binomial lower tail

    q_k(D) = Pr[Bin(D, p_k) < m],

which for m = 1 is (1 - p_k)^D.  Both are computed in log space so that
D p_k in the thousands does not underflow.  Summing p_k q_k(D) gives the
"missed mass" loss; the frontier sits where D p_k ~ m, i.e.

    k_star(D) = (D / (Z m))^(1/alpha),

so log-log loss-vs-D slopes are -(alpha - 1)/alpha and frontier slopes
are 1/alpha — the coverage instance of the tail-sum law.

Losses for unbounded supports route through the head + tail-quadrature
machinery in zipf.weighted_residual_sum; a literal truncated sum at a
1e-16 relative tolerance would need ~1e13 terms for the flat exponents
used here, so the quadrature reduction stands in for it (cross-checked
against an exact alternating-series oracle in the tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from frontier_lab.frontier import ResidualProfile, make_profile
from frontier_lab.zipf import ZipfModel, weighted_residual_sum

_MAX_MIN_COUNT = 16


@dataclass(frozen=True)
class CoverageConfig:
    """A coverage experiment: draw ``n_draws`` samples from ``model`` and
    call rank k covered once it has appeared ``min_count`` times.

    n_draws = 0 is the degenerate nothing-observed experiment (loss 1).
    """

    model: ZipfModel
    n_draws: int
    min_count: int = 1

    def __post_init__(self):
        object.__setattr__(self, "n_draws", int(self.n_draws))
        object.__setattr__(self, "min_count", int(self.min_count))
        if self.n_draws < 0:
            raise ValueError(f"draw count must be non-negative, got {self.n_draws}")
        if not 1 <= self.min_count <= _MAX_MIN_COUNT:
            raise ValueError(
                f"min_count must be in [1, {_MAX_MIN_COUNT}], got {self.min_count}"
            )


def residual_proxy(p, n_draws: int):
    """(1 - p)^D, evaluated as exp(D * log1p(-p)).  Accepts scalars or
    arrays; p = 1 with D >= 1 is exactly 0, and D = 0 is exactly 1."""
    p = np.asarray(p, dtype=np.float64)
    n_draws = int(n_draws)
    if n_draws < 0:
        raise ValueError(f"draw count must be non-negative, got {n_draws}")
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    if n_draws == 0:
        out = np.ones_like(p)
    else:
        with np.errstate(divide="ignore"):  # log1p(-1) = -inf is wanted
            out = np.exp(n_draws * np.log1p(-p))
    return float(out) if out.ndim == 0 else out


def residual_proxy_m(p: float, n_draws: int, min_count: int) -> float:
    """Pr[Bin(D, p) < m] via a log-space term-ratio recursion.

    Terms t_j = C(D,j) p^j (1-p)^(D-j) obey
    t_{j+1} = t_j * (D - j) p / ((j + 1)(1 - p)); the sum has at most
    m <= 16 terms, all positive, so no library CDF and no cancellation.
    m > D means fewer than m occurrences are certain -> 1.0; m = 1
    reduces exactly to residual_proxy.
    """
    p = float(p)
    n_draws = int(n_draws)
    min_count = int(min_count)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must be in [0, 1], got {p}")
    if n_draws < 0 or min_count < 1:
        raise ValueError("need n_draws >= 0 and min_count >= 1")
    if min_count > n_draws:
        return 1.0
    if p == 1.0:
        return 0.0  # count is deterministically D >= m
    if p == 0.0:
        return 1.0
    log_t = n_draws * math.log1p(-p)  # j = 0 term
    log_terms = [log_t]
    log_odds = math.log(p) - math.log1p(-p)
    for j in range(min_count - 1):
        log_t += math.log(n_draws - j) - math.log(j + 1) + log_odds
        log_terms.append(log_t)
    peak = max(log_terms)
    if peak == -math.inf:
        return 0.0
    total = math.fsum(math.exp(lt - peak) for lt in log_terms)
    return min(math.exp(peak + math.log(total)), 1.0)


def _proxy_vector(pk: np.ndarray, n_draws: int, min_count: int) -> np.ndarray:
    if min_count == 1:
        return np.atleast_1d(residual_proxy(pk, n_draws))
    return np.array([residual_proxy_m(p, n_draws, min_count) for p in pk])


def coverage_profile(config: CoverageConfig, k_max: int) -> ResidualProfile:
    """Analytic residual profile q_k = Pr[rank k seen < m times], k = 1..k_max."""
    ks = np.arange(1, int(k_max) + 1)
    pk = config.model.p(ks)
    q = _proxy_vector(pk, config.n_draws, config.min_count)
    return make_profile(q, config.model)


def coverage_frontier(config: CoverageConfig) -> float:
    """The rank where D * p_k = m: k = (D / (Z m))^(1/alpha)."""
    return (config.n_draws / (config.model.z * config.min_count)) ** (
        1.0 / config.model.alpha
    )


def coverage_loss(config: CoverageConfig) -> float:
    """Expected weighted residual sum_k p_k Pr[Bin(D, p_k) < m].

    D = 0 returns exactly 1.  Finite supports are summed directly;
    unbounded supports use the exact-head + tail-quadrature reduction.
    """
    model, n_draws, min_count = config.model, config.n_draws, config.min_count
    if n_draws == 0:
        return 1.0

    if model.is_finite:
        pk = model.frequencies()
        q = _proxy_vector(pk, n_draws, min_count)
        return float(math.fsum(pk * q))

    hint = max(coverage_frontier(config), 1.0)

    def fn(p):
        return _proxy_vector(np.atleast_1d(np.asarray(p, dtype=np.float64)),
                             n_draws, min_count)

    return weighted_residual_sum(model, fn, frontier_hint=hint)
