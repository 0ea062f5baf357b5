"""Residual profiles and effective-frontier extraction.

A residual profile is the vector q_k in [0, 1] of per-pattern residuals
at ranks k = 1..K under a Zipf weight model.  Learning advances a
transition region: below it residuals are small (q <= delta), above it
they are large (q >= 1 - delta).  The extraction reports

    k_minus = sup{k : q_k <= delta}        (0 when no rank qualifies)
    k_plus  = inf{k : q_k >= 1 - delta}    (K + 1 when none)
    k_star  = geometric mean of the two delta-crossings, each refined by
              linear interpolation of q in log-k between bracketing ranks.

Noisy (non-monotone) profiles are first replaced by their running-max
envelope; all frontier geometry and sandwich sums are computed on that
envelope.  With delta = 0.5 both thresholds coincide and k_star is the
familiar half-residual crossing.

The sandwich bound brackets the weighted loss of a monotone profile:

    (1-d) * sum_{k > (1+e) k*} p_k   <=   sum_k p_k q_k
         <=   d * sum_{k <= (1-e) k*} p_k  +  sum_{k > (1-e) k*} p_k

so the loss is pinched between tail masses on either side of the
frontier — the numerical content of the tail-sum reduction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from frontier_lab.zipf import ZipfModel


@dataclass(frozen=True)
class ResidualProfile:
    """Per-rank residuals q_k (clipped to [0,1]) with their Zipf weights."""

    residuals: np.ndarray
    weights: ZipfModel

    def __len__(self) -> int:
        return len(self.residuals)

    @property
    def envelope(self) -> np.ndarray:
        """Running-max monotonization of the residuals."""
        return np.maximum.accumulate(self.residuals)


def make_profile(residuals, model: ZipfModel) -> ResidualProfile:
    """Validate and wrap residuals; values above 1 (training overshoot)
    are clipped to 1 for analysis — the raw clamp only ever appears in
    profile CSV logs."""
    q = np.asarray(residuals, dtype=np.float64).copy()
    if q.ndim != 1 or len(q) == 0:
        raise ValueError("profile must be a non-empty 1-D residual vector")
    if not np.all(np.isfinite(q)) or np.any(q < 0):
        raise ValueError("residuals must be finite and non-negative")
    np.clip(q, 0.0, 1.0, out=q)
    q.flags.writeable = False
    return ResidualProfile(residuals=q, weights=model)


@dataclass(frozen=True)
class FrontierExtraction:
    """Transition boundaries of a residual profile at tolerance delta.

    delta lies in (0, 0.5]; at exactly 0.5 the two thresholds coincide.
    saturated is set when the profile never crosses (fully learned:
    k_star = K; fully unlearned: k_star = 1).
    """

    delta: float
    k_minus: int
    k_plus: int
    k_star: float
    saturated: bool


def _log_crossing(env: np.ndarray, level: float, lo_idx: int) -> float:
    """Rank where env crosses `level` between ranks lo_idx+1 and lo_idx+2,
    linearly interpolated in (log k, q).  lo_idx is a 0-based index."""
    a, b = lo_idx + 1, lo_idx + 2  # 1-based bracketing ranks
    qa, qb = env[lo_idx], env[lo_idx + 1]
    if qb <= qa:
        return float(a)
    t = (level - qa) / (qb - qa)
    t = min(max(t, 0.0), 1.0)
    return math.exp(math.log(a) + t * (math.log(b) - math.log(a)))


def extract_frontier(profile: ResidualProfile, delta: float = 0.5) -> FrontierExtraction:
    """Locate the learned/unlearned transition of a profile.

    See the module docstring for the boundary definitions.  Saturated
    profiles (no crossing) report k_star = K or 1 instead of aborting so
    resource sweeps can run past their extremes.
    """
    if not 0.0 < delta <= 0.5:
        raise ValueError(f"delta must be in (0, 0.5], got {delta}")
    if len(profile) == 0:
        raise ValueError("cannot extract a frontier from an empty profile")
    env = profile.envelope
    k = len(env)

    below = np.nonzero(env <= delta)[0]
    k_minus = int(below[-1]) + 1 if len(below) else 0
    above = np.nonzero(env >= 1.0 - delta)[0]
    k_plus = int(above[0]) + 1 if len(above) else k + 1

    if k_plus == k + 1 and k_minus == k:
        # never rises to 1 - delta and ends low: fully learned
        return FrontierExtraction(delta, k_minus, k_plus, float(k), True)
    if k_minus == 0 and k_plus == 1:
        # starts at or above 1 - delta: fully unlearned
        return FrontierExtraction(delta, k_minus, k_plus, 1.0, True)

    # lower crossing of `delta`: between k_minus and k_minus + 1
    if k_minus == 0:
        x_minus = 1.0  # profile starts above delta; window opens at rank 1
    elif k_minus == k:
        x_minus = float(k)
    else:
        x_minus = _log_crossing(env, delta, k_minus - 1)
    # upper crossing of `1 - delta`: between k_plus - 1 and k_plus
    if k_plus == k + 1:
        x_plus = float(k)  # tail never saturates; window closes at rank K
    elif k_plus == 1:
        x_plus = 1.0
    else:
        x_plus = _log_crossing(env, 1.0 - delta, k_plus - 2)

    k_star = math.sqrt(x_minus * x_plus)
    lo = k_minus if k_minus >= 1 else 1
    hi = k_plus if k_plus <= k else k
    k_star = min(max(k_star, float(lo)), float(hi))
    return FrontierExtraction(delta, k_minus, k_plus, k_star, False)


@dataclass(frozen=True)
class SandwichReport:
    lower: float
    actual: float
    upper: float
    ok: bool


def sandwich_check(
    profile: ResidualProfile, extraction: FrontierExtraction, epsilon: float
) -> SandwichReport:
    """Tail-mass bracket of the envelope-weighted loss (module docstring).

    All three quantities are computed over the profile's rank range on
    the running-max envelope (analytic profiles are already monotone, so
    this only matters for noisy training profiles).  ok allows 1e-12
    relative slack for float round-off.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    env = profile.envelope
    k = len(env)
    ks = np.arange(1, k + 1)
    pk = profile.weights.p(ks)
    delta, k_star = extraction.delta, extraction.k_star

    actual = math.fsum(pk * env)
    hi_cut = (1.0 + epsilon) * k_star
    lo_cut = (1.0 - epsilon) * k_star
    lower = (1.0 - delta) * math.fsum(pk[ks > hi_cut])
    upper = delta * math.fsum(pk[ks <= lo_cut]) + math.fsum(pk[ks > lo_cut])

    slack = 1e-12 * max(1.0, abs(actual))
    ok = (lower <= actual + slack) and (actual <= upper + slack)
    return SandwichReport(lower=lower, actual=actual, upper=upper, ok=ok)


def write_profile_csv(path, ks, p_k, q_k) -> None:
    """Write the `k,p_k,q_k` profile schema.

    q_k is the logged residual column (it may carry the raw overshoot
    clamp, up to 1.5, which make_profile would clip for analysis).
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "p_k", "q_k"])
        for k, p, q in zip(ks, p_k, q_k):
            writer.writerow([int(k), repr(float(p)), repr(float(q))])


def read_profile_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read the `k,p_k,q_k` schema back as (k, p_k, q_k) arrays."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["k", "p_k", "q_k"]:
            raise ValueError(f"{path}: expected header k,p_k,q_k, got {header}")
        rows = [(int(r[0]), float(r[1]), float(r[2])) for r in reader]
    if not rows:
        raise ValueError(f"{path}: no profile rows")
    ks, p, q = (np.asarray(col) for col in zip(*rows))
    return ks, p, q
