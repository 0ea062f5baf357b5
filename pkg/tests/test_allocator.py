"""Max-bottleneck loss composition, the turnover step count, and the
two compute-optimal allocation regimes, checked against independent
bisection / golden-section numeric oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frontier_lab import (
    BottleneckModel,
    chinchilla_optimum,
    joint_loss,
    kaplan_optimum,
    turnover_tau,
)

SYMMETRIC = BottleneckModel(a=1, alpha_n=0.5, b=1, alpha_d=0.5, g=1, alpha_tau=0.5)


def golden_min(fn, lo, hi, iters=200):
    """Golden-section minimum of fn over [lo, hi] in log space."""
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = math.log(lo), math.log(hi)
    c, d = b - phi * (b - a), a + phi * (b - a)
    for _ in range(iters):
        if fn(math.exp(c)) < fn(math.exp(d)):
            b, d = d, c
            c = b - phi * (b - a)
        else:
            a, c = c, d
            d = a + phi * (b - a)
    return math.exp((a + b) / 2.0)


def random_model(rng):
    return BottleneckModel(
        a=10 ** rng.uniform(-1, 1),
        alpha_n=rng.uniform(0.15, 0.8),
        b=10 ** rng.uniform(-1, 1),
        alpha_d=rng.uniform(0.15, 0.8),
        g=10 ** rng.uniform(-1, 1),
        alpha_tau=rng.uniform(0.15, 0.8),
    )


# ------------------------------------------------------------ joint loss


def test_joint_loss_symmetric_point():
    assert joint_loss(SYMMETRIC, 100, 100, 100) == pytest.approx(0.1, rel=1e-14)


def test_joint_loss_single_active_bottleneck():
    got = joint_loss(SYMMETRIC, 1e15, 1e15, 100)
    assert got == pytest.approx(100**-0.5, rel=1e-12)


def test_max_sum_bracket_on_a_grid():
    # (eps_n + eps_d + eps_tau) / 3 <= max <= eps_n + eps_d + eps_tau,
    # everywhere on a 50^3 log grid
    model = BottleneckModel(a=2, alpha_n=0.3, b=0.5, alpha_d=0.6, g=1, alpha_tau=0.2)
    axis = np.geomspace(1, 1e12, 50)
    n, d, tau = np.meshgrid(axis, axis, axis, indexing="ij", sparse=True)
    en = model.a * n**-model.alpha_n
    ed = model.b * d**-model.alpha_d
    et = model.g * tau**-model.alpha_tau
    biggest = np.maximum(np.maximum(en, ed), et)
    total = en + ed + et
    assert np.all(biggest <= total)
    assert np.all(total <= 3.0 * biggest)


@settings(max_examples=100, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=10**6),
    n=st.floats(min_value=1, max_value=1e14),
    d=st.floats(min_value=1, max_value=1e14),
    tau=st.floats(min_value=1, max_value=1e14),
)
def test_max_sum_bracket_random(seed, n, d, tau):
    model = random_model(np.random.default_rng(seed))
    biggest = joint_loss(model, n, d, tau)
    total = model.eps_n(n) + model.eps_d(d) + model.eps_tau(tau)
    assert biggest <= total <= 3.0 * biggest * (1 + 1e-12)


def test_model_validation():
    with pytest.raises(ValueError):
        BottleneckModel(a=0, alpha_n=0.5, b=1, alpha_d=0.5, g=1, alpha_tau=0.5)
    with pytest.raises(ValueError):
        BottleneckModel(a=1, alpha_n=-0.1, b=1, alpha_d=0.5, g=1, alpha_tau=0.5)


# -------------------------------------------------------------- turnover


def test_turnover_examples():
    model = BottleneckModel(a=1, alpha_n=0.5, b=1, alpha_d=0.5, g=1, alpha_tau=0.5)
    # eps_stat = max(1e4^-0.5, 1e6^-0.5) = 0.01 -> tau* = 0.01^-2
    assert turnover_tau(model, 1e4, 1e6) == pytest.approx(1e4, rel=1e-12)
    # eps_stat = g -> the curves intersect at tau = 1
    assert turnover_tau(model, 1, 1) == pytest.approx(1.0, rel=1e-12)


def test_turnover_matches_bisection():
    rng = np.random.default_rng(42)
    for _ in range(50):
        model = random_model(rng)
        n = 10 ** rng.uniform(1, 10)
        d = 10 ** rng.uniform(1, 10)
        eps_stat = max(model.eps_n(n), model.eps_d(d))
        lo, hi = 1e-15, 1e30
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if model.g * mid**-model.alpha_tau > eps_stat:
                lo = mid
            else:
                hi = mid
        assert turnover_tau(model, n, d) == pytest.approx(lo, rel=1e-9)


def test_turnover_is_where_optimization_stops_binding():
    model = BottleneckModel(a=1, alpha_n=0.4, b=1, alpha_d=0.5, g=2, alpha_tau=0.3)
    n, d = 1e6, 1e8
    star = turnover_tau(model, n, d)
    floor = max(model.eps_n(n), model.eps_d(d))
    assert joint_loss(model, n, d, star * 0.5) > floor
    assert joint_loss(model, n, d, star * 2.0) == pytest.approx(floor, rel=1e-12)


# ------------------------------------------------------------- allocation


def test_kaplan_symmetric_exponent():
    # alpha_n = alpha_tau: N_opt grows as C^(1/2)
    got = [kaplan_optimum(SYMMETRIC, c).n_opt for c in (1e8, 1e10)]
    assert math.log10(got[1] / got[0]) / 2.0 == pytest.approx(0.5, rel=1e-10)


def test_kaplan_exponent_one_third():
    model = BottleneckModel(a=1, alpha_n=0.5, b=1, alpha_d=0.5, g=1, alpha_tau=0.25)
    got = [kaplan_optimum(model, c).n_opt for c in (1e9, 1e12)]
    assert math.log10(got[1] / got[0]) / 3.0 == pytest.approx(
        0.25 / 0.75, rel=1e-10
    )


def test_chinchilla_symmetric_scaling():
    a = chinchilla_optimum(SYMMETRIC, 1e8)
    b = chinchilla_optimum(SYMMETRIC, 1e10)
    assert b.n_opt / a.n_opt == pytest.approx(10.0, rel=1e-10)
    assert b.d_opt / a.d_opt == pytest.approx(10.0, rel=1e-10)


def test_chinchilla_fitted_exponent_case():
    model = BottleneckModel(a=1, alpha_n=0.34, b=1, alpha_d=0.28, g=1, alpha_tau=0.25)
    got = [chinchilla_optimum(model, c).n_opt for c in (1e9, 1e12)]
    exponent = math.log10(got[1] / got[0]) / 3.0
    assert exponent == pytest.approx(0.28 / 0.62, abs=1e-10)
    assert exponent == pytest.approx(0.4516, abs=1e-4)


def test_budget_splits_exactly():
    model = BottleneckModel(a=3, alpha_n=0.4, b=1, alpha_d=0.3, g=2, alpha_tau=0.2)
    for budget in (1e6, 1e10):
        kap = kaplan_optimum(model, budget)
        assert kap.n_opt * kap.tau_opt * model.flops_per_unit == pytest.approx(
            budget, rel=1e-12
        )
        chin = chinchilla_optimum(model, budget)
        assert chin.n_opt * chin.d_opt * model.flops_per_unit == pytest.approx(
            budget, rel=1e-12
        )


def test_balanced_terms_are_equal_and_perturbation_hurts():
    model = BottleneckModel(a=2, alpha_n=0.5, b=1, alpha_d=0.4, g=1.5, alpha_tau=0.3)
    budget = 1e10
    kap = kaplan_optimum(model, budget)
    assert model.eps_n(kap.n_opt) == pytest.approx(
        model.eps_tau(kap.tau_opt), rel=1e-9
    )
    f = model.flops_per_unit
    for bump in (1.05, 0.95):
        n = kap.n_opt * bump
        worse = max(model.eps_n(n), model.eps_tau(budget / (f * n)))
        assert worse > kap.loss * (1 + 1e-6)
    chin = chinchilla_optimum(model, budget)
    assert model.eps_n(chin.n_opt) == pytest.approx(
        model.eps_d(chin.d_opt), rel=1e-9
    )


def test_optima_match_golden_section():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 25:
        model = random_model(rng)
        budget = 10 ** rng.uniform(5, 12)
        f = model.flops_per_unit
        units = budget / f
        kap = kaplan_optimum(model, budget)
        chin = chinchilla_optimum(model, budget)
        # the golden oracle only sees the interior of [1, units]; skip
        # draws whose balanced optimum sits against that box
        if not all(10.0 <= o <= units / 10.0 for o in (kap.n_opt, chin.n_opt)):
            continue
        checked += 1
        n_kap = golden_min(
            lambda n: max(model.eps_n(n), model.eps_tau(budget / (f * n))), 1, units
        )
        n_chin = golden_min(
            lambda n: max(model.eps_n(n), model.eps_d(budget / (f * n))), 1, units
        )
        assert kap.n_opt == pytest.approx(n_kap, rel=1e-6)
        assert chin.n_opt == pytest.approx(n_chin, rel=1e-6)


# ------------------------------------------------------- task construction


def test_from_task_exponents():
    model = BottleneckModel.from_task(alpha=2.0, beta=2.0, gamma=0.5)
    assert model.alpha_n == pytest.approx(0.5, rel=1e-15)
    assert model.alpha_d == pytest.approx(0.5, rel=1e-15)
    assert model.alpha_tau == pytest.approx(0.25, rel=1e-15)
    with pytest.raises(ValueError):
        BottleneckModel.from_task(alpha=1.0, beta=2.0, gamma=0.5)
    with pytest.raises(ValueError):
        BottleneckModel.from_task(alpha=2.0, beta=-1.0, gamma=0.5)


def test_kaplan_loss_exponent_identity():
    # loss ~ C^-(an*at/(an+at)); via the task construction this equals
    # gamma*(alpha-1)/(gamma*alpha*beta + 1)
    alpha, beta, gamma = 2.0, 2.0, 0.5
    model = BottleneckModel.from_task(alpha, beta, gamma)
    c1, c2 = 1e8, 1e11
    slope = math.log(kaplan_optimum(model, c2).loss / kaplan_optimum(model, c1).loss)
    slope /= math.log(c2 / c1)
    composed = model.alpha_n * model.alpha_tau / (model.alpha_n + model.alpha_tau)
    by_hand = gamma * (alpha - 1.0) / (gamma * alpha * beta + 1.0)
    assert slope == pytest.approx(-composed, rel=1e-10)
    assert composed == pytest.approx(by_hand, rel=1e-12)
