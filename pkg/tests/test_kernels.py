"""Alias-table sampling: construction, distribution, and the contract
that the compiled and pure-numpy kernels consume the same PCG64 stream."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frontier_lab._kernels import (
    KERNEL_IMPL,
    AliasTable,
    sample_counts,
    sample_counts_py,
)


def test_impl_marker():
    assert KERNEL_IMPL in ("compiled", "python")


def test_construction_rejects_bad_input():
    with pytest.raises(ValueError):
        AliasTable([])
    with pytest.raises(ValueError):
        AliasTable([[0.5, 0.5]])
    with pytest.raises(ValueError):
        AliasTable([0.7, -0.1, 0.4])
    with pytest.raises(ValueError):
        AliasTable([0.5, 0.4])  # sums to 0.9


def test_table_invariants():
    p = np.array([0.5, 0.25, 0.125, 0.125])
    table = AliasTable(p)
    assert table.k == 4
    assert np.all((0.0 <= table.prob) & (table.prob <= 1.0 + 1e-12))
    assert np.all((0 <= table.alias) & (table.alias < 4))


@given(st.lists(st.floats(min_value=0.01, max_value=10.0), min_size=1, max_size=50))
@settings(max_examples=50, deadline=None)
def test_counts_always_sum_to_draws(weights):
    p = np.array(weights) / sum(weights)
    table = AliasTable(p / p.sum())
    counts = table.sample_counts(np.random.PCG64(0), 1000)
    assert counts.sum() == 1000
    assert counts.dtype == np.int64
    assert np.all(counts >= 0)


def test_counts_match_the_distribution():
    p = np.array([0.6, 0.25, 0.1, 0.05])
    table = AliasTable(p)
    n = 200_000
    counts = table.sample_counts(np.random.PCG64(42), n)
    # 5 sigma on each binomial count
    sigma = np.sqrt(n * p * (1 - p))
    assert np.all(np.abs(counts - n * p) < 5 * sigma), counts / n


def test_single_outcome_distribution():
    table = AliasTable([1.0])
    assert table.sample_counts(np.random.PCG64(1), 500).tolist() == [500]


def test_compiled_and_fallback_agree_exactly():
    """Same seed, same table -> bit-identical counts from both kernels,
    including across the fallback's 65536-draw chunk boundary."""
    rng = np.random.default_rng(9)
    p = rng.dirichlet(np.ones(200))
    table = AliasTable(p)
    for n_draws in (1, 1000, 70_000):
        active = table.sample_counts(np.random.PCG64(7), n_draws)
        fallback = table.sample_counts(np.random.PCG64(7), n_draws, fn=sample_counts_py)
        assert np.array_equal(active, fallback), n_draws


def test_active_kernel_is_exported_one():
    p = np.array([0.3, 0.7])
    table = AliasTable(p)
    a = table.sample_counts(np.random.PCG64(3), 4096)
    b = sample_counts(np.random.PCG64(3), table.prob, table.alias, 4096)
    assert np.array_equal(a, b)


def test_draw_matches_counting_kernel():
    """AliasTable.draw consumes the identical uniform stream, so its
    tally equals sample_counts for the same seed."""
    p = np.random.default_rng(11).dirichlet(np.ones(30))
    table = AliasTable(p)
    n = 4096
    counts = table.sample_counts(np.random.PCG64(5), n)
    draws = table.draw(np.random.Generator(np.random.PCG64(5)), n)
    assert np.array_equal(np.bincount(draws, minlength=30), counts)
    assert draws.shape == (n,)
    shaped = table.draw(np.random.Generator(np.random.PCG64(5)), (64, 64))
    assert shaped.shape == (64, 64)
    assert np.array_equal(shaped.ravel(), draws)


def test_zero_draws():
    table = AliasTable([0.5, 0.5])
    assert table.sample_counts(np.random.PCG64(0), 0).tolist() == [0, 0]
