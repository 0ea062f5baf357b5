"""Log-log power-law regression and the bias-exponent inversion."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frontier_lab import (
    InsufficientDataError,
    append_fit,
    infer_beta,
    loglog_fit,
    read_fits,
)


def power_points(coef, slope, xs):
    return [(x, coef * x**slope) for x in xs]


def test_exact_power_law_recovered():
    pts = power_points(3.0, -0.5, range(1, 101))
    fit = loglog_fit(pts)
    assert fit.slope == pytest.approx(-0.5, abs=1e-10)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-9)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)


def test_constant_series_has_zero_slope_and_unit_r2():
    fit = loglog_fit([(x, 7.0) for x in (1, 10, 100, 1000)], window=(1, 1000))
    assert fit.slope == 0.0
    assert fit.r2 == 1.0  # ss_tot = 0: the fit is exact by convention


def test_default_window_drops_the_edges():
    # 10% of a 4-decade log range is trimmed at each end, so corrupting
    # the extreme points must not move the fitted slope
    xs = np.geomspace(1, 1e4, 17)
    pts = power_points(2.0, -1.0, xs)
    pts[0] = (pts[0][0], pts[0][1] * 50.0)
    pts[-1] = (pts[-1][0], pts[-1][1] * 1e-3)
    fit = loglog_fit(pts)
    assert fit.slope == pytest.approx(-1.0, abs=1e-10)
    # 0.4 of the 4 decades go at each end: two of the 0.25-spaced points
    assert fit.n_points == 13
    assert fit.window[0] > 1.0 and fit.window[1] < 1e4


def test_sparse_wide_series_is_rejected_by_the_trim():
    # 4 points across 3 decades: the default trim leaves only 2 inside
    with pytest.raises(InsufficientDataError):
        loglog_fit(power_points(1.0, -0.5, [1, 10, 100, 1000]))
    # an explicit full window keeps all 4
    fit = loglog_fit(power_points(1.0, -0.5, [1, 10, 100, 1000]), window=(1, 1000))
    assert fit.n_points == 4


def test_insufficient_and_invalid_inputs():
    with pytest.raises(InsufficientDataError):
        loglog_fit([])
    with pytest.raises(InsufficientDataError):
        loglog_fit([(1, 1), (10, 2)], window=(1, 10))
    with pytest.raises(ValueError, match="x = -3"):
        loglog_fit([(-3.0, 1.0), (1, 1), (2, 1)])
    with pytest.raises(ValueError, match="window"):
        loglog_fit(power_points(1, -1, [1, 2, 4, 8]), window=(8, 1))
    with pytest.raises(ValueError, match="coincide"):
        loglog_fit([(5, 1), (5, 2), (5, 3)], window=(1, 10))


def test_non_positive_y_named_in_the_error():
    pts = [(1.0, 1.0), (2.0, 0.5), (4.0, 0.0), (8.0, 0.125)]
    with pytest.raises(ValueError, match="x = 4"):
        loglog_fit(pts, window=(1, 8))
    # ... but a zero outside the window is ignorable
    fit = loglog_fit(pts[:2] + [(3.0, 1.0 / 3.0)] + pts[3:], window=(1, 8))
    assert fit.n_points == 4


@settings(max_examples=60, deadline=None)
@given(
    scale=st.floats(min_value=1e-6, max_value=1e6),
    slope=st.floats(min_value=-3, max_value=3),
)
def test_scale_equivariance(scale, slope):
    xs = np.geomspace(1, 1e3, 12)
    base = loglog_fit(power_points(1.0, slope, xs))
    scaled = loglog_fit(power_points(scale, slope, xs))
    assert abs(scaled.slope - base.slope) < 1e-12
    assert scaled.intercept - base.intercept == pytest.approx(
        math.log(scale), abs=1e-9
    )


def test_window_shrink_is_neutral_on_an_exact_law():
    xs = np.geomspace(1, 1e4, 33)
    pts = power_points(5.0, -0.75, xs)
    wide = loglog_fit(pts, window=(1, 1e4))
    narrow = loglog_fit(pts, window=(10, 1e3))
    assert abs(wide.slope - narrow.slope) < 1e-12


def test_predict_inverts_the_fit():
    fit = loglog_fit(power_points(3.0, -0.5, range(1, 50)))
    assert fit.predict(9.0) == pytest.approx(3.0 * 9.0**-0.5, rel=1e-9)


# ------------------------------------------------------------ infer_beta


def test_infer_beta_values():
    assert infer_beta(1.5, 0.15) == pytest.approx(2.2222, abs=5e-4)
    assert infer_beta(1.3, 0.14) == pytest.approx(1.65, abs=5e-3)
    assert infer_beta(2.0, 0.25) == 2.0


def test_infer_beta_validation():
    with pytest.raises(ValueError):
        infer_beta(1.0, 0.2)
    with pytest.raises(ValueError):
        infer_beta(1.5, 0.0)
    with pytest.raises(ValueError):
        infer_beta(1.5, -0.3)  # callers pass the slope magnitude


# -------------------------------------------------------------- fits.csv


def test_fits_csv_round_trip(tmp_path):
    path = tmp_path / "fits.csv"
    fit1 = loglog_fit(power_points(3.0, -0.5, range(1, 40)))
    fit2 = loglog_fit(power_points(0.2, 1.25, np.geomspace(10, 1e5, 9)))
    append_fit(path, "coverage-a1.5", 1.5, fit1)
    append_fit(path, "compute-exp", 2.0, fit2)

    rows = read_fits(path)
    assert [r["series"] for r in rows] == ["coverage-a1.5", "compute-exp"]
    assert rows[0]["alpha"] == 1.5
    assert rows[0]["slope"] == fit1.slope  # repr round-trip is exact
    assert rows[1]["intercept"] == fit2.intercept
    assert rows[1]["n"] == fit2.n_points
    assert rows[1]["window_lo"] == fit2.window[0]

    header = path.read_text().splitlines()[0]
    assert header == "series,alpha,slope,intercept,r2,n,window_lo,window_hi"
