"""Birkhoff averages of torus characters against their exact integrals."""

import numpy as np
import pytest

from anosovlab import (
    Observable,
    birkhoff_average,
    birkhoff_averages,
    ergodicity_test,
    spread_scaling,
)


def test_observable_parse_and_exact_means():
    o = Observable.parse("cos:1,0")
    assert o.exact_mean == 0.0
    assert "cos" in o.label
    x = np.array([[0.0, 0.3], [0.25, 0.1]])
    assert np.allclose(o(x), np.cos(2 * np.pi * x[:, 0]))
    s = Observable.parse("sin:0,2")
    assert s.exact_mean == 0.0
    c = Observable.parse("const:1")
    assert c.exact_mean == 1.0
    assert np.allclose(c(x), 1.0)


def test_observable_rejects_zero_frequency_trig():
    with pytest.raises(ValueError):
        Observable.parse("cos:0,0")
    with pytest.raises(ValueError):
        Observable.parse("tan:1,0")


def test_birkhoff_average_of_constant_is_exact(f_mid):
    val = birkhoff_average(f_mid, Observable.parse("const:1"),
                           np.array([0.123, 0.456]), steps=1000)
    assert abs(val - 1.0) < 1e-12


def test_birkhoff_averages_checkpoint_consistency(f_small):
    obs = [Observable.parse("cos:1,0")]
    starts = np.random.default_rng(0).uniform(size=(5, 2))
    checks = birkhoff_averages(f_small, obs, starts, steps=1000,
                               checkpoints=[100, 1000])
    short = birkhoff_averages(f_small, obs, starts, steps=100)
    full = birkhoff_averages(f_small, obs, starts, steps=1000)
    assert np.allclose(checks[100], short, atol=1e-13)
    assert np.allclose(checks[1000], full, atol=1e-13)


def test_ergodicity_linear(f_lin):
    obs = [Observable.parse(s) for s in ("cos:1,0", "sin:0,1", "cos:1,1")]
    report = ergodicity_test(f_lin, obs, n_starts=30, steps=20_000, seed=1,
                             mean_tol=0.02, std_tol=0.04)
    assert report.passed
    for row in report.rows:
        assert abs(row.mean - row.exact_mean) < 0.02
        assert row.std < 0.04
        assert row.mean_ok and row.std_ok
    assert report.det_defect < 1e-9


def test_ergodicity_sheared(f_small):
    obs = [Observable.parse(s) for s in ("cos:1,0", "sin:0,1")]
    report = ergodicity_test(f_small, obs, n_starts=30, steps=20_000, seed=2,
                             mean_tol=0.02, std_tol=0.04)
    assert report.passed


def test_ergodicity_report_is_seed_deterministic(f_small):
    obs = [Observable.parse("cos:1,1")]
    a = ergodicity_test(f_small, obs, n_starts=10, steps=2000, seed=3)
    b = ergodicity_test(f_small, obs, n_starts=10, steps=2000, seed=3)
    assert np.array_equal(a.averages, b.averages)


def test_no_dither_collapses_on_lattice_preserving_matrix(f_lin):
    # The reference matrix squares to twice a unimodular matrix, so every
    # binary-float point is driven to the fixed point (0, 0) within about a
    # hundred exact double-precision iterations.  With the dither disabled
    # the time average of cos(2*pi*x1) therefore locks near cos(0) = 1,
    # which is what the default dither exists to prevent.
    obs = [Observable.parse("cos:1,0")]
    rng = np.random.default_rng(7)
    starts = rng.random((20, 2))
    frozen = birkhoff_averages(f_lin, obs, starts, 20_000, dither=0.0)
    assert np.mean(frozen) > 0.9
    healthy = birkhoff_averages(f_lin, obs, starts, 20_000)
    assert abs(np.mean(healthy)) < 0.01


def test_spread_scaling_slope(f_lin):
    obs = [Observable.parse("cos:1,0")]
    steps_list = [1000, 10_000, 100_000]
    spreads = spread_scaling(f_lin, obs, n_starts=60, steps_list=steps_list,
                             seed=4)
    stds = np.array([spreads[n][0] for n in steps_list])
    assert np.all(np.diff(stds) < 0.0)
    slope = np.polyfit(np.log10(steps_list), np.log10(stds), 1)[0]
    assert -0.65 < slope < -0.35
