import math

import numpy as np
import pytest

import grushin


def test_bridge_is_pinned_and_shaped():
    path = grushin.sample_bridge(T=2.0, n=8, d=3, seed=5)
    assert path.shape == (9, 3)
    assert np.all(path[0] == 0.0) and np.all(path[-1] == 0.0)
    again = grushin.sample_bridge(T=2.0, n=8, d=3, seed=5)
    assert np.array_equal(path, again)


def test_psi_closed_form():
    lam, value = grushin.psi_minimize(2.0, 3.0, 0.0, 1.0)
    assert value == pytest.approx(2.0 * math.sqrt(6.0), rel=1e-10)
    assert lam == pytest.approx((2.0 / 3.0) ** 0.25, rel=1e-10)


def test_c1_and_rate_function():
    assert grushin.c_gamma(1.0, 256) == pytest.approx(1.0 / math.pi, abs=1e-3)
    res = grushin.minimize_phi([0.0], [0.0], 1.0, gamma=1.0, grid_n=128)
    assert res["converged"]
    assert res["m"] == pytest.approx(2.0 * math.pi, rel=1e-2)
    assert res["minimizer"].shape == (129, 1)


def test_density_estimate_and_errors():
    params = grushin.GrushinParams(d=1, dprime=1, gamma=1.0)
    est = grushin.estimate_density(params, 0.5, [1.0], [0.0], [1.0], [0.2], samples=4096, grid=64)
    assert est.mean > 0.0 and est.stderr > 0.0 and est.n_samples == 4096
    with pytest.raises(ValueError):
        grushin.estimate_density(params, -1.0, [1.0], [0.0], [1.0], [0.0])
    with pytest.raises(ValueError):
        grushin.GrushinParams(gamma=0.0)


def test_degenerate_bounds_example():
    params = grushin.GrushinParams(d=1, dprime=1, gamma=1.0)
    b = grushin.degenerate_bounds(params, 2.0, 0.1)
    assert b["upper_bound"] == pytest.approx(-2.0)
    assert b["lower_bound"] < b["upper_bound"]
