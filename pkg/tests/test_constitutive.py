import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gravflow.constitutive import (ArrheniusParams, arrhenius, arrhenius_dtheta, arrhenius_ratio_bound, heat_source,
                                   lame_apply, pressure, viscous_dissipation)
from gravflow.core import Grid, SimParams
from gravflow.oracle import scalar_max_search

from conftest import interior_supported

P = ArrheniusParams()


def test_pressure_examples():
    assert pressure(0.0, 5.0, 2.0) == 0.0
    assert pressure(1.0, 1.0, 1.0) == 1.0
    assert math.isclose(pressure(2.0, 3.0, 8.314), 49.884)


@pytest.mark.parametrize("theta", [-1.0, 0.0])
def test_arrhenius_vanishes_off_positive_temperatures(theta):
    assert arrhenius(theta, P) == 0.0
    assert arrhenius_dtheta(theta, P) == 0.0


def test_arrhenius_at_activation_temperature():
    E = 2.5
    assert math.isclose(arrhenius(E, ArrheniusParams(0.5, E)), math.sqrt(E) / math.e)


def test_arrhenius_has_no_floating_point_warnings():
    with np.errstate(all="raise"):
        vals = arrhenius(np.array([1e-300, 1e-5, 1e-3, 1.0, 1e300]), P)
    assert vals[0] == 0.0 and np.all(np.isfinite(vals))


@given(st.floats(1e-3, 50.0), st.floats(0.1, 5.0), st.floats(0.0, 2.0))
def test_arrhenius_derivative_matches_central_difference(theta, E, alpha):
    p = ArrheniusParams(alpha, E)
    h = 1e-6 * theta
    fd = (arrhenius(theta + h, p) - arrhenius(theta - h, p)) / (2 * h)
    exact = arrhenius_dtheta(theta, p)
    assert abs(fd - exact) <= 1e-6 * abs(exact) + 1e-300


def test_arrhenius_derivative_vanishes_at_zero_plus():
    assert arrhenius_dtheta(1e-3, P) < 1e-300


@given(st.lists(st.floats(-5, 100), min_size=2, max_size=40))
def test_arrhenius_is_non_decreasing(thetas):
    th = np.sort(np.array(thetas))
    assert np.all(np.diff(arrhenius(th, P)) >= 0)


def test_heat_source_examples():
    p = SimParams(q_heat=1.0, K_rate=1.0, E=1.7)
    assert heat_source(1.0, 0.0, p) == 0.0
    assert heat_source(0.0, 1.0, p) == 0.0
    assert math.isclose(heat_source(1.7, 1.0, p), math.sqrt(1.7) / math.e)


@given(st.floats(0.05, 20.0))
def test_ratio_bound_matches_golden_section(E):
    p = ArrheniusParams(0.5, E)
    arg, best = scalar_max_search(lambda t: arrhenius(t, p) / t, (1e-6 * E, 50 * E))
    assert math.isclose(arg, 2 * E, rel_tol=1e-5)
    assert math.isclose(best, math.exp(-0.5) / math.sqrt(2 * E), rel_tol=1e-10)
    assert math.isclose(arrhenius_ratio_bound(p, 1), best, rel_tol=1e-10)


@pytest.mark.parametrize("power", [1, 2])
def test_sampled_ratio_never_exceeds_bound(power):
    p = ArrheniusParams(0.5, 1.3)
    theta = np.geomspace(1e-4, 1e4, 20001)
    ratio = arrhenius(theta, p) / theta**power
    _, best = scalar_max_search(lambda t: arrhenius(t, p) / t**power, (1e-4, 1e4))
    assert ratio.max() <= best * (1 + 1e-12)
    assert ratio.max() <= arrhenius_ratio_bound(p, power) * (1 + 1e-12)


def test_viscous_dissipation_examples():
    g = Grid((8, 8))
    X, Y = g.mesh()
    mu, lam = 0.7, 0.2
    assert np.allclose(viscous_dissipation(np.ones((2, *g.shape)), g, mu, lam), 0)
    assert np.allclose(viscous_dissipation(np.stack([X, -Y]), g, mu, lam), 4 * mu)
    g1 = Grid((8,))
    assert np.allclose(viscous_dissipation(g1.axis_coords(0)[None], g1, mu, lam), 2 * mu + lam)


@given(arrays(float, (2, 9, 9), elements=st.floats(-3, 3)), st.floats(0.01, 3.0), st.floats(-0.66, 3.0))
def test_viscous_dissipation_non_negative(u, mu, lam_ratio):
    g = Grid((8, 8))
    assert viscous_dissipation(u, g, mu, lam_ratio * mu).min() >= -1e-12


def test_lame_zero_and_sine_mode():
    g = Grid((16,))
    assert np.all(lame_apply(np.zeros((1, 17)), g, 1.0, 0.5) == 0)
    errs = []
    mu, lam = 0.8, 0.3
    for n in (32, 64):
        g = Grid((n,))
        u = np.sin(np.pi * g.axis_coords(0))[None]
        errs.append(np.abs(lame_apply(u, g, mu, lam) - (2 * mu + lam) * np.pi**2 * u).max())
    assert np.log2(errs[0] / errs[1]) >= 1.9


def test_lame_rejects_other_boundary_conditions():
    g = Grid((8,))
    with pytest.raises(ValueError):
        lame_apply(np.zeros((1, 9)), g, 1.0, 0.0, bc="neumann_zero")


def test_lame_quadratic_form_is_non_negative(rng):
    g = Grid((10, 8))
    for _ in range(100):
        u = np.stack([interior_supported(rng.standard_normal(g.shape), 1) for _ in range(2)])
        assert np.sum(u * lame_apply(u, g, 0.6, 0.4)) >= -1e-10
