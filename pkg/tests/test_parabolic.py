import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gravflow.constitutive import arrhenius
from gravflow.core import Grid, NonFiniteError, SimParams, divergence
from gravflow.parabolic import (LinearStepInputs, heat_step, massfraction_matrix, solve_massfraction_step,
                                solve_momentum_step, solve_temperature_step)


def _sine(n):
    g = Grid((n,))
    return g, np.sin(np.pi * g.axis_coords(0))


def _discrete_eigen(h):
    return 4 / h**2 * math.sin(math.pi * h / 2) ** 2


def _swirl(g, amp):
    X, Y = g.mesh()
    s = np.sin(np.pi * X) * np.sin(np.pi * Y)
    return amp * np.stack([s * np.cos(3 * Y), s * np.sin(2 * X + 1)])


def test_inputs_reject_bad_values():
    g = Grid((4,))
    z = np.zeros(5)
    with pytest.raises(ValueError):
        LinearStepInputs(g, np.ones(5), z[None], z, 0.0)
    with pytest.raises(ValueError):
        LinearStepInputs(g, -np.ones(5), z[None], z, 0.1)
    with pytest.raises(NonFiniteError):
        LinearStepInputs(g, np.ones(5), z[None], np.full(5, np.nan), 0.1)


def test_temperature_zero_stays_zero():
    g = Grid((8, 8))
    inp = LinearStepInputs(g, np.ones(g.shape), g.vector_zeros(), g.zeros(), 0.1)
    assert np.all(solve_temperature_step(inp, SimParams(dim=2)) == 0)


def test_temperature_sine_mode_matches_backward_euler_factor():
    g, th = _sine(32)
    p = SimParams(k_heat=0.3, c_v=2.0)
    dt, steps = 0.01, 20
    for _ in range(steps):
        th = solve_temperature_step(LinearStepInputs(g, np.ones(g.shape), g.vector_zeros(), th, dt), p)
    factor = (1 + dt * p.k_heat * _discrete_eigen(g.spacing[0]) / p.c_v) ** -steps
    _, s = _sine(32)
    assert np.allclose(th, factor * s, atol=1e-12)


def test_temperature_decay_error_is_first_order_in_time():
    p = SimParams(k_heat=1.0, c_v=1.0)
    T = 0.1
    errs = []
    for dt in (0.01, 0.005):
        g, th = _sine(256)
        exact = math.exp(-p.k_heat * math.pi**2 * T / p.c_v) * th
        for _ in range(round(T / dt)):
            th = solve_temperature_step(LinearStepInputs(g, np.ones(g.shape), g.vector_zeros(), th, dt), p)
        errs.append(np.abs(th - exact).max())
    assert 0.9 <= math.log2(errs[0] / errs[1]) <= 1.1


def test_neumann_temperature_keeps_constants():
    g = Grid((8,), bc_theta="neumann_zero")
    inp = LinearStepInputs(g, np.ones(9), g.vector_zeros(), np.full(9, 2.5), 0.1)
    assert np.allclose(solve_temperature_step(inp, SimParams()), 2.5)


def test_momentum_zero_forcing_stays_at_rest():
    g = Grid((6, 6))
    inp = LinearStepInputs(g, np.ones(g.shape), g.vector_zeros(), g.vector_zeros(), 0.1)
    u = solve_momentum_step(inp, np.full(g.shape, 3.0), g.vector_zeros(), SimParams(dim=2))
    assert np.allclose(u, 0, atol=1e-14)


def test_momentum_stokes_decay_rate():
    g, s = _sine(32)
    p = SimParams(mu=0.4, lam=0.2)
    dt, steps = 0.005, 10
    u = s[None]
    for _ in range(steps):
        u = solve_momentum_step(LinearStepInputs(g, np.ones(g.shape), g.vector_zeros(), u, dt), g.zeros(),
                                g.vector_zeros(), p)
    rate = (2 * p.mu + p.lam) * _discrete_eigen(g.spacing[0])
    assert np.allclose(u[0], (1 + dt * rate) ** -steps * s, atol=1e-12)


def test_massfraction_zero_stays_zero():
    g = Grid((8,))
    inp = LinearStepInputs(g, np.ones(9), g.vector_zeros(), g.zeros(), 0.1)
    assert np.all(solve_massfraction_step(inp, np.ones(9), SimParams()) == 0)


def test_massfraction_pure_diffusion_of_sine_mode():
    g, s = _sine(32)
    p = SimParams(D=0.05)
    dt, steps = 0.02, 10
    Z = 0.5 * s
    for _ in range(steps):
        Z = solve_massfraction_step(LinearStepInputs(g, np.ones(g.shape), g.vector_zeros(), Z, dt), g.zeros(), p)
    factor = (1 + dt * p.D * _discrete_eigen(g.spacing[0])) ** -steps
    assert np.allclose(Z, factor * 0.5 * s, atol=1e-12)


def test_massfraction_reaction_decay_factor():
    g = Grid((32,))
    p = SimParams(D=1e-12, K_rate=3.0, E=1.0)
    theta_bar, dt = 0.8, 0.05
    Z = np.ones(g.shape)
    Z[[0, -1]] = 0.0
    out = solve_massfraction_step(LinearStepInputs(g, np.ones(g.shape), g.vector_zeros(), Z, dt),
                                  np.full(g.shape, theta_bar), p)
    factor = 1 / (1 + dt * p.K_rate * arrhenius(theta_bar, p))
    assert abs(out[16] - factor) <= 1e-9


def test_massfraction_matrix_is_an_m_matrix():
    g = Grid((10, 10))
    inp = LinearStepInputs(g, np.ones(g.shape), _swirl(g, 3.0), g.zeros(), 0.1)
    A = massfraction_matrix(inp, np.full(g.shape, 0.5), SimParams(dim=2, D=0.01)).toarray()
    off = A - np.diag(np.diag(A))
    assert np.all(off <= 0)
    assert np.all(np.diag(A) + off.sum(axis=1) >= 0)


@given(arrays(float, (11, 11), elements=st.floats(0, 1)), arrays(float, (11, 11), elements=st.floats(0.05, 3)),
       arrays(float, (11, 11), elements=st.floats(0, 5)), st.floats(-4, 4), st.floats(1e-3, 0.5))
def test_massfraction_stays_in_unit_interval(Z, rho, theta, amp, dt):
    g = Grid((10, 10))
    Z = Z.copy()
    Z[g.boundary_mask()] = 0.0
    inp = LinearStepInputs(g, rho, _swirl(g, amp), Z, dt)
    out = solve_massfraction_step(inp, theta, SimParams(dim=2, D=0.02, K_rate=2.0))
    assert out.min() >= -1e-10 and out.max() <= 1 + 1e-10


@given(arrays(float, (11, 11), elements=st.floats(0, 1)), arrays(float, (11, 11), elements=st.floats(0.05, 3)),
       arrays(float, (11, 11), elements=st.floats(0, 5)), st.floats(1e-3, 0.5))
def test_reaction_never_increases_int_rho_z(Z, rho, theta, dt):
    g = Grid((10, 10))
    Z = Z.copy()
    Z[g.boundary_mask()] = 0.0
    w = g.quadrature_weights()
    out = solve_massfraction_step(LinearStepInputs(g, rho, g.vector_zeros(), Z, dt), theta,
                                  SimParams(dim=2, D=0.02, K_rate=2.0))
    before, after = np.sum(w * rho * Z), np.sum(w * rho * out)
    assert after <= before + 1e-10 * max(before, 1.0)


def _edge_energy(f, g):
    """Sum of squared forward differences over all grid edges, times h^d / h^2."""
    total = 0.0
    for a, h in enumerate(g.spacing):
        total += np.sum(np.diff(f, axis=a) ** 2) / h**2
    return total * g.cell_volume


@given(arrays(float, (11, 11), elements=st.floats(0, 1)), arrays(float, (11, 11), elements=st.floats(0.05, 3)),
       st.floats(1e-3, 0.5))
def test_z_energy_dissipates_at_rest(Z, rho, dt):
    g = Grid((10, 10))
    Z = Z.copy()
    Z[g.boundary_mask()] = 0.0
    p = SimParams(dim=2, D=0.05, K_rate=0.0)
    out = solve_massfraction_step(LinearStepInputs(g, rho, g.vector_zeros(), Z, dt), g.zeros(), p)
    h = g.cell_volume
    change = 0.5 * np.sum(rho * out**2) * h - 0.5 * np.sum(rho * Z**2) * h
    assert change + dt * p.D * _edge_energy(out, g) <= 1e-10


@given(arrays(float, (11, 11), elements=st.floats(0, 2)), arrays(float, (11, 11), elements=st.floats(0.2, 2)),
       arrays(float, (11, 11), elements=st.floats(0, 3)), st.floats(-1, 1), st.floats(1e-3, 0.2))
def test_temperature_stays_non_negative(theta, rho, src, amp, dt):
    g = Grid((10, 10))
    theta = theta.copy()
    theta[g.boundary_mask()] = 0.0
    v = _swirl(g, amp)
    p = SimParams(dim=2, k_heat=0.5, c_v=1.0, R=0.5)
    assert dt * p.R * np.abs(divergence(v, g)).max() < 1
    # cell Peclet number below 2 keeps centered advection monotone
    assert p.c_v * rho.max() * np.abs(v).max() * g.spacing[0] / p.k_heat < 2
    out = solve_temperature_step(LinearStepInputs(g, rho, v, theta, dt, src), p)
    assert out.min() >= -1e-10


def test_heat_step_never_raises_the_max_norm(rng):
    g = Grid((12, 12))
    w = rng.standard_normal(g.shape)
    w[g.boundary_mask()] = 0
    for _ in range(5):
        nxt = heat_step(w, g, 0.01)
        assert np.abs(nxt).max() <= np.abs(w).max() + 1e-14
        w = nxt
