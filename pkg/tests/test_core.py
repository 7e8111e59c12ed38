import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gravflow.core import (Grid, SimParams, State, Trajectory, divergence, gradient, laplacian, periodic_cell,
                           wrap_periodic)

from conftest import interior_supported


def test_simparams_rejects_bad_viscosity():
    with pytest.raises(ValueError):
        SimParams(mu=0.0)
    with pytest.raises(ValueError):
        SimParams(mu=1.0, lam=-1.0)
    SimParams(mu=1.0, lam=-2.0 / 3.0)


@pytest.mark.parametrize("q", [3.0, 6.5])
def test_simparams_rejects_q_outside_range(q):
    with pytest.raises(ValueError):
        SimParams(q_sob=q)


def test_strict_viscosity_requires_seven_mu_above_lambda():
    with pytest.raises(ValueError):
        SimParams(mu=1.0, lam=7.0, strict_viscosity=True)
    assert SimParams(mu=1.0, lam=6.9, strict_viscosity=True).bkm_regime


def test_from_mapping_accepts_lambda_key_and_rejects_unknown():
    assert SimParams.from_mapping({"lambda": 0.3}).lam == 0.3
    with pytest.raises(ValueError):
        SimParams.from_mapping({"viscosity": 1.0})


def test_grid_rejects_small_extents():
    with pytest.raises(ValueError):
        Grid((3,))
    with pytest.raises(ValueError):
        Grid((8,), (0.0,))


def test_grid_geometry():
    g = Grid((4, 8), (2.0, 1.0), (-1.0, 0.0))
    assert g.shape == (5, 9)
    assert g.spacing == (0.5, 0.125)
    assert np.isclose(g.quadrature_weights().sum(), g.volume)
    assert g.axis_coords(0)[0] == -1.0 and np.isclose(g.axis_coords(0)[-1], 1.0)
    assert g.boundary_mask().sum() == 5 * 9 - 3 * 7


def test_state_is_read_only_and_checks_shapes():
    g = Grid((4,))
    s = State(0.0, np.ones(5), np.zeros(5), np.zeros((1, 5)), np.zeros(5), np.zeros(5))
    with pytest.raises(ValueError):
        s.rho[0] = 2.0
    with pytest.raises(ValueError):
        State(0.0, np.ones(5), np.zeros(4), np.zeros((1, 5)), np.zeros(5), np.zeros(5))
    assert not State.nan_like(1.0, g).is_finite()


def test_state_audit_reports_without_fixing():
    s = State(0.0, -np.ones(5), np.zeros(5), np.zeros((1, 5)), np.full(5, 1.5), np.zeros(5))
    issues = s.audit()
    assert len(issues) == 2
    assert s.Z.max() == 1.5


def test_trajectory_requires_uniform_lattice():
    mk = lambda t: State(t, np.ones(5), np.zeros(5), np.zeros((1, 5)), np.zeros(5), np.zeros(5))  # noqa: E731
    Trajectory(0.1, (mk(0.0), mk(0.1), mk(0.2)))
    with pytest.raises(ValueError):
        Trajectory(0.1, (mk(0.0), mk(0.1), mk(0.3)))
    with pytest.raises(ValueError):
        Trajectory(0.1, (mk(0.1), mk(0.2)))


def test_gradient_of_constant_is_zero():
    g = Grid((8, 6))
    assert np.all(gradient(np.full(g.shape, 3.0), g) == 0)


def test_gradient_of_linear_is_exact():
    g = Grid((16,))
    x = g.axis_coords(0)
    assert np.allclose(gradient(x, g)[0], 1.0, atol=1e-12)


def test_gradient_converges_at_second_order():
    errs = []
    for n in (128, 256):
        g = Grid((n,))
        x = g.axis_coords(0)
        errs.append(np.abs(gradient(np.sin(2 * np.pi * x), g)[0] - 2 * np.pi * np.cos(2 * np.pi * x)).max())
    assert np.log2(errs[0] / errs[1]) >= 1.9


def test_divergence_examples():
    g = Grid((8, 8))
    X, Y = g.mesh()
    assert np.allclose(divergence(np.stack([np.full(g.shape, 2.0), np.full(g.shape, -1.0)]), g), 0)
    assert np.allclose(divergence(np.stack([X, -Y]), g), 0, atol=1e-12)
    g1 = Grid((8,))
    assert np.allclose(divergence(g1.axis_coords(0)[None], g1), 1.0)


def test_laplacian_examples():
    g = Grid((16,))
    x = g.axis_coords(0)
    assert np.allclose(laplacian(np.full(g.shape, 4.0), g, "neumann_zero"), 0)
    assert np.allclose(laplacian(x**2, g, "neumann_zero")[1:-1], 2.0)


def test_laplacian_dirichlet_sine_second_order():
    errs = []
    for n in (32, 64):
        g = Grid((n,))
        x = g.axis_coords(0)
        f = np.sin(np.pi * x)
        errs.append(np.abs(laplacian(f, g, "dirichlet_zero") + np.pi**2 * f).max())
    assert np.log2(errs[0] / errs[1]) >= 1.9


def test_periodic_wrap_round_trip(rng):
    cell = rng.random((6, 5))
    full = wrap_periodic(cell)
    assert full.shape == (7, 6)
    assert np.array_equal(full[-1], full[0])
    assert np.array_equal(periodic_cell(full), cell)


@given(arrays(float, (12, 10), elements=st.floats(-1, 1)), arrays(float, (2, 12, 10), elements=st.floats(-1, 1)))
def test_summation_by_parts(f, v):
    g = Grid((11, 9), (1.0, 0.7))
    f = interior_supported(f)
    v = np.stack([interior_supported(c) for c in v])
    h = g.cell_volume
    lhs = np.sum(f * divergence(v, g)) * h
    rhs = -np.sum(gradient(f, g) * v) * h
    assert abs(lhs - rhs) <= 1e-12 * (1 + np.abs(f).sum() * np.abs(v).sum() / g.spacing[1])


@given(st.lists(st.floats(-2, 2), min_size=10, max_size=10))
def test_laplacian_matches_div_grad_away_from_boundary(coef):
    g = Grid((12, 10), (1.3, 0.9))
    X, Y = g.mesh()
    # every polynomial of total degree <= 3
    monomials = [X**0, X, Y, X**2, X * Y, Y**2, X**3, X**2 * Y, X * Y**2, Y**3]
    f = sum(c * m for c, m in zip(coef, monomials))
    core = (slice(2, -2), slice(2, -2))
    lap = laplacian(f, g, "neumann_zero")
    dg = divergence(gradient(f, g), g)
    assert np.allclose(lap[core], dg[core], atol=1e-9)
