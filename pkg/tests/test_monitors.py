import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gravflow.core import Grid, SimParams, State, Trajectory
from gravflow.monitors import (Watchdog, WatchdogThresholds, check_compatibility, diagnostics_table,
                               invariant_audit, watchdog_scan)
from gravflow.norms import lp_norm
from gravflow.picard import InitialData, linearized_sweep, picard_iterate
from gravflow.presets import get_preset
from gravflow.transport import VelocityHistory


# --- compatibility ----------------------------------------------------------

def test_uniform_rest_is_compatible():
    g = Grid((10, 10))
    ics = InitialData(np.full(g.shape, 2.0), g.zeros(), g.vector_zeros(), g.zeros())
    rep = check_compatibility(ics, SimParams(dim=2), g)
    assert rep.verdict == "compatible"
    assert rep.l2_g1 == 0 and rep.l2_g2 == 0 and rep.vacuum_nodes == 0


def _vacuum_with_linear_temperature(g):
    # density switches on at x = 1/2; theta falls linearly to zero there and stays zero
    x = g.axis_coords(0)
    rho = np.where(x >= 0.5 - 1e-12, 1.0, 0.0)
    theta = np.maximum(0.5 - x, 0.0)
    return InitialData(rho, theta, g.vector_zeros(), g.zeros())


def test_harmonic_temperature_in_vacuum_is_compatible():
    g = Grid((32,), bc_theta="neumann_zero")
    rep = check_compatibility(_vacuum_with_linear_temperature(g), SimParams(), g)
    assert rep.vacuum_nodes == 15
    assert rep.vacuum_residual < 1e-12
    assert rep.verdict == "compatible"


def test_unbalanced_momentum_in_vacuum_is_incompatible():
    g = Grid((32,))
    x = g.axis_coords(0)
    ics = InitialData(np.where(x > 0.5, 1.0, 0.0), g.zeros(), np.sin(np.pi * x)[None], g.zeros())
    rep = check_compatibility(ics, SimParams(), g)
    assert rep.verdict == "incompatible"
    assert rep.vacuum_residual > 1.0


def test_zero_density_is_vacuous():
    g = Grid((8,))
    ics = InitialData(g.zeros(), g.zeros(), g.vector_zeros(), g.zeros())
    assert check_compatibility(ics, SimParams(), g).verdict == "vacuous"


@given(st.floats(0.1, 10))
def test_compatibility_fields_scale_with_temperature(a):
    g = Grid((12, 12))
    X, Y = g.mesh()
    bump = np.sin(np.pi * X) * np.sin(np.pi * Y)
    rho = 1 + bump
    base = check_compatibility(InitialData(rho, bump, g.vector_zeros(), g.zeros()), SimParams(dim=2), g)
    scaled = check_compatibility(InitialData(rho, a * bump, g.vector_zeros(), g.zeros()), SimParams(dim=2), g)
    assert scaled.l2_g1 == pytest.approx(a * base.l2_g1, rel=1e-12)
    assert scaled.l2_g2 == pytest.approx(a * base.l2_g2, rel=1e-12)


# --- invariant audit --------------------------------------------------------

def test_trivial_run_audit_is_constant():
    pre = get_preset("trivial")
    rep = picard_iterate(pre.initial_data(), pre.params, pre.grid, pre.T, pre.dt)
    audit = invariant_audit(rep.trajectory, pre.params, pre.grid, transport_u=rep.transport_u)
    assert audit.ok and audit.mass_drift == 0
    for col in (audit.mass, audit.min_rho, audit.max_theta, audit.int_rhoZ, audit.z_energy):
        assert np.all(col == col[0])
    assert any("dirichlet_zero" in n for n in audit.notes)


def test_pure_diffusion_keeps_fuel_and_loses_energy():
    g = Grid((64,))
    x = g.axis_coords(0)
    Z0 = np.where(np.abs(x - 0.5) < 0.15, np.cos(np.pi * (x - 0.5) / 0.3) ** 2, 0.0)
    ics = InitialData(np.ones(g.shape), g.zeros(), g.vector_zeros(), Z0)
    params = SimParams(D=0.01)
    hist = VelocityHistory.constant(g, g.vector_zeros(), 0.1, 0.01)
    traj = linearized_sweep(hist, ics, params, g)
    audit = invariant_audit(traj, params, g)
    assert audit.ok
    # support stays far from the boundary, so the leak is far below the tolerance
    assert np.ptp(audit.int_rhoZ) < 1e-9 * audit.int_rhoZ[0]
    energy = [0.5 * lp_norm(s.Z, g) ** 2 for s in traj.states]
    assert np.all(np.diff(energy) < 0)


def test_reactive_run_burns_fuel_each_step():
    pre = get_preset("hotspot")
    g = Grid((12, 12))
    rep = picard_iterate(pre.initial_data(g), pre.params, g, 0.004, 0.0005, tol=1e-10)
    audit = invariant_audit(rep.trajectory, pre.params, g, transport_u=rep.transport_u)
    assert audit.ok
    assert np.all(np.diff(audit.int_rhoZ) < 0)


def test_audit_flags_planted_violations():
    g = Grid((8,))
    z = g.zeros()
    s0 = State(0.0, np.ones(9), z, g.vector_zeros(), np.full(9, 0.5), z)
    bad = State(0.1, np.full(9, -1.0), np.full(9, -1.0), g.vector_zeros(), np.full(9, 2.0), z)
    audit = invariant_audit(Trajectory(0.1, (s0, bad)), SimParams(), g)
    text = " ".join(m for _, m in audit.violations)
    for word in ("negative density", "envelope", "Z outside", "negative temperature"):
        assert word in text


def test_audit_rejects_wrong_transport_length():
    pre = get_preset("trivial")
    rep = picard_iterate(pre.initial_data(), pre.params, pre.grid, pre.T, pre.dt)
    with pytest.raises(ValueError):
        invariant_audit(rep.trajectory, pre.params, pre.grid, transport_u=rep.transport_u[:-1])


# --- watchdog ---------------------------------------------------------------

def _bubble_states(g, amps, dt):
    X, Y = g.mesh()
    bubble = np.sin(np.pi * X) * np.sin(np.pi * Y)
    z = g.zeros()
    return [State(n * dt, np.ones(g.shape), z, np.stack([a * bubble, z]), z, z) for n, a in enumerate(amps)]


def test_calm_stream_has_no_events():
    g = Grid((10, 10))
    assert watchdog_scan(_bubble_states(g, [0.1] * 12, 0.01), g, SimParams(dim=2), 0.01) == []


def test_doubling_gradient_triggers_growth_within_the_window():
    g = Grid((10, 10))
    dt = 0.01
    th = WatchdogThresholds()
    events = watchdog_scan(_bubble_states(g, [1e-3 * 2.0**n for n in range(12)], dt), g, SimParams(dim=2), dt, th)
    growth = [e for e in events if e.quantity == "bkm" and e.kind == "growth"]
    assert growth and growth[0].step == th.window
    assert growth[0].value == pytest.approx(math.log(2) / dt, rel=1e-6)


def test_injected_nan_is_reported_at_its_step():
    g = Grid((10, 10))
    states = _bubble_states(g, [0.1] * 7, 0.01) + [State.nan_like(0.07, g)]
    events = watchdog_scan(states, g, SimParams(dim=2), 0.01)
    assert [(e.step, e.kind) for e in events] == [(7, "nan")]


def test_bkm_is_not_watched_when_lambda_dominates():
    g = Grid((10, 10))
    dt = 0.01
    params = SimParams(dim=2, mu=0.1, lam=1.0)
    events = watchdog_scan(_bubble_states(g, [1e-3 * 2.0**n for n in range(12)], dt), g, params, dt)
    assert events and not any(e.quantity == "bkm" for e in events)


def test_states_must_move_forward():
    g = Grid((6, 6))
    dog = Watchdog(g, SimParams(dim=2), 0.1)
    s = _bubble_states(g, [0.1, 0.1], 0.1)
    dog.feed(s[1])
    with pytest.raises(ValueError):
        dog.feed(s[0])


@given(st.floats(1.0, 100.0), st.floats(1.0, 3.0))
def test_raising_thresholds_only_removes_events(factor, base):
    g = Grid((6, 6))
    dt = 0.01
    amps = [1e-3 * base**n for n in range(14)]
    th = WatchdogThresholds(phi=2.0, bkm=0.05, theta_inf=1.0, growth_rate=15.0, window=3)
    low = {(e.step, e.quantity, e.kind) for e in watchdog_scan(_bubble_states(g, amps, dt), g, SimParams(dim=2), dt, th)}
    high = {(e.step, e.quantity, e.kind)
            for e in watchdog_scan(_bubble_states(g, amps, dt), g, SimParams(dim=2), dt, th.raised(factor))}
    assert high <= low


def test_diagnostics_table_layout():
    pre = get_preset("trivial")
    rep = picard_iterate(pre.initial_data(), pre.params, pre.grid, pre.T, pre.dt)
    audit = invariant_audit(rep.trajectory, pre.params, pre.grid)
    dog = Watchdog(pre.grid, pre.params, pre.dt)
    for s in rep.trajectory.states:
        dog.feed(s)
    lines = diagnostics_table(audit, dog).splitlines()
    assert lines[0] == ("time,mass,min_rho,max_rho,min_theta,max_theta,min_Z,max_Z,int_rhoZ,phi_t,"
                        "bkm_grad_u,bkm_grad_Z,sup_theta,events")
    assert len(lines) == len(rep.trajectory) + 1
    assert all(line.count(",") == 13 for line in lines)
