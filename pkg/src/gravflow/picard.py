"""Picard linearization of the full system.

Each pass solves the linear system on the whole time interval with the
advecting velocity frozen at the previous iterate's velocity; the first
advecting velocity comes from the heat equation started at ``u0``.
Iterates are compared with a density-weighted squared L2 difference.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .constitutive import heat_source, pressure, viscous_dissipation
from .core import Grid, NonFiniteError, SimParams, State, Trajectory, gradient
from .gravity import gravity_force, solve_poisson
from .norms import lp_norm
from .parabolic import (LinearStepInputs, heat_step, solve_massfraction_step, solve_momentum_step,
                        solve_temperature_step)
from .transport import VelocityHistory, advance_density, trace_characteristics

log = logging.getLogger(__name__)

# whole-interval iteration up to this many steps, per-step iteration beyond
WHOLE_INTERVAL_MAX_STEPS = 512

Forcing = Callable[[float], dict]


class SweepError(RuntimeError):
    def __init__(self, step: int, cause: Exception):
        super().__init__(f"linearized sweep failed at step {step}: {cause}")
        self.step = step
        self.cause = cause


@dataclass(frozen=True, eq=False)
class InitialData:
    rho0: np.ndarray
    theta0: np.ndarray
    u0: np.ndarray
    Z0: np.ndarray

    def check(self, grid: Grid, tol: float = 1e-12) -> None:
        """Reject data with the wrong shape, negative density or Z outside [0, 1]."""
        for name in ("rho0", "theta0", "Z0"):
            if np.shape(getattr(self, name)) != grid.shape:
                raise ValueError(f"{name} has shape {np.shape(getattr(self, name))}, grid has {grid.shape}")
        if np.shape(self.u0) != (grid.dim, *grid.shape):
            raise ValueError(f"u0 has shape {np.shape(self.u0)}, expected {(grid.dim, *grid.shape)}")
        if np.min(self.rho0) < 0:
            raise ValueError("rho0 must be non-negative")
        if np.min(self.Z0) < -tol or np.max(self.Z0) > 1 + tol:
            raise ValueError("Z0 must lie in [0, 1]")
        if np.min(self.theta0) < -tol:
            raise ValueError("theta0 must be non-negative")
        bnd = grid.boundary_mask()
        if np.abs(self.Z0[bnd]).max() > tol or np.abs(self.u0[:, bnd]).max() > tol:
            raise ValueError("u0 and Z0 must vanish on the boundary")
        if grid.bc_theta == "dirichlet_zero" and np.abs(self.theta0[bnd]).max() > tol:
            raise ValueError("theta0 must vanish on the boundary for dirichlet_zero")

    def shifted(self, delta: float) -> "InitialData":
        return InitialData(np.asarray(self.rho0) + delta, self.theta0, self.u0, self.Z0)


@dataclass(frozen=True, eq=False)
class PicardReport:
    iterations: int
    psi: tuple[float, ...]
    dissipation: tuple[float, ...]
    converged: bool
    trajectory: Trajectory | None
    aborted: bool = False
    message: str = ""
    mode: str = "whole"
    psi_series: tuple[np.ndarray, ...] = field(default=(), repr=False)
    # velocity slices that carried the density of ``trajectory``
    transport_u: np.ndarray | None = field(default=None, repr=False)

    @property
    def ratios(self) -> tuple[float, ...]:
        return tuple(b / a if a > 0 else 0.0 for a, b in zip(self.psi, self.psi[1:]))

    @property
    def decay_ratio(self) -> float:
        """Geometric mean of successive psi ratios (nan with fewer than two values)."""
        r = [x for x in self.ratios if x > 0]
        return float(np.exp(np.mean(np.log(r)))) if r else math.nan


def default_delta_floor(rho0: np.ndarray) -> float:
    m = float(np.max(rho0))
    return 1e-12 * m if m > 0 else 1e-12


def _steps(T: float, dt: float) -> int:
    n = int(round(T / dt))
    if n < 1 or not math.isclose(n * dt, T, rel_tol=1e-9):
        raise ValueError(f"T={T} is not a positive multiple of dt={dt}")
    return n


def init_velocity_heat(u0: np.ndarray, grid: Grid, T: float, dt: float) -> VelocityHistory:
    """Implicit heat-equation evolution of each velocity component from u0."""
    n = _steps(T, dt)
    vals = [np.asarray(u0, dtype=float)]
    for _ in range(n):
        w = vals[-1]
        vals.append(np.stack([heat_step(w[a], grid, dt) if np.any(w[a]) else np.zeros(grid.shape)
                              for a in range(grid.dim)]))
    return VelocityHistory(grid, dt, np.stack(vals))


def initial_state(ics: InitialData, params: SimParams, grid: Grid) -> State:
    phi = solve_poisson(ics.rho0, grid, params.G).phi
    return State(0.0, ics.rho0, ics.theta0, ics.u0, ics.Z0, phi)


def advance_one(state: State, v_old: np.ndarray, v_new: np.ndarray, params: SimParams, grid: Grid,
                dt: float, delta_floor: float, forcing: dict | None = None) -> State:
    """One step of the linearized system: density, potential, temperature, mass fraction, velocity."""
    t_new = state.t + dt
    hist = VelocityHistory(grid, dt, np.stack([v_old, v_new]))
    rho = advance_density(state.rho, trace_characteristics(hist, dt))
    phi = solve_poisson(rho, grid, params.G).phi
    f = gravity_force(phi, grid)
    forcing = forcing or {}

    src_theta = viscous_dissipation(v_new, grid, params.mu, params.lam) + rho * heat_source(state.theta, state.Z, params)
    src_theta = src_theta + forcing.get("theta", 0.0)
    theta = solve_temperature_step(
        LinearStepInputs(grid, rho, v_new, state.theta, dt, src_theta, delta_floor), params)
    Z = solve_massfraction_step(
        LinearStepInputs(grid, rho, v_new, state.Z, dt, forcing.get("Z", 0.0), delta_floor), theta, params)
    p = pressure(rho, theta, params.R)
    u = solve_momentum_step(
        LinearStepInputs(grid, rho, v_new, state.u, dt, forcing.get("u", 0.0), delta_floor), p, f, params)
    return State(t_new, rho, theta, u, Z, phi)


def linearized_sweep(v_hist: VelocityHistory, ics: InitialData, params: SimParams, grid: Grid,
                     delta_floor: float | None = None, forcing: Forcing | None = None) -> Trajectory:
    """Solve the linearized system over the whole interval covered by ``v_hist``.

    ``forcing(t)`` may return extra sources keyed ``theta``, ``Z``, ``u``,
    evaluated at the new time level of each step.
    """
    dt = v_hist.dt
    floor = default_delta_floor(ics.rho0) if delta_floor is None else delta_floor
    states = [initial_state(ics, params, grid)]
    for n in range(len(v_hist.values) - 1):
        try:
            nxt = advance_one(states[-1], v_hist.values[n], v_hist.values[n + 1], params, grid, dt, floor,
                              forcing((n + 1) * dt) if forcing else None)
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            raise SweepError(n, exc) from exc
        states.append(nxt)
    return Trajectory(dt, tuple(states))


def _weighted_sq(diff: np.ndarray, weight: np.ndarray, grid: Grid) -> float:
    return lp_norm(np.sqrt(np.maximum(weight, 0.0)) * diff, grid, 2) ** 2


def psi_state(a: State, b: State, grid: Grid, weights: Sequence[float] = (1, 1, 1, 1)) -> float:
    w_rho, w_theta, w_u, w_Z = weights
    rho = b.rho
    return (w_rho * lp_norm(b.rho - a.rho, grid, 2) ** 2
            + w_theta * _weighted_sq(b.theta - a.theta, rho, grid)
            + w_u * _weighted_sq(b.u - a.u, rho, grid)
            + w_Z * _weighted_sq(b.Z - a.Z, rho, grid))


def psi_functional(traj_a: Trajectory, traj_b: Trajectory, grid: Grid,
                   weights: Sequence[float] = (1, 1, 1, 1)) -> tuple[np.ndarray, float]:
    """Per-slice squared difference weighted by traj_b's density, and its sup over time."""
    if len(traj_a) != len(traj_b) or not math.isclose(traj_a.dt, traj_b.dt):
        raise ValueError("trajectories live on different time lattices")
    series = np.array([psi_state(a, b, grid, weights) for a, b in zip(traj_a.states, traj_b.states)])
    return series, float(series.max())


def dissipation_integral(traj_a: Trajectory, traj_b: Trajectory, grid: Grid) -> float:
    total = 0.0
    for a, b in zip(traj_a.states[1:], traj_b.states[1:]):
        total += (lp_norm(gradient(b.theta - a.theta, grid), grid) ** 2
                  + sum(lp_norm(gradient(b.u[i] - a.u[i], grid), grid) ** 2 for i in range(grid.dim))
                  + lp_norm(gradient(b.Z - a.Z, grid), grid) ** 2)
    return total * traj_a.dt


def picard_iterate(ics: InitialData, params: SimParams, grid: Grid, T: float, dt: float,
                   tol: float = 1e-8, max_iter: int = 30, weights: Sequence[float] = (1, 1, 1, 1),
                   mode: str = "auto", delta_floor: float | None = None,
                   forcing: Forcing | None = None) -> PicardReport:
    """Iterate linearized sweeps until ``sup_t psi <= tol`` or ``max_iter`` passes.

    ``mode`` is ``whole`` (re-solve [0, T] each pass), ``step`` (iterate
    inside each time step) or ``auto`` (whole up to 512 steps).
    """
    nsteps = _steps(T, dt)
    if mode == "auto":
        mode = "whole" if nsteps <= WHOLE_INTERVAL_MAX_STEPS else "step"
    if mode == "step":
        return _picard_stepwise(ics, params, grid, nsteps, dt, tol, max_iter, weights, delta_floor, forcing)
    if mode != "whole":
        raise ValueError(f"unknown Picard mode {mode!r}")

    v_hist = init_velocity_heat(ics.u0, grid, T, dt)
    psis, diss, series = [], [], []
    prev = prev_carrier = None
    for k in range(1, max_iter + 1):
        try:
            traj = linearized_sweep(v_hist, ics, params, grid, delta_floor, forcing)
        except SweepError as exc:
            log.error("Picard iteration %d aborted: %s", k, exc)
            return PicardReport(k, tuple(psis), tuple(diss), False, prev, True, str(exc), mode, tuple(series),
                                prev_carrier)
        if prev is not None:
            s, sup = psi_functional(prev, traj, grid, weights)
            psis.append(sup)
            series.append(s)
            diss.append(dissipation_integral(prev, traj, grid))
            log.info("Picard iteration %d: sup psi = %.3e", k, sup)
        if math.isinf(tol) or (psis and psis[-1] <= tol):
            return PicardReport(k, tuple(psis), tuple(diss), True, traj, mode=mode, psi_series=tuple(series),
                                transport_u=v_hist.values)
        prev, prev_carrier = traj, v_hist.values
        v_hist = VelocityHistory(grid, dt, traj.stack("u"))
    return PicardReport(max_iter, tuple(psis), tuple(diss), False, prev,
                        message="maximum iterations reached", mode=mode, psi_series=tuple(series),
                        transport_u=prev_carrier)


def _picard_stepwise(ics, params, grid, nsteps, dt, tol, max_iter, weights, delta_floor, forcing) -> PicardReport:
    floor = default_delta_floor(ics.rho0) if delta_floor is None else delta_floor
    states = [initial_state(ics, params, grid)]
    carrier = [np.asarray(states[0].u)]
    worst: list[float] = []
    used = 0
    converged = True
    for n in range(nsteps):
        cur = states[-1]
        extra = forcing((n + 1) * dt) if forcing else None
        v_new = np.asarray(cur.u)
        prev = None
        step_ok = False
        for k in range(1, max_iter + 1):
            try:
                nxt = advance_one(cur, cur.u, v_new, params, grid, dt, floor, extra)
            except (ArithmeticError, RuntimeError, ValueError) as exc:
                traj = Trajectory(dt, tuple(states))
                return PicardReport(used, tuple(worst), (), False, traj, True, str(SweepError(n, exc)), "step",
                                    transport_u=np.stack(carrier))
            if prev is not None:
                val = psi_state(prev, nxt, grid, weights)
                if len(worst) < k - 1:
                    worst.append(val)
                else:
                    worst[k - 2] = max(worst[k - 2], val)
                if val <= tol:
                    step_ok = True
            used = max(used, k)
            prev, carried = nxt, v_new
            v_new = np.asarray(nxt.u)
            if step_ok or math.isinf(tol):
                break
        converged &= step_ok or math.isinf(tol)
        states.append(prev)
        carrier.append(carried)
    return PicardReport(used, tuple(worst), (), converged, Trajectory(dt, tuple(states)),
                        message="" if converged else "some steps hit max_iter", mode="step",
                        transport_u=np.stack(carrier))


def step_stream(ics: InitialData, params: SimParams, grid: Grid, T: float, dt: float, tol: float = 1e-8,
                max_iter: int = 30, weights: Sequence[float] = (1, 1, 1, 1),
                delta_floor: float | None = None) -> Iterator[State]:
    """Yield states one step at a time, iterating the linearization inside each step.

    A step whose sub-solves meet non-finite values yields a NaN-filled state
    and ends the stream, so a consumer sees the breakdown as data.  Other
    sub-solver failures raise :class:`SweepError`.
    """
    nsteps = _steps(T, dt)
    floor = default_delta_floor(ics.rho0) if delta_floor is None else delta_floor
    cur = initial_state(ics, params, grid)
    yield cur
    for n in range(nsteps):
        v_new = np.asarray(cur.u)
        prev = None
        try:
            for _ in range(max_iter):
                nxt = advance_one(cur, cur.u, v_new, params, grid, dt, floor)
                if math.isinf(tol) or (prev is not None and psi_state(prev, nxt, grid, weights) <= tol):
                    break
                prev = nxt
                v_new = np.asarray(nxt.u)
        except NonFiniteError:
            yield State.nan_like(cur.t + dt, grid)
            return
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            raise SweepError(n, exc) from exc
        if not nxt.is_finite():
            yield State.nan_like(nxt.t, grid)
            return
        cur = nxt
        yield cur


def trajectory_distance(a: Trajectory, b: Trajectory, grid: Grid) -> float:
    """``sup_t`` of the combined L2 difference of all fields."""
    if len(a) != len(b):
        raise ValueError("trajectories have different lengths")
    best = 0.0
    for sa, sb in zip(a.states, b.states):
        d2 = sum(lp_norm(getattr(sb, n) - getattr(sa, n), grid) ** 2 for n in ("rho", "theta", "u", "Z"))
        best = max(best, math.sqrt(d2))
    return best


@dataclass(frozen=True, eq=False)
class ContinuationResult:
    delta: float
    report: PicardReport
    distance: float | None

    @property
    def trajectory(self) -> Trajectory | None:
        return self.report.trajectory

    @property
    def ok(self) -> bool:
        return not self.report.aborted


def vacuum_continuation(ics: InitialData, params: SimParams, grid: Grid, deltas: Sequence[float], T: float,
                        dt: float, tol: float = 1e-8, max_iter: int = 30, mode: str = "auto") -> list[ContinuationResult]:
    """Solve with ``rho0 + delta`` for strictly decreasing deltas.

    ``distance`` is the trajectory distance to the previous delta's run.
    A run that aborts stops the continuation; results so far are returned.
    """
    deltas = list(deltas)
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be strictly decreasing")
    out: list[ContinuationResult] = []
    for delta in deltas:
        rep = picard_iterate(ics.shifted(delta), params, grid, T, dt, tol, max_iter, mode=mode)
        dist = None
        if out and out[-1].ok and not rep.aborted and rep.trajectory is not None:
            dist = trajectory_distance(out[-1].trajectory, rep.trajectory, grid)
        out.append(ContinuationResult(delta, rep, dist))
        if rep.aborted:
            log.error("continuation stopped at delta=%g: %s", delta, rep.message)
            break
    return out
