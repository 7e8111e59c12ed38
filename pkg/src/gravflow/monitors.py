"""Initial-data compatibility, invariant auditing and blow-up watchdogs.

A grid run cannot exhibit a true L-infinity blow-up: every norm here is a
finite-resolution proxy.  The watchdogs therefore fire on thresholds and on
trailing-window exponential growth rates, never on "infinity".
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .constitutive import arrhenius, lame_apply, pressure, viscous_dissipation
from .core import Grid, SimParams, State, Trajectory, divergence, gradient, laplacian
from .norms import BlowupSeries, bkm_accumulate, j_functional, lp_norm, sobolev_norm
from .picard import InitialData

THETA_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class CompatibilityReport:
    g1: np.ndarray
    g2: np.ndarray
    l2_g1: float
    l2_g2: float
    vacuum_residual: float
    verdict: str
    eps_vac: float
    vacuum_nodes: int

    def summary(self) -> dict:
        return {"verdict": self.verdict, "l2_g1": self.l2_g1, "l2_g2": self.l2_g2,
                "vacuum_residual": self.vacuum_residual, "eps_vac": self.eps_vac,
                "vacuum_nodes": self.vacuum_nodes}


def check_compatibility(ics: InitialData, params: SimParams, grid: Grid, eps_vac: float | None = None,
                        tol: float = 1e-8) -> CompatibilityReport:
    """Compute g1, g2 where the density is positive and test the vacuum residual elsewhere.

    ``g1 = rho0^{-1/2} (-k Lap theta0 - Q(grad u0))`` and
    ``g2 = rho0^{-1/2} (L u0 + grad p0)``; at vacuum nodes (rho0 < eps_vac)
    the bracketed residuals themselves must vanish to ``tol``.  The check runs
    on interior nodes, where the equations are posed.
    """
    rho0 = np.asarray(ics.rho0, dtype=float)
    rmax = float(rho0.max())
    eps = 1e-10 * rmax if eps_vac is None else eps_vac
    r1 = -params.k_heat * laplacian(ics.theta0, grid, grid.bc_theta) - viscous_dissipation(ics.u0, grid, params.mu, params.lam)
    r2 = lame_apply(ics.u0, grid, params.mu, params.lam) + gradient(pressure(rho0, ics.theta0, params.R), grid)
    inner = ~grid.boundary_mask()
    if rmax <= 0:
        return CompatibilityReport(grid.zeros(), grid.vector_zeros(), 0.0, 0.0, 0.0, "vacuous", eps, int(inner.sum()))
    solid = inner & (rho0 >= eps)
    vac = inner & (rho0 < eps)
    root = np.sqrt(np.where(solid, rho0, 1.0))
    g1 = np.where(solid, r1 / root, 0.0)
    g2 = np.where(solid, r2 / root, 0.0)
    vac_res = 0.0
    if vac.any():
        vac_res = float(max(np.abs(r1[vac]).max(), np.sqrt(np.sum(r2**2, axis=0))[vac].max()))
    verdict = "compatible" if vac_res <= tol else "incompatible"
    return CompatibilityReport(g1, g2, lp_norm(g1, grid), lp_norm(g2, grid), vac_res, verdict, eps, int(vac.sum()))


@dataclass(frozen=True, eq=False)
class DiagnosticsSeries:
    """Per-state audit values; ``violations`` lists (step, message) pairs."""

    time: np.ndarray
    mass: np.ndarray
    min_rho: np.ndarray
    max_rho: np.ndarray
    min_theta: np.ndarray
    max_theta: np.ndarray
    min_Z: np.ndarray
    max_Z: np.ndarray
    int_rhoZ: np.ndarray
    z_energy: np.ndarray
    entropy_production: np.ndarray
    entropy_residual: np.ndarray
    entropy_skipped: np.ndarray
    envelope_lo: np.ndarray
    envelope_hi: np.ndarray
    violations: tuple[tuple[int, str], ...]
    bc_theta: str
    notes: tuple[str, ...] = ()

    @property
    def mass_drift(self) -> float:
        """Relative change of total mass over the run."""
        return float((self.mass[-1] - self.mass[0]) / self.mass[0]) if self.mass[0] else 0.0

    @property
    def ok(self) -> bool:
        return not self.violations


def _entropy_terms(s: State, params: SimParams, grid: Grid):
    th = np.asarray(s.theta)
    ok = th >= THETA_FLOOR
    safe = np.where(ok, th, 1.0)
    gth = gradient(th, grid)
    Q = viscous_dissipation(s.u, grid, params.mu, params.lam)
    react = s.rho * params.q_heat * params.K_rate * arrhenius(th, params) * s.Z
    dens = np.where(ok, Q / safe + params.k_heat * np.sum(gth**2, axis=0) / safe**2 + react / safe, 0.0)
    rho_s = np.where(ok, s.rho * np.log(safe), 0.0)
    return ok, dens, rho_s


def invariant_audit(traj: Trajectory, params: SimParams, grid: Grid, bound_tol: float = 1e-10,
                    monotone_rtol: float = 1e-12, envelope_rtol: float = 1e-6,
                    transport_u: np.ndarray | None = None) -> DiagnosticsSeries:
    """Evaluate the proved monotonicities and bounds on every state of ``traj``.

    Flags: negative density, Z outside [0, 1], negative temperature (when
    theta0 >= 0), increase of int rho Z, increase of the Z energy when the
    flow is at rest, and density outside ``[min rho0 e^{-A}, max rho0 e^{A}]``
    with ``A`` the trapezoidal time integral of ``max |div u|``.  Mass drift and the entropy residual are reported,
    not flagged.

    ``transport_u`` is the velocity history that carried the density (one
    slice per state).  A Picard run transports with the previous iterate, so
    pass ``report.transport_u``; the envelope then takes the larger
    divergence of the two fields at each time.
    """
    w = grid.quadrature_weights()
    dt = traj.dt
    at_rest = all(not np.any(s.u) for s in traj.states)
    theta0_nonneg = float(np.min(traj.states[0].theta)) >= 0
    cols = {k: [] for k in ("time", "mass", "min_rho", "max_rho", "min_theta", "max_theta", "min_Z", "max_Z",
                            "int_rhoZ", "z_energy", "entropy_production", "entropy_residual", "entropy_skipped",
                            "envelope_lo", "envelope_hi")}
    violations = []
    diss = 0.0
    prev_terms = None
    rho0 = traj.states[0].rho
    A = 0.0
    prev_div = None
    if transport_u is not None and len(transport_u) != len(traj):
        raise ValueError(f"transport_u has {len(transport_u)} slices, trajectory has {len(traj)} states")
    for n, s in enumerate(traj.states):
        div_max = float(np.max(np.abs(divergence(s.u, grid))))
        if transport_u is not None:
            div_max = max(div_max, float(np.max(np.abs(divergence(transport_u[n], grid)))))
        if prev_div is not None:
            A += 0.5 * dt * (prev_div + div_max)
        prev_div = div_max
        cols["envelope_lo"].append(float(rho0.min()) * math.exp(-A))
        cols["envelope_hi"].append(float(rho0.max()) * math.exp(A))
        cols["time"].append(s.t)
        cols["mass"].append(float(np.sum(w * s.rho)))
        for name, arr in (("rho", s.rho), ("theta", s.theta), ("Z", s.Z)):
            cols[f"min_{name}"].append(float(arr.min()))
            cols[f"max_{name}"].append(float(arr.max()))
        cols["int_rhoZ"].append(float(np.sum(w * s.rho * s.Z)))
        if n > 0:
            diss += dt * params.D * lp_norm(gradient(s.Z, grid), grid) ** 2
        cols["z_energy"].append(0.5 * lp_norm(np.sqrt(np.maximum(s.rho, 0)) * s.Z, grid) ** 2 + diss)

        ok, dens, rho_s = _entropy_terms(s, params, grid)
        cols["entropy_production"].append(float(np.sum(w * dens)))
        cols["entropy_skipped"].append(int((~ok).sum()))
        if prev_terms is None:
            cols["entropy_residual"].append(0.0)
        else:
            pok, _, prho_s = prev_terms
            both = ok & pok
            change = np.sum(w * np.where(both, rho_s - prho_s, 0.0)) / dt
            work = params.R * np.sum(w * np.where(both, s.rho * divergence(s.u, grid), 0.0))
            cols["entropy_residual"].append(float(change + work - np.sum(w * np.where(both, dens, 0.0))))
        prev_terms = (ok, dens, rho_s)

        if cols["min_rho"][-1] < -bound_tol:
            violations.append((n, f"negative density {cols['min_rho'][-1]:.3e}"))
        slack = envelope_rtol * cols["envelope_hi"][-1]
        if (cols["min_rho"][-1] < cols["envelope_lo"][-1] - slack
                or cols["max_rho"][-1] > cols["envelope_hi"][-1] + slack):
            violations.append((n, "density left its envelope"))
        if cols["min_Z"][-1] < -bound_tol or cols["max_Z"][-1] > 1 + bound_tol:
            violations.append((n, f"Z outside [0,1]: [{cols['min_Z'][-1]:.3e}, {cols['max_Z'][-1]:.3e}]"))
        if theta0_nonneg and cols["min_theta"][-1] < -bound_tol:
            violations.append((n, f"negative temperature {cols['min_theta'][-1]:.3e}"))
        if n > 0:
            a, b = cols["int_rhoZ"][-2], cols["int_rhoZ"][-1]
            if b - a > monotone_rtol * max(abs(a), 1e-300):
                violations.append((n, f"int rho Z increased by {b - a:.3e}"))
            if at_rest:
                a, b = cols["z_energy"][-2], cols["z_energy"][-1]
                if b - a > 1e-10 * max(abs(a), 1.0):
                    violations.append((n, f"Z energy increased by {b - a:.3e}"))
    notes = ("density envelope uses exp(-A) below and exp(+A) above",
             f"temperature boundary condition: {grid.bc_theta}")
    arrays = {k: np.asarray(v) for k, v in cols.items()}
    return DiagnosticsSeries(**arrays, violations=tuple(violations), bc_theta=grid.bc_theta, notes=notes)


# ----------------------------------------------------------------------------
# Watchdogs
# ----------------------------------------------------------------------------

QUANTITIES = ("phi", "J", "bkm", "theta_inf")


@dataclass(frozen=True)
class WatchdogThresholds:
    phi: float = 1e6
    J: float = 1e12
    bkm: float = 1e6
    theta_inf: float = 1e6
    growth_rate: float = 20.0
    window: int = 5
    min_value: float = 1e-8

    def raised(self, factor: float) -> "WatchdogThresholds":
        return WatchdogThresholds(self.phi * factor, self.J * factor, self.bkm * factor,
                                  self.theta_inf * factor, self.growth_rate * factor, self.window, self.min_value)


@dataclass(frozen=True)
class WatchdogEvent:
    step: int
    time: float
    quantity: str
    kind: str
    value: float
    threshold: float
    growth_rate: float

    def label(self) -> str:
        return f"{self.quantity}:{self.kind}"


class Watchdog:
    """Streaming consumer of states; call :meth:`feed` in time order.

    Events fire at every step where a quantity is at or above its threshold
    or its exponential growth rate over the trailing window is at or above
    ``growth_rate``, so raising thresholds can only remove events.  The BKM
    quantity is watched only when 7 mu > lambda.
    """

    def __init__(self, grid: Grid, params: SimParams, dt: float, thresholds: WatchdogThresholds | None = None):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.grid = grid
        self.params = params
        self.dt = dt
        self.th = thresholds or WatchdogThresholds()
        self.series = BlowupSeries()
        # growth-rate inputs; for "bkm" this is the integrand, not the accumulator
        self.history: dict[str, list[float]] = {q: [] for q in QUANTITIES}
        self.times: list[float] = []
        self.events: list[WatchdogEvent] = []
        self.step_events: list[list[WatchdogEvent]] = []
        self._prev: State | None = None
        self._dt_integral = 0.0

    def feed(self, s: State) -> list[WatchdogEvent]:
        step = len(self.times)
        if self.times and not s.t > self.times[-1]:
            raise ValueError("states must arrive in increasing time order")
        self.times.append(s.t)
        found: list[WatchdogEvent] = []
        if not s.is_finite():
            for q in QUANTITIES:
                self.history[q].append(math.nan)
            found.append(WatchdogEvent(step, s.t, "nan", "nan", math.nan, math.nan, math.nan))
            self._record(found)
            return found

        g = self.grid
        self.series = bkm_accumulate(self.series, s, self.dt, g, self.params.q_sob)
        if self._prev is not None:
            span = s.t - self._prev.t
            rho_t = (s.rho - self._prev.rho) / span
            self._dt_integral += span * sum(
                sobolev_norm((getattr(s, n) - getattr(self._prev, n)) / span, g, 1) for n in ("theta", "u", "Z"))
        else:
            rho_t = np.zeros(g.shape)
        # growth of the BKM quantity is measured on its integrand, since the
        # accumulator itself grows linearly from a small start in calm runs
        rate_of_bkm = float(np.max(np.abs(s.theta))) + self.series.grad_u_inf[-1] + self.series.grad_Z_inf[-1]
        values = {
            "phi": self.series.phi[-1],
            "J": j_functional(s, g, self.params.q_sob, rho_t, self._dt_integral),
            "bkm": self.series.bkm[-1],
            "theta_inf": float(np.max(np.abs(s.theta))),
        }
        for q in QUANTITIES:
            self.history[q].append(rate_of_bkm if q == "bkm" else values[q])
            if q == "bkm" and not self.params.bkm_regime:
                continue
            val = values[q]
            rate = self._growth(q)
            if val >= getattr(self.th, q):
                found.append(WatchdogEvent(step, s.t, q, "threshold", val, getattr(self.th, q), rate))
            if rate >= self.th.growth_rate:
                found.append(WatchdogEvent(step, s.t, q, "growth", rate, self.th.growth_rate, rate))
        self._prev = s
        self._record(found)
        return found

    def _growth(self, q: str) -> float:
        w = self.th.window
        h = self.history[q]
        if len(h) <= w:
            return 0.0
        now, then = h[-1], h[-1 - w]
        span = self.times[-1] - self.times[-1 - w]
        if not (np.isfinite(now) and np.isfinite(then)) or then < self.th.min_value or now < self.th.min_value:
            return 0.0
        return math.log(now / then) / span

    def _record(self, found: list[WatchdogEvent]) -> None:
        self.events.extend(found)
        self.step_events.append(found)


def watchdog_scan(states: Iterable[State], grid: Grid, params: SimParams, dt: float,
                  thresholds: WatchdogThresholds | None = None) -> list[WatchdogEvent]:
    dog = Watchdog(grid, params, dt, thresholds)
    for s in states:
        dog.feed(s)
    return dog.events


def diagnostics_table(audit: DiagnosticsSeries, dog: Watchdog, sep: str = ",") -> str:
    """Flat delimited table, one row per state; floats printed with 17 significant digits."""
    header = ["time", "mass", "min_rho", "max_rho", "min_theta", "max_theta", "min_Z", "max_Z", "int_rhoZ",
              "phi_t", "bkm_grad_u", "bkm_grad_Z", "sup_theta", "events"]
    buf = io.StringIO()
    buf.write(sep.join(header) + "\n")
    ser = dog.series
    for n in range(len(audit.time)):
        row = [audit.time[n], audit.mass[n], audit.min_rho[n], audit.max_rho[n], audit.min_theta[n],
               audit.max_theta[n], audit.min_Z[n], audit.max_Z[n], audit.int_rhoZ[n]]
        if n < len(ser.phi):
            row += [ser.phi[n], ser.int_grad_u[n], ser.int_grad_Z[n], ser.sup_theta[n]]
        else:
            row += [math.nan] * 4
        cells = [format(float(x), ".17g") for x in row]
        evs = dog.step_events[n] if n < len(dog.step_events) else []
        cells.append(";".join(e.label() for e in evs))
        buf.write(sep.join(cells) + "\n")
    return buf.getvalue()
