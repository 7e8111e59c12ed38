"""Density transport along backward characteristics.

The density at time t is the initial density evaluated at the foot of the
characteristic through (t, x), damped by the exponential of the velocity
divergence integrated along that characteristic.  A first-order upwind
finite-volume update is kept alongside as an independent, exactly
mass-conserving cross-check.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .core import Grid, divergence, periodic_cell, wrap_periodic

log = logging.getLogger(__name__)


class CFLError(ValueError):
    def __init__(self, cfl: float, required_dt: float):
        super().__init__(f"CFL number {cfl:.3f} exceeds 0.9; need dt <= {required_dt:.3e}")
        self.cfl = cfl
        self.required_dt = required_dt


@dataclass(frozen=True, eq=False)
class VelocityHistory:
    """Velocity slices ``values[n]`` at ``t = n * dt``; linear in time between slices."""

    grid: Grid
    dt: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape[1:] != (self.grid.dim, *self.grid.shape):
            raise ValueError(f"velocity history has shape {vals.shape}, grid wants (nt, {self.grid.dim}, {self.grid.shape})")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_div", np.stack([divergence(v, self.grid) for v in vals]))

    @classmethod
    def constant(cls, grid: Grid, v: np.ndarray, T: float, dt: float) -> "VelocityHistory":
        nt = int(round(T / dt)) + 1
        return cls(grid, dt, np.broadcast_to(np.asarray(v, dtype=float), (nt, grid.dim, *grid.shape)))

    @property
    def T(self) -> float:
        return (len(self.values) - 1) * self.dt

    def _weights(self, t: float) -> tuple[int, float]:
        x = min(max(t / self.dt, 0.0), len(self.values) - 1)
        i = min(int(math.floor(x)), len(self.values) - 2) if len(self.values) > 1 else 0
        return i, x - i

    def _blend(self, arr: np.ndarray, t: float) -> np.ndarray:
        if len(arr) == 1:
            return arr[0]
        i, w = self._weights(t)
        if w == 0.0:
            return arr[i]
        return (1 - w) * arr[i] + w * arr[i + 1]

    def at(self, t: float) -> np.ndarray:
        return self._blend(self.values, t)

    def div_at(self, t: float) -> np.ndarray:
        return self._blend(self._div, t)


@dataclass(frozen=True, eq=False)
class CharacteristicTrace:
    """Foot points (physical coordinates) and the divergence integral per node."""

    grid: Grid
    t_start: float
    t_end: float
    foot: np.ndarray
    div_integral: np.ndarray
    clamped: int = 0
    periodic: bool = False


class Stencil:
    """Multilinear interpolation weights for a fixed set of physical points.

    Built once and applied to any number of fields; leading axes of the
    field beyond the grid shape are carried through.  Points outside the box
    take the nearest boundary value (or wrap when ``periodic``).
    """

    def __init__(self, points: np.ndarray, grid: Grid, periodic: bool = False):
        self.periodic = periodic
        self.grid = grid
        lo_idx, hi_idx, frac = [], [], []
        for a in range(grid.dim):
            s = (points[a] - grid.origin[a]) / grid.spacing[a]
            n = grid.extents[a]
            if periodic:
                s = np.mod(s, n)
                i0 = np.minimum(np.floor(s).astype(np.intp), n - 1)
                i1 = (i0 + 1) % n
            else:
                s = np.clip(s, 0, n)
                i0 = np.minimum(np.floor(s).astype(np.intp), n - 1)
                i1 = i0 + 1
            lo_idx.append(i0)
            hi_idx.append(i1)
            frac.append(s - i0)
        self.shape = np.shape(points)[1:]
        self.cell = tuple(n if periodic else n + 1 for n in grid.extents)
        flat, weights = [], []
        for bits in np.ndindex(*(2,) * grid.dim):
            idx = tuple(hi_idx[a] if b else lo_idx[a] for a, b in enumerate(bits))
            w = np.ones(self.shape)
            for a, b in enumerate(bits):
                w = w * (frac[a] if b else 1 - frac[a])
            flat.append(np.ravel_multi_index(idx, self.cell).ravel())
            weights.append(w.ravel())
        self.flat = np.stack(flat)
        self.weights = np.stack(weights)

    def __call__(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        lead = f.shape[:f.ndim - self.grid.dim]
        if self.periodic:
            f = f[(Ellipsis,) + tuple(slice(0, -1) for _ in range(self.grid.dim))]
        vals = f.reshape(*lead, -1)[..., self.flat]
        return np.einsum("...kp,kp->...p", vals, self.weights).reshape(*lead, *self.shape)


def interpolate(f: np.ndarray, points: np.ndarray, grid: Grid, periodic: bool = False) -> np.ndarray:
    """Multilinear interpolation of node values at physical ``points`` (dim, ...)."""
    return Stencil(points, grid, periodic)(f)


def _clamp(points: np.ndarray, grid: Grid, periodic: bool) -> tuple[np.ndarray, np.ndarray]:
    out = np.empty_like(points)
    hit = np.zeros(points.shape[1:], dtype=bool)
    for a in range(grid.dim):
        lo, L = grid.origin[a], grid.lengths[a]
        if periodic:
            out[a] = lo + np.mod(points[a] - lo, L)
        else:
            out[a] = np.clip(points[a], lo, lo + L)
            # the last node can sit a rounding error past lo + L
            hit |= np.abs(out[a] - points[a]) > 1e-12 * L
    return out, hit


def trace_characteristics(v_hist: VelocityHistory, t: float, dt_ode: float | None = None,
                          t_start: float = 0.0, periodic: bool = False) -> CharacteristicTrace:
    """Integrate characteristics backward from time ``t`` to ``t_start``.

    Explicit midpoint steps for the positions; trapezoidal rule for the
    divergence integral along the path.  Foot points leaving the box are
    clamped (or wrapped when ``periodic``) and counted.
    """
    grid = v_hist.grid
    if t < t_start:
        raise ValueError("trace must run backward: t >= t_start")
    dt_ode = v_hist.dt / 4 if dt_ode is None else dt_ode
    X = np.stack(grid.mesh())
    integral = np.zeros(grid.shape)
    span = t - t_start
    nsub = max(1, math.ceil(span / dt_ode - 1e-9)) if span > 0 else 0
    clamped = np.zeros(grid.shape, dtype=bool)
    s = t
    here = Stencil(X, grid, periodic)
    for m in range(nsub):
        tau = span / nsub
        s_next = t - (m + 1) * tau
        k1 = here(v_hist.at(s))
        Xm, _ = _clamp(X - 0.5 * tau * k1, grid, periodic)
        k2 = Stencil(Xm, grid, periodic)(v_hist.at(s - 0.5 * tau))
        div_here = here(v_hist.div_at(s))
        X, hit = _clamp(X - tau * k2, grid, periodic)
        clamped |= hit
        here = Stencil(X, grid, periodic)
        integral += 0.5 * tau * (div_here + here(v_hist.div_at(s_next)))
        s = s_next
    n_clamped = int(clamped.sum())
    if n_clamped:
        log.warning("%d foot points left the domain and were clamped", n_clamped)
    return CharacteristicTrace(grid, t_start, t, X, integral, n_clamped, periodic)


def advance_density(rho0: np.ndarray, trace: CharacteristicTrace) -> np.ndarray:
    """Compose the starting density with the foot points and apply the divergence damping."""
    grid = trace.grid
    with np.errstate(over="ignore"):
        rho = interpolate(rho0, trace.foot, grid, trace.periodic) * np.exp(-trace.div_integral)
    if trace.periodic:
        rho = wrap_periodic(periodic_cell(rho))
    return rho


def density_envelope(rho0: np.ndarray, trace: CharacteristicTrace) -> tuple[float, float]:
    """``(min rho0 e^{-A}, max rho0 e^{A})`` with A the largest |divergence integral|."""
    A = float(np.max(np.abs(trace.div_integral)))
    return float(np.min(rho0)) * math.exp(-A), float(np.max(rho0)) * math.exp(A)


def conservative_update_oracle(rho_n: np.ndarray, v: np.ndarray, dt: float, grid: Grid,
                               periodic: bool = False) -> np.ndarray:
    """One explicit first-order upwind finite-volume step of rho_t + div(rho v) = 0.

    Control volumes match the trapezoidal quadrature weights and the outer
    boundary carries zero flux, so ``sum(weights * rho)`` is conserved to
    round-off.
    """
    vmax = float(np.max(np.abs(v))) if np.size(v) else 0.0
    hmin = min(grid.spacing)
    cfl = dt * vmax / hmin
    if cfl > 0.9:
        raise CFLError(cfl, 0.9 * hmin / vmax)
    rho = np.asarray(rho_n, dtype=float)
    if periodic:
        r = periodic_cell(rho)
        out = r.copy()
        for a, h in enumerate(grid.spacing):
            va = periodic_cell(v[a])
            vf = 0.5 * (va + np.roll(va, -1, axis=a))
            F = np.where(vf > 0, r, np.roll(r, -1, axis=a)) * vf
            out -= dt / h * (F - np.roll(F, 1, axis=a))
        return wrap_periodic(out)
    w = grid.quadrature_weights()
    change = np.zeros_like(rho)
    for a, h in enumerate(grid.spacing):
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[a] = slice(0, -1)
        hi[a] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        vf = 0.5 * (v[a][lo] + v[a][hi])
        F = np.where(vf > 0, rho[lo], rho[hi]) * vf
        # face area: transverse part of the control volume
        wa = np.full(grid.shape[a], h)
        wa[0] = wa[-1] = h / 2
        shp = [1] * grid.dim
        shp[a] = -1
        area = (w / wa.reshape(shp))[lo]
        change[lo] -= dt * F * area
        change[hi] += dt * F * area
    return rho + change / w
