"""Pointwise constitutive laws: pressure, reaction kinetics, heating, dissipation, Lame operator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Grid, jacobian, laplacian

# exp(-709) is the smallest normal double exponent; below it the rate is exactly 0
_EXP_CUTOFF = 709.0


@dataclass(frozen=True)
class ArrheniusParams:
    alpha: float = 0.5
    E: float = 1.0

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError("activation energy E must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")


def pressure(rho, theta, R: float):
    return R * np.asarray(rho) * np.asarray(theta)


def arrhenius(theta, params):
    """Modified Arrhenius rate ``theta**alpha * exp(-E/theta)``, zero for theta <= 0.

    Works on scalars and arrays; ``params`` needs ``alpha`` and ``E``.
    """
    th = np.asarray(theta, dtype=float)
    active = th > params.E / _EXP_CUTOFF
    safe = np.where(active, th, 1.0)
    out = np.where(active, safe**params.alpha * np.exp(-params.E / safe), 0.0)
    return out if out.ndim else float(out)


def arrhenius_dtheta(theta, params):
    th = np.asarray(theta, dtype=float)
    active = th > params.E / _EXP_CUTOFF
    safe = np.where(active, th, 1.0)
    a, E = params.alpha, params.E
    val = np.exp(-E / safe) * (a * safe ** (a - 1) + E * safe ** (a - 2))
    out = np.where(active, val, 0.0)
    return out if out.ndim else float(out)


def arrhenius_ratio_bound(params, power: int = 1) -> float:
    """``sup_{theta>0} phi(theta) / theta**power`` in closed form.

    The maximizer is ``theta = E / (power - alpha)`` (requires power > alpha).
    """
    a, E = params.alpha, params.E
    if power <= a:
        raise ValueError("ratio is unbounded unless power > alpha")
    t = E / (power - a)
    return t ** (a - power) * np.exp(-E / t)


def heat_source(theta, Z, params):
    """Reaction heating ``q * K * phi(theta) * Z``."""
    return params.q_heat * params.K_rate * arrhenius(theta, params) * np.asarray(Z)


def viscous_dissipation(u: np.ndarray, grid: Grid, mu: float, lam: float) -> np.ndarray:
    """``(mu/2)|grad u + grad u^T|^2 + lam (div u)^2`` from the discrete Jacobian."""
    J = jacobian(u, grid)
    S = J + np.swapaxes(J, 0, 1)
    div = np.trace(J, axis1=0, axis2=1)
    return 0.5 * mu * np.sum(S * S, axis=(0, 1)) + lam * div**2


def lame_apply(u: np.ndarray, grid: Grid, mu: float, lam: float, bc: str = "dirichlet_zero") -> np.ndarray:
    """``-mu Lap u - (lam + mu) grad div u`` at interior nodes; zero on the boundary."""
    if bc != "dirichlet_zero":
        raise ValueError("the Lame operator is only defined for dirichlet_zero velocity")
    u = np.asarray(u, dtype=float)
    d = grid.dim
    h = grid.spacing
    out = np.empty_like(u)
    for i in range(d):
        gd = np.zeros(grid.shape)
        for j in range(d):
            if i == j:
                gd += laplacian_1d(u[j], h[j], j)
            else:
                dj = np.gradient(u[j], h[j], axis=j, edge_order=2)
                gd += np.gradient(dj, h[i], axis=i, edge_order=2)
        out[i] = -mu * laplacian(u[i], grid, bc) - (lam + mu) * gd
    mask = grid.boundary_mask()
    out[:, mask] = 0.0
    return out


def laplacian_1d(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Compact second difference along one axis (interior nodes only, zero at the ends)."""
    out = np.zeros_like(f)
    inner = [slice(None)] * f.ndim
    inner[axis] = slice(1, -1)
    up = [slice(None)] * f.ndim
    up[axis] = slice(2, None)
    dn = [slice(None)] * f.ndim
    dn[axis] = slice(0, -2)
    out[tuple(inner)] = (f[tuple(up)] - 2 * f[tuple(inner)] + f[tuple(dn)]) / h**2
    return out
