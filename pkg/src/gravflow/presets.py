"""Builtin initial-value problems.

Each preset bundles default parameters, grid, horizon and an initial-data
factory that works on any grid of the preset's box, so resolution and
dimension can be overridden from a configuration file.

    trivial      uniform density at rest, no heat, no fuel; every diagnostic stays constant
    hotspot      Gaussian temperature bump in unburnt fuel; integral of rho*Z strictly decreases,
                 Z stays in [0, 1], theta stays non-negative
    vacuum-blob  compactly supported density with true vacuum around it; used for the
                 delta-continuation, successive runs contract
    collapse     self-gravitating blob on a small background with Dirichlet potential;
                 mass fraction bounds and temperature positivity hold while the blob contracts
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .core import Grid, SimParams
from .picard import InitialData


@dataclass(frozen=True)
class Preset:
    name: str
    params: SimParams
    grid: Grid
    T: float
    dt: float
    make: Callable[[Grid, SimParams], InitialData]
    description: str = ""

    def initial_data(self, grid: Grid | None = None, params: SimParams | None = None) -> InitialData:
        return self.make(grid or self.grid, params or self.params)

    def with_grid(self, grid: Grid) -> "Preset":
        return replace(self, grid=grid, params=replace(self.params, dim=grid.dim))


def _bubble(grid: Grid) -> np.ndarray:
    """Product of sin(pi x_a / L_a): smooth, positive inside, zero on the boundary."""
    out = np.ones(grid.shape)
    for a, x in enumerate(grid.mesh()):
        out = out * np.sin(np.pi * (x - grid.origin[a]) / grid.lengths[a])
    out[grid.boundary_mask()] = 0.0
    return np.maximum(out, 0.0)


def _radius2(grid: Grid, center=None) -> np.ndarray:
    c = [o + L / 2 for o, L in zip(grid.origin, grid.lengths)] if center is None else center
    return sum((x - ca) ** 2 for x, ca in zip(grid.mesh(), c))


def _compact_bump(grid: Grid, radius: float) -> np.ndarray:
    """cos^2 bump of the given radius around the box center, zero outside."""
    r = np.sqrt(_radius2(grid))
    return np.where(r < radius, np.cos(0.5 * np.pi * r / radius) ** 2, 0.0)


def _trivial(grid: Grid, params: SimParams) -> InitialData:
    return InitialData(np.ones(grid.shape), grid.zeros(), grid.vector_zeros(), grid.zeros())


def _hotspot(grid: Grid, params: SimParams) -> InitialData:
    theta = 0.5 * params.E * np.exp(-_radius2(grid) / (2 * 0.08**2))
    if grid.bc_theta == "dirichlet_zero":
        theta[grid.boundary_mask()] = 0.0
    Z = np.ones(grid.shape)
    Z[grid.boundary_mask()] = 0.0
    return InitialData(np.ones(grid.shape), theta, grid.vector_zeros(), Z)


def _vacuum_blob(grid: Grid, params: SimParams) -> InitialData:
    rho = _compact_bump(grid, 0.25)
    theta = 0.3 * params.E * _compact_bump(grid, 0.2)
    Z = _compact_bump(grid, 0.3)
    return InitialData(rho, theta, grid.vector_zeros(), Z)


def _collapse(grid: Grid, params: SimParams) -> InitialData:
    rho = 0.05 + np.exp(-_radius2(grid) / (2 * 0.1**2))
    theta = 0.05 * params.E * _bubble(grid)
    Z = 0.5 * _bubble(grid)
    return InitialData(rho, theta, grid.vector_zeros(), Z)


PRESETS: dict[str, Preset] = {
    "trivial": Preset(
        "trivial", SimParams(dim=1), Grid((16,)), T=0.1, dt=0.01, make=_trivial,
        description="uniform density at rest; all diagnostics constant"),
    "hotspot": Preset(
        "hotspot",
        SimParams(mu=0.05, lam=0.0, c_v=1.0, R=0.5, k_heat=0.05, D=0.01, q_heat=1.0, K_rate=5.0,
                  E=1.0, G=0.0, dim=2),
        Grid((32, 32)), T=0.1, dt=0.0005, make=_hotspot,
        description="reaction-diffusion ignition; int rho Z strictly decreasing"),
    "vacuum-blob": Preset(
        "vacuum-blob",
        SimParams(mu=0.1, lam=0.0, c_v=1.0, R=0.5, k_heat=0.05, D=0.02, q_heat=0.5, K_rate=1.0,
                  E=1.0, G=0.5, dim=1),
        Grid((64,)), T=0.05, dt=0.005, make=_vacuum_blob,
        description="compact density with vacuum; delta-continuation contracts"),
    "collapse": Preset(
        "collapse",
        SimParams(mu=0.05, lam=0.0, c_v=1.0, R=0.2, k_heat=0.05, D=0.01, q_heat=0.5, K_rate=1.0,
                  E=1.0, G=1.0, dim=2),
        Grid((32, 32), bc_phi="dirichlet_zero"), T=0.2, dt=0.005, make=_collapse,
        description="self-gravitating blob; bounds and positivity hold while it contracts"),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
