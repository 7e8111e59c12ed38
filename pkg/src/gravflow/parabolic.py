"""Backward-Euler sub-solvers for temperature, momentum and mass fraction.

All three are written in advective (non-divergence) form with the density
factored out, so a vacuum only weakens the mass term.  The density entering
the mass term is floored at ``delta_floor`` to keep the systems invertible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import stencils
from .constitutive import arrhenius
from .core import Grid, NonFiniteError, SimParams, divergence, gradient

SOLVE_RTOL = 1e-10


class LinearSolveError(RuntimeError):
    def __init__(self, what: str, residual: float):
        super().__init__(f"{what}: linear solve stalled at relative residual {residual:.3e}")
        self.residual = residual


@dataclass(frozen=True, eq=False)
class LinearStepInputs:
    """Data frozen for one implicit step.

    ``rho`` is the density at the new time level, ``v`` the advecting
    velocity at the new level, ``prev`` the field at the old level and
    ``source`` an explicit right-hand side (heating, dissipation or a
    manufactured forcing).
    """

    grid: Grid
    rho: np.ndarray
    v: np.ndarray
    prev: np.ndarray
    dt: float
    source: np.ndarray | float = 0.0
    delta_floor: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.delta_floor < 0:
            raise ValueError("delta_floor must be non-negative")
        for name in ("rho", "v", "prev", "source"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise NonFiniteError(f"non-finite values in step input {name!r}")
        if np.min(self.rho) < 0:
            raise ValueError("density must be non-negative")

    @property
    def rho_floor(self) -> np.ndarray:
        return np.maximum(np.asarray(self.rho, dtype=float), self.delta_floor)

    @property
    def v_is_zero(self) -> bool:
        return not np.any(self.v)


def solve_linear(A: sp.spmatrix, b: np.ndarray, symmetric: bool, x0=None, what: str = "solve") -> np.ndarray:
    """Krylov solve to relative residual SOLVE_RTOL with a sparse-direct fallback."""
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b)
    d = A.diagonal()
    M = sp.diags(np.where(d != 0, 1.0 / np.where(d != 0, d, 1.0), 1.0))
    maxiter = 20 * A.shape[0] + 100
    if symmetric:
        x, _ = spla.cg(A, b, x0=x0, rtol=1e-13, atol=0.0, maxiter=maxiter, M=M)
    else:
        x, _ = spla.bicgstab(A, b, x0=x0, rtol=1e-13, atol=0.0, maxiter=maxiter, M=M)
    res = np.linalg.norm(b - A @ x) / bnorm
    if not np.isfinite(res) or res > SOLVE_RTOL:
        x = spla.spsolve(A.tocsc(), b)
        res = np.linalg.norm(b - A @ x) / bnorm
        if not np.isfinite(res) or res > SOLVE_RTOL:
            raise LinearSolveError(what, res)
    return x


def solve_temperature_step(inp: LinearStepInputs, params: SimParams, bc: str | None = None) -> np.ndarray:
    """One step of ``c_v rho (theta_t + v.grad theta) + R rho theta div v - k Lap theta = source``.

    The pressure work ``p div v = R rho theta div v`` is treated implicitly.
    """
    grid = inp.grid
    bc = grid.bc_theta if bc is None else bc
    r = stencils.restrict(inp.rho_floor, grid, bc)
    divv = stencils.restrict(divergence(inp.v, grid), grid, bc)
    A = sp.diags(params.c_v * r / inp.dt + params.R * r * divv) - params.k_heat * stencils.laplacian_matrix(grid, bc)
    if not inp.v_is_zero:
        A = A + sp.diags(params.c_v * r) @ stencils.advection_matrix(inp.v, grid, bc)
    src = np.broadcast_to(inp.source, grid.shape)
    b = params.c_v * r * stencils.restrict(inp.prev, grid, bc) / inp.dt + stencils.restrict(src, grid, bc)
    x0 = stencils.restrict(inp.prev, grid, bc)
    sym = inp.v_is_zero and bc == "dirichlet_zero"
    return stencils.prolong(solve_linear(A.tocsr(), b, sym, x0, "temperature"), grid, bc)


def solve_momentum_step(inp: LinearStepInputs, p: np.ndarray, f: np.ndarray, params: SimParams) -> np.ndarray:
    """One step of ``rho (u_t + v.grad u) + L u = rho f - grad p + source`` with u = 0 on the boundary."""
    grid = inp.grid
    bc = "dirichlet_zero"
    d = grid.dim
    r = stencils.restrict(inp.rho_floor, grid, bc)
    mass = sp.diags(np.tile(r / inp.dt, d))
    A = mass + stencils.lame_matrix(grid, params.mu, params.lam)
    if not inp.v_is_zero:
        adv = sp.diags(r) @ stencils.advection_matrix(inp.v, grid, bc)
        A = A + sp.block_diag([adv] * d)
    src = np.broadcast_to(inp.source, (d, *grid.shape))
    rhs = np.asarray(inp.rho) * np.asarray(f) - gradient(p, grid) + src
    b = np.tile(r / inp.dt, d) * stencils.restrict_vector(inp.prev, grid) + stencils.restrict_vector(rhs, grid)
    x0 = stencils.restrict_vector(inp.prev, grid)
    return stencils.prolong_vector(solve_linear(A.tocsr(), b, inp.v_is_zero, x0, "momentum"), grid)


def massfraction_matrix(inp: LinearStepInputs, theta: np.ndarray, params: SimParams) -> sp.csr_matrix:
    """System matrix of the mass-fraction step; an M-matrix by construction."""
    grid = inp.grid
    bc = "dirichlet_zero"
    r = stencils.restrict(inp.rho_floor, grid, bc)
    react = params.K_rate * stencils.restrict(arrhenius(theta, params), grid, bc)
    A = sp.diags(r / inp.dt + react * r) - params.D * stencils.laplacian_matrix(grid, bc)
    if not inp.v_is_zero:
        A = A + sp.diags(r) @ stencils.advection_matrix(inp.v, grid, bc, upwind=True)
    return A.tocsr()


def solve_massfraction_step(inp: LinearStepInputs, theta: np.ndarray, params: SimParams) -> np.ndarray:
    """One step of ``rho (Z_t + v.grad Z) + K phi(theta) rho Z - D Lap Z = source``.

    Advection is upwinded, reaction and diffusion implicit, so values stay in
    [0, 1] whenever they start there and the source vanishes.
    """
    grid = inp.grid
    bc = "dirichlet_zero"
    A = massfraction_matrix(inp, theta, params)
    r = stencils.restrict(inp.rho_floor, grid, bc)
    src = np.broadcast_to(inp.source, grid.shape)
    b = r * stencils.restrict(inp.prev, grid, bc) / inp.dt + stencils.restrict(src, grid, bc)
    x0 = stencils.restrict(inp.prev, grid, bc)
    return stencils.prolong(solve_linear(A, b, inp.v_is_zero, x0, "mass fraction"), grid, bc)


def heat_step(w: np.ndarray, grid: Grid, dt: float, diffusivity: float = 1.0) -> np.ndarray:
    """Implicit step of ``w_t = diffusivity * Lap w`` with w = 0 on the boundary."""
    bc = "dirichlet_zero"
    m = int(np.prod(stencils.unknown_shape(grid, bc)))
    A = (sp.identity(m) / dt - diffusivity * stencils.laplacian_matrix(grid, bc)).tocsr()
    x = stencils.restrict(w, grid, bc)
    return stencils.prolong(solve_linear(A, x / dt, True, x, "heat"), grid, bc)
