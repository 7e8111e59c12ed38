"""Self-gravity: solve Lap(Phi) = 4 pi G rho and form the force -grad(Phi)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .core import Grid, NonFiniteError, gradient, periodic_cell, periodic_laplacian, wrap_periodic

RESIDUAL_TOL = 1e-10


class PoissonDivergedError(RuntimeError):
    def __init__(self, residual: float):
        super().__init__(f"Poisson solve did not reach tolerance (relative residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True, eq=False)
class PoissonSolution:
    phi: np.ndarray
    residual_l2: float
    source_norm: float

    @property
    def relative_residual(self) -> float:
        return self.residual_l2 / self.source_norm if self.source_norm > 0 else self.residual_l2


def periodic_symbol(shape, spacing) -> np.ndarray:
    """Eigenvalues of the periodic (2d+1)-point Laplacian on a cell of ``shape``."""
    lam = np.zeros(shape)
    for a, (n, h) in enumerate(zip(shape, spacing)):
        k = np.arange(n)
        la = (2 * np.cos(2 * np.pi * k / n) - 2) / h**2
        s = [1] * len(shape)
        s[a] = n
        lam = lam + la.reshape(s)
    return lam


def dirichlet_symbol(shape, spacing) -> np.ndarray:
    """Eigenvalues of the Dirichlet Laplacian on interior nodes (sine modes)."""
    lam = np.zeros(shape)
    for a, (m, h) in enumerate(zip(shape, spacing)):
        j = np.arange(1, m + 1)
        la = (2 * np.cos(np.pi * j / (m + 1)) - 2) / h**2
        s = [1] * len(shape)
        s[a] = m
        lam = lam + la.reshape(s)
    return lam


def _dirichlet_apply(x: np.ndarray, spacing) -> np.ndarray:
    out = -2 * sum(1 / h**2 for h in spacing) * x
    for a, h in enumerate(spacing):
        p = np.pad(x, [(1, 1) if b == a else (0, 0) for b in range(x.ndim)])
        out += (np.take(p, range(2, x.shape[a] + 2), axis=a) + np.take(p, range(0, x.shape[a]), axis=a)) / h**2
    return out


def solve_poisson(rho: np.ndarray, grid: Grid, G: float, bc: str | None = None) -> PoissonSolution:
    """Spectral solve of the discrete Poisson problem.

    ``zero_mean_periodic``: the source is shifted to zero mean on the periodic
    cell and Phi is returned with zero mean.  ``dirichlet_zero``: Phi = 0 on
    the boundary nodes.  Free-space potentials are only available through
    :func:`gravflow.oracle.poisson_oracle`.
    """
    bc = grid.bc_phi if bc is None else bc
    rho = np.asarray(rho, dtype=float)
    if not np.all(np.isfinite(rho)):
        raise NonFiniteError("non-finite density in Poisson source")
    if bc == "free_space_green":
        raise ValueError("free-space potential is realized by poisson_oracle only")
    h = grid.spacing
    if bc == "zero_mean_periodic":
        cell = periodic_cell(rho)
        src = 4 * np.pi * G * (cell - cell.mean())
        lam = periodic_symbol(cell.shape, h)
        lam_safe = np.where(lam == 0, 1.0, lam)
        phat = np.where(lam == 0, 0.0, sfft.fftn(src) / lam_safe)
        cphi = sfft.ifftn(phat).real
        cphi -= cphi.mean()
        res = periodic_laplacian(cphi, h) - src
        phi = wrap_periodic(cphi)
    elif bc == "dirichlet_zero":
        src = 4 * np.pi * G * rho[grid.interior()]
        lam = dirichlet_symbol(src.shape, h)
        inner = sfft.idstn(sfft.dstn(src, type=1) / lam, type=1)
        res = _dirichlet_apply(inner, h) - src
        phi = np.zeros(grid.shape)
        phi[grid.interior()] = inner
    else:
        raise ValueError(f"unknown Phi boundary condition {bc!r}")
    res_l2 = float(np.sqrt(np.sum(res**2) * grid.cell_volume))
    src_l2 = float(np.sqrt(np.sum(src**2) * grid.cell_volume))
    sol = PoissonSolution(phi, res_l2, src_l2)
    if src_l2 > 0 and sol.relative_residual > RESIDUAL_TOL:
        raise PoissonDivergedError(sol.relative_residual)
    return sol


def gravity_force(phi: np.ndarray, grid: Grid) -> np.ndarray:
    return -gradient(phi, grid)
