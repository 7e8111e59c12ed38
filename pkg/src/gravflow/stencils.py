"""Sparse matrix versions of the node stencils, restricted to unknown nodes.

For ``dirichlet_zero`` the unknowns are the interior nodes (boundary values
are zero and drop out of every stencil).  For ``neumann_zero`` every node is
an unknown and ghost values are mirrored.  Unknowns are flattened in C order.
Constant matrices are cached and shared; never modify them in place.
"""

from __future__ import annotations

from functools import lru_cache, reduce

import numpy as np
import scipy.sparse as sp

from .core import Grid


def unknown_shape(grid: Grid, bc: str) -> tuple[int, ...]:
    if bc == "dirichlet_zero":
        return tuple(n - 1 for n in grid.extents)
    if bc == "neumann_zero":
        return grid.shape
    raise ValueError(f"unsupported bc {bc!r}")


def restrict(f: np.ndarray, grid: Grid, bc: str) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if bc == "dirichlet_zero":
        return f[grid.interior()].ravel()
    return f.ravel()


def prolong(x: np.ndarray, grid: Grid, bc: str) -> np.ndarray:
    if bc == "dirichlet_zero":
        out = np.zeros(grid.shape)
        out[grid.interior()] = x.reshape(unknown_shape(grid, bc))
        return out
    return x.reshape(grid.shape).copy()


def _second_1d(m: int, h: float, bc: str) -> sp.csr_matrix:
    A = sp.diags([np.ones(m - 1), -2 * np.ones(m), np.ones(m - 1)], [-1, 0, 1], format="lil")
    if bc == "neumann_zero":
        A[0, 1] = 2.0
        A[m - 1, m - 2] = 2.0
    return (A / h**2).tocsr()


def _centered_1d(m: int, h: float, bc: str) -> sp.csr_matrix:
    A = sp.diags([-np.ones(m - 1), np.ones(m - 1)], [-1, 1], format="lil")
    if bc == "neumann_zero":
        # mirrored ghost makes the boundary derivative vanish
        A[0, :] = 0
        A[m - 1, :] = 0
    return (A / (2 * h)).tocsr()


def _backward_1d(m: int, h: float) -> sp.csr_matrix:
    return (sp.diags([np.ones(m), -np.ones(m - 1)], [0, -1]) / h).tocsr()


def _forward_1d(m: int, h: float) -> sp.csr_matrix:
    return (sp.diags([-np.ones(m), np.ones(m - 1)], [0, 1]) / h).tocsr()


def _along_axis(op: sp.spmatrix, axis: int, shape: tuple[int, ...]) -> sp.csr_matrix:
    mats = [op if a == axis else sp.identity(n, format="csr") for a, n in enumerate(shape)]
    return reduce(lambda A, B: sp.kron(A, B, format="csr"), mats)


@lru_cache(maxsize=64)
def second_derivative(grid: Grid, axis: int, bc: str) -> sp.csr_matrix:
    shape = unknown_shape(grid, bc)
    return _along_axis(_second_1d(shape[axis], grid.spacing[axis], bc), axis, shape)


@lru_cache(maxsize=64)
def first_derivative(grid: Grid, axis: int, bc: str) -> sp.csr_matrix:
    shape = unknown_shape(grid, bc)
    return _along_axis(_centered_1d(shape[axis], grid.spacing[axis], bc), axis, shape)


@lru_cache(maxsize=64)
def laplacian_matrix(grid: Grid, bc: str) -> sp.csr_matrix:
    return sum(second_derivative(grid, a, bc) for a in range(grid.dim)).tocsr()


def advection_matrix(v: np.ndarray, grid: Grid, bc: str, upwind: bool = False) -> sp.csr_matrix:
    """Matrix of ``w -> v . grad w`` on the unknowns.

    ``upwind`` selects first-order one-sided differences taken against the
    local flow direction (only for ``dirichlet_zero``); its matrix has
    non-positive off-diagonals and non-negative diagonal.
    """
    shape = unknown_shape(grid, bc)
    n = int(np.prod(shape))
    out = sp.csr_matrix((n, n))
    for a in range(grid.dim):
        va = restrict(v[a], grid, bc)
        if upwind:
            if bc != "dirichlet_zero":
                raise ValueError("upwind advection is only assembled for dirichlet_zero")
            back, fwd = _one_sided(grid, a)
            out = out + sp.diags(np.maximum(va, 0)) @ back + sp.diags(np.minimum(va, 0)) @ fwd
        else:
            out = out + sp.diags(va) @ first_derivative(grid, a, bc)
    return out.tocsr()


@lru_cache(maxsize=64)
def _one_sided(grid: Grid, axis: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    shape = unknown_shape(grid, "dirichlet_zero")
    h = grid.spacing[axis]
    return (_along_axis(_backward_1d(shape[axis], h), axis, shape),
            _along_axis(_forward_1d(shape[axis], h), axis, shape))


@lru_cache(maxsize=64)
def lame_matrix(grid: Grid, mu: float, lam: float) -> sp.csr_matrix:
    """Block matrix of ``L u = -mu Lap u - (lam + mu) grad div u`` with u = 0 on the boundary.

    Diagonal blocks use the compact second difference, off-diagonal blocks the
    product of centered first differences, so the matrix is symmetric.
    """
    bc = "dirichlet_zero"
    d = grid.dim
    lap = laplacian_matrix(grid, bc)
    blocks = [[None] * d for _ in range(d)]
    for i in range(d):
        for j in range(d):
            if i == j:
                blocks[i][j] = -mu * lap - (lam + mu) * second_derivative(grid, i, bc)
            else:
                blocks[i][j] = -(lam + mu) * (first_derivative(grid, i, bc) @ first_derivative(grid, j, bc))
    return sp.bmat(blocks, format="csr")


def restrict_vector(v: np.ndarray, grid: Grid) -> np.ndarray:
    return np.concatenate([restrict(v[a], grid, "dirichlet_zero") for a in range(grid.dim)])


def prolong_vector(x: np.ndarray, grid: Grid) -> np.ndarray:
    parts = np.split(x, grid.dim)
    return np.stack([prolong(p, grid, "dirichlet_zero") for p in parts])
