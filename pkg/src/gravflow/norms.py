"""Discrete Lebesgue/Sobolev norms and the blow-up functionals built from them.

Integrals use trapezoidal node weights, so constants integrate exactly over
the box.  Vector- and tensor-valued arrays (leading axes beyond the grid
dimension) are reduced pointwise to their Euclidean/Frobenius magnitude.
Grid maxima only bound the true supremum from below.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import Grid, State, gradient


@dataclass(frozen=True)
class NormSpec:
    p: float = 2.0
    k: int = 0

    def __post_init__(self):
        if not (self.p >= 1):
            raise ValueError("p must be >= 1 (use np.inf for the max norm)")
        if self.k not in (0, 1, 2):
            raise ValueError("derivative order k must be 0, 1 or 2")


def magnitude(f: np.ndarray, grid: Grid) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    extra = f.ndim - grid.dim
    if extra <= 0:
        return np.abs(f)
    return np.sqrt(np.sum(f**2, axis=tuple(range(extra))))


def lp_norm(f: np.ndarray, grid: Grid, p: float = 2.0) -> float:
    m = magnitude(f, grid)
    if np.isinf(p):
        return float(m.max())
    w = grid.quadrature_weights()
    return float(np.sum(w * m**p) ** (1.0 / p))


def _second_diff(f: np.ndarray, h: float, axis: int, bc: str | None) -> np.ndarray:
    n = f.shape[axis]
    out = np.empty_like(f)

    def take(i):
        return np.take(f, i, axis=axis)

    inner = [slice(None)] * f.ndim
    inner[axis] = slice(1, -1)
    out[tuple(inner)] = (np.take(f, range(2, n), axis=axis) - 2 * np.take(f, range(1, n - 1), axis=axis)
                         + np.take(f, range(0, n - 2), axis=axis)) / h**2
    for end, nb, nb2, nb3 in ((0, 1, 2, 3), (n - 1, n - 2, n - 3, n - 4)):
        idx = [slice(None)] * f.ndim
        idx[axis] = end
        if bc == "neumann_zero":
            val = 2 * (take(nb) - take(end)) / h**2
        elif bc == "dirichlet_zero":
            val = -2 * take(end) / h**2
        else:
            val = (2 * take(end) - 5 * take(nb) + 4 * take(nb2) - take(nb3)) / h**2
        out[tuple(idx)] = val
    return out


def hessian(f: np.ndarray, grid: Grid, bc: str | None = None) -> np.ndarray:
    """``H[i, j] = d^2 f / dx_i dx_j``; compact second differences on the diagonal."""
    f = np.asarray(f, dtype=float)
    d = grid.dim
    g = gradient(f, grid)
    H = np.empty((d, d, *f.shape))
    for i in range(d):
        for j in range(d):
            if i == j:
                H[i, i] = _second_diff(f, grid.spacing[i], i, bc)
            else:
                H[i, j] = np.gradient(g[j], grid.spacing[i], axis=i, edge_order=2)
    return H


def _derivatives(f: np.ndarray, grid: Grid, order: int, bc: str | None) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim == grid.dim:
        return gradient(f, grid) if order == 1 else hessian(f, grid, bc)
    return np.stack([_derivatives(c, grid, order, bc) for c in f])


def sobolev_norm(f: np.ndarray, grid: Grid, k: int = 1, p: float = 2.0, bc: str | None = None) -> float:
    """``sum_{j<=k} || D^j f ||_p`` with D^j the discrete j-th derivative tensor."""
    NormSpec(p, k)
    total = lp_norm(f, grid, p)
    for order in range(1, k + 1):
        total += lp_norm(_derivatives(f, grid, order, bc), grid, p)
    return total


def density_norm(rho: np.ndarray, grid: Grid, q: float) -> float:
    """Norm of the intersection H^1 and W^{1,q}, taken as the larger of the two."""
    return max(sobolev_norm(rho, grid, 1, 2.0), sobolev_norm(rho, grid, 1, q))


def phi_functional(s: State, grid: Grid, q_sob: float) -> float:
    """``1 + ||rho||_{H1 & W1q} + ||theta||_{H1} + ||u||_{H1} + ||Z||_{H1}``."""
    return (1.0 + density_norm(s.rho, grid, q_sob)
            + sobolev_norm(s.theta, grid, 1) + sobolev_norm(s.u, grid, 1) + sobolev_norm(s.Z, grid, 1))


def j_functional(s: State, grid: Grid, q_sob: float, rho_t: np.ndarray, dt_integral: float) -> float:
    """Regularity-class functional; ``dt_integral`` carries the running time integral of
    ``||(theta_t, u_t, Z_t)||_{H1}`` and ``rho_t`` the density time derivative."""
    fields = (s.theta, s.u, s.Z)
    sq = np.sqrt(np.maximum(s.rho, 0.0))
    h2 = sum(max(sobolev_norm(f, grid, 1), sobolev_norm(f, grid, 2)) for f in fields)
    weighted = sum(lp_norm(sq * f, grid, 2) for f in fields)
    w2q = sum(sobolev_norm(f, grid, 2, q_sob) for f in fields) ** 2
    rho_t_norm = max(lp_norm(rho_t, grid, 2), lp_norm(rho_t, grid, q_sob))
    return 1.0 + density_norm(s.rho, grid, q_sob) + rho_t_norm + h2 + weighted + w2q + dt_integral


@dataclass(frozen=True)
class BlowupSeries:
    """Per-state blow-up quantities with left-endpoint time accumulators."""

    times: tuple[float, ...] = ()
    phi: tuple[float, ...] = ()
    sup_theta: tuple[float, ...] = ()
    int_grad_u: tuple[float, ...] = ()
    int_grad_Z: tuple[float, ...] = ()
    grad_u_inf: tuple[float, ...] = ()
    grad_Z_inf: tuple[float, ...] = ()

    @property
    def bkm(self) -> tuple[float, ...]:
        """``sup|theta| + int ||grad u||_inf + int ||grad Z||_inf`` after each state."""
        return tuple(a + b + c for a, b, c in zip(self.sup_theta, self.int_grad_u, self.int_grad_Z))


def bkm_accumulate(series: BlowupSeries, s: State, dt: float, grid: Grid, q_sob: float = 6.0) -> BlowupSeries:
    """Append one state.

    The time integrals use the left-endpoint rule: the value recorded at a
    state covers the steps before it, so the first state contributes from
    the next call on.
    """
    if series.times and not s.t > series.times[-1]:
        raise ValueError(f"state at t={s.t} is not after t={series.times[-1]}")
    prev = lambda seq: seq[-1] if seq else 0.0  # noqa: E731
    gu = lp_norm(gradient_any(s.u, grid), grid, np.inf)
    gz = lp_norm(gradient(s.Z, grid), grid, np.inf)
    th = float(np.max(np.abs(s.theta)))
    return replace(
        series,
        times=series.times + (s.t,),
        phi=series.phi + (phi_functional(s, grid, q_sob),),
        sup_theta=series.sup_theta + (max(prev(series.sup_theta), th),),
        int_grad_u=series.int_grad_u + (prev(series.int_grad_u) + prev(series.grad_u_inf) * dt,),
        int_grad_Z=series.int_grad_Z + (prev(series.int_grad_Z) + prev(series.grad_Z_inf) * dt,),
        grad_u_inf=series.grad_u_inf + (gu,),
        grad_Z_inf=series.grad_Z_inf + (gz,),
    )


def gradient_any(f: np.ndarray, grid: Grid) -> np.ndarray:
    return _derivatives(f, grid, 1, None)
