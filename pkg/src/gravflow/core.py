"""Domain types, grids and the discrete differential operators shared by all solvers.

Fields are plain numpy arrays on the node lattice of a :class:`Grid`:
a scalar field has shape ``grid.shape`` and a vector field has shape
``(grid.dim, *grid.shape)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np

THETA_BCS = ("dirichlet_zero", "neumann_zero")
PHI_BCS = ("zero_mean_periodic", "dirichlet_zero", "free_space_green")
LAPLACIAN_BCS = ("dirichlet_zero", "neumann_zero", "periodic")


@dataclass(frozen=True)
class SimParams:
    """Physical constants and discretization controls."""

    mu: float = 1.0
    lam: float = 0.0
    c_v: float = 1.0
    R: float = 1.0
    k_heat: float = 1.0
    D: float = 1.0
    q_heat: float = 1.0
    K_rate: float = 1.0
    E: float = 1.0
    alpha: float = 0.5
    G: float = 0.0
    q_sob: float = 6.0
    dim: int = 1
    strict_viscosity: bool = False

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if 3 * self.lam + 2 * self.mu < 0:
            raise ValueError("viscosities must satisfy 3*lambda + 2*mu >= 0")
        if not self.c_v > 0 or not self.R > 0:
            raise ValueError("c_v and R must be positive")
        if self.k_heat < 0 or self.q_heat < 0 or self.K_rate < 0 or self.G < 0:
            raise ValueError("k_heat, q_heat, K_rate and G must be non-negative")
        if not self.D > 0:
            raise ValueError(f"D must be positive, got {self.D}")
        if not self.E > 0:
            raise ValueError(f"E must be positive, got {self.E}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        if not 3 < self.q_sob <= 6:
            raise ValueError(f"q_sob must lie in (3, 6], got {self.q_sob}")
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.strict_viscosity and not 7 * self.mu > self.lam:
            raise ValueError("strict_viscosity requires 7*mu > lambda")

    @property
    def bkm_regime(self) -> bool:
        """True when 7*mu > lambda, the regime of the gradient blow-up criterion."""
        return 7 * self.mu > self.lam

    @classmethod
    def from_mapping(cls, data: dict) -> "SimParams":
        known = {f.name for f in fields(cls)}
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**data)

    def with_(self, **changes) -> "SimParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class Grid:
    """Uniform rectilinear node lattice on a box.

    ``extents`` are cell counts per axis; there are ``extents + 1`` nodes per
    axis including both boundary nodes.  Periodic operators act on the first
    ``extents`` nodes of each axis (period = box length) and treat the last
    node as a copy of the first.
    """

    extents: tuple[int, ...]
    lengths: tuple[float, ...] | None = None
    origin: tuple[float, ...] | None = None
    bc_theta: str = "dirichlet_zero"
    bc_phi: str = "zero_mean_periodic"
    bc_u: str = field(default="dirichlet_zero", init=False)
    bc_Z: str = field(default="dirichlet_zero", init=False)

    def __post_init__(self):
        ext = tuple(int(n) for n in np.atleast_1d(self.extents))
        if len(ext) not in (1, 2, 3):
            raise ValueError("grid dimension must be 1, 2 or 3")
        if any(n < 4 for n in ext):
            raise ValueError(f"all extents must be >= 4, got {ext}")
        lengths = (1.0,) * len(ext) if self.lengths is None else tuple(float(x) for x in np.atleast_1d(self.lengths))
        origin = (0.0,) * len(ext) if self.origin is None else tuple(float(x) for x in np.atleast_1d(self.origin))
        if len(lengths) != len(ext) or len(origin) != len(ext):
            raise ValueError("lengths/origin must match the number of extents")
        if any(not x > 0 for x in lengths):
            raise ValueError("box lengths must be positive")
        if self.bc_theta not in THETA_BCS:
            raise ValueError(f"bc_theta must be one of {THETA_BCS}")
        if self.bc_phi not in PHI_BCS:
            raise ValueError(f"bc_phi must be one of {PHI_BCS}")
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "origin", origin)

    @classmethod
    def uniform(cls, n: int, dim: int = 1, length: float = 1.0, **kw) -> "Grid":
        return cls((n,) * dim, (length,) * dim, **kw)

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(n + 1 for n in self.extents)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.lengths, self.extents))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing[axis] * np.arange(self.shape[axis])

    def mesh(self) -> list[np.ndarray]:
        """Node coordinates, one array of ``self.shape`` per axis."""
        return np.meshgrid(*(self.axis_coords(a) for a in range(self.dim)), indexing="ij")

    def quadrature_weights(self) -> np.ndarray:
        """Trapezoidal node weights; they sum to the box volume."""
        w = np.ones(self.shape)
        for a, h in enumerate(self.spacing):
            wa = np.full(self.shape[a], h)
            wa[0] = wa[-1] = h / 2
            shape = [1] * self.dim
            shape[a] = -1
            w = w * wa.reshape(shape)
        return w

    def interior(self) -> tuple[slice, ...]:
        return (slice(1, -1),) * self.dim

    def boundary_mask(self) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        mask[self.interior()] = False
        return mask

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def vector_zeros(self) -> np.ndarray:
        return np.zeros((self.dim, *self.shape))

    def refine(self, factor: int = 2) -> "Grid":
        return Grid(tuple(n * factor for n in self.extents), self.lengths, self.origin,
                    bc_theta=self.bc_theta, bc_phi=self.bc_phi)


class NonFiniteError(FloatingPointError):
    """A computation produced or received NaN/inf values."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class State:
    """One time slice.  Arrays are copied and made read-only on construction."""

    t: float
    rho: np.ndarray
    theta: np.ndarray
    u: np.ndarray
    Z: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        for name in ("rho", "theta", "u", "Z", "phi"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.u.shape[1:] != self.rho.shape or self.u.shape[0] != self.rho.ndim:
            raise ValueError("velocity shape does not match density shape")
        for name in ("theta", "Z", "phi"):
            if getattr(self, name).shape != self.rho.shape:
                raise ValueError(f"{name} shape does not match density shape")

    def is_finite(self) -> bool:
        return all(np.isfinite(getattr(self, n)).all() for n in ("rho", "theta", "u", "Z", "phi"))

    @classmethod
    def nan_like(cls, t: float, grid: "Grid") -> "State":
        """Marker slice for a step that produced non-finite values."""
        f = np.full(grid.shape, np.nan)
        return cls(t, f, f, np.full((grid.dim, *grid.shape), np.nan), f, f)

    def audit(self, tol: float = 1e-10) -> list[str]:
        """Report violated pointwise invariants without altering the state."""
        issues = []
        if self.rho.min() < -tol:
            issues.append(f"rho<0 (min {self.rho.min():.3e})")
        if self.Z.min() < -tol or self.Z.max() > 1 + tol:
            issues.append(f"Z outside [0,1] ([{self.Z.min():.3e}, {self.Z.max():.3e}])")
        if self.theta.min() < -tol:
            issues.append(f"theta<0 (min {self.theta.min():.3e})")
        return issues


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States at t = 0, dt, 2 dt, ... on one grid."""

    dt: float
    states: tuple[State, ...]

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        states = tuple(self.states)
        if not states:
            raise ValueError("trajectory needs at least one state")
        if states[0].t != 0.0:
            raise ValueError("trajectory must start at t = 0")
        for n, s in enumerate(states):
            if not math.isclose(s.t, n * self.dt, rel_tol=1e-9, abs_tol=1e-12 * self.dt):
                raise ValueError(f"state {n} has t={s.t}, expected {n * self.dt}")
        object.__setattr__(self, "states", states)

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, i) -> State:
        return self.states[i]

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def T(self) -> float:
        return self.states[-1].t

    def stack(self, name: str) -> np.ndarray:
        return np.stack([getattr(s, name) for s in self.states])


# ----------------------------------------------------------------------------
# Difference operators on node values
# ----------------------------------------------------------------------------

def gradient(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Centered differences inside, second-order one-sided at the boundary."""
    f = np.asarray(f, dtype=float)
    return np.stack([np.gradient(f, h, axis=a, edge_order=2) for a, h in enumerate(grid.spacing)])


def divergence(v: np.ndarray, grid: Grid) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return sum(np.gradient(v[a], h, axis=a, edge_order=2) for a, h in enumerate(grid.spacing))


def jacobian(v: np.ndarray, grid: Grid) -> np.ndarray:
    """``J[i, j] = d v_i / d x_j``."""
    return np.stack([gradient(v[i], grid) for i in range(v.shape[0])])


def _pad_axis(f: np.ndarray, axis: int, bc: str) -> np.ndarray:
    width = [(0, 0)] * f.ndim
    width[axis] = (1, 1)
    if bc == "neumann_zero":
        return np.pad(f, width, mode="reflect")
    if bc == "dirichlet_zero":
        # odd reflection about the boundary node, whose value is nominally zero
        g = np.pad(f, width, mode="reflect")
        lo = [slice(None)] * f.ndim
        hi = [slice(None)] * f.ndim
        lo[axis] = 0
        hi[axis] = -1
        g[tuple(lo)] *= -1
        g[tuple(hi)] *= -1
        return g
    raise ValueError(f"unknown boundary condition {bc!r}")


def laplacian(f: np.ndarray, grid: Grid, bc: str) -> np.ndarray:
    """(2d+1)-point Laplacian with ghost values supplied by ``bc``.

    ``periodic`` wraps the periodic cell (all but the last node per axis) and
    copies the result to the last node.
    """
    if bc not in LAPLACIAN_BCS:
        raise ValueError(f"bc must be one of {LAPLACIAN_BCS}")
    f = np.asarray(f, dtype=float)
    if bc == "periodic":
        cell = f[tuple(slice(0, -1) for _ in range(grid.dim))]
        out = periodic_laplacian(cell, grid.spacing)
        return wrap_periodic(out)
    out = np.zeros_like(f)
    for a, h in enumerate(grid.spacing):
        g = _pad_axis(f, a, bc)
        n = f.shape[a]
        out += (np.take(g, range(2, n + 2), axis=a) - 2 * f + np.take(g, range(0, n), axis=a)) / h**2
    return out


def periodic_laplacian(cell: np.ndarray, spacing: Sequence[float]) -> np.ndarray:
    out = np.zeros_like(cell)
    for a, h in enumerate(spacing):
        out += (np.roll(cell, -1, axis=a) - 2 * cell + np.roll(cell, 1, axis=a)) / h**2
    return out


def wrap_periodic(cell: np.ndarray) -> np.ndarray:
    """Extend a periodic-cell array by one node per axis (copy of node 0)."""
    return np.pad(cell, [(0, 1)] * cell.ndim, mode="wrap")


def periodic_cell(f: np.ndarray) -> np.ndarray:
    return np.asarray(f)[tuple(slice(0, -1) for _ in range(np.ndim(f)))]
