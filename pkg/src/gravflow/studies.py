"""Refinement studies: error tables and fitted orders for each solver.

Every study compares against a reference from :mod:`gravflow.oracle`.
A level that raises is kept in the table with ``failed`` set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import oracle
from .core import Grid
from .gravity import solve_poisson
from .norms import lp_norm
from .transport import VelocityHistory, advance_density, trace_characteristics

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StudyRow:
    study: str
    level: int
    n: int
    dt: float
    error: float
    order: float = float("nan")
    failed: str = ""


def _with_orders(rows: list[StudyRow], sizes: list[float]) -> list[StudyRow]:
    out = []
    for i, r in enumerate(rows):
        order = float("nan")
        if i > 0 and not r.failed and not rows[i - 1].failed and r.error > 0 and rows[i - 1].error > 0:
            order = oracle.fitted_order([sizes[i - 1], sizes[i]], [rows[i - 1].error, r.error])
        out.append(StudyRow(r.study, r.level, r.n, r.dt, r.error, order, r.failed))
    return out


def overall_order(rows: list[StudyRow], by: str = "n") -> float:
    ok = [r for r in rows if not r.failed and r.error > 0]
    if len(ok) < 2:
        return float("nan")
    sizes = [1.0 / r.n for r in ok] if by == "n" else [r.dt for r in ok]
    return oracle.fitted_order(sizes, [r.error for r in ok])


def smooth_profile(x: np.ndarray) -> np.ndarray:
    return np.exp(np.sin(2 * np.pi * x))


def advection_error(n: int, cfl: float = 0.5, c: float = 1.0, T: float = 1.0 / 3.0) -> tuple[float, float]:
    """L-infinity error of the representation formula for constant periodic advection on [0, 1).

    The default shift of 1/3 keeps the sub-cell offset at 1/3 or 2/3 on every
    power-of-two grid, so linear interpolation never becomes exact.
    """
    grid = Grid((n,), (1.0,))
    h = grid.spacing[0]
    dt = cfl * h / c
    steps = max(1, int(round(T / dt)))
    dt = T / steps
    hist = VelocityHistory.constant(grid, np.full((1, *grid.shape), c), T, dt)
    x = grid.axis_coords(0)
    trace = trace_characteristics(hist, T, dt / 4, periodic=True)
    rho = advance_density(smooth_profile(x), trace)
    exact = oracle.translate_periodic(smooth_profile, x, c, T, 0.0, 1.0)
    return float(np.max(np.abs(rho - exact))), dt


def stretch_error(n: int, cfl: float = 0.5, T: float = 0.5) -> tuple[float, float]:
    """Error against rho0(x e^{-t}) e^{-t} for v(x) = x on [-1, 1]."""
    grid = Grid((n,), (2.0,), (-1.0,))
    h = grid.spacing[0]
    dt = cfl * h
    steps = max(1, int(round(T / dt)))
    dt = T / steps
    x = grid.axis_coords(0)
    rho0 = lambda y: np.exp(-4 * y**2) * (1 + 0.5 * np.sin(3 * y))  # noqa: E731
    hist = VelocityHistory.constant(grid, x[None, :], T, dt)
    trace = trace_characteristics(hist, T, dt / 4)
    rho = advance_density(rho0(x), trace)
    return float(np.max(np.abs(rho - oracle.stretch_solution(rho0, x, T)))), dt


def transport_study(ns=(64, 128, 256), cfl: float = 0.5) -> list[StudyRow]:
    rows = []
    for lvl, n in enumerate(ns):
        try:
            err, dt = advection_error(n, cfl)
            rows.append(StudyRow("transport", lvl, n, dt, err))
        except Exception as exc:  # a failed level stays in the table
            rows.append(StudyRow("transport", lvl, n, float("nan"), float("nan"), failed=str(exc)))
    return _with_orders(rows, [1.0 / n for n in ns])


def representation_study(ns=(64, 128, 256), cfl: float = 0.5) -> list[StudyRow]:
    rows = []
    for lvl, n in enumerate(ns):
        try:
            err, dt = stretch_error(n, cfl)
            rows.append(StudyRow("representation", lvl, n, dt, err))
        except Exception as exc:
            rows.append(StudyRow("representation", lvl, n, float("nan"), float("nan"), failed=str(exc)))
    return _with_orders(rows, [1.0 / n for n in ns])


def poisson_study(ns=(16, 32, 64), dim: int = 2, G: float = 1.0, seed: int = 0) -> list[StudyRow]:
    """Relative L2 difference between the fast solver and the eigenmode oracle on random densities."""
    rng = np.random.default_rng(seed)
    rows = []
    for lvl, n in enumerate(ns):
        grid = Grid.uniform(n, dim)
        try:
            cell = rng.standard_normal((n,) * dim)
            rho = np.pad(cell - cell.mean(), [(0, 1)] * dim, mode="wrap")
            fast = solve_poisson(rho, grid, G).phi
            ref = oracle.poisson_eigen_oracle(rho, grid, G)
            rows.append(StudyRow("poisson", lvl, n, 0.0, lp_norm(fast - ref, grid) / lp_norm(ref, grid)))
        except Exception as exc:
            rows.append(StudyRow("poisson", lvl, n, 0.0, float("nan"), failed=str(exc)))
    return rows


MMS_SPACE = {"temperature": "temperature-space", "massfraction": "massfraction-space", "momentum": "momentum-space"}
MMS_TIME = {"temperature": "temperature-time", "massfraction": "massfraction-time", "momentum": "momentum-time"}


def mms_space_study(solver: str, levels: int = 3, n0: int = 16, dt: float = 0.05) -> list[StudyRow]:
    case = oracle.CASES[MMS_SPACE[solver]]()
    rows, sizes = [], []
    for lvl in range(levels):
        n = n0 * 2**lvl
        sizes.append(1.0 / n)
        try:
            err = oracle.mms_residual(case, solver, n, dt)[next(iter(case.fields))]["linf"]
            rows.append(StudyRow(f"{solver}-space", lvl, n, dt, err))
        except Exception as exc:
            rows.append(StudyRow(f"{solver}-space", lvl, n, dt, float("nan"), failed=str(exc)))
    return _with_orders(rows, sizes)


def mms_time_study(solver: str, levels: int = 3, n: int = 8, dt0: float = 0.1) -> list[StudyRow]:
    case = oracle.CASES[MMS_TIME[solver]]()
    rows, sizes = [], []
    for lvl in range(levels):
        dt = dt0 / 2**lvl
        sizes.append(dt)
        try:
            err = oracle.mms_residual(case, solver, n, dt)[next(iter(case.fields))]["linf"]
            rows.append(StudyRow(f"{solver}-time", lvl, n, dt, err))
        except Exception as exc:
            rows.append(StudyRow(f"{solver}-time", lvl, n, dt, float("nan"), failed=str(exc)))
    return _with_orders(rows, sizes)


def full_study(levels: int = 3, seed: int = 0) -> list[StudyRow]:
    if levels < 3:
        raise ValueError("a convergence study needs at least 3 levels")
    ns = tuple(64 * 2**k for k in range(levels))
    rows = transport_study(ns) + representation_study(ns) + poisson_study(tuple(16 * 2**k for k in range(levels)), seed=seed)
    for solver in ("temperature", "massfraction", "momentum"):
        rows += mms_space_study(solver, levels) + mms_time_study(solver, levels)
    return rows


def format_rows(rows: list[StudyRow], sep: str = ",") -> str:
    lines = [sep.join(("study", "level", "n", "dt", "error", "order", "failed"))]
    for r in rows:
        lines.append(sep.join((r.study, str(r.level), str(r.n), format(r.dt, ".17g"), format(r.error, ".17g"),
                               format(r.order, ".17g"), r.failed.replace(sep, ";"))))
    return "\n".join(lines) + "\n"
