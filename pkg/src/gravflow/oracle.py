"""Reference solutions used to verify the solvers.

Nothing here calls the discretizations it is meant to check: manufactured
forcings are differentiated by hand, Poisson references use explicit
eigenvector matrices or a direct Green's sum, and transport references are
closed-form translates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .constitutive import arrhenius
from .core import Grid, SimParams
from .norms import lp_norm

Expr = Callable[[float, list], np.ndarray]

SOLVERS = ("temperature", "massfraction", "momentum", "sweep")

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# ----------------------------------------------------------------------------
# scalar maximization
# ----------------------------------------------------------------------------

def scalar_max_search(fn: Callable[[float], float], bracket: tuple[float, float],
                      tol: float = 1e-12, max_iter: int = 500) -> tuple[float, float]:
    """Golden-section search for the maximum of a continuous ``fn`` on ``[a, b]``.

    Endpoints are compared at the end, so monotone functions return the
    better endpoint.
    """
    a, b = (float(x) for x in bracket)
    if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
        raise ValueError(f"invalid bracket {bracket!r}")
    lo, hi = a, b
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(max_iter):
        if hi - lo <= tol * max(1.0, abs(lo), abs(hi)):
            break
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = fn(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = fn(x1)
    mid = 0.5 * (lo + hi)
    candidates = [(fn(mid), mid), (f1, x1), (f2, x2), (fn(a), a), (fn(b), b)]
    best_f, best_x = max(candidates, key=lambda c: c[0])
    return best_x, best_f


# ----------------------------------------------------------------------------
# Poisson references
# ----------------------------------------------------------------------------

def _apply_axis(mat: np.ndarray, x: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(mat, x, axes=([1], [axis])), 0, axis)


def poisson_eigen_oracle(rho: np.ndarray, grid: Grid, G: float, bc: str | None = None) -> np.ndarray:
    """Discrete Poisson solution by explicit eigenvector matrices of the 1D second difference.

    Periodic: dense DFT matrices on the first n nodes of each axis (the last
    node repeats node 0), zero-mean source and solution.  Dirichlet: dense
    sine matrices on the interior nodes.
    """
    bc = grid.bc_phi if bc is None else bc
    h = grid.spacing
    rho = np.asarray(rho, dtype=float)
    if bc == "zero_mean_periodic":
        cell = rho[tuple(slice(0, n) for n in grid.extents)]
        src = 4 * np.pi * G * (cell - cell.mean())
        coef = src.astype(complex)
        eig = np.zeros(cell.shape)
        for a, n in enumerate(grid.extents):
            j = np.arange(n)
            F = np.exp(-2j * np.pi * np.outer(j, j) / n)
            coef = _apply_axis(F, coef, a)
            lam = (2 * np.cos(2 * np.pi * j / n) - 2) / h[a] ** 2
            eig = eig + lam.reshape([-1 if b == a else 1 for b in range(grid.dim)])
        coef = np.where(eig == 0, 0.0, coef / np.where(eig == 0, 1.0, eig))
        for a, n in enumerate(grid.extents):
            j = np.arange(n)
            Finv = np.exp(2j * np.pi * np.outer(j, j) / n) / n
            coef = _apply_axis(Finv, coef, a)
        out = coef.real
        out -= out.mean()
        full = np.pad(out, [(0, 1)] * grid.dim, mode="wrap")
        return full
    if bc == "dirichlet_zero":
        inner = tuple(slice(1, -1) for _ in range(grid.dim))
        coef = 4 * np.pi * G * rho[inner]
        eig = np.zeros(coef.shape)
        mats = []
        for a, n in enumerate(grid.extents):
            j = np.arange(1, n)
            S = np.sin(np.pi * np.outer(j, j) / n)
            mats.append(S)
            coef = _apply_axis(S, coef, a)
            lam = (2 * np.cos(np.pi * j / n) - 2) / h[a] ** 2
            eig = eig + lam.reshape([-1 if b == a else 1 for b in range(grid.dim)])
        coef = coef / eig
        for a, n in enumerate(grid.extents):
            coef = _apply_axis(mats[a] * (2.0 / n), coef, a)
        out = np.zeros(grid.shape)
        out[inner] = coef
        return out
    raise ValueError(f"no eigenmode oracle for bc {bc!r}")


def poisson_oracle(rho: np.ndarray, grid: Grid, G: float, chunk: int = 2048) -> np.ndarray:
    """Free-space potential ``-G sum rho_j V / |x_i - x_j|`` by direct O(N^2) summation.

    Nodes are treated as cell centres with volume ``prod(h)``.  The self
    term integrates ``1/|x - z|`` over a ball of the cell's volume,
    ``2 pi a^2`` with ``a = (3 V / 4 pi)^(1/3)``.
    """
    if grid.dim != 3:
        raise ValueError("the Green's-function oracle needs dim = 3")
    rho = np.asarray(rho, dtype=float)
    V = grid.cell_volume
    pts = np.stack([x.ravel() for x in grid.mesh()], axis=1)
    mass = rho.ravel() * V
    occupied = np.nonzero(mass)[0]
    out = np.zeros(len(pts))
    if occupied.size == 0:
        return out.reshape(grid.shape)
    src, m = pts[occupied], mass[occupied]
    for start in range(0, len(pts), chunk):
        block = pts[start:start + chunk]
        r = np.sqrt(((block[:, None, :] - src[None, :, :]) ** 2).sum(axis=2))
        with np.errstate(divide="ignore"):
            inv = np.where(r > 0, 1.0 / np.where(r > 0, r, 1.0), 0.0)
        out[start:start + chunk] = -G * inv @ m
    a = (3 * V / (4 * np.pi)) ** (1.0 / 3.0)
    out -= G * rho.ravel() * 2 * np.pi * a**2
    return out.reshape(grid.shape)


# ----------------------------------------------------------------------------
# transport references
# ----------------------------------------------------------------------------

def translate_periodic(profile: Callable[[np.ndarray], np.ndarray], x: np.ndarray, c: float, t: float,
                       origin: float, length: float) -> np.ndarray:
    """``profile(x - c t)`` wrapped into the periodic box."""
    return profile(origin + np.mod(x - c * t - origin, length))


def stretch_solution(rho0: Callable[[np.ndarray], np.ndarray], x: np.ndarray, t: float) -> np.ndarray:
    """Density carried by v(x) = x: ``rho0(x e^{-t}) e^{-t}``."""
    return rho0(x * math.exp(-t)) * math.exp(-t)


# ----------------------------------------------------------------------------
# manufactured solutions
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ManufacturedCase:
    """Closed-form fields with hand-derived forcing for one solver.

    ``fields`` maps solution names to ``fn(t, X)`` where ``X`` is a list of
    coordinate arrays; ``coefficients`` holds the frozen data the solver
    receives (``rho``, ``v``, and ``theta``/``p``/``f``/``phi`` when used);
    ``forcing`` maps equation names to the right-hand sides that make
    ``fields`` exact solutions of the continuous equations.
    """

    name: str
    solver: str
    params: SimParams
    lengths: tuple[float, ...]
    origin: tuple[float, ...]
    fields: dict[str, Expr]
    coefficients: dict[str, Expr]
    forcing: dict[str, Expr]
    T: float = 0.1
    bc_theta: str = "dirichlet_zero"
    bc_phi: str = "zero_mean_periodic"
    notes: str = ""

    @property
    def dim(self) -> int:
        return len(self.lengths)

    def grid(self, n: int) -> Grid:
        return Grid((n,) * self.dim, self.lengths, self.origin, bc_theta=self.bc_theta, bc_phi=self.bc_phi)


def _const(value):
    return lambda t, X: value + 0.0 * X[0]


def _temperature_forcing(params: SimParams, theta, theta_t, theta_x, theta_xx, rho, v, v_x) -> Expr:
    def F(t, X):
        th = theta(t, X)
        r = rho(t, X)
        return (params.c_v * r * (theta_t(t, X) + v(t, X)[0] * theta_x(t, X)) + params.R * r * th * v_x(t, X)
                - params.k_heat * theta_xx(t, X))
    return F


def temperature_space_case() -> ManufacturedCase:
    """Linear in time, so backward Euler is exact in time and only the stencils err."""
    p = SimParams(mu=1.0, c_v=1.3, R=0.7, k_heat=0.4)
    k = np.pi / 2
    theta = lambda t, X: (1 + t) * np.cos(k * X[0])  # noqa: E731
    theta_t = lambda t, X: np.cos(k * X[0])  # noqa: E731
    theta_x = lambda t, X: -(1 + t) * k * np.sin(k * X[0])  # noqa: E731
    theta_xx = lambda t, X: -(1 + t) * k**2 * np.cos(k * X[0])  # noqa: E731
    rho = lambda t, X: 1.5 + 0.5 * np.sin(np.pi * X[0])  # noqa: E731
    v = lambda t, X: np.stack([0.3 * np.sin(np.pi * X[0])])  # noqa: E731
    v_x = lambda t, X: 0.3 * np.pi * np.cos(np.pi * X[0])  # noqa: E731
    return ManufacturedCase("temperature-space", "temperature", p, (2.0,), (-1.0,), {"theta": theta},
                            {"rho": rho, "v": v}, {"theta": _temperature_forcing(p, theta, theta_t, theta_x,
                                                                                 theta_xx, rho, v, v_x)})


def temperature_time_case() -> ManufacturedCase:
    """Quadratic in space with linear v, so the stencils are exact and only the time step errs."""
    p = SimParams(mu=1.0, c_v=1.3, R=0.7, k_heat=0.4)
    theta = lambda t, X: np.exp(-t) * (1 - X[0] ** 2)  # noqa: E731
    theta_t = lambda t, X: -np.exp(-t) * (1 - X[0] ** 2)  # noqa: E731
    theta_x = lambda t, X: -2 * X[0] * np.exp(-t)  # noqa: E731
    theta_xx = lambda t, X: -2 * np.exp(-t) + 0.0 * X[0]  # noqa: E731
    rho = lambda t, X: 1.5 + 0.5 * np.sin(np.pi * X[0])  # noqa: E731
    v = lambda t, X: np.stack([0.3 * X[0]])  # noqa: E731
    v_x = _const(0.3)
    return ManufacturedCase("temperature-time", "temperature", p, (2.0,), (-1.0,), {"theta": theta},
                            {"rho": rho, "v": v}, {"theta": _temperature_forcing(p, theta, theta_t, theta_x,
                                                                                 theta_xx, rho, v, v_x)}, T=1.0)


def temperature_exact_case() -> ManufacturedCase:
    """Linear in time and quadratic in space: the discrete scheme reproduces it to round-off."""
    p = SimParams(mu=1.0, c_v=1.3, R=0.7, k_heat=0.4)
    theta = lambda t, X: (1 + t) * (1 - X[0] ** 2)  # noqa: E731
    theta_t = lambda t, X: 1 - X[0] ** 2  # noqa: E731
    theta_x = lambda t, X: -2 * (1 + t) * X[0]  # noqa: E731
    theta_xx = lambda t, X: -2 * (1 + t) + 0.0 * X[0]  # noqa: E731
    rho = lambda t, X: 1.5 + 0.5 * np.sin(np.pi * X[0])  # noqa: E731
    v = lambda t, X: np.stack([0.3 * X[0]])  # noqa: E731
    v_x = _const(0.3)
    return ManufacturedCase("temperature-exact", "temperature", p, (2.0,), (-1.0,), {"theta": theta},
                            {"rho": rho, "v": v}, {"theta": _temperature_forcing(p, theta, theta_t, theta_x,
                                                                                 theta_xx, rho, v, v_x)})


def _massfraction_forcing(params, Z, Z_t, Z_xx, rho, theta) -> Expr:
    def F(t, X):
        r = rho(t, X)
        return r * Z_t(t, X) + params.K_rate * arrhenius(theta(t, X), params) * r * Z(t, X) - params.D * Z_xx(t, X)
    return F


def _mf_coefficients():
    rho = lambda t, X: 1.2 + 0.3 * np.cos(np.pi * X[0])  # noqa: E731
    theta = lambda t, X: 1.0 + 0.5 * np.sin(np.pi * X[0])  # noqa: E731
    v = lambda t, X: np.zeros((1, *np.shape(X[0])))  # noqa: E731
    return rho, theta, v


def massfraction_space_case() -> ManufacturedCase:
    p = SimParams(mu=1.0, D=0.3, K_rate=2.0, E=1.0)
    rho, theta, v = _mf_coefficients()
    Z = lambda t, X: 0.4 * (1 + t) * np.sin(np.pi * X[0])  # noqa: E731
    Z_t = lambda t, X: 0.4 * np.sin(np.pi * X[0])  # noqa: E731
    Z_xx = lambda t, X: -0.4 * (1 + t) * np.pi**2 * np.sin(np.pi * X[0])  # noqa: E731
    return ManufacturedCase("massfraction-space", "massfraction", p, (1.0,), (0.0,), {"Z": Z},
                            {"rho": rho, "theta": theta, "v": v}, {"Z": _massfraction_forcing(p, Z, Z_t, Z_xx, rho, theta)})


def massfraction_time_case() -> ManufacturedCase:
    p = SimParams(mu=1.0, D=0.3, K_rate=2.0, E=1.0)
    rho, theta, v = _mf_coefficients()
    Z = lambda t, X: 2 * np.exp(-t) * X[0] * (1 - X[0])  # noqa: E731
    Z_t = lambda t, X: -2 * np.exp(-t) * X[0] * (1 - X[0])  # noqa: E731
    Z_xx = lambda t, X: -4 * np.exp(-t) + 0.0 * X[0]  # noqa: E731
    return ManufacturedCase("massfraction-time", "massfraction", p, (1.0,), (0.0,), {"Z": Z},
                            {"rho": rho, "theta": theta, "v": v}, {"Z": _massfraction_forcing(p, Z, Z_t, Z_xx, rho, theta)},
                            T=1.0)


def _momentum_coefficients():
    rho = lambda t, X: 1.0 + 0.25 * X[0] * X[1]  # noqa: E731
    v = lambda t, X: np.zeros((2, *np.shape(X[0])))  # noqa: E731
    p = lambda t, X: X[0] ** 2 * X[1]  # noqa: E731
    f = lambda t, X: np.stack([0.0 * X[0], -1.0 + 0.0 * X[0]])  # noqa: E731
    return rho, v, p, f


def _momentum_forcing(params, u_t, lap_u, grad_div, rho, p_grad, f) -> Expr:
    mu, lam = params.mu, params.lam

    def F(t, X):
        r = rho(t, X)
        return r * u_t(t, X) - mu * lap_u(t, X) - (lam + mu) * grad_div(t, X) + p_grad(t, X) - r * f(t, X)
    return F


def momentum_space_case() -> ManufacturedCase:
    params = SimParams(mu=0.7, lam=0.4, dim=2)
    rho, v, p, f = _momentum_coefficients()
    s, c, pi = np.sin, np.cos, np.pi

    def u(t, X):
        x, y = X
        return np.stack([(1 + t) * s(pi * x) * s(pi * y), 0.5 * (1 + t) * s(2 * pi * x) * s(pi * y)])

    def u_t(t, X):
        x, y = X
        return np.stack([s(pi * x) * s(pi * y), 0.5 * s(2 * pi * x) * s(pi * y)])

    def lap_u(t, X):
        w = u(t, X)
        return np.stack([-2 * pi**2 * w[0], -5 * pi**2 * w[1]])

    def grad_div(t, X):
        x, y = X
        a, b = 1 + t, 0.5 * (1 + t)
        return np.stack([-a * pi**2 * s(pi * x) * s(pi * y) + 2 * b * pi**2 * c(2 * pi * x) * c(pi * y),
                         a * pi**2 * c(pi * x) * c(pi * y) - b * pi**2 * s(2 * pi * x) * s(pi * y)])

    p_grad = lambda t, X: np.stack([2 * X[0] * X[1], X[0] ** 2])  # noqa: E731
    return ManufacturedCase("momentum-space", "momentum", params, (1.0, 1.0), (0.0, 0.0), {"u": u},
                            {"rho": rho, "v": v, "p": p, "f": f},
                            {"u": _momentum_forcing(params, u_t, lap_u, grad_div, rho, p_grad, f)})


def momentum_time_case() -> ManufacturedCase:
    params = SimParams(mu=0.7, lam=0.4, dim=2)
    rho, v, p, f = _momentum_coefficients()
    cc = -2.0

    def parts(X):
        x, y = X
        P = x * (1 - x) * y * (1 - y)
        Px = (1 - 2 * x) * y * (1 - y)
        Py = x * (1 - x) * (1 - 2 * y)
        Pxx = -2 * y * (1 - y)
        Pyy = -2 * x * (1 - x)
        Pxy = (1 - 2 * x) * (1 - 2 * y)
        return P, Px, Py, Pxx, Pyy, Pxy

    def u(t, X):
        P = parts(X)[0]
        return np.exp(-t) * np.stack([P, cc * P])

    def u_t(t, X):
        return -u(t, X)

    def lap_u(t, X):
        _, _, _, Pxx, Pyy, _ = parts(X)
        return np.exp(-t) * np.stack([Pxx + Pyy, cc * (Pxx + Pyy)])

    def grad_div(t, X):
        _, _, _, Pxx, Pyy, Pxy = parts(X)
        return np.exp(-t) * np.stack([Pxx + cc * Pxy, Pxy + cc * Pyy])

    p_grad = lambda t, X: np.stack([2 * X[0] * X[1], X[0] ** 2])  # noqa: E731
    return ManufacturedCase("momentum-time", "momentum", params, (1.0, 1.0), (0.0, 0.0), {"u": u},
                            {"rho": rho, "v": v, "p": p, "f": f},
                            {"u": _momentum_forcing(params, u_t, lap_u, grad_div, rho, p_grad, f)}, T=1.0)


def sweep_case() -> ManufacturedCase:
    """All four fields at once with v = 0 and a density whose Dirichlet potential is closed-form."""
    params = SimParams(mu=0.5, lam=0.1, c_v=1.2, R=0.6, k_heat=0.3, D=0.2, q_heat=0.5, K_rate=1.5, E=1.0,
                       G=0.3, dim=1)
    s, c, pi = np.sin, np.cos, np.pi
    G = params.G
    rho = lambda t, X: 1.0 + 0.5 * s(pi * X[0])  # noqa: E731
    rho_x = lambda t, X: 0.5 * pi * c(pi * X[0])  # noqa: E731
    phi = lambda t, X: 4 * pi * G * (X[0] * (X[0] - 1) / 2 - 0.5 * s(pi * X[0]) / pi**2)  # noqa: E731
    f = lambda t, X: np.stack([-4 * pi * G * (X[0] - 0.5 - 0.5 * c(pi * X[0]) / pi)])  # noqa: E731
    v = lambda t, X: np.zeros((1, *np.shape(X[0])))  # noqa: E731

    theta = lambda t, X: 0.5 * (1 + t) * s(pi * X[0])  # noqa: E731
    theta_t = lambda t, X: 0.5 * s(pi * X[0])  # noqa: E731
    theta_x = lambda t, X: 0.5 * (1 + t) * pi * c(pi * X[0])  # noqa: E731
    theta_xx = lambda t, X: -0.5 * (1 + t) * pi**2 * s(pi * X[0])  # noqa: E731
    Z = lambda t, X: 0.8 * np.exp(-t) * s(pi * X[0])  # noqa: E731
    Z_xx = lambda t, X: -0.8 * np.exp(-t) * pi**2 * s(pi * X[0])  # noqa: E731
    u = lambda t, X: np.stack([0.1 * (1 + t) * s(2 * pi * X[0])])  # noqa: E731
    u_t = lambda t, X: np.stack([0.1 * s(2 * pi * X[0])])  # noqa: E731
    u_xx = lambda t, X: np.stack([-0.4 * pi**2 * (1 + t) * s(2 * pi * X[0])])  # noqa: E731

    def F_theta(t, X):
        r = rho(t, X)
        heat = params.q_heat * params.K_rate * arrhenius(theta(t, X), params) * Z(t, X)
        return params.c_v * r * theta_t(t, X) - params.k_heat * theta_xx(t, X) - r * heat

    def F_Z(t, X):
        r = rho(t, X)
        return -r * Z(t, X) + params.K_rate * arrhenius(theta(t, X), params) * r * Z(t, X) - params.D * Z_xx(t, X)

    def F_u(t, X):
        r = rho(t, X)
        p_x = params.R * (rho_x(t, X) * theta(t, X) + r * theta_x(t, X))
        return r * u_t(t, X) - (2 * params.mu + params.lam) * u_xx(t, X) + p_x - r * f(t, X)

    return ManufacturedCase("coupled-sweep", "sweep", params, (1.0,), (0.0,),
                            {"rho": rho, "theta": theta, "u": u, "Z": Z, "phi": phi},
                            {"rho": rho, "v": v, "f": f, "phi": phi},
                            {"theta": F_theta, "Z": F_Z, "u": F_u}, T=0.1, bc_phi="dirichlet_zero",
                            notes="heating is lagged one step inside the sweep, so time accuracy is first order")


CASES: dict[str, Callable[[], ManufacturedCase]] = {
    "temperature-space": temperature_space_case,
    "temperature-time": temperature_time_case,
    "temperature-exact": temperature_exact_case,
    "massfraction-space": massfraction_space_case,
    "massfraction-time": massfraction_time_case,
    "momentum-space": momentum_space_case,
    "momentum-time": momentum_time_case,
    "coupled-sweep": sweep_case,
}


def _errors(num: np.ndarray, exact: np.ndarray, grid: Grid) -> dict[str, float]:
    d = np.asarray(num) - np.asarray(exact)
    return {"linf": lp_norm(d, grid, np.inf), "l2": lp_norm(d, grid, 2)}


def mms_residual(case: ManufacturedCase, solver_id: str, n: int, dt: float) -> dict[str, dict[str, float]]:
    """Run ``solver_id`` on ``case`` from exact data to ``case.T``; return final-time error norms per field."""
    from . import parabolic
    from .picard import InitialData, linearized_sweep
    from .transport import VelocityHistory

    if solver_id not in SOLVERS:
        raise ValueError(f"unknown solver {solver_id!r}")
    if solver_id != case.solver:
        raise ValueError(f"case {case.name!r} is for {case.solver!r}, not {solver_id!r}")
    steps = int(round(case.T / dt))
    if steps < 1 or not math.isclose(steps * dt, case.T, rel_tol=1e-9):
        raise ValueError("T must be a positive multiple of dt")
    grid = case.grid(n)
    X = grid.mesh()
    P = case.params.with_(dim=grid.dim)
    co = case.coefficients

    if solver_id == "sweep":
        ics = InitialData(*(case.fields[k](0.0, X) for k in ("rho", "theta", "u", "Z")))
        v_hist = VelocityHistory.constant(grid, co["v"](0.0, X), case.T, dt)
        forcing = lambda t: {k: F(t, X) for k, F in case.forcing.items()}  # noqa: E731
        traj = linearized_sweep(v_hist, ics, P, grid, forcing=forcing)
        last = traj.states[-1]
        return {k: _errors(getattr(last, k), case.fields[k](case.T, X), grid) for k in ("rho", "theta", "u", "Z", "phi")}

    name, expr = next(iter(case.fields.items()))
    val = expr(0.0, X)
    for step in range(1, steps + 1):
        t = step * dt
        inp = parabolic.LinearStepInputs(grid, co["rho"](t, X), co["v"](t, X), val, dt, case.forcing[name](t, X))
        if solver_id == "temperature":
            val = parabolic.solve_temperature_step(inp, P)
        elif solver_id == "massfraction":
            val = parabolic.solve_massfraction_step(inp, co["theta"](t, X), P)
        else:
            val = parabolic.solve_momentum_step(inp, co["p"](t, X), co["f"](t, X), P)
    return {name: _errors(val, expr(case.T, X), grid)}


def fitted_order(sizes, errors) -> float:
    """Least-squares slope of log(error) against log(size)."""
    sizes, errors = np.asarray(sizes, dtype=float), np.asarray(errors, dtype=float)
    return float(np.polyfit(np.log(sizes), np.log(errors), 1)[0])


# ----------------------------------------------------------------------------
# finite-difference check of the manufactured forcing
# ----------------------------------------------------------------------------

def _d(fn: Expr, t, X, axis: int, h: float = 1e-3, order: int = 1):
    """Fourth-order central difference in time (axis=-1) or along a spatial axis."""
    def shifted(k):
        if axis < 0:
            return fn(t + k * h, X)
        return fn(t, [x + (k * h if a == axis else 0.0) for a, x in enumerate(X)])
    if order == 1:
        return (-shifted(2) + 8 * shifted(1) - 8 * shifted(-1) + shifted(-2)) / (12 * h)
    return (-shifted(2) + 16 * shifted(1) - 30 * shifted(0) + 16 * shifted(-1) - shifted(-2)) / (12 * h**2)


def fd_forcing(case: ManufacturedCase, t: float, X: list) -> dict[str, np.ndarray]:
    """Recompute every forcing from the closed-form fields by central differences."""
    P = case.params
    co = case.coefficients
    d = len(X)
    out = {}

    def lap(fn):
        return sum(_d(fn, t, X, a, h=1e-2, order=2) for a in range(d))

    def comp(fn, i):
        return lambda tt, Y: fn(tt, Y)[i]

    if case.solver == "temperature":
        th = case.fields["theta"]
        r, v = co["rho"](t, X), co["v"](t, X)
        adv = sum(v[a] * _d(th, t, X, a) for a in range(d))
        div_v = sum(_d(comp(co["v"], a), t, X, a) for a in range(d))
        out["theta"] = (P.c_v * r * (_d(th, t, X, -1) + adv) + P.R * r * th(t, X) * div_v - P.k_heat * lap(th))
    elif case.solver == "massfraction":
        Z = case.fields["Z"]
        r = co["rho"](t, X)
        out["Z"] = (r * _d(Z, t, X, -1) + P.K_rate * arrhenius(co["theta"](t, X), P) * r * Z(t, X) - P.D * lap(Z))
    elif case.solver == "momentum":
        u = case.fields["u"]
        r = co["rho"](t, X)
        div = lambda tt, Y: sum(_d(comp(u, a), tt, Y, a) for a in range(d))  # noqa: E731
        res = []
        for i in range(d):
            ui = comp(u, i)
            res.append(r * _d(ui, t, X, -1) - P.mu * lap(ui) - (P.lam + P.mu) * _d(div, t, X, i, h=1e-2)
                       + _d(co["p"], t, X, i) - r * co["f"](t, X)[i])
        out["u"] = np.stack(res)
    else:
        f = case.fields
        r = f["rho"](t, X)
        th, Z, u = f["theta"], f["Z"], f["u"]
        phi_rate = arrhenius(th(t, X), P)
        out["theta"] = P.c_v * r * _d(th, t, X, -1) - P.k_heat * lap(th) - r * P.q_heat * P.K_rate * phi_rate * Z(t, X)
        out["Z"] = r * _d(Z, t, X, -1) + P.K_rate * phi_rate * r * Z(t, X) - P.D * lap(Z)
        p = lambda tt, Y: P.R * f["rho"](tt, Y) * th(tt, Y)  # noqa: E731
        force = -_d(f["phi"], t, X, 0)
        u0 = comp(u, 0)
        out["u"] = np.stack([r * _d(u0, t, X, -1) - (2 * P.mu + P.lam) * lap(u0) + _d(p, t, X, 0) - r * force])
    return out
