"""Command-line driver.

    gravflow simulate       --preset hotspot --out runs/hot
    gravflow check-ic       --config ic.toml --out runs/ic
    gravflow study          --levels 3 --out runs/study
    gravflow continue-delta --preset vacuum-blob --out runs/delta

Configuration files are TOML with optional tables ``[run]``, ``[params]``,
``[grid]``, ``[watchdog]`` and ``[continuation]``; command-line flags win
over the file, and the file wins over the preset defaults.  The whole
configuration is validated before any output directory is created.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import studies
from .core import Grid, SimParams
from .monitors import (DiagnosticsSeries, Watchdog, WatchdogThresholds, check_compatibility, diagnostics_table,
                       invariant_audit)
from .picard import InitialData, PicardReport, picard_iterate, vacuum_continuation
from .presets import PRESETS, get_preset
from .snapshots import SnapshotError, atomic_write, read_snapshot, write_snapshot

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("gravflow")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOT_CONVERGED = 3
EXIT_WATCHDOG = 4
EXIT_INCOMPATIBLE = 5
EXIT_SOLVER = 6


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    params: SimParams
    grid: Grid
    preset: str | None
    ic_snapshot: Path | None
    T: float
    dt: float
    tol: float = 1e-8
    max_iter: int = 30
    mode: str = "auto"
    thresholds: WatchdogThresholds = field(default_factory=WatchdogThresholds)
    abort_on_event: bool = True
    out: Path = Path("gravflow-out")
    cadence: int = 10
    deltas: tuple[float, ...] = (1e-2, 1e-3, 1e-4)
    levels: int = 3
    seed: int = 0

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ConfigError(f"T must be positive, got {self.T}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive, got {self.dt}")
        n = round(self.T / self.dt)
        if n < 1 or not math.isclose(n * self.dt, self.T, rel_tol=1e-9):
            raise ConfigError(f"T={self.T} is not a whole number of steps of dt={self.dt}")
        if self.cadence < 1:
            raise ConfigError("snapshot cadence must be >= 1")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.mode not in ("auto", "whole", "step"):
            raise ConfigError(f"unknown Picard mode {self.mode!r}")
        if self.params.dim != self.grid.dim:
            raise ConfigError(f"params.dim={self.params.dim} does not match grid dimension {self.grid.dim}")
        if self.preset is None and self.ic_snapshot is None:
            raise ConfigError("need a preset or an initial-data snapshot")

    @property
    def nsteps(self) -> int:
        return int(round(self.T / self.dt))

    def initial_data(self) -> InitialData:
        if self.ic_snapshot is not None:
            try:
                s, g = read_snapshot(self.ic_snapshot, self.grid.bc_theta, self.grid.bc_phi)
            except OSError as exc:
                raise ConfigError(f"cannot read snapshot {self.ic_snapshot}: {exc.strerror or exc}") from None
            if g.shape != self.grid.shape:
                raise ConfigError(f"snapshot grid {g.shape} does not match configured grid {self.grid.shape}")
            return InitialData(np.array(s.rho), np.array(s.theta), np.array(s.u), np.array(s.Z))
        return get_preset(self.preset).make(self.grid, self.params)


def _table(data: dict, name: str) -> dict:
    val = data.get(name, {})
    if not isinstance(val, dict):
        raise ConfigError(f"[{name}] must be a table")
    return val


def _known(table: dict, allowed: Sequence[str], name: str) -> None:
    extra = sorted(set(table) - set(allowed))
    if extra:
        raise ConfigError(f"unknown keys in [{name}]: {', '.join(extra)}")


def load_config(path: str | None, preset: str | None = None, out: str | None = None,
                levels: int | None = None, seed: int | None = None) -> RunConfig:
    """Merge preset defaults, an optional TOML file and command-line overrides."""
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from None
    _known(data, ("preset", "run", "params", "grid", "watchdog", "continuation"), "top level")
    run, ptab, gtab = _table(data, "run"), _table(data, "params"), _table(data, "grid")
    wtab, ctab = _table(data, "watchdog"), _table(data, "continuation")
    _known(run, ("T", "dt", "tol", "max_iter", "mode", "cadence", "ic_snapshot", "abort_on_event", "levels", "seed"),
           "run")
    _known(gtab, ("extents", "lengths", "origin", "bc_theta", "bc_phi"), "grid")
    _known(wtab, [f.name for f in fields(WatchdogThresholds)], "watchdog")
    _known(ctab, ("deltas",), "continuation")

    name = preset or data.get("preset")
    snap = run.get("ic_snapshot")
    if name is None and snap is None:
        name = "trivial"
    if name is not None and name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    base = PRESETS[name] if name is not None else None
    try:
        if base is not None:
            grid = base.grid
            params = base.params
        else:
            grid = Grid((16,))
            params = SimParams()
        if gtab:
            g = {"extents": grid.extents, "lengths": grid.lengths, "origin": grid.origin,
                 "bc_theta": grid.bc_theta, "bc_phi": grid.bc_phi}
            g.update(gtab)
            grid = Grid(tuple(g["extents"]), tuple(g["lengths"]), tuple(g["origin"]) if "origin" in gtab else None,
                        bc_theta=g["bc_theta"], bc_phi=g["bc_phi"])
        pdata = {k: v for k, v in asdict(params).items()}
        pdata.update(ptab)
        if "dim" not in ptab:
            pdata["dim"] = grid.dim
        params = SimParams.from_mapping(pdata)
        thresholds = replace(WatchdogThresholds(), **wtab)
        return RunConfig(
            params=params, grid=grid, preset=name, ic_snapshot=Path(snap) if snap else None,
            T=float(run.get("T", base.T if base else 0.1)), dt=float(run.get("dt", base.dt if base else 0.01)),
            tol=float(run.get("tol", 1e-8)), max_iter=int(run.get("max_iter", 30)), mode=run.get("mode", "auto"),
            thresholds=thresholds, abort_on_event=bool(run.get("abort_on_event", True)),
            out=Path(out) if out else Path("gravflow-out"), cadence=int(run.get("cadence", 10)),
            deltas=tuple(float(d) for d in ctab.get("deltas", (1e-2, 1e-3, 1e-4))),
            levels=int(levels if levels is not None else run.get("levels", 3)),
            seed=int(seed if seed is not None else run.get("seed", 0)))
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from None


def _json(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def report_summary(rep: PicardReport) -> dict:
    return {"iterations": rep.iterations, "psi": list(rep.psi), "dissipation": list(rep.dissipation),
            "converged": rep.converged, "aborted": rep.aborted, "message": rep.message, "mode": rep.mode,
            "decay_ratio": rep.decay_ratio}


def _prepare(cfg: RunConfig) -> InitialData:
    ics = cfg.initial_data()
    try:
        ics.check(cfg.grid)
    except ValueError as exc:
        raise ConfigError(f"initial data rejected: {exc}") from None
    return ics


def run_simulate(cfg: RunConfig) -> int:
    ics = _prepare(cfg)
    compat = check_compatibility(ics, cfg.params, cfg.grid)
    if compat.verdict == "incompatible":
        log.warning("initial data fail the compatibility condition (vacuum residual %.3e)", compat.vacuum_residual)
    rep = picard_iterate(ics, cfg.params, cfg.grid, cfg.T, cfg.dt, cfg.tol, cfg.max_iter, mode=cfg.mode)
    cfg.out.mkdir(parents=True, exist_ok=True)
    atomic_write(cfg.out / "report.json", _json(report_summary(rep)))
    if rep.trajectory is None:
        log.error("no trajectory: %s", rep.message)
        return EXIT_SOLVER
    traj = rep.trajectory
    audit = invariant_audit(traj, cfg.params, cfg.grid, transport_u=rep.transport_u)
    dog = Watchdog(cfg.grid, cfg.params, cfg.dt, cfg.thresholds)
    for s in traj.states:
        dog.feed(s)
    atomic_write(cfg.out / "diagnostics.csv", diagnostics_table(audit, dog).encode())
    atomic_write(cfg.out / "audit.json", _json(audit_summary(audit, compat.verdict, dog)))
    for n, s in enumerate(traj.states):
        if n % cfg.cadence == 0 or n == len(traj) - 1:
            write_snapshot(cfg.out / f"snap_{n:06d}.bin", s, cfg.grid)
    if rep.aborted:
        log.error("solver aborted: %s", rep.message)
        return EXIT_SOLVER
    if not rep.converged:
        log.error("Picard iteration did not converge: %s", rep.message)
        return EXIT_NOT_CONVERGED
    if dog.events and cfg.abort_on_event:
        first = dog.events[0]
        log.error("watchdog: %s at t=%g (value %.3e)", first.label(), first.time, first.value)
        return EXIT_WATCHDOG
    return EXIT_OK


def audit_summary(audit: DiagnosticsSeries, verdict: str, dog: Watchdog) -> dict:
    return {"violations": [[n, msg] for n, msg in audit.violations], "mass_drift": audit.mass_drift,
            "bc_theta": audit.bc_theta, "notes": list(audit.notes), "compatibility": verdict,
            "events": [[e.step, e.time, e.quantity, e.kind, e.value] for e in dog.events]}


def run_check_ic(cfg: RunConfig) -> int:
    ics = _prepare(cfg)
    rep = check_compatibility(ics, cfg.params, cfg.grid)
    cfg.out.mkdir(parents=True, exist_ok=True)
    atomic_write(cfg.out / "compatibility.json", _json(rep.summary()))
    print(f"verdict: {rep.verdict}")
    return EXIT_INCOMPATIBLE if rep.verdict == "incompatible" else EXIT_OK


def run_convergence_study(cfg: RunConfig) -> int:
    if cfg.levels < 3:
        raise ConfigError("--levels must be at least 3")
    rows = studies.full_study(cfg.levels, cfg.seed)
    text = studies.format_rows(rows)
    cfg.out.mkdir(parents=True, exist_ok=True)
    atomic_write(cfg.out / "study.csv", text.encode())
    sys.stdout.write(text)
    return EXIT_SOLVER if any(r.failed for r in rows) else EXIT_OK


def run_continuation(cfg: RunConfig) -> int:
    ics = _prepare(cfg)
    res = vacuum_continuation(ics, cfg.params, cfg.grid, cfg.deltas, cfg.T, cfg.dt, cfg.tol, cfg.max_iter, cfg.mode)
    lines = ["delta,iterations,converged,aborted,distance"]
    for r in res:
        dist = "" if r.distance is None else format(r.distance, ".17g")
        lines.append(f"{r.delta!r},{r.report.iterations},{r.report.converged},{r.report.aborted},{dist}")
    cfg.out.mkdir(parents=True, exist_ok=True)
    atomic_write(cfg.out / "continuation.csv", ("\n".join(lines) + "\n").encode())
    print("\n".join(lines))
    if any(not r.ok for r in res):
        return EXIT_SOLVER
    if not all(r.report.converged for r in res):
        return EXIT_NOT_CONVERGED
    return EXIT_OK


COMMANDS = {"simulate": run_simulate, "check-ic": run_check_ic, "study": run_convergence_study,
            "continue-delta": run_continuation}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gravflow", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML configuration file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--preset", help=f"builtin initial data: {', '.join(sorted(PRESETS))}")
        p.add_argument("--levels", type=int, help="refinement levels for the study (>= 3)")
        p.add_argument("--seed", type=int, help="seed for randomized inputs")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.preset, args.out, args.levels, args.seed)
        return COMMANDS[args.command](cfg)
    except (ConfigError, SnapshotError) as exc:
        print(f"gravflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
