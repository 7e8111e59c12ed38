"""Binary snapshot files with a plain-text sidecar.

Layout (little-endian)::

    8s   magic  b"GRAVFLW\\0"
    u4   version
    u4   dim
    dim x u8  extents (cell counts)
    dim x f8  spacing
    dim x f8  origin
    f8   time
    u4   number of fields, then per field: u2 name length, ascii name, u4 component count
    f8 values per field, row-major, components first

Files are written to a temporary name in the target directory and renamed
into place, so an interrupted run never leaves a partial snapshot.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .core import Grid, State

MAGIC = b"GRAVFLW\0"
VERSION = 1
FIELDS = ("rho", "theta", "u", "Z", "phi")


class SnapshotError(ValueError):
    pass


def atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode(state: State, grid: Grid) -> bytes:
    d = grid.dim
    parts = [MAGIC, struct.pack("<II", VERSION, d), struct.pack(f"<{d}Q", *grid.extents),
             struct.pack(f"<{d}d", *grid.spacing), struct.pack(f"<{d}d", *grid.origin),
             struct.pack("<d", state.t), struct.pack("<I", len(FIELDS))]
    arrays = []
    for name in FIELDS:
        arr = np.asarray(getattr(state, name), dtype="<f8")
        comps = d if name == "u" else 1
        parts.append(struct.pack("<H", len(name)) + name.encode("ascii") + struct.pack("<I", comps))
        arrays.append(np.ascontiguousarray(arr).tobytes())
    return b"".join(parts + arrays)


def sidecar_text(state: State, grid: Grid) -> str:
    lines = ["magic " + MAGIC.rstrip(b"\0").decode(), f"version {VERSION}", f"dim {grid.dim}",
             "extents " + " ".join(str(n) for n in grid.extents),
             "spacing " + " ".join(repr(h) for h in grid.spacing),
             "origin " + " ".join(repr(o) for o in grid.origin),
             f"time {state.t!r}",
             "fields " + " ".join(f"{n}:{grid.dim if n == 'u' else 1}" for n in FIELDS)]
    return "\n".join(lines) + "\n"


def write_snapshot(path: Path, state: State, grid: Grid) -> Path:
    path = Path(path)
    atomic_write(path, encode(state, grid))
    atomic_write(path.with_suffix(path.suffix + ".txt"), sidecar_text(state, grid).encode())
    return path


def read_snapshot(path: Path, bc_theta: str = "dirichlet_zero", bc_phi: str = "zero_mean_periodic"
                  ) -> tuple[State, Grid]:
    buf = Path(path).read_bytes()
    try:
        return _decode(buf, path, bc_theta, bc_phi)
    except struct.error:
        raise SnapshotError(f"{path}: truncated header") from None


def _decode(buf: bytes, path, bc_theta: str, bc_phi: str) -> tuple[State, Grid]:
    if buf[:8] != MAGIC:
        raise SnapshotError(f"{path}: not a snapshot file")
    pos = 8
    version, d = struct.unpack_from("<II", buf, pos)
    pos += 8
    if version != VERSION:
        raise SnapshotError(f"{path}: unsupported version {version}")
    if d not in (1, 2, 3):
        raise SnapshotError(f"{path}: bad dimension {d}")
    extents = struct.unpack_from(f"<{d}Q", buf, pos)
    pos += 8 * d
    spacing = struct.unpack_from(f"<{d}d", buf, pos)
    pos += 8 * d
    origin = struct.unpack_from(f"<{d}d", buf, pos)
    pos += 8 * d
    (t,) = struct.unpack_from("<d", buf, pos)
    pos += 8
    (nf,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    names = []
    for _ in range(nf):
        (ln,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        name = buf[pos:pos + ln].decode("ascii")
        pos += ln
        (comps,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        names.append((name, comps))
    grid = Grid(tuple(int(n) for n in extents), tuple(n * h for n, h in zip(extents, spacing)), origin,
                bc_theta=bc_theta, bc_phi=bc_phi)
    count = int(np.prod(grid.shape))
    data = {}
    for name, comps in names:
        size = comps * count
        if pos + 8 * size > len(buf):
            raise SnapshotError(f"{path}: truncated data for field {name!r}")
        arr = np.frombuffer(buf, dtype="<f8", count=size, offset=pos).astype(float)
        pos += 8 * size
        data[name] = arr.reshape((comps, *grid.shape) if name == "u" else grid.shape)
    missing = set(FIELDS) - set(data)
    if missing:
        raise SnapshotError(f"{path}: missing fields {sorted(missing)}")
    return State(t, *(data[n] for n in FIELDS)), grid
