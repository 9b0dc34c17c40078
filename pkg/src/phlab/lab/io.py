"""Run records (CSV / NDJSON) and bit-exact binary checkpoints."""
from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from ..dynamics import State
from ..grid import Grid
from ..profiles import ModelParams

__all__ = ["RunRecord", "COLUMNS", "write_records", "read_records", "write_checkpoint",
           "read_checkpoint", "CheckpointError", "MAGIC", "VERSION"]

MAGIC = b"PHLAB1\0\0"
VERSION = 1
_HEADER = struct.Struct("<8sIQQ8dB")


class CheckpointError(OSError):
    pass


@dataclass(frozen=True)
class RunRecord:
    t: float
    normX: float
    normY: float
    normZ: float
    normD: float
    boundary_trace: float
    l2: float
    linf: float
    tau: float
    tau_spectral: float
    lyapunov: float
    robin_residual: float

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


COLUMNS = tuple(f.name for f in fields(RunRecord))


def _fmt(x: float) -> str:
    return repr(float(x))


def write_records(records, path, format: str = "csv") -> Path:
    """Write records as CSV (fixed column order) or NDJSON (one object per line)."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if format == "csv":
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(COLUMNS)
                for rec in records:
                    w.writerow([_fmt(v) for v in astuple(rec)])
            elif format == "ndjson":
                for rec in records:
                    # NaN is written as null to keep the lines valid JSON
                    d = {k: (None if math.isnan(v) else float(v)) for k, v in rec.as_dict().items()}
                    fh.write(json.dumps(d) + "\n")
            else:
                raise ValueError(f"unknown record format {format!r}")
    except OSError as exc:
        raise OSError(f"cannot write records to {path}: {exc}") from exc
    return path


def read_records(path) -> list[RunRecord]:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            if path.suffix == ".ndjson":
                return [RunRecord(**{k: (math.nan if v is None else v) for k, v in json.loads(line).items()})
                        for line in fh if line.strip()]
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != COLUMNS:
                raise ValueError(f"{path}: unexpected CSV header {header}")
            return [RunRecord(*map(float, row)) for row in reader]
    except OSError as exc:
        raise OSError(f"cannot read records from {path}: {exc}") from exc


def write_checkpoint(state: State, path) -> Path:
    grid, p = state.grid, state.params
    header = _HEADER.pack(MAGIC, VERSION, grid.nx, grid.ny, grid.lx, grid.ly, grid.stretch,
                          state.t, state.tau, p.u_bar, p.alpha, p.r, p.toggles)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(state.g, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(grid.y_coords, dtype="<f8").tobytes())
    except OSError as exc:
        raise OSError(f"cannot write checkpoint {path}: {exc}") from exc
    return path


def read_checkpoint(path, **param_defaults) -> State:
    """Load a checkpoint; parameters not stored in the file come from ``param_defaults``."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(data) < _HEADER.size:
        raise CheckpointError(f"{path}: truncated header")
    (magic, version, nx, ny, lx, ly, stretch, t, tau, u_bar, alpha, r,
     toggles) = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 8 * (nx * ny + ny)
    if len(data) != expected:
        raise CheckpointError(f"{path}: expected {expected} bytes, found {len(data)}")
    off = _HEADER.size
    g = np.frombuffer(data, dtype="<f8", count=nx * ny, offset=off).reshape(ny, nx).astype(float)
    y = np.frombuffer(data, dtype="<f8", count=ny, offset=off + 8 * nx * ny).astype(float)
    grid = Grid(nx=nx, lx=lx, ny=ny, ly=ly, y_coords=y, stretch=stretch)
    param_defaults.setdefault("tau0", tau)
    params = ModelParams(u_bar=u_bar, alpha=alpha, r=r, damping_on=bool(toggles & 1),
                         transport_on=bool(toggles & 2), diffusion_on=bool(toggles & 4), **param_defaults)
    return State(g=g, t=t, params=params, grid=grid, tau=tau)
