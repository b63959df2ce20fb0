"""File formats: CSV for curves and fields, JSON for reports and configs.

CSV headers are frozen interfaces: ``x,u0,u1,u2,u3`` (cone curves),
``x,m1,m2`` (sphere curves), ``x,k0,k1,k2`` / ``x,kappa1,kappa2``
(invariants), ``x,value`` (scalar grid functions). Grids are implied
by the x column: nodes must be uniformly spaced samples of one period.
All writes go through a temp-file-then-rename so readers never observe
a partial file. Reports embed the sha256 hash of the canonical JSON
encoding of the run configuration.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import importlib.resources
import io
import json
import os
import tempfile
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .cone_geometry import ConeCurve, ConeInvariants
from .errors import SchemaViolation
from .periodic_calculus import GridFunction, PeriodicGrid
from .sphere_geometry import SphereCurve, SphereInvariants

# Column layouts, keyed by the kind tag used in trajectory metadata.
_HEADERS = {
    "cone_curve": ["x", "u0", "u1", "u2", "u3"],
    "sphere_curve": ["x", "m1", "m2"],
    "cone_invariants": ["x", "k0", "k1", "k2"],
    "sphere_invariants": ["x", "kappa1", "kappa2"],
    "grid_function": ["x", "value"],
}


def atomic_write_text(path: str, text: str) -> None:
    """Write text to `path` via a temp file and rename, never in place."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path: str):
    with open(path) as handle:
        return json.load(handle)


def config_hash(obj) -> str:
    """sha256 of the canonical (sorted, compact) JSON encoding."""
    canonical = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _csv_text(header: list[str], columns: list[np.ndarray]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in zip(*columns):
        writer.writerow([format(v, ".17g") for v in row])
    return buffer.getvalue()


def _read_csv(path: str, kind: str) -> tuple[np.ndarray, np.ndarray]:
    header = _HEADERS[kind]
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows or [c.strip() for c in rows[0]] != header:
        raise SchemaViolation(f"{path}: expected header {','.join(header)}",
                              path=path)
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:]],
                        dtype=float)
    except ValueError as exc:
        raise SchemaViolation(f"{path}: non-numeric entry ({exc})", path=path)
    if data.ndim != 2 or data.shape[1] != len(header) or data.shape[0] < 4:
        raise SchemaViolation(f"{path}: need at least 4 rows of "
                              f"{len(header)} columns", path=path)
    return data[:, 0], data[:, 1:]


def _grid_from_x(x: np.ndarray, path: str) -> PeriodicGrid:
    n = len(x)
    dx = x[1] - x[0]
    if dx <= 0 or not np.all(np.isfinite(x)):
        raise SchemaViolation(f"{path}: x column must increase from x[0]",
                              path=path)
    if np.max(np.abs(np.diff(x) - dx)) > 1e-8 * abs(dx) * n:
        raise SchemaViolation(f"{path}: x column is not uniformly spaced",
                              path=path)
    return PeriodicGrid(n, n * dx)


def write_cone_curve_csv(path: str, curve: ConeCurve) -> None:
    cols = [curve.grid.nodes] + [curve.samples[:, i] for i in range(4)]
    atomic_write_text(path, _csv_text(_HEADERS["cone_curve"], cols))


def read_cone_curve_csv(path: str) -> ConeCurve:
    x, data = _read_csv(path, "cone_curve")
    return ConeCurve(_grid_from_x(x, path), data)


def write_sphere_curve_csv(path: str, curve: SphereCurve) -> None:
    cols = [curve.grid.nodes] + [curve.samples[:, i] for i in range(2)]
    atomic_write_text(path, _csv_text(_HEADERS["sphere_curve"], cols))


def read_sphere_curve_csv(path: str) -> SphereCurve:
    x, data = _read_csv(path, "sphere_curve")
    return SphereCurve(_grid_from_x(x, path), data)


def write_cone_invariants_csv(path: str, inv: ConeInvariants) -> None:
    cols = [inv.grid.nodes, inv.k0.values, inv.k1.values, inv.k2.values]
    atomic_write_text(path, _csv_text(_HEADERS["cone_invariants"], cols))


def read_cone_invariants_csv(path: str,
                             assume_unit_k0: bool = False) -> ConeInvariants:
    x, data = _read_csv(path, "cone_invariants")
    grid = _grid_from_x(x, path)
    k0 = np.ones(grid.n_points) if assume_unit_k0 else data[:, 0]
    return ConeInvariants(GridFunction(grid, k0),
                          GridFunction(grid, data[:, 1]),
                          GridFunction(grid, data[:, 2]))


def write_sphere_invariants_csv(path: str, inv: SphereInvariants) -> None:
    cols = [inv.grid.nodes, inv.kappa1.values, inv.kappa2.values]
    atomic_write_text(path, _csv_text(_HEADERS["sphere_invariants"], cols))


def read_sphere_invariants_csv(path: str) -> SphereInvariants:
    x, data = _read_csv(path, "sphere_invariants")
    grid = _grid_from_x(x, path)
    return SphereInvariants(GridFunction(grid, data[:, 0]),
                            GridFunction(grid, data[:, 1]))


def write_grid_function_csv(path: str, f: GridFunction) -> None:
    atomic_write_text(
        path, _csv_text(_HEADERS["grid_function"], [f.grid.nodes, f.values]))


def read_grid_function_csv(path: str) -> GridFunction:
    x, data = _read_csv(path, "grid_function")
    return GridFunction(_grid_from_x(x, path), data[:, 0])


def grid_function_to_json(f: GridFunction) -> dict:
    return {"L": f.grid.length, "values": list(f.values)}


def grid_function_from_json(obj: dict) -> GridFunction:
    values = np.asarray(obj["values"], dtype=float)
    return GridFunction(PeriodicGrid(len(values), float(obj["L"])), values)


def cone_curve_to_json(curve: ConeCurve) -> dict:
    out = {"L": curve.grid.length}
    for i, name in enumerate(_HEADERS["cone_curve"][1:]):
        out[name] = list(curve.samples[:, i])
    return out


def cone_curve_from_json(obj: dict) -> ConeCurve:
    cols = [np.asarray(obj[name], dtype=float)
            for name in _HEADERS["cone_curve"][1:]]
    samples = np.stack(cols, axis=1)
    return ConeCurve(PeriodicGrid(len(samples), float(obj["L"])), samples)


# --- run configuration ------------------------------------------------

_SCHEMA = None


def runconfig_schema() -> dict:
    global _SCHEMA
    if _SCHEMA is None:
        resource = (importlib.resources.files("coneflow")
                    / "schemas" / "runconfig.schema.json")
        _SCHEMA = json.loads(resource.read_text())
    return _SCHEMA


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; unknown keys are rejected up front."""

    n_points: int = 256
    length: float = 2.0 * np.pi
    diff_method: str = "spectral"
    scheme: str = "ifrk4"
    dt: float | None = None
    t_end: float = 0.05
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    calibration: str | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        try:
            jsonschema.validate(raw, runconfig_schema())
        except jsonschema.ValidationError as exc:
            raise SchemaViolation(f"run config: {exc.message}")
        return cls(**raw)

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        try:
            raw = read_json(path)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"{path}: not valid JSON ({exc})", path=path)
        if not isinstance(raw, dict):
            raise SchemaViolation(f"{path}: run config must be a JSON object",
                                  path=path)
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        return {k: v for k, v in out.items() if v is not None}

    def hash(self) -> str:
        return config_hash(self.to_dict())


# --- trajectory directories -------------------------------------------

def _state_kind(state) -> str:
    if isinstance(state, ConeCurve):
        return "cone_curve"
    if isinstance(state, SphereCurve):
        return "sphere_curve"
    if isinstance(state, ConeInvariants):
        return "cone_invariants"
    if isinstance(state, SphereInvariants):
        return "sphere_invariants"
    raise TypeError(f"no CSV layout for {type(state).__name__}")


def _write_state_csv(path: str, state) -> None:
    writer = {
        "cone_curve": write_cone_curve_csv,
        "sphere_curve": write_sphere_curve_csv,
        "cone_invariants": write_cone_invariants_csv,
        "sphere_invariants": write_sphere_invariants_csv,
    }[_state_kind(state)]
    writer(path, state)


def write_trajectory(directory: str, trajectory, config: dict | None = None) -> None:
    """Lay out `meta.json` plus one `t_%06d.csv` per output time."""
    os.makedirs(directory, exist_ok=True)
    kind = _state_kind(trajectory.states[0])
    files = []
    for i, state in enumerate(trajectory.states):
        name = f"t_{i:06d}.csv"
        _write_state_csv(os.path.join(directory, name), state)
        files.append(name)
    meta = {
        "kind": kind,
        "columns": _HEADERS[kind],
        "n_points": trajectory.grid.n_points,
        "length": trajectory.grid.length,
        "times": list(map(float, trajectory.times)),
        "files": files,
        "meta": trajectory.meta,
    }
    if config is not None:
        meta["config_hash"] = config_hash(config)
    write_json(os.path.join(directory, "meta.json"), meta)


def read_trajectory(directory: str):
    from .evolution_engine import Trajectory

    meta = read_json(os.path.join(directory, "meta.json"))
    reader = {
        "cone_curve": read_cone_curve_csv,
        "sphere_curve": read_sphere_curve_csv,
        "cone_invariants": read_cone_invariants_csv,
        "sphere_invariants": read_sphere_invariants_csv,
    }[meta["kind"]]
    states = tuple(reader(os.path.join(directory, name))
                   for name in meta["files"])
    return Trajectory(tuple(meta["times"]), states, meta.get("meta", {}))
