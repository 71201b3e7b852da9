"""YAML run configurations.

A config names the PDE problem, its initial data, the LCHS parameters and
what to write.  Field values are either a number or a mapping with a
``default`` and a list of ``regions``, each a ``box`` (inclusive range per
axis) or explicit flat ``nodes`` with a ``value``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .discretize import Family, PdeProblem
from .grid import BoundarySpec, Grid, PiecewiseField

SCHEMA_VERSION = 1
OUTPUT_DIR_ENV = "LCHSPDE_OUTPUT_DIR"
DENSE_CAP_QUBITS = 13


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending section."""


@dataclass
class LchsSettings:
    n_anc: int = 8
    n_frac: int = 1
    r_psi: int = 10
    r_phi: int = 2
    tol: float = 1e-6
    layers: int = 4
    order: int = 2
    max_dt: float | None = None
    sweeps: int = 10


@dataclass
class OutputSettings:
    times: list = field(default_factory=list)
    fields: list = field(default_factory=lambda: ["u"])
    heatmaps: bool = False
    directory: str = "out"


@dataclass
class ValidationSettings:
    dense: bool = True
    fdm: bool = True
    fdm_dt: float | None = None


@dataclass
class InitialData:
    u0: np.ndarray
    udot0: np.ndarray | None = None
    box: list | None = None  # prepare u0 by an H/X/CX circuit over this box


@dataclass
class RunConfig:
    problem: PdeProblem
    initial: InitialData
    lchs: LchsSettings
    outputs: OutputSettings
    validation: ValidationSettings
    source: str = ""

    @property
    def output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_DIR_ENV) or self.outputs.directory)


def _section(raw: dict, name: str, required: bool = True) -> dict:
    val = raw.get(name)
    if val is None:
        if required:
            raise ConfigError(f"{name}: section is missing")
        return {}
    if not isinstance(val, dict):
        raise ConfigError(f"{name}: expected a mapping")
    return val


def _known(sec: dict, name: str, keys: set[str]) -> None:
    extra = set(sec) - keys
    if extra:
        raise ConfigError(f"{name}: unknown keys {sorted(extra)}")


def parse_field(spec: Any, grid: Grid, name: str) -> PiecewiseField:
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return PiecewiseField.constant(float(spec), name)
    if not isinstance(spec, dict):
        raise ConfigError(f"coefficients.{name}: expected a number or a mapping")
    _known(spec, f"coefficients.{name}", {"default", "regions"})
    regions = []
    for i, reg in enumerate(spec.get("regions") or []):
        where = f"coefficients.{name}.regions[{i}]"
        if not isinstance(reg, dict) or "value" not in reg:
            raise ConfigError(f"{where}: needs a value")
        if "box" in reg:
            try:
                idx = grid.box_indices([tuple(r) for r in reg["box"]])
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"{where}: {exc}") from exc
        elif "nodes" in reg:
            idx = np.asarray(reg["nodes"], dtype=int)
            if idx.size and (idx.min() < 0 or idx.max() >= grid.n_nodes):
                raise ConfigError(f"{where}: node index out of range")
        else:
            raise ConfigError(f"{where}: needs a box or a node list")
        regions.append((tuple(int(j) for j in idx), float(reg["value"])))
    try:
        return PiecewiseField(float(spec.get("default", 0.0)), tuple(regions), name)
    except ValueError as exc:
        raise ConfigError(f"coefficients.{name}: {exc}") from exc


def _parse_boundary(spec: Any, d: int) -> BoundarySpec:
    try:
        if isinstance(spec, str):
            return BoundarySpec.uniform(d, spec)
        if not isinstance(spec, list) or len(spec) != d:
            raise ConfigError(f"boundary: expected one [lower, upper] pair per axis ({d} axes)")
        faces = []
        for pair in spec:
            if isinstance(pair, str):
                pair = [pair, pair]
            if len(pair) != 2:
                raise ConfigError("boundary: each axis needs [lower, upper]")
            faces.append(tuple(pair))
        return BoundarySpec(tuple(faces))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"boundary: {exc}") from exc


def _parse_problem(sec: dict) -> PdeProblem:
    _known(sec, "problem", {"family", "grid", "boundary", "coefficients", "T", "tau"})
    try:
        family = Family(sec.get("family", ""))
    except ValueError as exc:
        raise ConfigError(f"problem: unknown family {sec.get('family')!r}") from exc
    g = sec.get("grid")
    if not isinstance(g, dict) or "nbits" not in g:
        raise ConfigError("grid: needs nbits")
    try:
        grid = Grid(tuple(int(b) for b in g["nbits"]), float(g.get("h", 1.0)))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"grid: {exc}") from exc
    boundary = _parse_boundary(sec.get("boundary", "neumann"), grid.d)
    coefs = sec.get("coefficients") or {}
    fields = {name: parse_field(spec, grid, name) for name, spec in coefs.items()}
    try:
        return PdeProblem(family, grid, boundary, fields, float(sec.get("T", 1.0)), float(sec.get("tau", 0.1)))
    except ValueError as exc:
        raise ConfigError(f"problem: {exc}") from exc


def _parse_initial(sec: dict, p: PdeProblem) -> InitialData:
    _known(sec, "initial", {"u0", "udot0", "prep"})
    g = p.grid
    u0 = parse_field(sec.get("u0", 0.0), g, "u0").values(g.n_nodes)
    udot0 = None
    if p.family is Family.SECOND_ORDER:
        udot0 = parse_field(sec.get("udot0", 0.0), g, "udot0").values(g.n_nodes)
    elif "udot0" in sec:
        raise ConfigError("initial: udot0 is only used by second_order problems")
    box = None
    if sec.get("prep") == "box":
        # only a single uniform box can be prepared by the H/X/CX circuit
        src = sec.get("udot0") if p.family is Family.SECOND_ORDER else sec.get("u0")
        regs = (src or {}).get("regions") if isinstance(src, dict) else None
        if not regs or len(regs) != 1 or "box" not in regs[0] or (src.get("default", 0.0) != 0.0):
            raise ConfigError("initial: prep 'box' needs exactly one box region on a zero background")
        box = [tuple(int(v) for v in r) for r in regs[0]["box"]]
    elif sec.get("prep") not in (None, "inject"):
        raise ConfigError(f"initial: unknown prep {sec.get('prep')!r}")
    return InitialData(u0, udot0, box)


def _parse_dataclass(cls, sec: dict, name: str):
    keys = set(cls.__dataclass_fields__)
    _known(sec, name, keys)
    try:
        return cls(**sec)
    except TypeError as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def parse_config(raw: Any, source: str = "") -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a mapping")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"config: schema_version must be {SCHEMA_VERSION}, got {version!r}")
    _known(raw, "config", {"schema_version", "problem", "initial", "lchs", "outputs", "validation"})
    p = _parse_problem(_section(raw, "problem"))
    init = _parse_initial(_section(raw, "initial"), p)
    lchs = _parse_dataclass(LchsSettings, _section(raw, "lchs", False), "lchs")
    outs = _parse_dataclass(OutputSettings, _section(raw, "outputs", False), "outputs")
    val = _parse_dataclass(ValidationSettings, _section(raw, "validation", False), "validation")
    if lchs.n_anc < 2 or lchs.n_frac < 0 or lchs.r_phi < 1 or lchs.r_psi < 1 or lchs.tol <= 0:
        raise ConfigError("lchs: n_anc >= 2, n_frac >= 0, ranks >= 1 and tol > 0 are required")
    if lchs.max_dt is not None and lchs.max_dt <= 0:
        raise ConfigError("lchs: max_dt must be positive")
    if not outs.times:
        outs.times = [0.0, p.T]
    for t in outs.times:
        k = t / p.tau
        if t < 0 or t > p.T + 1e-12 or abs(k - round(k)) > 1e-9 * max(1.0, k):
            raise ConfigError(f"outputs: time {t} is not a multiple of tau within [0, T]")
    allowed = {"u", "raw"} if p.family is Family.FIRST_ORDER else {"u", "udot", "raw"} | {
        f"grad{mu}" for mu in range(p.grid.d)
    }
    bad = set(outs.fields) - allowed
    if bad:
        raise ConfigError(f"outputs: fields {sorted(bad)} not available; choose from {sorted(allowed)}")
    return RunConfig(p, init, lchs, outs, val, source)


def load_config(path: str | os.PathLike) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config: file {path} does not exist")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: cannot parse {path}: {exc}") from exc
    return parse_config(raw, str(path))


__all__ = [
    "ConfigError",
    "InitialData",
    "LchsSettings",
    "OUTPUT_DIR_ENV",
    "OutputSettings",
    "RunConfig",
    "SCHEMA_VERSION",
    "ValidationSettings",
    "load_config",
    "parse_config",
    "parse_field",
]
