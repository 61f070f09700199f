"""Run configuration (flat ``key = value`` text) and surface point sets.

Recognised keys::

    lambda, mu, nu, cavity, subdiv, mesh_file, z, epsilon, pressure,
    grid_nx, grid_ny, grid_extent, points_file, output

Moduli are given either as ``lambda`` + ``mu`` or ``nu`` + ``mu``. ``cavity``
is ``sphere`` (an icosphere with ``subdiv`` levels) or ``mesh`` (read from
``mesh_file``). ``z`` is three numbers separated by commas or spaces.
``epsilon`` is the cavity size relative to the depth ``|z3|``: the cavity is
``z + epsilon |z3| Omega``. Lines may carry ``#`` comments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, ModuliOutOfRange
from .moduli import ElasticModuli, moduli_from_lame, moduli_from_poisson

KEYS = ("lambda", "mu", "nu", "cavity", "subdiv", "mesh_file", "z", "epsilon", "pressure",
        "grid_nx", "grid_ny", "grid_extent", "points_file", "output")
_ATTR = {"lambda": "lam"}


@dataclass(frozen=True)
class RunConfig:
    mu: float
    lam: float | None = None
    nu: float | None = None
    cavity: str = "sphere"
    subdiv: int = 3
    mesh_file: str | None = None
    z: tuple = (0.0, 0.0, -1.0)
    epsilon: float = 0.05
    pressure: float = 1.0
    grid_nx: int = 21
    grid_ny: int = 21
    grid_extent: float = 5.0
    points_file: str | None = None
    output: str = "-"

    def __post_init__(self):
        if (self.lam is None) == (self.nu is None):
            raise ConfigError("give exactly one of 'lambda' or 'nu' together with 'mu'")
        for name in ("mu", "lam", "nu", "epsilon", "pressure", "grid_extent"):
            v = getattr(self, name)
            if v is not None and not math.isfinite(v):
                raise ConfigError(f"{name} must be finite")
        if len(self.z) != 3 or not all(math.isfinite(c) for c in self.z):
            raise ConfigError("z needs three finite components")
        if self.z[2] >= 0.0:
            raise ConfigError("z3 must be negative (source below the surface)")
        if self.epsilon <= 0.0:
            raise ConfigError("epsilon must be positive")
        if self.grid_nx < 1 or self.grid_ny < 1:
            raise ConfigError("grid counts must be at least 1")
        if self.grid_extent < 0.0:
            raise ConfigError("grid_extent must be non-negative")
        if self.cavity not in ("sphere", "mesh"):
            raise ConfigError("cavity must be 'sphere' or 'mesh'")
        if self.cavity == "mesh" and not self.mesh_file:
            raise ConfigError("cavity = mesh requires mesh_file")
        if not 0 <= self.subdiv <= 7:
            raise ConfigError("subdiv must be in [0, 7]")
        try:
            self.moduli()
        except ModuliOutOfRange as exc:
            raise ConfigError(str(exc)) from None

    @property
    def depth(self) -> float:
        return abs(self.z[2])

    def moduli(self) -> ElasticModuli:
        if self.lam is not None:
            return moduli_from_lame(self.lam, self.mu)
        return moduli_from_poisson(self.nu, self.mu)

    def serialize(self) -> str:
        lines = []
        for key in KEYS:
            v = getattr(self, _ATTR.get(key, key))
            if v is None:
                continue
            if key == "z":
                v = ", ".join(repr(float(c)) for c in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{key} = {v}")
        return "\n".join(lines) + "\n"


def _float(key, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: not a number: {text!r}") from None


def _int(key, text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: not an integer: {text!r}") from None


def parse_config(text: str) -> RunConfig:
    """Parse configuration text; raises :class:`ConfigError` on any problem."""
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        seen[key] = value
    if "mu" not in seen:
        raise ConfigError("missing required key 'mu'")
    kw = {}
    for key, value in seen.items():
        attr = _ATTR.get(key, key)
        if key in ("lambda", "mu", "nu", "epsilon", "pressure", "grid_extent"):
            kw[attr] = _float(key, value)
        elif key in ("subdiv", "grid_nx", "grid_ny"):
            kw[attr] = _int(key, value)
        elif key == "z":
            parts = value.replace(",", " ").split()
            if len(parts) != 3:
                raise ConfigError("z needs three components")
            kw[attr] = tuple(_float(key, p) for p in parts)
        else:
            kw[attr] = value
    if "mesh_file" in kw and "cavity" not in kw:
        kw["cavity"] = "mesh"
    return RunConfig(**kw)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    cfg = parse_config(text)
    base = Path(path).parent
    updates = {}
    for name in ("mesh_file", "points_file"):
        v = getattr(cfg, name)
        if v and not Path(v).is_absolute():
            updates[name] = str(base / v)
    return replace(cfg, **updates) if updates else cfg


@dataclass(frozen=True, eq=False)
class SurfacePointSet:
    """Observation points ``(y1, y2)`` on the surface x3 = 0."""

    points: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, dtype=float).reshape(-1, 2)
        if len(p) == 0:
            raise ConfigError("no observation points")
        if not np.all(np.isfinite(p)):
            raise ConfigError("observation points must be finite")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    def __len__(self):
        return len(self.points)

    @classmethod
    def grid(cls, center, extent: float, nx: int, ny: int) -> "SurfacePointSet":
        """Regular grid centred at ``center`` spanning ``+-extent``; y1 varies slowest."""
        g1 = np.linspace(center[0] - extent, center[0] + extent, nx) if nx > 1 else np.array([center[0]])
        g2 = np.linspace(center[1] - extent, center[1] + extent, ny) if ny > 1 else np.array([center[1]])
        a, b = np.meshgrid(g1, g2, indexing="ij")
        return cls(np.column_stack([a.ravel(), b.ravel()]))

    @classmethod
    def read(cls, path) -> "SurfacePointSet":
        """Two columns per line (comma or whitespace separated); ``#`` comments."""
        rows = []
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read points file {path}: {exc.strerror}") from None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].replace(",", " ").split()
            if not line:
                continue
            if len(line) != 2:
                raise ConfigError(f"{path}:{lineno}: expected two coordinates")
            rows.append([_float("points_file", t) for t in line])
        return cls(np.array(rows))

    @classmethod
    def from_config(cls, cfg: RunConfig) -> "SurfacePointSet":
        if cfg.points_file:
            return cls.read(cfg.points_file)
        return cls.grid(cfg.z[:2], cfg.grid_extent * cfg.depth, cfg.grid_nx, cfg.grid_ny)


def config_fields() -> list[str]:
    return [f.name for f in fields(RunConfig)]
