"""Run configuration: flat key=value sections, strict validation.

Configs are plain INI text so experiment manifests can be committed and
diffed. Unknown sections or keys are rejected; parse -> serialize -> parse is
the identity on the config object.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, fields

from .dg import COUPLINGS
from .mesh import (Mesh, build_mixed_refinement_mesh, build_uniform_mesh,
                   read_mesh_file)
from .physics import make_law

__all__ = ["ConfigError", "RunConfig"]

_MESH_KINDS = ("threeblock", "uniform", "file")
_ICS = ("vortex", "random", "preset")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Everything one experiment run needs, validated up front."""

    # [physics]
    law: str = "euler"
    gamma: float = 1.4
    # [mesh]
    mesh_kind: str = "threeblock"
    level: int = 3
    orders: tuple = (3, 4, 3)
    size: float = 1.0
    nx: int = 4
    ny: int = 4
    order: int = 3
    bounds: tuple = (0.0, 1.0, 0.0, 1.0)
    mesh_path: str = ""
    bc: str = "periodic"
    # [run]
    coupling: str = "ec"
    ic: str = "preset"
    cfl: float = 0.5
    t_end: float = 25.0
    seed: int = 0
    observe_every: int = 100
    out_dir: str = "out"
    threads: int = 1

    def __post_init__(self):
        self.orders = tuple(int(v) for v in self.orders)
        self.bounds = tuple(float(v) for v in self.bounds)
        self.validate()

    def validate(self):
        if self.law not in ("euler", "burgers"):
            raise ConfigError(f"unknown law '{self.law}'")
        if self.gamma <= 1.0:
            raise ConfigError("gamma must exceed 1")
        if self.mesh_kind not in _MESH_KINDS:
            raise ConfigError(f"mesh kind must be one of {_MESH_KINDS}")
        if self.mesh_kind == "threeblock":
            if self.level < 1:
                raise ConfigError("level must be >= 1")
            if len(self.orders) != 3 or any(p < 1 for p in self.orders):
                raise ConfigError("orders must be three integers >= 1")
        if self.mesh_kind == "file" and not self.mesh_path:
            raise ConfigError("mesh kind 'file' requires mesh_path")
        if self.bc not in ("periodic", "exact"):
            raise ConfigError("bc must be 'periodic' or 'exact'")
        if self.coupling not in COUPLINGS:
            raise ConfigError(f"coupling must be one of {COUPLINGS}")
        if self.ic not in _ICS:
            raise ConfigError(f"ic must be one of {_ICS}")
        if self.cfl <= 0:
            raise ConfigError("cfl must be positive")
        if self.t_end < 0:
            raise ConfigError("t_end must be non-negative")
        if self.observe_every < 0:
            raise ConfigError("observe_every must be non-negative")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    # -- construction helpers -------------------------------------------------

    def make_law(self):
        return make_law(self.law, gamma=self.gamma)

    def make_mesh(self) -> Mesh:
        if self.mesh_kind == "threeblock":
            return build_mixed_refinement_mesh(self.level, self.orders,
                                               size=self.size, bc=self.bc)
        if self.mesh_kind == "uniform":
            return build_uniform_mesh(self.nx, self.ny, self.order,
                                      bounds=self.bounds, bc=self.bc)
        return read_mesh_file(self.mesh_path)

    # -- INI round trip --------------------------------------------------------

    _SCHEMA = {
        "physics": {"law": str, "gamma": float},
        "mesh": {"mesh_kind": str, "level": int, "orders": "ints",
                 "size": float, "nx": int, "ny": int, "order": int,
                 "bounds": "floats", "mesh_path": str, "bc": str},
        "run": {"coupling": str, "ic": str, "cfl": float, "t_end": float,
                "seed": int, "observe_every": int, "out_dir": str,
                "threads": int},
    }

    @classmethod
    def from_string(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text)
        except configparser.Error as err:
            raise ConfigError(f"malformed config: {err}") from err
        values = {}
        for section in parser.sections():
            if section not in cls._SCHEMA:
                raise ConfigError(f"unknown section [{section}]")
            for key, raw in parser.items(section):
                if key not in cls._SCHEMA[section]:
                    raise ConfigError(f"unknown key '{key}' in [{section}]")
                kind = cls._SCHEMA[section][key]
                try:
                    if kind == "ints":
                        values[key] = tuple(int(v) for v in raw.split(","))
                    elif kind == "floats":
                        values[key] = tuple(float(v) for v in raw.split(","))
                    else:
                        values[key] = kind(raw)
                except ValueError as err:
                    raise ConfigError(f"bad value for '{key}': {raw}") from err
        return cls(**values)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_string(fh.read())

    def to_string(self) -> str:
        by_name = {f.name: getattr(self, f.name) for f in fields(self)}
        out = io.StringIO()
        for section, keys in self._SCHEMA.items():
            out.write(f"[{section}]\n")
            for key in keys:
                value = by_name[key]
                if isinstance(value, tuple):
                    value = ",".join(repr(v) if isinstance(v, float) else str(v)
                                     for v in value)
                elif isinstance(value, float):
                    value = repr(value)
                out.write(f"{key} = {value}\n")
            out.write("\n")
        return out.getvalue()

    def to_file(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_string())

    def digest(self) -> str:
        return hashlib.sha256(self.to_string().encode()).hexdigest()[:16]
