"""Tolerances and grid resolutions shared by every module."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

from .errors import ConfigError

OUTPUT_DIR_ENV = "DIMDROP_OUTPUT_DIR"


@dataclass(frozen=True)
class Tolerances:
    tol: float = 1e-9
    boundary_tol: float = 1e-9
    glue_tol: float = 1e-9
    branch_margin: float = 1e-6

    def __post_init__(self):
        for name in ("tol", "boundary_tol", "glue_tol", "branch_margin"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class RunConfig:
    """Configuration record for CLI runs.

    ``grid_s`` is the number of s-steps given to each stage of a homotopy
    family; ``grid_t`` and ``grid_g`` are the interval and circle resolutions.
    """

    tol: float = 1e-9
    boundary_tol: float = 1e-9
    grid_t: int = 256
    grid_g: int = 256
    grid_s: int = 64
    seed: int = 0
    out: str | None = None
    format: str = "json"
    tolerances: Tolerances = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.grid_t < 2 or self.grid_t % 2:
            raise ConfigError(f"grid_t must be even and >= 2, got {self.grid_t}")
        if self.grid_g < 8:
            raise ConfigError(f"grid_g must be >= 8, got {self.grid_g}")
        if self.grid_s < 1:
            raise ConfigError(f"grid_s must be >= 1, got {self.grid_s}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"unknown format {self.format!r}")
        object.__setattr__(
            self, "tolerances", Tolerances(tol=self.tol, boundary_tol=self.boundary_tol)
        )

    def to_dict(self):
        return {
            "tol": self.tol,
            "boundary_tol": self.boundary_tol,
            "grid_t": self.grid_t,
            "grid_g": self.grid_g,
            "grid_s": self.grid_s,
            "seed": self.seed,
        }

    @classmethod
    def from_file(cls, path, **overrides):
        with open(path) as fh:
            data = json.load(fh)
        known = {f.name for f in dataclasses.fields(cls) if f.init}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def output_path(self, default_name):
        if self.out:
            return self.out
        directory = os.environ.get(OUTPUT_DIR_ENV)
        if directory:
            return os.path.join(directory, default_name)
        return None
