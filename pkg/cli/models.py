"""
Experiment configuration and run records.
"""

from __future__ import annotations

import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from core import settings
from core.tiling import SchlafliSymbol


class GridSpec(BaseModel):
    """Evenly spaced p grid from pmin to pmax inclusive."""

    model_config = ConfigDict(extra="forbid")

    pmin: float = Field(0.0, ge=0.0, le=1.0)
    pmax: float = Field(1.0, ge=0.0, le=1.0)
    steps: int = Field(51, ge=1)

    @model_validator(mode="after")
    def _ordered(self) -> GridSpec:
        if self.pmax < self.pmin:
            raise ValueError("pmax must not be below pmin")
        if self.steps > 1 and self.pmax == self.pmin:
            raise ValueError("a grid with several steps needs pmax > pmin")
        return self

    def values(self) -> np.ndarray:
        return np.linspace(self.pmin, self.pmax, self.steps)


class RenderOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    p: float | None = Field(None, ge=0.0, le=1.0)
    """draw a sample at this p; None draws the bare patch"""
    seed: int = Field(0, ge=0)
    stroke_width: float = Field(1.0, gt=0.0)
    arcs: bool = True


class ExperimentConfig(BaseModel):
    """
    Every knob of a run. Stored as JSON; flags override file values, which override
    these defaults.
    """

    model_config = ConfigDict(extra="forbid")

    symbol: tuple[int, int] = (5, 5)
    radii: list[int] = Field(default_factory=lambda: [6, 8, 10])
    grid: GridSpec = Field(default_factory=GridSpec)
    seeds: list[int] | None = None
    """explicit seed list; when absent, n_seeds consecutive seeds from seed_base"""
    seed_base: int = Field(0, ge=0)
    n_seeds: int = Field(20, ge=1)
    tau: int | None = Field(None, ge=1)
    sigma: int = Field(2, ge=1)
    pc_method: Literal["connection", "first_moment"] = "connection"
    dual: bool = False
    chain_radii: list[int] | None = None
    p_values: list[float] | Literal["auto"] = "auto"
    halfplane: tuple[float, float] = (0.0, math.pi)
    """ideal endpoints of the halfplane counted by the boundary command (left side)"""
    render: RenderOptions = Field(default_factory=RenderOptions)
    out: str = Field(default_factory=settings.default_out_dir)
    workers: int | None = Field(None, ge=1)

    @field_validator("radii")
    @classmethod
    def _radii(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("radii must not be empty")
        if any(r < 0 for r in v):
            raise ValueError("radii must be nonnegative")
        if len(set(v)) != len(v):
            raise ValueError("radii must be distinct")
        return sorted(v)

    @field_validator("seeds")
    @classmethod
    def _seeds(cls, v: list[int] | None) -> list[int] | None:
        if v is not None and (not v or any(s < 0 or s >= 2 ** 64 for s in v)):
            raise ValueError("seeds must be a nonempty list of 64-bit unsigned integers")
        return v

    @field_validator("p_values")
    @classmethod
    def _p_values(cls, v):
        if isinstance(v, list) and (not v or any(not 0.0 <= p <= 1.0 for p in v)):
            raise ValueError("p values must be a nonempty list inside [0, 1]")
        return v

    def tiling_symbol(self) -> SchlafliSymbol:
        return SchlafliSymbol(*self.symbol)

    def seed_list(self) -> list[int]:
        if self.seeds is not None:
            return list(self.seeds)
        return list(range(self.seed_base, self.seed_base + self.n_seeds))

    def chain_radii_for(self, radius: int) -> list[int]:
        """Explicit chain radii, or up to five radii ending two layers inside the patch."""
        if self.chain_radii is not None:
            return sorted(self.chain_radii)
        # beyond radius - 2 only the outermost layer is left, which the truncation disconnects
        return list(range(max(0, radius - 6), max(radius - 1, 1)))

    def echo(self) -> dict:
        """Result-affecting knobs, as echoed into every aggregate file."""
        return self.model_dump(mode="json", exclude={"out", "workers"})


class RunManifest(BaseModel):
    command: str
    version: str
    config: dict
    files: dict[str, str]
    """file name -> sha256 hex digest"""
    wall_clock_seconds: float
    peak_rss_kb: int
