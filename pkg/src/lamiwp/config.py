"""Run configuration and the versioned random generator."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ValidationError

RNG_NAME = "pcg64-v1"


def make_rng(seed: int) -> np.random.Generator:
    """Generator behind every randomized artifact ("pcg64-v1": numpy PCG64 seeded directly)."""
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class RunConfig:
    genus: int = 2
    tile_radius: float = 8.0
    quad_depth: int = 4
    max_index: int = 3
    tower_depth: int = 3
    seed: int = 0
    output_path: str | None = None
    format: str = "json"

    def __post_init__(self):
        if self.genus < 2:
            raise ValidationError("genus must be >= 2")
        if self.tile_radius < 0:
            raise ValidationError("tile_radius must be >= 0")
        if not 1 <= self.quad_depth <= 7:
            raise ValidationError("quad_depth must be in 1..7")
        if not 1 <= self.max_index <= 5:
            raise ValidationError("max_index must be in 1..5")
        if not 1 <= self.tower_depth <= 5:
            raise ValidationError("tower_depth must be in 1..5")
        if self.format not in ("json", "csv"):
            raise ValidationError("format must be json or csv")

    def to_json(self) -> dict:
        d = asdict(self)
        d["rng"] = RNG_NAME
        return d
