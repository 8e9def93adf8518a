"""Bergman reproducing error as a function of tile radius and grid depth."""

from __future__ import annotations

import time
from dataclasses import dataclass

from _common import dump, parse_config
from lamiwp.wp_metric import PairingConfig, bergman_check


@dataclass
class Config:
    """Sweep tile radius and quadrature depth for psi = 1 at z = 0.3."""

    radii: tuple = (4.0, 6.0, 8.0)
    depths: tuple = (2.0, 3.0, 4.0)
    z: float = 0.3
    out: str = ""


def main(cfg: Config):
    rows = []
    for R in cfg.radii:
        for d in cfg.depths:
            t = time.perf_counter()
            num, ref = bergman_check([1], cfg.z, PairingConfig(R, int(d)))
            rows.append({"tile_radius": R, "quad_depth": int(d), "rel_err": abs(num - ref) / abs(ref),
                         "seconds": round(time.perf_counter() - t, 2)})
    dump(cfg, rows, cfg.out or None)


if __name__ == "__main__":
    main(parse_config(Config))
