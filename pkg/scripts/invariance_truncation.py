"""G-invariance defect of the renormalized pairing versus tile radius."""

from __future__ import annotations

from dataclasses import dataclass

from _common import dump, parse_config
from lamiwp.differentials import random_field
from lamiwp.subgroup_lattice import low_index_subgroups
from lamiwp.surface_group import Word, build_genus_group, letter_code
from lamiwp.wp_metric import PairingConfig, invariance_check


@dataclass
class Config:
    """Relative invariance defect for each generator on a non-normal index-3 level."""

    radii: tuple = (4.0, 6.0, 8.0)
    quad_depth: int = 4
    seed: int = 1
    out: str = ""


def main(cfg: Config):
    G = build_genus_group(2)
    T = next(t for t in low_index_subgroups(G, 3) if t.degree == 3 and not t.is_normal)
    mu = random_field(T, seed=cfg.seed, depth=cfg.quad_depth)
    nu = random_field(T, seed=cfg.seed + 1, depth=cfg.quad_depth)
    rows = []
    for R in cfg.radii:
        pc = PairingConfig(R, cfg.quad_depth)
        for i in range(2 * G.genus):
            lhs, rhs, _ = invariance_check(mu, nu, Word((letter_code(i, 1),)), pc)
            rows.append({"tile_radius": R, "generator": G.generator_names[i],
                         "rel_defect": abs(lhs - rhs) / abs(rhs)})
    dump(cfg, rows, cfg.out or None)


if __name__ == "__main__":
    main(parse_config(Config))
