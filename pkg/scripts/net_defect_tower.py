"""Survey of canonical-net defects d(A_1) >= d(A_2) over random fields."""

from __future__ import annotations

from dataclasses import dataclass

from _common import dump, parse_config
from lamiwp.differentials import net_defect, random_field
from lamiwp.subgroup_lattice import low_index_subgroups, refinement_chain, tower_level
from lamiwp.surface_group import build_genus_group


@dataclass
class Config:
    """Count seeds whose defect increases from A_1 to A_2, per field level of the chain."""

    seeds: int = 20
    quad_depth: int = 3
    out: str = ""


def main(cfg: Config):
    G = build_genus_group(2)
    A2 = tower_level(G, 2)
    non = [T for T in low_index_subgroups(G, 3) if T.degree == 3 and not T.is_normal][:2]
    chain = refinement_chain(G, [A2] + non)
    rows = []
    for N in chain[1:]:
        for seed in range(cfg.seeds):
            mu = random_field(N, seed=seed, depth=cfg.quad_depth)
            d1, d2 = net_defect(mu, chain[0]), net_defect(mu, A2)
            rows.append({"field_level": N.degree, "seed": seed, "d_A1": d1, "d_A2": d2, "increase": d2 > d1})
    dump(cfg, rows, cfg.out or None)


if __name__ == "__main__":
    main(parse_config(Config))
