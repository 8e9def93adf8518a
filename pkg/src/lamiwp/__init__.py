"""Finite-level toolkit for laminated Weil-Petersson geometry of surface groups."""

from .config import RNG_NAME, RunConfig, make_rng
from .differentials import (GridField, LaminatedField, automorphy_defect, canonical_net, evaluate, evaluate_all,
                            net_defect, pullback, random_field, tile_sum)
from .errors import LamiwpError, ResourceLimitError, ValidationError
from .mobius import MobiusTransform, apply, compose, derivative
from .quadrature import QuadratureGrid, build_grid
from .siegel import (SiegelFunction, SiegelPoint, SpElement, cayley, in_disk, kahler_potential,
                     siegel_function_potential, sp_action)
from .subgroup_lattice import (CosetTable, ValuationTower, coset_action, covering_genus, from_monodromy, haar_mass,
                               intersect, low_index_subgroups, normal_core, profinite_distance,
                               stabilizer_membership, valuation)
from .surface_group import PolygonF, SurfaceGroup, Word, build_genus_group, evaluate_word, parse_word, \
    reduce_to_F, word_ball
from .wp_metric import (CosetFunctionPoint, PairingConfig, alt_action_isometry, bergman_check, invariance_check,
                        theorem_a_inverse, theorem_a_map, tile_sum_check, wp_kernel, wp_pair_classical,
                        wp_pair_renormalized)

__version__ = "0.1.0"
