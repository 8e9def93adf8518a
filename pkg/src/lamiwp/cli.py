"""``lamiwp`` command line.

Exit codes: 0 success, 2 validation error, 3 resource limit.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from importlib import resources

import numpy as np

from . import io as lio
from .config import RNG_NAME, RunConfig, make_rng
from .differentials import automorphy_defect, canonical_net, random_coset_data, random_field
from .errors import LamiwpError, ResourceLimitError, ValidationError
from .quadrature import build_grid
from .siegel import (SiegelFunction, SiegelPoint, cayley, inverse_cayley, kahler_potential, matrix_from_json,
                     matrix_to_json, siegel_function_potential)
from .subgroup_lattice import (CosetTable, ValuationTower, cover_genus_from_table, covering_genus, haar_mass,
                               is_subgroup, low_index_subgroups, normal_core, profinite_distance)
from .surface_group import build_genus_group, evaluate_word, parse_word, print_word, reduce_to_F
from .wp_metric import (CheckResult, CosetFunctionPoint, PairingConfig, alt_action_isometry, bergman_check,
                        invariance_check, isometry_check, tail_bound, tile_sum_check, wp_pair_classical,
                        wp_pair_renormalized)


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise ValidationError(f"cannot parse complex number {text!r}") from exc


def _emit(args, obj, rows: list[dict] | None = None) -> None:
    if getattr(args, "format", "json") == "csv":
        if rows is None:
            raise ValidationError("this command has no CSV form")
        text = lio.to_csv(rows)
    else:
        text = lio.dumps(obj)
    if getattr(args, "output", None):
        lio.atomic_write(args.output, text)
    else:
        sys.stdout.write(text)


def _cfg(args) -> PairingConfig:
    return PairingConfig(tile_radius=args.tile_radius, quad_depth=args.quad_depth)


# ---------------------------------------------------------------- group

def cmd_group_build(args):
    G = build_genus_group(args.genus)
    rec = G.to_json()
    rec["relation_residual"] = G.relation_residual()
    rec["hyperbolic_area"] = G.fundamental_domain.hyperbolic_area()
    _emit(args, rec)


def cmd_group_word(args):
    G = build_genus_group(args.genus)
    w = parse_word(args.word, args.genus)
    m = evaluate_word(G, w)
    _emit(args, {"word": print_word(w), "transform": m.to_json(), "displacement": m.displacement()})


def cmd_group_reduce(args):
    G = build_genus_group(args.genus)
    w, z = reduce_to_F(G, _complex(args.point))
    _emit(args, {"word": print_word(w), "reduced": lio.complex_to_json(z)})


# ---------------------------------------------------------------- subgroups

def cmd_subgroups_enumerate(args):
    G = build_genus_group(args.genus)
    tables = low_index_subgroups(G, args.max_index, conjugacy_classes=args.classes)
    recs = [T.to_json() for T in tables]
    rows = [{"index": T.degree, "normal": T.is_normal, "cover_genus": covering_genus(args.genus, T.degree),
             "perms": json.dumps(r["perms"], sort_keys=True)} for T, r in zip(tables, recs)]
    _emit(args, {"genus": args.genus, "max_index": args.max_index, "count": len(tables), "tables": recs}, rows)


def cmd_subgroups_lattice(args):
    G = build_genus_group(args.genus)
    tables = low_index_subgroups(G, args.max_index, conjugacy_classes=False)
    rows = []
    for i, big in enumerate(tables):
        for j, small in enumerate(tables):
            if i != j and small.degree % big.degree == 0 and small.degree > big.degree and is_subgroup(small, big):
                rows.append({"parent_index": i + 1, "child_index": j + 1, "containment": small.degree // big.degree})
    _emit(args, {"genus": args.genus, "tables": [T.to_json() for T in tables], "edges": rows}, rows)


def cmd_subgroups_info(args):
    T = lio.table_from_file(args.table)
    G = build_genus_group(T.genus)
    core = normal_core(T)
    _emit(args, {
        "index": T.degree,
        "normal": T.is_normal,
        "haar_mass": str(haar_mass(T)),
        "cover_genus_formula": covering_genus(T.genus, T.degree),
        "cover_genus_euler": cover_genus_from_table(G, T),
        "core_index": core.degree,
        "schreier_generators": [print_word(w) for w in T.schreier_generators()],
    })


# ---------------------------------------------------------------- valuation

def cmd_valuation(args):
    G = build_genus_group(args.genus)
    tower = ValuationTower(G, args.depth)
    w = parse_word(args.word, args.genus)
    out = {"word": print_word(w), "depth": args.depth, "valuation": tower.valuation(w).to_json()}
    if args.other is not None:
        w2 = parse_word(args.other, args.genus)
        out["other"] = print_word(w2)
        out["distance"] = profinite_distance(tower, w, w2)
    _emit(args, out)


# ---------------------------------------------------------------- fields

def cmd_field_random(args):
    T = lio.table_from_file(args.level)
    mu = random_field(T, seed=args.seed, depth=args.quad_depth, sup=args.sup)
    rec = lio.field_to_json(mu)
    rec["seed"] = args.seed
    rec["rng"] = RNG_NAME
    _emit(args, rec)


def cmd_field_net(args):
    mu = lio.field_from_json(lio.load_json(args.field))
    T = lio.table_from_file(args.level)
    _emit(args, lio.field_to_json(canonical_net(mu, T)))


def cmd_field_defect(args):
    mu = lio.field_from_json(lio.load_json(args.field))
    w = parse_word(args.word, mu.level.genus)
    d = automorphy_defect(mu, w, args.samples, make_rng(args.seed))
    _emit(args, {"word": print_word(w), "defect": d, "samples": args.samples})


# ---------------------------------------------------------------- wp

def cmd_wp_pair(args):
    mu = lio.field_from_json(lio.load_json(args.mu))
    nu = lio.field_from_json(lio.load_json(args.nu))
    cfg = _cfg(args)
    val = wp_pair_renormalized(mu, nu, cfg)
    out = {"pairing": lio.complex_to_json(val), "config": vars_cfg(cfg)}
    if cfg.tail_report:
        out["tail_bound"] = tail_bound(mu, nu, cfg.tiles(mu.group))
    _emit(args, out)


def vars_cfg(cfg: PairingConfig) -> dict:
    return {"tile_radius": cfg.tile_radius, "quad_depth": cfg.quad_depth, "tail_report": cfg.tail_report}


def cmd_wp_bergman(args):
    psi = [_complex(c) for c in args.psi.split(",")]
    num, ref = bergman_check(psi, _complex(args.z), _cfg(args), args.genus)
    _emit(args, {"numeric": lio.complex_to_json(num), "reference": lio.complex_to_json(ref),
                 "abs_err": abs(num - ref), "rel_err": abs(num - ref) / max(abs(ref), 1e-300)})


# ---------------------------------------------------------------- verify

def _pair_fields(T, seed, depth):
    return random_field(T, seed=seed, depth=depth), random_field(T, seed=seed + 1, depth=depth)


def _points(T, seed, depth):
    if not T.is_normal:
        T = normal_core(T)
    grid = build_grid(T.genus, depth)
    rng = make_rng(seed)
    return (CosetFunctionPoint(T, random_coset_data(grid, T.degree, rng), grid),
            CosetFunctionPoint(T, random_coset_data(grid, T.degree, rng), grid))


def cmd_verify(args):
    started = time.perf_counter()
    T = lio.table_from_file(args.level)
    cfg = _cfg(args)
    extra: dict = {}
    tb = 0.0
    if args.identity == "scaling":
        mu, nu = _pair_fields(T, args.seed, cfg.quad_depth)
        lhs = wp_pair_renormalized(mu, nu, cfg)
        rhs = wp_pair_classical(mu, nu, T, cfg) / T.degree
        tb = tail_bound(mu, nu, cfg.tiles(mu.group), T.degree) / T.degree
    elif args.identity == "invariance":
        mu, nu = _pair_fields(T, args.seed, cfg.quad_depth)
        w = parse_word(args.word, T.genus)
        lhs, rhs, _ = invariance_check(mu, nu, w, cfg)
        tb = 2 * tail_bound(mu, nu, cfg.tiles(mu.group))
        extra["word"] = print_word(w)
    elif args.identity == "tilesum":
        mu, nu = _pair_fields(T, args.seed, cfg.quad_depth)
        lhs, rhs, ratio = tile_sum_check(mu, nu, args.radius, cfg)
        extra.update(radius=args.radius, ratio=lio.complex_to_json(ratio))
    elif args.identity == "isometry":
        xi, zeta = _points(T, args.seed, cfg.quad_depth)
        lhs, rhs = isometry_check(xi, zeta, cfg)
    else:
        xi, _ = _points(T, args.seed, cfg.quad_depth)
        sigma = [int(s) - 1 for s in args.sigma.split(",")] if args.sigma else list(range(xi.level.degree))
        lhs, rhs = alt_action_isometry(xi, sigma, cfg)
        extra["sigma"] = [s + 1 for s in sigma]
    res = CheckResult(complex(lhs), complex(rhs), float(tb), extra)
    conf = {**vars_cfg(cfg), "seed": args.seed, "level_index": T.degree, "rng": RNG_NAME}
    rep = {
        "identity": args.identity,
        "lhs": lio.complex_to_json(res.lhs),
        "rhs": lio.complex_to_json(res.rhs),
        "abs_err": res.abs_err,
        "rel_err": res.rel_err,
        "tail_bound": res.tail_bound,
        "config": conf,
        "wall_time": 0.0 if args.no_timing else time.perf_counter() - started,
    }
    if extra:
        rep["extra"] = extra
    validate_report(rep)
    _emit(args, rep, [{k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in rep.items()}])


def report_schema() -> dict:
    text = resources.files("lamiwp").joinpath("schemas/verification_report.schema.json").read_text()
    return json.loads(text)


def validate_report(rep: dict) -> None:
    import jsonschema

    try:
        jsonschema.validate(rep, report_schema())
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"report does not match schema: {exc.message}") from exc


# ---------------------------------------------------------------- siegel

def _matrix_arg(path):
    rec = lio.load_json(path)
    return matrix_from_json(rec["matrix"] if isinstance(rec, dict) else rec)


def cmd_siegel_potential(args):
    Z = SiegelPoint(_matrix_arg(args.matrix))
    _emit(args, {"potential": kahler_potential(Z)})


def cmd_siegel_cayley(args):
    Z = cayley(_matrix_arg(args.period))
    back = inverse_cayley(Z)
    _emit(args, {"Z": matrix_to_json(Z.Z), "potential": kahler_potential(Z),
                 "round_trip_error": float(np.max(np.abs(back - _matrix_arg(args.period))))})


def cmd_siegel_fpotential(args):
    rec = lio.load_json(args.function)
    try:
        T = CosetTable.from_json(rec["level"])
        vals = tuple(SiegelPoint(matrix_from_json(m)) for m in rec["values"])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed Siegel function: {exc}") from exc
    _emit(args, {"potential": siegel_function_potential(SiegelFunction(T, vals))})


# ---------------------------------------------------------------- parser

def _out(p, csv_ok=False):
    p.add_argument("-o", "--output", help="write to this path (atomically) instead of stdout")
    p.add_argument("--format", choices=("json", "csv") if csv_ok else ("json",), default="json")
    p.add_argument("--json", action="store_true", help="JSON output (the default)")


def _pair_opts(p, radius=8.0, depth=4):
    p.add_argument("--tile-radius", type=float, default=radius, help="hyperbolic radius of the inner tile ball")
    p.add_argument("--quad-depth", type=int, default=depth, help="refinement depth of the grid on F")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lamiwp", description="Laminated Weil-Petersson toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("group", help="surface groups").add_subparsers(dest="action", required=True)
    p = g.add_parser("build", help="build the genus-g group and its fundamental polygon")
    p.add_argument("--genus", type=int, default=2)
    _out(p)
    p.set_defaults(func=cmd_group_build)
    p = g.add_parser("word", help="evaluate a word as a disk isometry")
    p.add_argument("word")
    p.add_argument("--genus", type=int, default=2)
    _out(p)
    p.set_defaults(func=cmd_group_word)
    p = g.add_parser("reduce", help="reduce a point of the disk into F")
    p.add_argument("point")
    p.add_argument("--genus", type=int, default=2)
    _out(p)
    p.set_defaults(func=cmd_group_reduce)

    s = sub.add_parser("subgroups", help="finite-index subgroups").add_subparsers(dest="action", required=True)
    p = s.add_parser("enumerate", help="all subgroups of index <= max-index")
    p.add_argument("--genus", type=int, default=2)
    p.add_argument("--max-index", type=int, required=True)
    p.add_argument("--classes", action="store_true", help="one table per conjugacy class")
    _out(p, csv_ok=True)
    p.set_defaults(func=cmd_subgroups_enumerate)
    p = s.add_parser("lattice", help="containment edges among all subgroups of index <= max-index")
    p.add_argument("--genus", type=int, default=2)
    p.add_argument("--max-index", type=int, required=True)
    _out(p, csv_ok=True)
    p.set_defaults(func=cmd_subgroups_lattice)
    p = s.add_parser("info", help="normality, core, cover genus of one table")
    p.add_argument("--table", required=True)
    _out(p)
    p.set_defaults(func=cmd_subgroups_info)

    p = sub.add_parser("valuation", help="tower valuation of a word (and distance to another)")
    p.add_argument("word")
    p.add_argument("--other")
    p.add_argument("--genus", type=int, default=2)
    p.add_argument("--depth", type=int, default=3)
    _out(p)
    p.set_defaults(func=cmd_valuation)

    f = sub.add_parser("field", help="laminated differentials").add_subparsers(dest="action", required=True)
    p = f.add_parser("random", help="seeded random field factoring through a table")
    p.add_argument("--level", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quad-depth", type=int, default=4)
    p.add_argument("--sup", type=float, default=0.8)
    _out(p)
    p.set_defaults(func=cmd_field_random)
    p = f.add_parser("net", help="canonical net of a field at a coarser normal level")
    p.add_argument("--field", required=True)
    p.add_argument("--level", required=True)
    _out(p)
    p.set_defaults(func=cmd_field_net)
    p = f.add_parser("defect", help="sampled automorphy defect under a word")
    p.add_argument("--field", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    _out(p)
    p.set_defaults(func=cmd_field_defect)

    w = sub.add_parser("wp", help="Weil-Petersson pairings").add_subparsers(dest="action", required=True)
    p = w.add_parser("pair", help="renormalized pairing of two field files")
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    _pair_opts(p)
    _out(p)
    p.set_defaults(func=cmd_wp_pair)
    p = w.add_parser("bergman", help="weighted Bergman reproducing check")
    p.add_argument("--psi", default="1", help="comma-separated coefficients, constant term first")
    p.add_argument("--z", default="0")
    p.add_argument("--genus", type=int, default=2)
    _pair_opts(p)
    _out(p)
    p.set_defaults(func=cmd_wp_bergman)

    v = sub.add_parser("verify", help="identity checks emitting schema-validated reports")
    vs = v.add_subparsers(dest="identity", required=True)
    defaults = {"scaling": (6.0, 2), "invariance": (8.0, 4), "tilesum": (4.0, 2), "isometry": (8.0, 4),
                "alt": (8.0, 4)}
    for name, (rad, dep) in defaults.items():
        p = vs.add_parser(name)
        p.add_argument("--level", required=True, help="coset table JSON")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--no-timing", action="store_true", help="report wall_time 0 for byte-identical output")
        _pair_opts(p, rad, dep)
        _out(p, csv_ok=True)
        p.set_defaults(func=cmd_verify)
        if name == "invariance":
            p.add_argument("--word", default="a1")
        if name == "tilesum":
            p.add_argument("--radius", type=int, default=2)
        if name == "alt":
            p.add_argument("--sigma", help="1-based images of the cosets, e.g. 2,3,1")

    sg = sub.add_parser("siegel", help="Siegel disk").add_subparsers(dest="action", required=True)
    p = sg.add_parser("potential")
    p.add_argument("--matrix", required=True)
    _out(p)
    p.set_defaults(func=cmd_siegel_potential)
    p = sg.add_parser("cayley")
    p.add_argument("--period", required=True)
    _out(p)
    p.set_defaults(func=cmd_siegel_cayley)
    p = sg.add_parser("fpotential")
    p.add_argument("--function", required=True)
    _out(p)
    p.set_defaults(func=cmd_siegel_fpotential)
    return ap


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if hasattr(args, "genus"):
            RunConfig(genus=args.genus)
        args.func(args)
    except ResourceLimitError as exc:
        print(f"lamiwp: resource limit: {exc}", file=sys.stderr)
        return exc.exit_code
    except LamiwpError as exc:
        print(f"lamiwp: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except MemoryError:
        print("lamiwp: resource limit: out of memory", file=sys.stderr)
        return 3
    return 0


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
