"""Command line front door.

run(argv) does the work and returns a CommandResult; main() prints its report
lines to stdout and exits with its code. Logging goes to stderr.
"""
import argparse
import logging
import os
import sys
from itertools import combinations
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from src.amalgam import AmalgamSpec, amalgamate, double_with_swap, orbit_amalgam
from src.builder import (
    TowerApprox,
    TowerConfig,
    audit_tower,
    build_tower,
    extend_on_demand,
    injectivity_audit,
)
from src.codec import (
    format_prov,
    read_glue,
    read_graph,
    read_kmap,
    read_perm,
    read_prov,
    read_seq,
    read_ums,
    write_kmap,
    write_perm,
    write_ums,
)
from src.components.permutation import Permutation
from src.components.report import FAILED, USAGE, CommandResult
from src.config import Settings, load_settings
from src.errors import MetricError
from src.fixedpoint import IsometrySystem, fixed_set_level, migration_map, property_star_check
from src.homogeneity import (
    avoidance_extension,
    back_and_forth,
    back_and_forth_realizing,
    distance_trace,
    is_uniqueness_set,
    nice_violation,
    separate_pair,
    uniqueness_kernel,
)
from src.katetov import (
    enumerate_katetov,
    feasible_interval,
    katetov_check,
    katetov_extend,
    min_saturation_witness,
    sup_distance,
)
from src.ratmetric import PartialIsometry, as_rational, find_isometry, graph_to_metric
from src.tentacular import (
    condition_c_check,
    eps_good_inline,
    euclid_spread,
    extract_inline_subsequence,
    fa_family,
    nat_line,
    spread_margins,
)
from src.utils import write_output

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


def rational_arg(text: str):
    try:
        return as_rational(text)
    except (TypeError, ValueError) as e:
        raise argparse.ArgumentTypeError(str(e))


def rational_list(text: str):
    return [rational_arg(t) for t in text.split(',') if t]


def int_list(text: str) -> List[int]:
    try:
        return [int(t) for t in text.split(',') if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected comma-separated integers, got {text!r}")


def pair_list(text: str) -> List[Tuple[int, int]]:
    """'0:1,2:3' -> [(0, 1), (2, 3)]"""
    pairs = []
    for item in text.split(','):
        if not item:
            continue
        try:
            u, v = item.split(':')
            pairs.append((int(u), int(v)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"Expected u:v pairs, got {item!r}")
    return pairs


def subset_list(text: str) -> List[List[int]]:
    """'1,2;3' -> [[1, 2], [3]]"""
    return [int_list(group) for group in text.split(';') if group]


def _fmt(values: Sequence) -> str:
    return ' '.join(str(v) for v in values)


def _pick(value, default):
    return default if value is None else value


def _system(args) -> IsometrySystem:
    space = read_ums(args.space)
    phi, base = read_perm(args.perm)
    return IsometrySystem.checked(space, phi, base)


# validate / katetov

def cmd_validate(args, settings: Settings) -> CommandResult:
    space = read_ums(args.space)
    return CommandResult(lines=[f"ok n {space.n} diameter {space.diameter()}"])


def cmd_katetov_check(args, settings: Settings) -> CommandResult:
    f = read_kmap(args.kmap)
    return CommandResult(lines=[f"katetov ok n {len(f.values)}"])


def cmd_katetov_extend(args, settings: Settings) -> CommandResult:
    space = read_ums(args.space)
    f = katetov_extend(space, args.subset, args.values)
    result = CommandResult(lines=[f"extend values {_fmt(f.values)}"])
    if args.output:
        write_kmap(args.output, f, args.space)
        result.wrote(args.output)
    return result


def cmd_katetov_enumerate(args, settings: Settings) -> CommandResult:
    space = read_ums(args.space)
    grid = _pick(args.grid, settings.tower.grid)
    support = _pick(args.support, settings.tower.max_support)
    maps = enumerate_katetov(space, grid, support, values_on_grid=args.on_grid)
    return CommandResult(lines=[f"maps {len(maps)}"] + [f"map {_fmt(f.values)}" for f in maps])


def cmd_katetov_interval(args, settings: Settings) -> CommandResult:
    space = read_ums(args.space)
    return CommandResult(lines=[feasible_interval(space, args.subset, args.values, args.point).report_line()])


def cmd_katetov_saturate(args, settings: Settings) -> CommandResult:
    f = read_kmap(args.kmap)
    limit = _pick(args.exhaustive_limit, settings.exhaustive_limit)
    return CommandResult(lines=[min_saturation_witness(f.base, f, args.eps, limit).report_line()])


# tower

def _tower_config(args, settings: Settings) -> TowerConfig:
    return TowerConfig(
        grid=tuple(_pick(args.grid, settings.tower.grid)),
        max_support=_pick(args.support, settings.tower.max_support),
        depth=_pick(args.depth, settings.tower.depth),
        max_points=_pick(args.budget, settings.tower.max_points),
    )


def _write_tower(approx: TowerApprox, output: str, prov: Optional[str], result: CommandResult) -> None:
    write_ums(output, approx.top)
    prov = prov or str(Path(output).with_suffix('.prov'))
    write_output(prov, format_prov(approx.provenance, approx.truncated))
    result.wrote(output).wrote(prov)


def cmd_tower_build(args, settings: Settings) -> CommandResult:
    seed = read_ums(args.seed)
    approx = build_tower(seed, _tower_config(args, settings))
    result = CommandResult(lines=[
        f"tower depth {approx.depth} points {approx.top.n}",
        f"levels {_fmt(level.n for level in approx.levels)}",
    ])
    if approx.truncated:
        result.add(f"truncated {approx.budget_error().report_line()}")
    _write_tower(approx, args.output, args.prov, result)
    return result


def _load_tower(args) -> TowerApprox:
    top = read_ums(args.space, check_triangles=False)
    if not args.prov:
        return TowerApprox.from_seed(top)
    provenance, truncated = read_prov(args.prov)
    return TowerApprox.from_top(top, provenance, truncated)


def cmd_tower_audit(args, settings: Settings) -> CommandResult:
    grid = _pick(args.grid, settings.tower.grid)
    workers = _pick(args.workers, settings.workers)
    if args.prov:
        report = audit_tower(_load_tower(args), grid, args.k, args.eps, workers)
    else:
        report = injectivity_audit(read_ums(args.space, check_triangles=False), grid, args.k, args.eps,
                                   workers=workers)
    return CommandResult(lines=report.report_lines()).fail_unless(report.passed)


def cmd_tower_extend(args, settings: Settings) -> CommandResult:
    approx = _load_tower(args)
    f = read_kmap(args.kmap)
    grown = extend_on_demand(approx, f)
    result = CommandResult(lines=[grown.provenance[-1].report_line()])
    _write_tower(grown, args.output, args.prov_out, result)
    return result


# homogeneity

def cmd_bnf(args, settings: Settings) -> CommandResult:
    ambient = read_ums(args.space)
    p = PartialIsometry.checked(ambient, ambient, args.map)
    result = CommandResult()
    if args.realize:
        ambient, trace = back_and_forth_realizing(ambient, p, args.targets, args.back)
        if args.output:
            write_ums(args.output, ambient)
            result.wrote(args.output)
    else:
        trace = back_and_forth(ambient, p, args.targets, args.back)
    result.add(*trace.report_lines())
    result.add('map ' + _fmt(f"{u}:{v}" for u, v in trace.isometry.pairs))
    return result.fail_unless(trace.completed)


def cmd_trace(args, settings: Settings) -> CommandResult:
    space = read_ums(args.space)
    return CommandResult(lines=[f"trace values {_fmt(distance_trace(space, args.subset, args.point).values)}"])


def cmd_unique(args, settings: Settings) -> CommandResult:
    space = read_ums(args.space)
    if args.nice_values:
        kernel = uniqueness_kernel(space, args.subset, args.nice_values)
        result = CommandResult(lines=[f"kernel {_fmt(kernel.kernel)}", f"sphere {_fmt(kernel.sphere)}".rstrip(),
                                      kernel.report.report_line()])
        return result.fail_unless(kernel.report.unique)
    report = is_uniqueness_set(space, args.subset)
    return CommandResult(lines=[report.report_line()]).fail_unless(report.unique)


def cmd_nice(args, settings: Settings) -> CommandResult:
    space = read_ums(args.space)
    sub = space.subspace(args.subset)
    katetov_check(sub, args.values)
    bad = nice_violation(sub, args.values)
    if bad is not None:
        line = f"nice false pair {args.subset[bad[0]]} {args.subset[bad[1]]}"
        return CommandResult(FAILED, [line])
    result = CommandResult(lines=['nice true'])
    if args.separate:
        if len(args.separate) != 2:
            raise ValueError("--separate takes exactly two points x,y")
        x, y = args.separate
        grown, z = separate_pair(space, args.subset, args.values, x, y, args.alpha)
        result.add(f"separate point {z} dx {grown.d(z, x)} dy {grown.d(z, y)}")
        if args.output:
            write_ums(args.output, grown)
            result.wrote(args.output)
    return result


def cmd_avoid(args, settings: Settings) -> CommandResult:
    space = read_ums(args.space)
    found = avoidance_extension(space, args.targets, args.values, args.net, args.M, args.eps)
    return CommandResult(lines=found.report_lines())


# amalgam

def cmd_amalgam(args, settings: Settings) -> CommandResult:
    left = read_ums(args.left)
    right = read_ums(args.right)
    glue = PartialIsometry(left, right, read_glue(args.glue))
    found = amalgamate(AmalgamSpec(left, right, glue))
    write_ums(args.output, found.space)
    result = CommandResult(lines=[f"amalgam points {found.space.n} merges {len(found.merges)}"])
    result.add(*(m.report_line() for m in found.merges))
    result.add(f"right {_fmt(found.placements[1])}")
    return result.wrote(args.output)


def cmd_double(args, settings: Settings) -> CommandResult:
    space = read_ums(args.space)
    doubled, swap = double_with_swap(space, args.glued)
    phi = Permutation(tuple(v for _, v in sorted(swap.pairs)))
    write_ums(args.output, doubled)
    perm_out = args.perm_out or str(Path(args.output).with_suffix('.perm'))
    write_perm(perm_out, phi, phi.fixed_points())
    result = CommandResult(lines=[f"double points {doubled.n} fixed {len(phi.fixed_points())}"])
    return result.wrote(args.output).wrote(perm_out)


def cmd_orbit(args, settings: Settings) -> CommandResult:
    base = read_ums(args.space)
    phi, _ = read_perm(args.perm)
    f = read_kmap(args.kmap, space=base)
    horizon = _pick(args.horizon, settings.fixset.horizon)
    found = orbit_amalgam(base, phi, f, horizon)
    write_ums(args.output, found.result)
    result = CommandResult(lines=[f"orbit points {found.result.n} merges {len(found.merges)}"])
    result.add(*(f"y {i} {found.y(i)}" for i in range(-horizon, horizon + 1)))
    result.add(*(m.report_line() for m in found.merges))
    return result.wrote(args.output)


# fixed points

def cmd_fixset_build(args, settings: Settings) -> CommandResult:
    system = _system(args)
    level = fixed_set_level(
        system,
        _pick(args.grid, settings.tower.grid),
        _pick(args.support, settings.tower.max_support),
        _pick(args.horizon, settings.fixset.horizon),
        max_points=args.budget,
        exclude=_pick(args.exclude, settings.fixset.exclude_powers),
    )
    write_ums(args.output, level.system.space)
    perm_out = args.perm_out or str(Path(args.output).with_suffix('.perm'))
    write_perm(perm_out, level.system.phi, level.system.base)
    return CommandResult(lines=level.report_lines()).wrote(args.output).wrote(perm_out)


def cmd_fixset_check(args, settings: Settings) -> CommandResult:
    report = property_star_check(_system(args), args.eps, _pick(args.exclude, settings.fixset.exclude_powers))
    return CommandResult(lines=[report.report_line()]).fail_unless(report.passed)


def cmd_migrate(args, settings: Settings) -> CommandResult:
    found = migration_map(_system(args), args.z, args.points, args.values)
    result = CommandResult(lines=[f"migrate rho {found.rho} orbit {_fmt(found.orbit)}"])
    tail = found.g.values[len(found.orbit):]
    result.add(*(f"point {p} case {c} value {v}" for p, c, v in zip(found.points, found.cases, tail)))
    return result


# sequences

def cmd_inline(args, settings: Settings) -> CommandResult:
    seq = read_seq(args.seq)
    report = eps_good_inline(seq, args.eps)
    result = CommandResult(lines=[report.report_line()])
    if args.delta is not None:
        result.add(condition_c_check(seq, args.delta).report_line())
    if args.extract:
        found = extract_inline_subsequence(seq, _pick(args.delta, 1))
        result.add(f"extract eps {found.eps} order {_fmt(found.sequence.order)}")
    return result.fail_unless(report.holds)


def cmd_spread(args, settings: Settings) -> CommandResult:
    spread = euclid_spread(args.n)
    write_ums(args.output, spread)
    margins = spread_margins(spread)
    low = min(margins) if margins else 0
    return CommandResult(lines=[f"spread points {spread.n} margin {low}"]).wrote(args.output)


def cmd_nat(args, settings: Settings) -> CommandResult:
    write_ums(args.output, nat_line(args.n))
    return CommandResult(lines=[f"nat points {args.n}"]).wrote(args.output)


def cmd_fa(args, settings: Settings) -> CommandResult:
    spread = read_ums(args.space)
    indices = range(1, spread.n)
    if args.subsets:
        subsets = args.subsets
    else:
        subsets = [list(c) for size in range(1, spread.n) for c in combinations(indices, size)]
    family = fa_family(spread, subsets)
    closest = min((sup_distance(f, g) for f, g in combinations(family, 2)), default=None)
    separated = closest is None or closest >= 1
    lines = [f"fa maps {len(family)} min {'-' if closest is None else closest}",
             f"separated {str(separated).lower()}"]
    return CommandResult(lines=lines).fail_unless(separated)


# graphs

def cmd_graph_encode(args, settings: Settings) -> CommandResult:
    space = graph_to_metric(read_graph(args.graph))
    write_ums(args.output, space)
    return CommandResult(lines=[f"graph points {space.n} diameter {space.diameter()}"]).wrote(args.output)


def cmd_graph_iso(args, settings: Settings) -> CommandResult:
    a = graph_to_metric(read_graph(args.first))
    b = graph_to_metric(read_graph(args.second))
    iso = find_isometry(a, b)
    return CommandResult(lines=['iso ' + _fmt(f"{u}:{v}" for u, v in iso.pairs)])


def _tower_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--grid', type=rational_list, help='Comma-separated grid values, e.g. 1/2,1,2')
    parser.add_argument('--support', type=int, help='Largest support size')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='ums', description='Exact finite Urysohn-space toolkit')
    parser.add_argument('--config', help='YAML settings file (default: ums.yaml)')
    parser.add_argument('-v', '--verbose', action='store_true', help='Log progress to stderr')
    commands = parser.add_subparsers(dest='command', required=True)

    p = commands.add_parser('validate', help='Check a UMS file')
    p.add_argument('space')
    p.set_defaults(handler=cmd_validate)

    katetov = commands.add_parser('katetov', help='Katetov maps').add_subparsers(dest='action', required=True)
    p = katetov.add_parser('check')
    p.add_argument('kmap')
    p.set_defaults(handler=cmd_katetov_check)
    p = katetov.add_parser('extend')
    p.add_argument('space')
    p.add_argument('--subset', type=int_list, required=True)
    p.add_argument('--values', type=rational_list, required=True)
    p.add_argument('-o', '--output')
    p.set_defaults(handler=cmd_katetov_extend)
    p = katetov.add_parser('enumerate')
    p.add_argument('space')
    _tower_flags(p)
    p.add_argument('--on-grid', action='store_true', help='Keep maps with every value on the grid')
    p.set_defaults(handler=cmd_katetov_enumerate)
    p = katetov.add_parser('interval')
    p.add_argument('space')
    p.add_argument('--subset', type=int_list, required=True)
    p.add_argument('--values', type=rational_list, required=True)
    p.add_argument('--point', type=int, required=True)
    p.set_defaults(handler=cmd_katetov_interval)
    p = katetov.add_parser('saturate')
    p.add_argument('kmap')
    p.add_argument('--eps', type=rational_arg, default=0)
    p.add_argument('--exhaustive-limit', type=int)
    p.set_defaults(handler=cmd_katetov_saturate)

    tower = commands.add_parser('tower', help='Katetov tower').add_subparsers(dest='action', required=True)
    p = tower.add_parser('build')
    p.add_argument('seed')
    _tower_flags(p)
    p.add_argument('--depth', type=int)
    p.add_argument('--budget', type=int)
    p.add_argument('-o', '--output', default='tower.ums')
    p.add_argument('--prov', help='Provenance output (default: output with .prov suffix)')
    p.set_defaults(handler=cmd_tower_build)
    p = tower.add_parser('audit')
    p.add_argument('space')
    p.add_argument('--prov', help='Provenance file; audits the top level against its witness level')
    p.add_argument('--grid', type=rational_list)
    p.add_argument('--k', type=int, default=2)
    p.add_argument('--eps', type=rational_arg, default=0)
    p.add_argument('--workers', type=int)
    p.set_defaults(handler=cmd_tower_audit)
    p = tower.add_parser('extend')
    p.add_argument('space')
    p.add_argument('kmap')
    p.add_argument('--prov')
    p.add_argument('-o', '--output', required=True)
    p.add_argument('--prov-out')
    p.set_defaults(handler=cmd_tower_extend)

    p = commands.add_parser('bnf', help='Back-and-forth extension')
    p.add_argument('space')
    p.add_argument('--map', type=pair_list, default=[])
    p.add_argument('--targets', type=int_list, default=[])
    p.add_argument('--back', type=int_list, default=[])
    p.add_argument('--realize', action='store_true', help='Add witness points when stuck')
    p.add_argument('-o', '--output')
    p.set_defaults(handler=cmd_bnf)

    p = commands.add_parser('amalgam', help='Free amalgam of two spaces')
    p.add_argument('left')
    p.add_argument('right')
    p.add_argument('glue')
    p.add_argument('-o', '--output', required=True)
    p.set_defaults(handler=cmd_amalgam)

    p = commands.add_parser('double', help='Two copies glued over a subset, with the swap')
    p.add_argument('space')
    p.add_argument('--glued', type=int_list, required=True)
    p.add_argument('-o', '--output', required=True)
    p.add_argument('--perm-out')
    p.set_defaults(handler=cmd_double)

    p = commands.add_parser('orbit', help='Orbit amalgam of a one-point extension')
    p.add_argument('space')
    p.add_argument('perm')
    p.add_argument('kmap')
    p.add_argument('--horizon', type=int)
    p.add_argument('-o', '--output', required=True)
    p.set_defaults(handler=cmd_orbit)

    fixset = commands.add_parser('fixset', help='Isometries with a fixed set').add_subparsers(dest='action',
                                                                                             required=True)
    p = fixset.add_parser('build')
    p.add_argument('space')
    p.add_argument('perm')
    _tower_flags(p)
    p.add_argument('--horizon', type=int)
    p.add_argument('--budget', type=int)
    p.add_argument('--exclude', type=int)
    p.add_argument('-o', '--output', required=True)
    p.add_argument('--perm-out')
    p.set_defaults(handler=cmd_fixset_build)
    p = fixset.add_parser('check')
    p.add_argument('space')
    p.add_argument('perm')
    p.add_argument('--eps', type=rational_arg, default=0)
    p.add_argument('--exclude', type=int)
    p.set_defaults(handler=cmd_fixset_check)

    p = commands.add_parser('migrate', help='Migration map of an orbit')
    p.add_argument('space')
    p.add_argument('perm')
    p.add_argument('--z', type=int, required=True)
    p.add_argument('--points', type=int_list, required=True)
    p.add_argument('--values', type=rational_list, required=True)
    p.set_defaults(handler=cmd_migrate)

    p = commands.add_parser('inline', help='Inline and condition (c) checks on a sequence')
    p.add_argument('seq')
    p.add_argument('--eps', type=rational_arg, default=0)
    p.add_argument('--delta', type=rational_arg)
    p.add_argument('--extract', action='store_true')
    p.set_defaults(handler=cmd_inline)

    p = commands.add_parser('spread', help='Write a spread family')
    p.add_argument('n', type=int)
    p.add_argument('-o', '--output', required=True)
    p.set_defaults(handler=cmd_spread)

    p = commands.add_parser('nat', help='Write the integer line 0..n-1')
    p.add_argument('n', type=int)
    p.add_argument('-o', '--output', required=True)
    p.set_defaults(handler=cmd_nat)

    p = commands.add_parser('fa', help='Separation of the f_A family on a spread')
    p.add_argument('space')
    p.add_argument('--subsets', type=subset_list, help="Semicolon-separated subsets, e.g. '1,2;3'")
    p.set_defaults(handler=cmd_fa)

    graph = commands.add_parser('graph', help='Graph metrics').add_subparsers(dest='action', required=True)
    p = graph.add_parser('encode')
    p.add_argument('graph')
    p.add_argument('-o', '--output', required=True)
    p.set_defaults(handler=cmd_graph_encode)
    p = graph.add_parser('iso')
    p.add_argument('first')
    p.add_argument('second')
    p.set_defaults(handler=cmd_graph_iso)

    p = commands.add_parser('trace', help='Distance trace of a point')
    p.add_argument('space')
    p.add_argument('--subset', type=int_list, required=True)
    p.add_argument('--point', type=int, required=True)
    p.set_defaults(handler=cmd_trace)

    p = commands.add_parser('unique', help='Uniqueness set check')
    p.add_argument('space')
    p.add_argument('--subset', type=int_list, required=True)
    p.add_argument('--nice-values', type=rational_list, help='Add the sphere of this nice map to the subset')
    p.set_defaults(handler=cmd_unique)

    p = commands.add_parser('nice', help='Nice-map check and pair separation')
    p.add_argument('space')
    p.add_argument('--subset', type=int_list, required=True)
    p.add_argument('--values', type=rational_list, required=True)
    p.add_argument('--separate', type=int_list, help='x,y with equal traces to separate')
    p.add_argument('--alpha', type=rational_arg)
    p.add_argument('-o', '--output')
    p.set_defaults(handler=cmd_nice)

    p = commands.add_parser('avoid', help='Avoidance extension')
    p.add_argument('space')
    p.add_argument('--targets', type=int_list, required=True)
    p.add_argument('--values', type=rational_list, required=True)
    p.add_argument('--net', type=int_list, required=True)
    p.add_argument('--M', type=rational_arg, required=True)
    p.add_argument('--eps', type=rational_arg, required=True)
    p.set_defaults(handler=cmd_avoid)

    return parser


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger().setLevel(logging.INFO if verbose else logging.WARNING)


def run(argv: Sequence[str]) -> CommandResult:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as e:
        return CommandResult(e.code if isinstance(e.code, int) else USAGE)
    _configure_logging(args.verbose)
    try:
        settings = load_settings(args.config)
        result = args.handler(args, settings)
    except MetricError as e:
        logger.info(f"{type(e).__name__}: {e}")
        return CommandResult.from_error(e)
    except Exception as e:
        logger.error(f"Command failed: {e}")
        return CommandResult(FAILED, [f"Error {e}"])
    return result


def main(argv: Optional[Sequence[str]] = None) -> None:
    result = run(sys.argv[1:] if argv is None else argv)
    for line in result.lines:
        print(line)
    color = os.environ.get('UMS_COLOR', '1') != '0'
    for mark in result.decorated(color):
        print(mark, file=sys.stderr)
    sys.exit(result.exit_code)


if __name__ == '__main__':
    main()
