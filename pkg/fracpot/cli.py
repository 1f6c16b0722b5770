"""Command line: one subcommand per toolkit area, tables written as CSV or JSON."""
from argparse import ArgumentParser
import json
import logging
import sys
import numpy as np
import pandas as pd
from .config import Config
from .criteria import evaluate_criteria
from .discrete import DiscreteKernelSpace, read_space
from .discrete.checks import minimality_bound, ptolemy_check, quasi_metric_constant
from .discrete.factory import get_space_factory
from .discrete.lp import wmp_constant
from .errors import ConfigError, FracpotError
from .green import RieszGreen, euclidean_heat_kernel, green_subordinated, volume_tail
from .iterate import c_qk_root, c_qk_root_bound, run_iteration
from .iterate.grid import ForcingSpec, build_grid_problem
from .iterate.picard import equivalence_check, growth_ratios, picard_sweep
from .profiles import ModelParams
from .scenario import ScenarioConfig, load_scenario

logger = logging.getLogger(__name__)

KAPPA_FLAG = 100.


def _spaces(config: ScenarioConfig) -> list[tuple[int, DiscreteKernelSpace]]:
    spec = config.discrete
    if spec.space_file is not None:
        return [(spec.seed, read_space(spec.space_file))]
    try:
        factory = get_space_factory(spec.generator)
    except ValueError as err:
        raise ConfigError(str(err)) from err
    return [(spec.seed + i, factory(seed=spec.seed + i, **spec.params)) for i in range(spec.count)]


def cmd_criteria(config: ScenarioConfig, threads: int = 1) -> list[dict]:
    params: ModelParams = config.model.params()
    vol = config.build_volume()
    meas = config.build_measure(vol)
    report = evaluate_criteria(vol, meas, params, config.grid('x'), config.grid('r'), threads=threads)
    record = {'scenario': config.name, 'n': params.n, 'alpha': params.alpha, 'q': params.q, 'gamma': params.gamma}
    record.update(report.summary_record())
    return [record]


def cmd_green(config: ScenarioConfig, threads: int = 1) -> list[dict]:
    params = config.model.params()
    params.require_transient()
    d_grid = config.grid('d', np.logspace(-1, 1, 9))
    vol = config.build_volume()
    heat = euclidean_heat_kernel(params.n)
    riesz = RieszGreen(params.n, params.alpha)(d_grid)
    subord = np.array([green_subordinated(heat, params.alpha, d).value for d in d_grid])
    volest = volume_tail(vol, params.alpha, d_grid)
    records = []
    for d, g_r, g_s, g_v in zip(d_grid, riesz, subord, volest):
        # volume estimate over the kernel, the direction comparison_ratio reports
        ratios = (g_v / g_r, g_v / g_s)
        records.append({
            'd': float(d),
            'g_riesz': float(g_r),
            'g_subord': float(g_s),
            'g_volest': float(g_v),
            'ratio_lo': float(min(ratios)),
            'ratio_hi': float(max(ratios)),
        })
    return records


def cmd_kernel_check(config: ScenarioConfig, threads: int = 1) -> list[dict]:
    records = []
    for seed, space in _spaces(config):
        wmp = wmp_constant(space, seed=seed, threads=threads)
        qm = quasi_metric_constant(space)
        ptolemy = ptolemy_check(space, qm.kappa)
        minimal = minimality_bound(space, 0, config.model.a)
        record = {'seed': seed, 'points': space.size}
        record.update(wmp.as_record())
        record.update({
            'kappa': qm.kappa,
            'kappa_witness': ' '.join(map(str, qm.witness)) if qm.witness else None,
            'kappa_flagged': qm.kappa > KAPPA_FLAG,
            'b_le_kappa': wmp.constant_b <= qm.kappa * (1 + Config.CHECK_RTOL),
            'ptolemy_holds': ptolemy.holds,
            'ptolemy_constant': ptolemy.minimal_constant,
            'kappa_squared': ptolemy.kappa_squared,
            'minimality_ratio': minimal.ratio,
            'minimality_bound': minimal.bound,
            'minimality_holds': minimal.holds,
        })
        if qm.kappa > KAPPA_FLAG:
            logger.warning("space with seed %d is far from a quasi-metric kernel: kappa=%g", seed, qm.kappa)
        records.append(record)
    return records


def cmd_iterate(config: ScenarioConfig, threads: int = 1) -> list[dict]:
    q = config.iterate.q if config.iterate.q is not None else config.model.q
    records = []
    for seed, space in _spaces(config):
        trace = run_iteration(space, q, config.iterate.depth)
        if trace.truncated:
            logger.warning("iteration trace for seed %d truncated at k=%d", seed, trace.depth)
        for row in trace.as_records(space.labels):
            row = {'seed': seed, 'b': trace.b, **row}
            row['c_qk_root'] = c_qk_root(q, row['k'])
            row['c_qk_root_bound'] = c_qk_root_bound(q)
            records.append(row)
    return records


def cmd_solve(config: ScenarioConfig, threads: int = 1) -> list[dict]:
    params = config.model.params()
    spec = config.picard
    vol = config.build_volume()
    meas = config.build_measure(vol)
    forcing = ForcingSpec(spec.amplitude, spec.eta_radius)
    radii = sorted(spec.radii)
    problems = [
        build_grid_problem(params.n, params.alpha, params.q, params.gamma, radius=r, h=spec.h, eta_spec=forcing,
                           measure=meas, max_cells=spec.max_cells, threads=threads, cache_dir=spec.cache_dir)
        for r in radii
    ]
    results = picard_sweep(problems, spec.max_iters, spec.tol, params.a)
    growth = [None] + growth_ratios(r.trend_c for r in results)
    records = []
    for problem, result, ratio in zip(problems, results, growth):
        record = {'radius': problem.radius, 'h': problem.h, 'cells': problem.cells}
        record.update(result.as_record())
        record['trend_growth'] = ratio
        records.append(record)
    if spec.equivalence and spec.amplitude > 0:
        report = equivalence_check(problems[-1], params.a, cache_dir=spec.cache_dir,
                                   max_iters=spec.max_iters, tol=spec.tol)
        records[-1].update({f'equiv_{k}': v for k, v in report.as_record().items() if k != 'radius'})
    return records


COMMANDS = {
    'criteria': cmd_criteria,
    'green': cmd_green,
    'kernel-check': cmd_kernel_check,
    'iterate': cmd_iterate,
    'solve': cmd_solve,
}


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialise {type(value).__name__}")


def _config_json(config: ScenarioConfig) -> str:
    return json.dumps(config.to_dict(), sort_keys=True, separators=(',', ':'), default=_json_default)


def format_records(records: list[dict], config: ScenarioConfig, fmt: str) -> str:
    if fmt == 'json':
        payload = {
            'schema_version': Config.SCHEMA_VERSION,
            'config': config.to_dict(),
            'version': Config.TOOL_VERSION,
            'records': records,
        }
        return json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + '\n'
    header = [
        f'# schema_version={Config.SCHEMA_VERSION}',
        f'# version={Config.TOOL_VERSION}',
        f'# config={_config_json(config)}',
    ]
    table = pd.DataFrame.from_dict(records).to_csv(index=False, float_format='%.17g', lineterminator='\n')
    return '\n'.join(header) + '\n' + table


def write_records(records: list[dict], config: ScenarioConfig, fmt: str, path=None):
    text = format_records(records, config, fmt)
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, 'w', newline='') as fh:
            fh.write(text)
        logger.info("wrote %d records to %s", len(records), path)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog='fracpot', description='Fractional Green kernels and existence criteria')
    sub = parser.add_subparsers(dest='command', required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument('--config', required=True, help='scenario TOML file')
        cmd.add_argument('--out', default=None, help='output file, stdout when omitted')
        cmd.add_argument('--format', choices=('csv', 'json'), default=None)
        cmd.add_argument('--seed', type=int, default=None, help='overrides discrete.seed')
        cmd.add_argument('--threads', type=int, default=1)
        cmd.add_argument('-v', '--verbose', action='count', default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format='%(levelname)s %(name)s: %(message)s')
    logging.captureWarnings(True)
    try:
        config = load_scenario(args.config)
        if args.seed is not None:
            config = config.with_seed(args.seed)
        if args.threads < 1:
            raise ConfigError(f"--threads must be at least 1, got {args.threads}")
        records = COMMANDS[args.command](config, threads=args.threads)
        fmt = args.format or config.output.format
        write_records(records, config, fmt, args.out if args.out is not None else config.output.path)
    except FracpotError as err:
        logger.error("%s", err)
        return err.exit_code
    return 0
