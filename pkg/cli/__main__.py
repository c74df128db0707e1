"""Entry point for running the simulator as a module: python -m cli"""
import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from config import (
    JSON_EXTENSION,
    PROJECT_NAME,
    SUCCESS_MESSAGES,
    error_response,
    get_scenario_path,
    success_response,
)
from control.laws import stability_check
from formation.library import available_frameworks, get_framework
from graph.nominal import algebraic_connectivity
from sim.scenario import ScenarioConfig
from util.errors import AffineSwarmError, ScenarioValidationError
from util.logger_module import attach_file_handler, log_exception, log_separator, logger
from cli.experiment import run_experiment
from cli.presets import PRESETS, describe_presets, load_preset
from cli.scenario_loader import dump_problems, load_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='python -m cli',
        description='Affine formation control under sensing-graph losses: run and validate scenarios',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=(
            "Examples:\n"
            "  python -m cli list-presets\n"
            "  python -m cli run noiseless-baseline --out Results/baseline\n"
            "  python -m cli run lambda-sweep --runs 10 --override graph.library=graph2\n"
            "  python -m cli validate config/scenarios/graph1_static.json\n"
        ),
    )
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='Run a preset or a scenario file')
    run.add_argument('target', help='Preset name, scenario file, or name of a shipped scenario')
    run.add_argument('--out', type=str, default=None, help='Output folder (default: Results/<timestamp>)')
    run.add_argument('--seed', type=int, default=None, help='Root seed (overrides sim.seed)')
    run.add_argument('--runs', type=int, default=None, help='Monte Carlo runs (overrides sim.monte_carlo_runs)')
    run.add_argument('--stride', type=int, default=None, help='Metric logging stride (overrides sim.log_stride)')
    run.add_argument('--override', action='append', default=[], metavar='KEY=VALUE',
                     help='Dotted-path override, e.g. loss_model.lambda=0.5 (repeatable)')
    run.add_argument('--workers', type=int, default=None, help='Upper bound on worker processes')
    run.add_argument('--excel', action='store_true', help='Also write summary.xlsx')
    run.add_argument('--log-file', action='store_true', help='Also write the log to logs/<timestamp>.log')

    validate = sub.add_parser('validate', help='Validate a scenario file or preset and print a JSON report')
    validate.add_argument('target', help='Preset name or scenario file')
    validate.add_argument('--override', action='append', default=[], metavar='KEY=VALUE')

    sub.add_parser('list-presets', help='List presets and shipped frameworks')
    return parser


def _overrides(args) -> List[str]:
    overrides = list(args.override)
    for flag, key in (('seed', 'sim.seed'), ('runs', 'sim.monte_carlo_runs'), ('stride', 'sim.log_stride')):
        value = getattr(args, flag, None)
        if value is not None:
            overrides.append(f'{key}={value}')
    return overrides


def resolve_target(target: str, overrides: List[str]) -> List[ScenarioConfig]:
    """Preset name, scenario file path, or shipped scenario name -> scenarios"""
    if target in PRESETS:
        return load_preset(target, overrides)
    path = Path(target)
    if not path.is_file() and path.suffix in ('', JSON_EXTENSION):
        shipped = get_scenario_path(target)
        if shipped.is_file():
            path = shipped
    return [load_scenario(path, overrides)]


def validation_report(cfg: ScenarioConfig) -> dict:
    """Stress spectrum, connectivity and stability of a valid scenario"""
    resolved = cfg.resolve()
    stress = resolved.stress_matrix()
    law = cfg.control.build()
    stability = stability_check(stress, cfg.sim.dt, law, cfg.leaders)
    return {
        'scenario': cfg.name,
        'agents': cfg.graph.n_nodes,
        'edges': len(cfg.graph.undirected_edges),
        'leaders': [i + 1 for i in cfg.leaders],
        'stress_eigenvalues': stress.spectrum.tolist(),
        'smallest_positive_eigenvalue': stress.smallest_positive_eigenvalue(cfg.dim),
        'algebraic_connectivity': algebraic_connectivity(cfg.graph),
        'stability': stability.as_dict(),
        'n_steps': cfg.sim.n_steps,
    }


def cmd_validate(args) -> int:
    try:
        scenarios = resolve_target(args.target, list(args.override))
        reports = [validation_report(cfg) for cfg in scenarios]
        ok = all(report['stability']['ok'] for report in reports)
        message = SUCCESS_MESSAGES['scenario_valid'].format(name=args.target)
        response = success_response(reports, message=message) if ok else error_response(
            'unstable', message=f'{args.target}: control law fails the stability check', data=reports
        )
    except ScenarioValidationError as e:
        response = error_response(e, message=str(e).splitlines()[0], **dump_problems(e))
    except AffineSwarmError as e:
        response = error_response(e)
    print(json.dumps(response, indent=2))
    return 0 if response['success'] else 1


def cmd_list_presets(_args) -> int:
    frameworks = {}
    for name in available_frameworks():
        framework = get_framework(name)
        frameworks[name] = {
            'agents': framework.graph.n_nodes,
            'edges': len(framework.graph.undirected_edges),
            'leaders': [i + 1 for i in framework.leaders],
            'algebraic_connectivity': algebraic_connectivity(framework.graph),
            'description': framework.description,
        }
    print(json.dumps(success_response({'presets': describe_presets(), 'frameworks': frameworks}), indent=2))
    return 0


def cmd_run(args) -> int:
    if args.log_file:
        logger.info(f"Log file: {attach_file_handler()}")
    log_separator()
    logger.info(f"{PROJECT_NAME} - run {args.target}")
    log_separator()
    try:
        scenarios = [cfg.resolve() for cfg in resolve_target(args.target, _overrides(args))]
        for cfg in scenarios:
            report = stability_check(cfg.stress_matrix(), cfg.sim.dt, cfg.control.build(), cfg.leaders)
            logger.info(f"{cfg.name}: {report.message}")
        run_experiment(scenarios, args.out, args.workers, args.excel)
    except ScenarioValidationError as e:
        logger.error(f"[ERROR] {e}")
        return 2
    except AffineSwarmError as e:
        logger.error(f"[ERROR] {e}")
        return 1
    except OSError as e:
        log_exception("Writing experiment outputs", e)
        return 1
    except Exception as e:
        log_exception(f"Experiment {args.target}", e)
        return 1
    return 0


COMMANDS = {
    'run': cmd_run,
    'validate': cmd_validate,
    'list-presets': cmd_list_presets,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
