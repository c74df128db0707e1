"""
Named experiment presets.

Each preset expands to one or more scenario dicts in scenario-file form, so presets go
through exactly the same parsing, defaults, overrides and validation as user files.
"""
from typing import Callable, Dict, Iterable, List

from config import DEFAULT_HORIZON, DEFAULT_MONTE_CARLO_RUNS, ERROR_MESSAGES, LAMBDA_GRID, SWEEP_ESTIMATORS
from sim.scenario import ScenarioConfig
from util.errors import ConfigurationError
from cli.scenario_loader import apply_overrides, scenario_from_dict

CONVERGENCE_LAMBDAS = (0.2, 0.5, 0.8, 1.0)
CONVERGENCE_ESTIMATORS = ('conral', 'rkf', 'ga-rkf')

SWITCH_TIME = 15.0
"""Agent 5 leaves and three one-way links fail at this time (seconds)"""


def _base(name: str, estimator='none', runs: int = DEFAULT_MONTE_CARLO_RUNS, **sections) -> dict:
    data = {
        'name': name,
        'graph': {'library': 'graph1'},
        'trajectory': 'default',
        'control': {'law': 'static-leaders'},
        'estimator': {'type': estimator} if isinstance(estimator, str) else estimator,
        'loss_model': {'type': 'none'},
        'noise': {'sigma_v': 0.1},
        'sim': {'dt': 0.01, 'horizon': DEFAULT_HORIZON, 'monte_carlo_runs': runs},
    }
    data.update(sections)
    return data


def ci_bound() -> List[dict]:
    """Indicator bound check: nominal graph, no estimator, many runs"""
    return [_base('ci-bound', runs=1000)]


def random_loss_convergence() -> List[dict]:
    return [
        _base(f'random-loss-convergence/{name}/lambda={lam:g}', name,
              loss_model={'type': 'bernoulli', 'lambda': lam})
        for name in CONVERGENCE_ESTIMATORS
        for lam in CONVERGENCE_LAMBDAS
    ]


def lambda_sweep() -> List[dict]:
    return [
        _base(f'lambda-sweep/{name}/lambda={lam:g}', name,
              loss_model={'type': 'bernoulli', 'lambda': lam})
        for name in SWEEP_ESTIMATORS
        for lam in LAMBDA_GRID
    ]


def switching_schedule(switch_time: float = SWITCH_TIME) -> dict:
    """Nominal topology, then agent 5 gone and links 4->1, 4->6, 7->3 lost until the end of the run"""
    return {
        'type': 'schedule',
        'intervals': [
            {'start': 0.0, 'end': switch_time, 'label': 'nominal'},
            {
                'start': switch_time,
                'drop_nodes': [5],
                'drop_edges': [[4, 1], [4, 6], [7, 3]],
                'label': 'agent 5 departed, one-way losses',
            },
        ],
    }


def switching_departure() -> List[dict]:
    """Topology switches that destabilize the estimator-free law

    The formation holds a static target so the outcome reflects the switch alone: after
    it the measured follower dynamics lose stability, and only the reconstructed edges
    keep the formation converged. Follower 7 keeps exactly two neighbours, where a raw
    local transform reproduces its measurements exactly and carries no feedback, so
    GA-RKF builds its pseudo-observations from the consensus transform here.
    """
    estimators = {
        'none': 'none',
        'conral': 'conral',
        'rkf': 'rkf',
        'ga-rkf': {'type': 'ga-rkf', 'geometry_source': 'consensus'},
    }
    return [
        _base(f'switching-departure/{name}', estimator, trajectory='static',
              loss_model=switching_schedule())
        for name, estimator in estimators.items()
    ]


def noiseless_baseline() -> List[dict]:
    """Static target, exact measurements and a single run"""
    return [
        _base('noiseless-baseline', runs=1, trajectory='static', noise={'sigma_v': 0.0}),
    ]


PRESETS: Dict[str, Callable[[], List[dict]]] = {
    'ci-bound': ci_bound,
    'random-loss-convergence': random_loss_convergence,
    'lambda-sweep': lambda_sweep,
    'switching-departure': switching_departure,
    'noiseless-baseline': noiseless_baseline,
}


def available_presets() -> List[str]:
    return list(PRESETS)


def describe_presets() -> Dict[str, str]:
    return {name: (factory.__doc__ or '').strip().splitlines()[0] if factory.__doc__ else name
            for name, factory in PRESETS.items()}


def preset_dicts(name: str, overrides: Iterable[str] = ()) -> List[dict]:
    if name not in PRESETS:
        raise ConfigurationError(
            ERROR_MESSAGES['unknown_preset'].format(name=name, available=', '.join(available_presets()))
        )
    overrides = list(overrides)
    return [apply_overrides(data, overrides) for data in PRESETS[name]()]


def load_preset(name: str, overrides: Iterable[str] = ()) -> List[ScenarioConfig]:
    """Scenarios of a preset, overrides applied to each

    Raises:
        ConfigurationError: Unknown preset
        ScenarioValidationError: An override made a scenario invalid
    """
    return [scenario_from_dict(data, data['name']) for data in preset_dicts(name, overrides)]
