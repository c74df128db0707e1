"""
Scenario files, presets and experiment execution
"""
from .scenario_loader import apply_overrides, load_scenario, parse_override, read_json, save_scenario, scenario_from_dict
from .presets import PRESETS, available_presets, load_preset, preset_dicts, switching_schedule
from .experiment import lambda_table, metrics_frame, run_experiment, scenario_summary, write_scenario_outputs

__all__ = [
    # Scenario files
    'apply_overrides',
    'load_scenario',
    'parse_override',
    'read_json',
    'save_scenario',
    'scenario_from_dict',

    # Presets
    'PRESETS',
    'available_presets',
    'load_preset',
    'preset_dicts',
    'switching_schedule',

    # Experiments
    'lambda_table',
    'metrics_frame',
    'run_experiment',
    'scenario_summary',
    'write_scenario_outputs',
]
