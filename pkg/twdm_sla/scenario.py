""" Scenario and sweep definitions.

A scenario file is JSON whose keys are scenario config keys. The axis keys (CHANNEL_CONFIGS, TUNING_TIMES_US,
DISTRIBUTIONS, ALGORITHMS, LOADS, SLA_FRACTIONS) may hold one value or a list, every combination is one cell.
"""

import re
import json
import itertools
from collections import namedtuple
import numpy as np
from .model import sla_table_from_config
from .traffic import DISTRIBUTIONS, SLA_ASSIGNMENTS
from .utils import init_config, check_config_keys, ConfigError, ScenarioParseError

CHANNEL_PRESETS = {'8x25G': (8, 25.0), '4x50G': (4, 50.0), '1x200G': (1, 200.0)}
ALGORITHMS = ['dtwa', 'swa', 'oracle']

# Sweep axes in row order, outermost first
AXES = ['CHANNEL_CONFIGS', 'TUNING_TIMES_US', 'DISTRIBUTIONS', 'ALGORITHMS', 'LOADS', 'SLA_FRACTIONS']

Cell = namedtuple('Cell', ['channel_config', 'n_channels', 'line_rate_gbps', 'tuning_time_us', 'distribution',
                           'algorithm', 'load', 'sla_fraction'])


def get_default_scenario_config():
    """Default scenario config values"""
    default_config = {
        'NAME': 'scenario',
        'CHANNEL_CONFIGS': ['8x25G'],  # Valid: '8x25G', '4x50G', '1x200G', '<W>x<rate>G' or 'custom'
        'N_CHANNELS': None,  # Used by 'custom'
        'LINE_RATE_GBPS': None,  # Used by 'custom'
        'TUNING_TIMES_US': [0.0],
        'DISTRIBUTIONS': ['uniform'],  # Valid: 'uniform', 'poisson', 'zipf_mandelbrot', 'pareto'
        'ALGORITHMS': ['dtwa'],  # Valid: 'dtwa', 'swa', 'oracle'
        'LOADS': [0.2, 0.5, 0.8],
        'SLA_FRACTIONS': [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
        'FRAMES': 1000,
        'REPETITIONS': 1,
        'SEED': 0,
        'N_VNOS': 5,
        'N_ONUS': 64,
        'FRAME_US': 125.0,
        'GUARD_TIME_US': 0.21,
        'SLA_CLASSES': [[0, 'best_effort'], [1, 12.5, 0.90], [2, 25.0, 0.95]],  # [id, max latency us, compliance]
        'SLA_ASSIGNMENT': 'round_robin',  # Valid: 'round_robin', 'per_vno'
        'REQUEST_SPAN': None,  # If None, min(1, 1.5 - load)
        'BURST_REFERENCE_GBPS': None,  # Line rate the burst durations hold at. If None, fixed durations
        'ARRIVAL_RANGE_AU': 20,
        'POISSON_LAMBDA': 10.0,
        'ZIPF_S': 2.0,
        'ZIPF_Q': 0.0,
        'PARETO_ALPHA': 1.0,
        'ONU_CHANNEL_MAP': None,  # SWA fixed channels. If None, round robin by onu id
        'CHECK_CONSTRAINTS': False,  # Verify every merged frame
        'PRINT_CONFIG': False,
    }
    return default_config


def parse_scenario_text(text, name='<string>'):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ScenarioParseError(name, err.lineno, err.colno, err.msg)
    if not isinstance(data, dict):
        raise ScenarioParseError(name, 1, 1, 'top level must be an object of scenario fields')
    return data


def load_scenario_file(file):
    """Reads a scenario / sweep JSON file. Syntax errors carry line and column."""
    try:
        with open(file) as f:
            text = f.read()
    except OSError as err:
        raise ConfigError('Cannot read scenario file %s: %s' % (file, err))
    return parse_scenario_text(text, file)


def make_scenario(config=None):
    """Merges with defaults, wraps scalar axis values in lists and validates."""
    default = get_default_scenario_config()
    config = init_config(config, default, 'Scenario')
    check_config_keys(config, default, 'scenario')
    for axis in AXES:
        if not isinstance(config[axis], (list, tuple)):
            config[axis] = [config[axis]]
        else:
            config[axis] = list(config[axis])
    validate_scenario(config)
    return config


def parse_channel_config(name, config=None):
    """(W, per channel line rate) of a preset, a '<W>x<rate>G' string or 'custom'."""
    if name in CHANNEL_PRESETS:
        return CHANNEL_PRESETS[name]
    if name == 'custom':
        if config is None or config.get('N_CHANNELS') is None or config.get('LINE_RATE_GBPS') is None:
            raise ConfigError("CHANNEL_CONFIGS 'custom' needs N_CHANNELS and LINE_RATE_GBPS")
        return int(config['N_CHANNELS']), float(config['LINE_RATE_GBPS'])
    match = re.match(r'^(\d+)x(\d+(?:\.\d+)?)G$', str(name))
    if match is None:
        raise ConfigError('CHANNEL_CONFIGS: cannot parse %s. Valid: %s, <W>x<rate>G, custom'
                          % (name, ', '.join(CHANNEL_PRESETS.keys())))
    return int(match.group(1)), float(match.group(2))


def _check_numbers(config, field, low, high, low_open=False):
    for v in config[field]:
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigError('%s: %r is not a number' % (field, v))
        if (v <= low if low_open else v < low) or (high is not None and v > high):
            raise ConfigError('%s: %s outside %s%s, %s]' % (field, v, '(' if low_open else '[', low, high))


def validate_scenario(config):
    """Raises ConfigError naming the first invalid field."""
    for axis in AXES:
        if len(config[axis]) == 0:
            raise ConfigError('%s: sweep axis is empty' % axis)
    for name in config['CHANNEL_CONFIGS']:
        w, rate = parse_channel_config(name, config)
        if w < 1 or rate <= 0:
            raise ConfigError('CHANNEL_CONFIGS: %s needs W >= 1 and a positive line rate' % name)
    _check_numbers(config, 'TUNING_TIMES_US', 0, None)
    _check_numbers(config, 'LOADS', 0, 1, low_open=True)
    _check_numbers(config, 'SLA_FRACTIONS', 0, 1)
    for d in config['DISTRIBUTIONS']:
        if d not in DISTRIBUTIONS:
            raise ConfigError('DISTRIBUTIONS: unknown distribution %s. Valid: %s' % (d, ', '.join(DISTRIBUTIONS)))
    for a in config['ALGORITHMS']:
        if str(a).lower() not in ALGORITHMS:
            raise ConfigError('ALGORITHMS: unknown algorithm %s. Valid: %s' % (a, ', '.join(ALGORITHMS)))
    for field, low in [('FRAMES', 0), ('REPETITIONS', 1), ('N_VNOS', 1), ('N_ONUS', 1)]:
        value = config[field]
        if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < low:
            raise ConfigError('%s must be an integer >= %i (got %r)' % (field, low, value))
    if config['N_ONUS'] < config['N_VNOS']:
        raise ConfigError('N_ONUS must be at least N_VNOS')
    if config['SLA_ASSIGNMENT'] not in SLA_ASSIGNMENTS:
        raise ConfigError('SLA_ASSIGNMENT: unknown policy %s' % config['SLA_ASSIGNMENT'])
    if config['GUARD_TIME_US'] < 0 or config['FRAME_US'] <= 0:
        raise ConfigError('GUARD_TIME_US must be >= 0 and FRAME_US > 0')
    sla_table_from_config(config['SLA_CLASSES'])


def expand_sweep(config):
    """Cells of the Cartesian product of the sweep axes, in stable (AXES) order."""
    cells = []
    for channel_config, tuning, distribution, algorithm, load, sla_fraction in itertools.product(
            *[config[axis] for axis in AXES]):
        w, rate = parse_channel_config(channel_config, config)
        cells.append(Cell(channel_config, w, rate, float(tuning), distribution, str(algorithm).lower(), float(load),
                          float(sla_fraction)))
    return cells


def cell_seed(seed, rep, cell):
    """Seed sequence of a cell repetition. Algorithm and tuning time are left out so they see identical traffic."""
    return [int(seed), int(rep), int(round(cell.load * 1000)), int(round(cell.sla_fraction * 1000))]


def traffic_config_for(cell, config):
    return {
        'DISTRIBUTION': cell.distribution,
        'ARRIVAL_RANGE_AU': config['ARRIVAL_RANGE_AU'],
        'POISSON_LAMBDA': config['POISSON_LAMBDA'],
        'ZIPF_S': config['ZIPF_S'],
        'ZIPF_Q': config['ZIPF_Q'],
        'PARETO_ALPHA': config['PARETO_ALPHA'],
        'GUARD_TIME_US': config['GUARD_TIME_US'],
        'LOAD': cell.load,
        'SLA_FRACTION': cell.sla_fraction,
        'SLA_ASSIGNMENT': config['SLA_ASSIGNMENT'],
        'REQUEST_SPAN': config['REQUEST_SPAN'],
        'BURST_REFERENCE_GBPS': config['BURST_REFERENCE_GBPS'],
        'FRAME_US': config['FRAME_US'],
        'N_CHANNELS': cell.n_channels,
        'LINE_RATE_GBPS': cell.line_rate_gbps,
        'SEED': config['SEED'],
    }


def scheduler_config_for(cell, config):
    return {
        'N_CHANNELS': cell.n_channels,
        'LINE_RATE_GBPS': cell.line_rate_gbps,
        'TUNING_TIME_US': cell.tuning_time_us,
        'GUARD_TIME_US': config['GUARD_TIME_US'],
        'N_ONUS': config['N_ONUS'],
        'ONU_CHANNEL_MAP': config['ONU_CHANNEL_MAP'],
        'CHECK_CONSTRAINTS': config['CHECK_CONSTRAINTS'],
    }


def cell_row(cell):
    """Axis columns of a result row."""
    return {'ChannelConfig': cell.channel_config, 'W': cell.n_channels, 'LineRateGbps': cell.line_rate_gbps,
            'CapacityGbps': cell.n_channels * cell.line_rate_gbps, 'TuningUs': cell.tuning_time_us,
            'Distribution': cell.distribution, 'Algorithm': cell.algorithm, 'Load': cell.load,
            'SlaFraction': cell.sla_fraction}


def cell_label(cell):
    return '%s-tune%g-%s-load%g-sla%g' % (cell.channel_config, cell.tuning_time_us, cell.distribution, cell.load,
                                          cell.sla_fraction)
