""" twdm_sim.py

Run examples:
twdm_sim.py run --ALGORITHMS dtwa swa --LOADS 0.8 --TUNING_TIMES_US 15 --quick
twdm_sim.py run --scenario configs/channel_configs.json --format json --OUTPUT_FOLDER results/
twdm_sim.py sweep configs/distributions.json --output-dir results/
twdm_sim.py profile --algorithms dtwa swa --capacities 50 100 200
twdm_sim.py oracle-compare --n-instances 500 --export corpus/
twdm_sim.py oracle-compare --corpus corpus/
twdm_sim.py plot results/channel_configs_sweep.csv --output-dir results/plots

Common arguments:
    --seed, --frames, --format {csv,json}, --quick

Command Line Arguments: Defaults, # Comments
    Sim arguments:
        'USE_PARALLEL': False,
        'NUM_PARALLEL_CORES': 8,
        'BREAK_ON_ERROR': True,
        'PRINT_RESULTS': True,
        'PRINT_CONFIG': True,
        'TIME_PROGRESS': True,
        'OUTPUT_FOLDER': None,
        'OUTPUT_FORMAT': 'csv',
        'QUICK': False,
        'QUICK_FRAMES': 100,
    Scenario arguments (run):
        every key of twdm_sla.scenario.get_default_scenario_config() except SLA_CLASSES, e.g.
        'CHANNEL_CONFIGS': ['8x25G'],  # Valid: '8x25G', '4x50G', '1x200G', '<W>x<rate>G' or 'custom'
        'TUNING_TIMES_US': [0.0],
        'DISTRIBUTIONS': ['uniform'],
        'ALGORITHMS': ['dtwa'],
        'LOADS': [0.2, 0.5, 0.8],
        'SLA_FRACTIONS': [0.1, ..., 1.0],
        'FRAMES': 1000,
        'REPETITIONS': 1,

Exit codes: 0 success, 1 configuration error, 2 internal invariant violation.
"""

import sys
import os
import argparse
from multiprocessing import freeze_support
import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
import twdm_sla as ts  # noqa: E402
from twdm_sla.utils import ConfigError, InvariantViolation, ConstraintViolation, TwdmException  # noqa: E402

# Only settable from a scenario file
FILE_ONLY_KEYS = ['SLA_CLASSES']
# None-defaulted keys that take a list
LIST_KEYS = ['ONU_CHANNEL_MAP']


def _parse_value(value):
    if value == 'None':
        return None
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value


def _convert(setting, default, value):
    """Converts a command line string (or list of strings) to the type of the config default"""
    if type(default) == type(True):
        if value == 'True':
            return True
        elif value == 'False':
            return False
        raise ConfigError('Command line parameter ' + setting + ' must be True or False')
    try:
        if type(default) == type(1):
            return int(value)
        if type(default) == type(1.0):
            return float(value)
    except ValueError:
        raise ConfigError('Command line parameter %s: %s is not a number' % (setting, value))
    if type(default) == list or default is None:
        values = [_parse_value(v) for v in value]
        if default is None and setting not in LIST_KEYS and len(values) == 1:
            return values[0]
        return values
    return value


def add_config_arguments(parser, config):
    for setting in config.keys():
        if setting in FILE_ONLY_KEYS:
            continue
        if type(config[setting]) == list or type(config[setting]) == type(None):
            parser.add_argument("--" + setting, nargs='+')
        else:
            parser.add_argument("--" + setting)


def read_config_arguments(args, config):
    out = dict(config)
    for setting in config.keys():
        if args.get(setting) is not None:
            out[setting] = _convert(setting, config[setting], args[setting])
    return out


def build_parser(default_sim_config, default_scenario_config):
    parser = argparse.ArgumentParser(description='Multi-tenant TWDM-PON merge engine simulator')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int)
    common.add_argument('--frames', type=int)
    common.add_argument('--format', choices=['csv', 'json'])
    common.add_argument('--quick', action='store_true')
    add_config_arguments(common, default_sim_config)
    sub = parser.add_subparsers(dest='command')
    sub.required = True

    run = sub.add_parser('run', parents=[common], help='run one scenario from flags or a scenario file')
    run.add_argument('--scenario', help='scenario file (JSON), flags override its fields')
    add_config_arguments(run, {k: v for k, v in default_scenario_config.items() if k not in default_sim_config})

    sweep = sub.add_parser('sweep', parents=[common], help='run the sweep of a config file')
    sweep.add_argument('config_file')
    sweep.add_argument('--output-dir')

    profile = sub.add_parser('profile', parents=[common], help='per-frame merge runtime vs line capacity')
    profile.add_argument('--algorithms', nargs='+', default=['dtwa', 'swa'])
    profile.add_argument('--capacities', nargs='+', type=float, default=[50, 100, 200])
    profile.add_argument('--line-rate', type=float, default=25.0)
    profile.add_argument('--load', type=float, default=0.8)
    profile.add_argument('--sla-fraction', type=float, default=0.5)

    oracle = sub.add_parser('oracle-compare', parents=[common], help='heuristics vs exact oracle on small instances')
    oracle.add_argument('--corpus', help='folder of instance files, generated at random if not given')
    oracle.add_argument('--n-instances', type=int, default=500)
    oracle.add_argument('--max-allocations', type=int, default=8)
    oracle.add_argument('--max-channels', type=int, default=3)
    oracle.add_argument('--tuning-ns', type=int, default=250)
    oracle.add_argument('--export', help='write the generated instances to this folder')

    plot = sub.add_parser('plot', help='static charts from a sweep or profile csv')
    plot.add_argument('table')
    plot.add_argument('--output-dir', required=True)
    plot.add_argument('--kinds', nargs='+', default=None)
    return parser


def main(argv=None):
    default_sim_config = ts.Simulator.get_default_sim_config()
    default_scenario_config = ts.scenario.get_default_scenario_config()
    parser = build_parser(default_sim_config, default_scenario_config)
    args = parser.parse_args(argv).__dict__

    try:
        if args['command'] == 'plot':
            for f in ts.plotting.plot_sweep(args['table'], args['output_dir'], args['kinds']):
                print('Written %s' % f)
            return 0

        sim_config = read_config_arguments(args, default_sim_config)
        if args['format'] is not None:
            sim_config['OUTPUT_FORMAT'] = args['format']
        if args['quick']:
            sim_config['QUICK'] = True
        if args.get('output_dir') is not None:
            sim_config['OUTPUT_FOLDER'] = args['output_dir']
        simulator = ts.Simulator(sim_config)

        if args['command'] in ['run', 'sweep']:
            if args['command'] == 'sweep':
                scenario = ts.scenario.load_scenario_file(args['config_file'])
            elif args['scenario'] is not None:
                scenario = ts.scenario.load_scenario_file(args['scenario'])
            else:
                scenario = {}
            if args['command'] == 'run':
                scenario_keys = {k: v for k, v in default_scenario_config.items() if k not in default_sim_config}
                flags = read_config_arguments(args, scenario_keys)
                scenario.update({k: v for k, v in flags.items() if args.get(k) is not None})
            if args['seed'] is not None:
                scenario['SEED'] = args['seed']
            if args['frames'] is not None:
                scenario['FRAMES'] = args['frames']
            if args['command'] == 'sweep':
                simulator.sweep(scenario)
            else:
                result = simulator.run_scenario(scenario)
                out_file = simulator.write_result(result)
                if out_file is not None:
                    print('\nResults written to %s' % out_file)
                if any(msg != 'Success' for msg in result.messages.values()):
                    return 1

        elif args['command'] == 'profile':
            frames = args['frames'] if args['frames'] is not None else 1000
            rows = simulator.profile_runtime(args['algorithms'], args['capacities'], frames=frames,
                                             line_rate_gbps=args['line_rate'], load=args['load'],
                                             sla_fraction=args['sla_fraction'],
                                             seed=args['seed'] if args['seed'] is not None else 0)
            if sim_config['OUTPUT_FOLDER'] is not None:
                out_file = ts.utils.write_table(rows, os.path.join(sim_config['OUTPUT_FOLDER'], 'profile.csv'))
                print('\nResults written to %s' % out_file)

        elif args['command'] == 'oracle-compare':
            instances = None
            if args['corpus'] is not None:
                instances = ts.exact.load_corpus(args['corpus'])
            elif args['export'] is not None:
                rng = np.random.default_rng(args['seed'] if args['seed'] is not None else 0)
                instances = []
                for i in range(args['n_instances']):
                    instance = ts.exact.random_instance(rng, tuning_time=args['tuning_ns'],
                                                        max_allocations=args['max_allocations'],
                                                        max_channels=args['max_channels'])
                    ts.exact.save_instance(instance, os.path.join(args['export'], 'rand%04i.json' % i))
                    instances.append(('rand%04i' % i, instance))
            rows, summary = simulator.oracle_compare(instances, n_instances=args['n_instances'],
                                                     seed=args['seed'] if args['seed'] is not None else 0,
                                                     max_allocations=args['max_allocations'],
                                                     max_channels=args['max_channels'],
                                                     tuning_time_ns=args['tuning_ns'])
            if sim_config['OUTPUT_FOLDER'] is not None:
                out_file = ts.utils.write_table(rows, os.path.join(sim_config['OUTPUT_FOLDER'], 'oracle_compare.csv'))
                ts.utils.write_json({'summary': summary}, os.path.join(sim_config['OUTPUT_FOLDER'],
                                                                       'oracle_compare_summary.json'))
                print('\nResults written to %s' % out_file)

    except ConfigError as err:
        print('Configuration error: %s' % err)
        return 1
    except (InvariantViolation, ConstraintViolation) as err:
        print('Internal invariant violated: %s' % err)
        return 2
    except TwdmException as err:
        print('Error: %s' % err)
        return 1
    return 0


if __name__ == '__main__':
    freeze_support()
    sys.exit(main())
