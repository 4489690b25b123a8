import os
import time
import zlib
import traceback
from collections import namedtuple, OrderedDict
from multiprocessing.pool import Pool
from functools import partial
from time import perf_counter
import numpy as np
from . import utils
from . import _timing
from . import scenario as scn
from . import exact
from .model import sla_table_from_config
from .traffic import make_traffic_config, TrafficGenerator
from .schedulers import get_scheduler
from .metrics import Compliance, Breaches, Runtime, runtime_stats
from .metrics._base_metric import COMBINED
from .utils import TwdmException, ConfigError, InvariantViolation

RunResult = namedtuple('RunResult', ['scenario_id', 'scenario', 'rows', 'cells', 'messages', 'checksum'])

# Row columns of the sweep axes
AXIS_COLUMNS = {'CHANNEL_CONFIGS': 'ChannelConfig', 'TUNING_TIMES_US': 'TuningUs', 'DISTRIBUTIONS': 'Distribution',
                'ALGORITHMS': 'Algorithm', 'LOADS': 'Load', 'SLA_FRACTIONS': 'SlaFraction'}

ROW_FIELD_ORDER = ['Scenario', 'ChannelConfig', 'W', 'LineRateGbps', 'CapacityGbps', 'TuningUs', 'Distribution',
                   'Algorithm', 'Load', 'SlaFraction', 'Repetitions', 'Frames', 'Compliance', 'Compliance_std']


class Simulator:
    """Runs scenarios, sweeps, runtime profiles and oracle comparisons"""

    @staticmethod
    def get_default_sim_config():
        """Returns the default config values for simulation"""
        default_config = {
            'USE_PARALLEL': False,
            'NUM_PARALLEL_CORES': 8,
            'BREAK_ON_ERROR': True,  # Raises exception and exits with error

            'PRINT_RESULTS': True,
            'PRINT_CONFIG': True,
            'TIME_PROGRESS': True,

            'OUTPUT_FOLDER': None,  # Where to write result files (if None, nothing is written)
            'OUTPUT_FORMAT': 'csv',  # Valid: 'csv' (sweep table), 'json' (full run detail)
            'QUICK': False,  # Run QUICK_FRAMES frames instead of the scenario's FRAMES
            'QUICK_FRAMES': 100,
        }
        return default_config

    def __init__(self, config=None):
        """Initialise the simulator with a config"""
        self.config = utils.init_config(config, self.get_default_sim_config(), 'Sim')
        utils.check_config_keys(self.config, self.get_default_sim_config(), 'sim')
        if self.config['OUTPUT_FORMAT'] not in ['csv', 'json']:
            raise ConfigError('OUTPUT_FORMAT must be csv or json (got %s)' % self.config['OUTPUT_FORMAT'])
        # Only run timing analysis if not run in parallel.
        if self.config['TIME_PROGRESS'] and not self.config['USE_PARALLEL']:
            _timing.DO_TIMING = True

    def _frames(self, scenario):
        return self.config['QUICK_FRAMES'] if self.config['QUICK'] else scenario['FRAMES']

    @_timing.time
    def run_scenario(self, scenario):
        """Runs every cell of a scenario for its repetitions. Returns a RunResult"""
        config = self.config
        scenario = scn.make_scenario(scenario)
        scenario['FRAMES'] = self._frames(scenario)
        slas = sla_table_from_config(scenario['SLA_CLASSES'])
        cells = scn.expand_sweep(scenario)
        metrics_list = [Compliance(slas), Breaches(), Runtime()]
        metric_names = utils.validate_metrics_list(metrics_list)
        reps = scenario['REPETITIONS']
        print('\nRunning scenario %s: %i cell(s) x %i repetition(s) of %i frames using the following metrics: %s\n'
              % (scenario['NAME'], len(cells), reps, scenario['FRAMES'], ', '.join(metric_names)))
        if scenario['FRAMES'] == 0:
            return RunResult(scenario['NAME'], scenario, [], [], {}, 0)

        time_start = time.time()
        jobs = [(scn.cell_label(cell), rep, cell) for cell in cells for rep in range(reps)]
        _run = partial(_run_job, config=scenario, break_on_error=config['BREAK_ON_ERROR'])
        if config['USE_PARALLEL']:
            with Pool(config['NUM_PARALLEL_CORES']) as pool:
                outputs = pool.map(_run, jobs)
        else:
            outputs = [_run(job) for job in jobs]

        rows = []
        details = []
        messages = OrderedDict()
        checksum = 0
        for i, cell in enumerate(cells):
            label = scn.cell_label(cell)
            key = '%s-%s' % (cell.algorithm, label)
            cell_out = outputs[i * reps:(i + 1) * reps]
            failed = [err for _, err in cell_out if err is not None]
            if len(failed) > 0:
                msg, trace = failed[0]
                print('Cell %s was unable to be simulated.' % key)
                print(msg)
                print(trace)
                messages[key] = msg
                continue
            messages[key] = 'Success'

            res = {}
            for rep, (data, _) in enumerate(cell_out):
                res['rep%02i' % rep] = {name: metric.eval_run(data) for metric, name in zip(metrics_list, metric_names)}
            res[COMBINED] = {}
            for metric, name in zip(metrics_list, metric_names):
                curr_res = {rep_key: rep_value[name] for rep_key, rep_value in res.items() if rep_key != COMBINED}
                res[COMBINED][name] = metric.combine_runs(curr_res)

            row = OrderedDict([('Scenario', scenario['NAME'])])
            row.update(scn.cell_row(cell))
            row['Repetitions'] = reps
            row['Frames'] = scenario['FRAMES']
            for metric, name in zip(metrics_list, metric_names):
                table_res = {rep_key: rep_value[name] for rep_key, rep_value in res.items()}
                if config['PRINT_RESULTS']:
                    metric.print_table(table_res, cell.algorithm, label)
                row.update(metric.detailed_results(table_res))
            cell_checksum = 0
            for data, _ in cell_out:
                cell_checksum = zlib.crc32(str(data['checksum']).encode(), cell_checksum)
            row['Checksum'] = cell_checksum
            checksum = zlib.crc32(str(cell_checksum).encode(), checksum)
            rows.append(row)
            details.append({'cell': scn.cell_row(cell),
                            'repetitions': [{'seed': scn.cell_seed(scenario['SEED'], rep, cell),
                                             'checksum': data['checksum'],
                                             'compliance': res['rep%02i' % rep]['Compliance']['Compliance'],
                                             'breaches': {k: v for k, v in res['rep%02i' % rep]['Breaches'].items()}}
                                            for rep, (data, _) in enumerate(cell_out)],
                            'runtime_us': np.concatenate([data['runtime_us'] for data, _ in cell_out]),
                            'summary': dict(row)})

        if config['TIME_PROGRESS']:
            print('\nAll cells of %s finished in %.2f seconds' % (scenario['NAME'], time.time() - time_start))
        return RunResult(scenario['NAME'], scenario, rows, details, messages, checksum)

    def write_result(self, result, output_folder=None, output_format=None):
        """Writes a RunResult as sweep table (csv) or full detail (json). Returns the file written"""
        output_folder = output_folder or self.config['OUTPUT_FOLDER']
        output_format = output_format or self.config['OUTPUT_FORMAT']
        if output_folder is None:
            return None
        if output_format == 'json':
            out_file = os.path.join(output_folder, result.scenario_id + '.json')
            return utils.write_json({'scenario': result.scenario, 'cells': result.cells, 'messages': result.messages,
                                     'checksum': result.checksum}, out_file)
        out_file = os.path.join(output_folder, result.scenario_id + '_sweep.csv')
        return utils.write_table(result.rows, out_file, ROW_FIELD_ORDER)

    @_timing.time
    def sweep(self, scenario_file):
        """Runs the sweep described by a scenario file (or config dict) and writes the result table"""
        if isinstance(scenario_file, dict):
            scenario = scenario_file
        else:
            scenario = scn.load_scenario_file(scenario_file)
        result = self.run_scenario(scenario)
        out_file = self.write_result(result)
        if out_file is not None:
            print('\nResults written to %s' % out_file)
        return result.rows

    @staticmethod
    def summarize_by(rows, axis, fields=('Compliance',)):
        """Averages fields over every other axis, one row per value of axis in order of first appearance"""
        column = AXIS_COLUMNS.get(axis, axis)
        groups = OrderedDict()
        for row in rows:
            groups.setdefault(row[column], []).append(row)
        summary = []
        for value, group in groups.items():
            out = OrderedDict([(column, value), ('Cells', len(group))])
            for field in fields:
                out[field] = float(np.mean([r[field] for r in group]))
            summary.append(out)
        return summary

    @_timing.time
    def profile_runtime(self, algorithms=('dtwa', 'swa'), line_capacities=(50, 100, 200), frames=1000,
                        line_rate_gbps=25.0, load=0.8, sla_fraction=0.5, tuning_time_us=0.0, seed=0):
        """Per capacity and algorithm: median, IQR and mean per-frame merge time (µs)"""
        if len(line_capacities) == 0:
            raise ConfigError('At least one line capacity is required')
        if self.config['QUICK']:
            frames = self.config['QUICK_FRAMES']
        scenario = scn.make_scenario({'NAME': 'profile', 'FRAMES': frames, 'SEED': seed})
        rows = []
        for capacity in line_capacities:
            if capacity <= 0:
                raise ConfigError('Line capacities must be positive (got %s)' % capacity)
            w = int(round(capacity / line_rate_gbps))
            if w < 1 or abs(w * line_rate_gbps - capacity) > 1e-9:
                raise ConfigError('Capacity %s Gb/s is not a multiple of the %s Gb/s channel rate'
                                  % (capacity, line_rate_gbps))
            medians = {}
            for algorithm in algorithms:
                cell = scn.Cell('%ix%gG' % (w, line_rate_gbps), w, float(line_rate_gbps), float(tuning_time_us),
                                'uniform', algorithm, float(load), float(sla_fraction))
                data = run_cell(scn.cell_label(cell), 0, cell, scenario)
                stats = runtime_stats(data['runtime_us'])
                medians[algorithm] = stats['RuntimeMedianUs']
                row = OrderedDict([('CapacityGbps', capacity), ('W', w), ('Algorithm', algorithm)])
                row.update(stats)
                rows.append(row)
            if 'dtwa' in medians and 'swa' in medians and medians['swa'] > 0:
                for row in rows[-len(algorithms):]:
                    row['DtwaOverSwa'] = medians['dtwa'] / medians['swa']
        if self.config['PRINT_RESULTS']:
            print('')
            print('%-14s%-8s%-14s%-18s%-18s%-18s' % ('CapacityGbps', 'W', 'Algorithm', 'MedianUs', 'IQRUs', 'MeanUs'))
            for row in rows:
                print('%-14g%-8i%-14s%-18.4g%-18.4g%-18.4g' % (row['CapacityGbps'], row['W'], row['Algorithm'],
                                                              row['RuntimeMedianUs'], row['RuntimeIQRUs'],
                                                              row['RuntimeMeanUs']))
        return rows

    @_timing.time
    def oracle_compare(self, instances=None, n_instances=500, seed=0, max_allocations=8, max_channels=3,
                       tuning_time_ns=250):
        """Breach counts of DTWA, SWA and the exact oracle on small instances.

        instances is a list of (name, OracleInstance); if None, n_instances random ones are generated.
        Returns (rows, summary). Raises InvariantViolation if a heuristic ever beats the oracle.
        """
        if instances is None:
            rng = np.random.default_rng(seed)
            instances = [('rand%04i' % i, exact.random_instance(rng, tuning_time=tuning_time_ns,
                                                                max_allocations=max_allocations,
                                                                max_channels=max_channels))
                         for i in range(n_instances)]
        rows = []
        for name, instance in instances:
            solution = exact.solve_exact(instance, max(max_allocations, len(instance.allocations)),
                                         max(max_channels, instance.n_channels))
            dtwa = exact.evaluate_objective(exact.heuristic_assignment(instance, 'dtwa'), instance)
            swa = exact.evaluate_objective(exact.heuristic_assignment(instance, 'swa'), instance)
            if solution.objective > min(dtwa, swa):
                raise InvariantViolation('Instance %s: oracle objective %i above heuristic (dtwa %i, swa %i)'
                                         % (name, solution.objective, dtwa, swa))
            rows.append(OrderedDict([
                ('Instance', name), ('Allocations', len(instance.allocations)), ('W', instance.n_channels),
                ('SlaFraction', instance.sla_fraction), ('Dtwa', dtwa), ('Swa', swa), ('Oracle', solution.objective),
                ('OracleDelayUs', solution.total_delay / 1000.0), ('DtwaOptimal', int(dtwa == solution.objective)),
                ('SwaOptimal', int(swa == solution.objective)), ('Nodes', solution.proof.get('nodes', 0))]))

        summary = OrderedDict([('Instances', len(rows)), ('Dominance', 1.0)])
        for label, test in [('LowSla', lambda f: f <= 0.6 + 1e-9), ('HighSla', lambda f: f > 0.6 + 1e-9)]:
            group = [r for r in rows if r['SlaFraction'] is not None and test(r['SlaFraction'])]
            summary['Instances' + label] = len(group)
            summary['DtwaEqualRate' + label] = float(np.mean([r['DtwaOptimal'] for r in group])) if group else None
            summary['SwaEqualRate' + label] = float(np.mean([r['SwaOptimal'] for r in group])) if group else None
        if self.config['PRINT_RESULTS']:
            print('')
            for k, v in summary.items():
                print('%-24s : %s' % (k, v))
        return rows, summary


def _run_job(job, config, break_on_error):
    """Runs one (cell, repetition). On error, returns the message when not breaking"""
    label, rep, cell = job
    try:
        return run_cell(label, rep, cell, config), None
    except Exception as err:
        if break_on_error:
            raise err
        if isinstance(err, TwdmException):
            msg = str(err)
        else:
            msg = 'Unknown error occurred.'
        return None, (msg, traceback.format_exc())


@_timing.time
def run_cell(label, rep, cell, config):
    """Simulates one repetition of one cell with a fresh scheduler, frames strictly in sequence"""
    frames = config['FRAMES']
    rng = np.random.default_rng(scn.cell_seed(config['SEED'], rep, cell))
    slas = sla_table_from_config(config['SLA_CLASSES'])
    traffic_cfg = make_traffic_config(scn.traffic_config_for(cell, config))
    generator = TrafficGenerator(traffic_cfg, slas.values(), config['N_VNOS'], config['N_ONUS'], rng)
    scheduler = get_scheduler(cell.algorithm)(scn.scheduler_config_for(cell, config), slas)
    check = scheduler.config['CHECK_CONSTRAINTS']

    runtime_us = np.zeros(frames)
    allocations = 0
    delayed = 0
    total_delay = 0
    checksum = 0
    for f in range(frames):
        carried = scheduler.state_checksum()
        bmaps = generator.next_frame()
        if scheduler.state_checksum() != carried:
            raise InvariantViolation('%s: scheduler state changed between frames %i and %i' % (label, f - 1, f))
        before = scheduler.snapshot()
        ts = perf_counter()
        scheduled = scheduler.merge_frame(bmaps)
        runtime_us[f] = (perf_counter() - ts) * 1e6
        if check:
            scheduler.check_frame(bmaps, scheduled, before)
        frame_allocations = 0
        frame_delayed = 0
        for channel_list in scheduled:
            for s in channel_list:
                frame_allocations += 1
                frame_delayed += 1 if s.is_delayed else 0
                total_delay += s.delay
        allocations += frame_allocations
        delayed += frame_delayed
        _check_carried_state(label, f, scheduler, before, scheduled, frame_allocations, frame_delayed)
        checksum = zlib.crc32(str(scheduler.state_checksum()).encode(), checksum)

    if scheduler.frames_processed != frames:
        raise InvariantViolation('%s: %i frames merged, %i expected' % (label, scheduler.frames_processed, frames))
    return {'history': scheduler.breach_state.history,
            'breach_events': scheduler.breach_state.breach_events,
            'allocations': allocations,
            'delayed': delayed,
            'total_delay_ns': total_delay,
            'runtime_us': runtime_us,
            'frames': frames,
            'checksum': checksum}


def _check_carried_state(label, frame, scheduler, before, scheduled, n_allocations, n_delayed):
    """Raises InvariantViolation unless the state carried out of a frame is the one its schedule implies: channel
    and ONU tables replayed from the snapshot, and a breach window advanced by exactly this frame's allocations.
    """
    breach_state = scheduler.breach_state
    if breach_state.last_frame != frame:
        raise InvariantViolation('%s: breach window at frame %i after merging frame %i'
                                 % (label, breach_state.last_frame, frame))
    counted = [ring[-1] for ring in breach_state.rings.values() if len(ring) > 0]
    if sum(t for _, t in counted) != n_allocations or sum(d for d, _ in counted) != n_delayed:
        raise InvariantViolation('%s: breach window of frame %i does not hold the %i merged allocations'
                                 % (label, frame, n_allocations))
    expected = scheduler.state_checksum(scheduler.expected_state(before, scheduled), frame + 1)
    if scheduler.state_checksum() != expected:
        raise InvariantViolation('%s: state carried out of frame %i differs from the one its schedule implies'
                                 % (label, frame))
