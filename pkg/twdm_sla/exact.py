""" Exact small-instance solver for the flow-breach minimisation problem.

The objective is the number of flows whose fraction of delayed allocations exceeds the flow's breach threshold.
Schedules are searched as list schedules: allocations are taken one at a time and placed on a channel at the
earliest time the channel (and in physical mode the ONU) allows. Every feasible schedule can be shifted left into
one where each burst starts as early as its channel and ONU predecessors permit, and such a schedule is produced by
placing allocations in order of start time. The search therefore only extends a partial schedule with an
allocation whose time is not earlier than the last one placed (ties by increasing index), which keeps it complete
while cutting most permutations.

Physical mode adds ONU serialisation, guard times and tuning gaps on top of the channel constraint. Literal mode
keeps only one burst per channel slot, the start time and the horizon.
"""

import os
import json
import itertools
from collections import namedtuple
import numpy as np
from .model import (INF_TIME, ChannelState, OnuState, default_sla_table, make_allocation, sort_allocations)
from .schedulers._base_scheduler import DtwaConfig, round_robin_channel_map
from .schedulers.dtwa import assign_resource
from .schedulers.swa import partition_by_channel, assign_channel
from .utils import (ConfigError, OracleSizeError, ConstraintViolation, ScenarioParseError, SCHEMA_VERSION,
                    TwdmException)

MAX_ALLOCATIONS = 12
MAX_CHANNELS = 3
BRUTE_FORCE_MAX_ALLOCATIONS = 7

OracleInstance = namedtuple('OracleInstance', [
    'allocations', 'n_channels', 'tuning_time', 'guard_time', 'horizon', 'thresholds', 'channel_free', 'onu_tuned',
    'onu_free', 'physical', 'sla_fraction'])

OracleSolution = namedtuple('OracleSolution', ['assignment', 'objective', 'total_delay', 'proof'])


def make_instance(allocations, n_channels, tuning_time=0, guard_time=210, sla_table=None, thresholds=None,
                  horizon=None, physical=True, channel_free=None, onu_tuned=None, onu_free=None, sla_fraction=None):
    """Builds an instance. Times are in ns. Allocations without max_time get one from sla_table.
    thresholds maps flow -> tolerated delayed fraction. If None it is taken from sla_table for every breachable
    flow of the instance. Flows without a threshold are never counted as breached.
    """
    if sla_table is None:
        sla_table = default_sla_table()
    if n_channels < 1:
        raise ConfigError('An instance needs at least one channel')
    allocs = []
    for a in allocations:
        if a.size <= 0:
            raise ConfigError('Allocation sizes must be positive (seq %i has %s)' % (a.seq, a.size))
        if a.max_time is None:
            sla = sla_table.get(a.sla_id)
            if sla is None:
                raise ConfigError('Allocation seq %i refers to unknown sla_id %s' % (a.seq, a.sla_id))
            a = a._replace(max_time=INF_TIME if sla.best_effort else a.start_time + sla.max_latency)
        allocs.append(a)
    if thresholds is None:
        thresholds = {}
        for a in allocs:
            sla = sla_table.get(a.sla_id)
            if sla is not None and not sla.best_effort:
                thresholds[a.flow] = sla.breach_threshold
    if channel_free is None:
        channel_free = [0] * n_channels
    if len(channel_free) != n_channels:
        raise ConfigError('channel_free has %i entries for %i channels' % (len(channel_free), n_channels))
    return OracleInstance(tuple(allocs), int(n_channels), int(tuning_time), int(guard_time), horizon,
                          dict(thresholds), tuple(channel_free), dict(onu_tuned or {}), dict(onu_free or {}),
                          bool(physical), sla_fraction)


def check_size(instance, max_allocations=MAX_ALLOCATIONS, max_channels=MAX_CHANNELS):
    n = len(instance.allocations)
    if n > max_allocations or instance.n_channels > max_channels:
        raise OracleSizeError('Instance with %i allocations on %i channels exceeds the exact search bounds '
                              '(%i allocations, %i channels)' % (n, instance.n_channels, max_allocations, max_channels))


#####################################################################
# Objective and constraint checking

def _count_breaches(delayed, totals, thresholds):
    count = 0
    for flow, total in totals.items():
        threshold = thresholds.get(flow)
        if threshold is not None and total > 0 and delayed.get(flow, 0) / total > threshold:
            count += 1
    return count


def validate_assignment(assignment, instance):
    """Raises ConstraintViolation naming the first broken constraint.

    assignment holds one (channel, sched_time) pair per allocation, in instance order. A None entry leaves an
    allocation unserved.
    """
    allocs = instance.allocations
    n = len(allocs)
    if len(assignment) != n:
        raise ConstraintViolation('single_slot', 'assignment has %i entries for %i allocations' % (len(assignment), n))
    for i, entry in enumerate(assignment):
        if entry is None:
            continue
        if len(entry) != 2:
            raise ConstraintViolation('single_slot', 'allocation %i is not bound to exactly one (channel, time)' % i)
        channel, sched = entry
        if not (isinstance(channel, (int, np.integer)) and 0 <= channel < instance.n_channels):
            raise ConstraintViolation('single_slot', 'allocation %i is bound to invalid channel %s' % (i, channel))
        if sched is None or not np.isfinite(sched):
            raise ConstraintViolation('single_slot', 'allocation %i has no finite scheduled time' % i)

    granted = {}
    required = {}
    for a, entry in zip(allocs, assignment):
        required[a.flow] = required.get(a.flow, 0) + 1
        if entry is not None:
            granted[a.flow] = granted.get(a.flow, 0) + 1
    for flow, count in required.items():
        if granted.get(flow, 0) != count:
            raise ConstraintViolation('flow_served', 'flow %s has %i of its %i allocations scheduled'
                                      % (flow, granted.get(flow, 0), count))

    for i, (a, (channel, sched)) in enumerate(zip(allocs, assignment)):
        if sched < a.start_time:
            raise ConstraintViolation('physical', 'allocation %i scheduled at %i ns before its start %i ns'
                                      % (i, sched, a.start_time))
        if instance.horizon is not None and sched + a.size > instance.horizon:
            raise ConstraintViolation('horizon', 'allocation %i ends after the horizon' % i)

    guard = instance.guard_time if instance.physical else 0
    for channel in range(instance.n_channels):
        bursts = sorted((sched, a.size, i) for i, (a, (ch, sched)) in enumerate(zip(allocs, assignment))
                        if ch == channel)
        free = instance.channel_free[channel]
        for sched, size, i in bursts:
            if sched < free:
                overlaps = sched < free - guard
                raise ConstraintViolation('channel_overlap' if overlaps else 'physical',
                                          'allocation %i on channel %i starts at %i ns, channel busy until %i ns'
                                          % (i, channel, sched, free))
            free = sched + size + guard

    if not instance.physical:
        return
    per_onu = {}
    for i, (a, (ch, sched)) in enumerate(zip(allocs, assignment)):
        per_onu.setdefault(a.onu_id, []).append((sched, ch, a.size, i))
    for onu, bursts in per_onu.items():
        tuned = instance.onu_tuned.get(onu)
        free = instance.onu_free.get(onu, 0)
        for sched, ch, size, i in sorted(bursts):
            ready = free if tuned is None or tuned == ch else free + instance.tuning_time
            if sched < ready:
                raise ConstraintViolation('physical', 'ONU %i is not ready for allocation %i on channel %i '
                                                      '(%i ns < %i ns)' % (onu, i, ch, sched, ready))
            tuned = ch
            free = sched + size + instance.guard_time


def objective_and_delay(assignment, instance):
    """(flow breach count, total scheduled delay) of a validated assignment."""
    validate_assignment(assignment, instance)
    delayed = {}
    totals = {}
    total_delay = 0
    for a, (_, sched) in zip(instance.allocations, assignment):
        totals[a.flow] = totals.get(a.flow, 0) + 1
        if sched > a.max_time:
            delayed[a.flow] = delayed.get(a.flow, 0) + 1
        total_delay += sched - a.start_time
    return _count_breaches(delayed, totals, instance.thresholds), total_delay


def evaluate_objective(assignment, instance):
    """Number of flows whose delayed fraction exceeds their threshold."""
    return objective_and_delay(assignment, instance)[0]


#####################################################################
# Heuristic schedules on an instance

def _initial_states(instance):
    onu_ids = [a.onu_id for a in instance.allocations] + list(instance.onu_tuned.keys()) + \
        list(instance.onu_free.keys())
    onus = OnuState(max(onu_ids) + 1 if onu_ids else 0)
    for onu, ch in instance.onu_tuned.items():
        onus.tuned_channel[onu] = ch
    for onu, t in instance.onu_free.items():
        onus.free_time[onu] = t
    return ChannelState(instance.n_channels, instance.channel_free), onus


def _to_assignment(instance, scheduled):
    positions = {}
    for i, a in enumerate(instance.allocations):
        positions.setdefault(a, []).append(i)
    assignment = [None] * len(instance.allocations)
    for channel_list in scheduled:
        for s in channel_list:
            assignment[positions[s.allocation].pop(0)] = (s.channel, s.sched_time)
    return assignment


def heuristic_assignment(instance, algorithm='dtwa', breach=None):
    """Schedule of the DTWA or SWA heuristic on the instance, as a dense assignment."""
    channels, onus = _initial_states(instance)
    cfg = DtwaConfig(instance.n_channels, instance.tuning_time, 0.0, instance.guard_time)
    breach = breach or {}
    if algorithm == 'dtwa':
        scheduled = assign_resource(sort_allocations(instance.allocations, breach), channels, onus, cfg)
    elif algorithm == 'swa':
        onu_map = round_robin_channel_map(onus.n_onus, instance.n_channels)
        for onu, ch in instance.onu_tuned.items():
            onu_map[onu] = ch
        # A fixed-channel ONU never retunes
        for onu in range(onus.n_onus):
            onus.tuned_channel[onu] = onu_map[onu]
        bmaps = [_FlatMap(instance.allocations)]
        scheduled = [assign_channel(sort_allocations(allocs, breach), ch, channels, onus, cfg)
                     for ch, allocs in enumerate(partition_by_channel(bmaps, onu_map, instance.n_channels))]
    else:
        raise ConfigError('Unknown heuristic %s' % algorithm)
    return _to_assignment(instance, scheduled)


_FlatMap = namedtuple('_FlatMap', ['allocations'])


#####################################################################
# Search

class _SearchState:
    """Channel and ONU availability of a partial list schedule."""
    __slots__ = ['channel_free', 'used', 'onu_tuned', 'onu_free']

    def __init__(self, channel_free, used, onu_tuned, onu_free):
        self.channel_free = channel_free
        self.used = used
        self.onu_tuned = onu_tuned
        self.onu_free = onu_free

    def copy(self):
        return _SearchState(list(self.channel_free), list(self.used), dict(self.onu_tuned), dict(self.onu_free))


def _start_state(instance):
    return _SearchState(list(instance.channel_free), [False] * instance.n_channels, dict(instance.onu_tuned),
                        dict(instance.onu_free))


def _earliest(instance, state, alloc, channel):
    """Earliest feasible time of alloc on channel given the partial schedule, None if past the horizon."""
    t = max(alloc.start_time, state.channel_free[channel])
    if instance.physical:
        tuned = state.onu_tuned.get(alloc.onu_id)
        ready = state.onu_free.get(alloc.onu_id, 0)
        if tuned is not None and tuned != channel:
            ready += instance.tuning_time
        t = max(t, ready)
    if instance.horizon is not None and t + alloc.size > instance.horizon:
        return None
    return t


def _place(instance, state, alloc, channel, t):
    guard = instance.guard_time if instance.physical else 0
    state.channel_free[channel] = t + alloc.size + guard
    state.used[channel] = True
    if instance.physical:
        state.onu_free[alloc.onu_id] = t + alloc.size + guard
        state.onu_tuned[alloc.onu_id] = channel


def _candidate_channels(instance, state, pinned):
    """Channels worth trying. Unused channels no ONU was tuned to and with equal free time are interchangeable,
    only the lowest index of each such group is returned.
    """
    seen = set()
    out = []
    for ch in range(instance.n_channels):
        if not state.used[ch] and ch not in pinned:
            key = state.channel_free[ch]
            if key in seen:
                continue
            seen.add(key)
        out.append(ch)
    return out


def solve_exact(instance, max_allocations=MAX_ALLOCATIONS, max_channels=MAX_CHANNELS):
    """Minimises the flow breach count, then the total delay. Raises OracleSizeError beyond the size bounds.

    The DTWA schedule is the initial incumbent. Among equal optima the first one met in depth-first order is kept.
    """
    check_size(instance, max_allocations, max_channels)
    allocs = instance.allocations
    n = len(allocs)
    totals = {}
    for a in allocs:
        totals[a.flow] = totals.get(a.flow, 0) + 1
    pinned = set(instance.onu_tuned.values())
    proof = {'nodes': 0, 'pruned': 0, 'leaves': 0, 'incumbent': 'search'}
    best = {'key': None, 'assignment': None}

    if n == 0:
        return OracleSolution((), 0, 0, proof)

    try:
        incumbent = heuristic_assignment(instance, 'dtwa')
        best['key'] = objective_and_delay(incumbent, instance)
        best['assignment'] = incumbent
        proof['incumbent'] = 'dtwa'
    except ConstraintViolation:
        pass

    def lower_bound(state, remaining, last_t, delayed, delay):
        floor = max(last_t, min(state.channel_free))
        certain = dict(delayed)
        for j in remaining:
            a = allocs[j]
            t = max(a.start_time, floor)
            if instance.physical:
                t = max(t, state.onu_free.get(a.onu_id, 0))
            if instance.horizon is not None and t + a.size > instance.horizon:
                return None
            if t > a.max_time:
                certain[a.flow] = certain.get(a.flow, 0) + 1
            delay += t - a.start_time
        return _count_breaches(certain, totals, instance.thresholds), delay

    def search(state, remaining, last, delayed, delay, assignment):
        proof['nodes'] += 1
        if len(remaining) == 0:
            proof['leaves'] += 1
            key = (_count_breaches(delayed, totals, instance.thresholds), delay)
            if best['key'] is None or key < best['key']:
                best['key'] = key
                best['assignment'] = list(assignment)
            return
        bound = lower_bound(state, remaining, last[0], delayed, delay)
        if bound is None or (best['key'] is not None and bound >= best['key']):
            proof['pruned'] += 1
            return
        channels = _candidate_channels(instance, state, pinned)
        for j in remaining:
            a = allocs[j]
            for ch in channels:
                t = _earliest(instance, state, a, ch)
                if t is None or (t, j) < last:
                    continue
                child = state.copy()
                _place(instance, child, a, ch, t)
                child_delayed = delayed
                if t > a.max_time:
                    child_delayed = dict(delayed)
                    child_delayed[a.flow] = child_delayed.get(a.flow, 0) + 1
                assignment[j] = (ch, t)
                search(child, [k for k in remaining if k != j], (t, j), child_delayed, delay + t - a.start_time,
                       assignment)
                assignment[j] = None

    search(_start_state(instance), list(range(n)), (-INF_TIME, -1), {}, 0, [None] * n)
    if best['key'] is None:
        raise ConstraintViolation('horizon', 'no schedule of %i allocations fits the horizon' % n)
    objective, total_delay = best['key']
    return OracleSolution(tuple(best['assignment']), objective, total_delay, proof)


def brute_force(instance, max_allocations=BRUTE_FORCE_MAX_ALLOCATIONS):
    """Enumerates every order x channel vector as a list schedule, without bounds or symmetry cuts."""
    check_size(instance, max_allocations, instance.n_channels)
    allocs = instance.allocations
    n = len(allocs)
    best_key = None
    best_assignment = None
    count = 0
    for order in itertools.permutations(range(n)):
        for channels in itertools.product(range(instance.n_channels), repeat=n):
            state = _start_state(instance)
            assignment = [None] * n
            feasible = True
            for j, ch in zip(order, channels):
                t = _earliest(instance, state, allocs[j], ch)
                if t is None:
                    feasible = False
                    break
                _place(instance, state, allocs[j], ch, t)
                assignment[j] = (ch, t)
            count += 1
            if not feasible:
                continue
            key = objective_and_delay(assignment, instance)
            if best_key is None or key < best_key:
                best_key = key
                best_assignment = assignment
    if best_key is None:
        raise ConstraintViolation('horizon', 'no schedule of %i allocations fits the horizon' % n)
    return OracleSolution(tuple(best_assignment), best_key[0], best_key[1], {'leaves': count})


#####################################################################
# Random instances and corpus records

def random_instance(rng, n_allocations=None, n_channels=None, tuning_time=250, guard_time=210, sla_fraction=None,
                    sla_table=None, n_vnos=2, max_allocations=8, max_channels=3, load=1.0, deadline_scale=0.5,
                    physical=True):
    """Small contended instance. Unset sizes are drawn from rng: 2..max_allocations allocations, 1..max_channels
    channels, an sla_fraction among 0.1 .. 1.0. Bursts of 0.84 to 7 µs request start times packed so the offered
    work fills the channels at the given load. About three bursts share each ONU, so ONUs queue behind their own
    bursts and retune between channels. SLA deadlines are the class latencies times deadline_scale.
    """
    if sla_table is None:
        sla_table = default_sla_table()
    if deadline_scale <= 0 or load <= 0:
        raise ConfigError('deadline_scale and load must be positive')
    n = int(n_allocations) if n_allocations is not None else int(rng.integers(2, max_allocations + 1))
    w = int(n_channels) if n_channels is not None else int(rng.integers(1, max_channels + 1))
    if sla_fraction is None:
        sla_fraction = float(rng.integers(1, 11)) / 10
    sla_ids = sorted(s.id for s in sla_table.values() if not s.best_effort)
    be_ids = sorted(s.id for s in sla_table.values() if s.best_effort)

    sizes = rng.integers(840, 7001, size=n)
    n_onus = max(2, n // 3)
    onus = rng.integers(0, n_onus, size=n)
    span = int((sizes.sum() + n * guard_time) / w / load)
    starts = rng.integers(0, span + 1, size=n)
    n_sla = int(round(sla_fraction * n))
    is_sla = np.zeros(n, dtype=bool)
    is_sla[rng.permutation(n)[:n_sla]] = True

    allocations = []
    count = 0
    for i in range(n):
        max_time = None
        if is_sla[i] or not be_ids:
            sla_id = sla_ids[count % len(sla_ids)]
            count += 1
            if sla_table[sla_id].max_latency != INF_TIME:
                max_time = int(starts[i]) + int(round(sla_table[sla_id].max_latency * deadline_scale))
        else:
            sla_id = be_ids[0]
        allocations.append(make_allocation(int(onus[i]) % n_vnos, int(onus[i]), sla_id, int(starts[i]),
                                           int(sizes[i]), seq=i, max_time=max_time))
    return make_instance(allocations, w, tuning_time=tuning_time, guard_time=guard_time, sla_table=sla_table,
                         physical=physical, sla_fraction=sla_fraction)


def _time_record(t):
    return None if t == INF_TIME else int(t)


def instance_to_record(instance):
    return {
        'schema_version': SCHEMA_VERSION,
        'n_channels': instance.n_channels,
        'tuning_time_ns': instance.tuning_time,
        'guard_time_ns': instance.guard_time,
        'horizon_ns': instance.horizon,
        'physical': instance.physical,
        'sla_fraction': instance.sla_fraction,
        'channel_free_ns': [int(t) for t in instance.channel_free],
        'onu_tuned': sorted([int(o), int(c)] for o, c in instance.onu_tuned.items()),
        'onu_free_ns': sorted([int(o), int(t)] for o, t in instance.onu_free.items()),
        'thresholds': sorted([int(f[0]), int(f[1]), float(t)] for f, t in instance.thresholds.items()),
        'allocations': [{'vno_id': a.vno_id, 'onu_id': a.onu_id, 'sla_id': a.sla_id, 'start_ns': int(a.start_time),
                         'size_ns': int(a.size), 'max_time_ns': _time_record(a.max_time), 'seq': a.seq}
                        for a in instance.allocations],
    }


def instance_from_record(record, name='record'):
    try:
        if record.get('schema_version', SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ConfigError('%s: schema version %s, expected %i' % (name, record['schema_version'], SCHEMA_VERSION))
        allocations = []
        for entry in record['allocations']:
            max_time = entry['max_time_ns']
            allocations.append(make_allocation(int(entry['vno_id']), int(entry['onu_id']), int(entry['sla_id']),
                                               int(entry['start_ns']), int(entry['size_ns']),
                                               seq=int(entry.get('seq', 0)),
                                               max_time=INF_TIME if max_time is None else int(max_time)))
        thresholds = {(int(v), int(s)): float(t) for v, s, t in record['thresholds']}
        return make_instance(allocations, int(record['n_channels']),
                             tuning_time=int(record['tuning_time_ns']),
                             guard_time=int(record['guard_time_ns']),
                             thresholds=thresholds,
                             horizon=record.get('horizon_ns'),
                             physical=bool(record.get('physical', True)),
                             channel_free=record.get('channel_free_ns'),
                             onu_tuned={int(o): int(c) for o, c in record.get('onu_tuned', [])},
                             onu_free={int(o): int(t) for o, t in record.get('onu_free_ns', [])},
                             sla_fraction=record.get('sla_fraction'))
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError('%s: invalid instance record (%s: %s)' % (name, type(err).__name__, err))


def save_instance(instance, out_file):
    os.makedirs(os.path.dirname(os.path.abspath(out_file)), exist_ok=True)
    with open(out_file, 'w') as f:
        json.dump(instance_to_record(instance), f, indent=1)
    return out_file


def load_instance(file):
    with open(file) as f:
        text = f.read()
    try:
        record = json.loads(text)
    except json.JSONDecodeError as err:
        raise ScenarioParseError(file, err.lineno, err.colno, err.msg)
    return instance_from_record(record, os.path.basename(file))


def load_corpus(folder):
    """Loads every *.json instance of a folder, sorted by file name."""
    if not os.path.isdir(folder):
        raise ConfigError('Instance corpus folder does not exist: %s' % folder)
    files = sorted(f for f in os.listdir(folder) if f.endswith('.json'))
    if len(files) == 0:
        raise TwdmException('No instance files found in %s' % folder)
    return [(os.path.splitext(f)[0], load_instance(os.path.join(folder, f))) for f in files]
