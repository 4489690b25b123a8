""" Domain types shared by the merge engines.

All times are integer nanoseconds measured from the start of the simulation (frame 0 starts at 0).
Best-effort traffic carries INF_TIME as latency target and max_time.
"""

from collections import namedtuple
from functools import cmp_to_key
from .utils import ConfigError, us_to_ns

INF_TIME = float('inf')
FRAME_NS = 125000  # 125 µs upstream frame
WINDOW_FRAMES = 8  # 1 ms compliance window


class SlaClass(namedtuple('SlaClass', ['id', 'max_latency', 'compliance', 'breach_threshold', 'best_effort'])):
    """Latency target plus compliance level. breach_threshold is the tolerated fraction of delayed allocations."""
    __slots__ = ()


def make_sla_class(sla_id, max_latency_us, compliance):
    """Builds a breachable SLA class from a latency target in µs and a compliance fraction."""
    if not 0 < compliance <= 1:
        raise ConfigError('SLA class %i: compliance must be in (0, 1], got %s' % (sla_id, compliance))
    if max_latency_us is None or max_latency_us < 0:
        raise ConfigError('SLA class %i: max latency must be a non-negative duration' % sla_id)
    max_latency = INF_TIME if max_latency_us == INF_TIME else us_to_ns(max_latency_us)
    return SlaClass(sla_id, max_latency, compliance, 1 - compliance, False)


def best_effort_class(sla_id=0):
    return SlaClass(sla_id, INF_TIME, 0.0, 1.0, True)


def default_sla_table():
    """Best effort plus the two SLA classes (90% within 12.5 µs, 95% within 25 µs)."""
    return {0: best_effort_class(0),
            1: make_sla_class(1, 12.5, 0.90),
            2: make_sla_class(2, 25.0, 0.95)}


def sla_table_from_config(sla_list):
    """Builds a table from config entries of the form [id, max_latency_us, compliance] or [id, 'best_effort']."""
    table = {}
    for entry in sla_list:
        if len(entry) == 2 and entry[1] == 'best_effort':
            sla = best_effort_class(int(entry[0]))
        elif len(entry) == 3:
            sla = make_sla_class(int(entry[0]), float(entry[1]), float(entry[2]))
        else:
            raise ConfigError('Invalid SLA class entry: %s' % (entry,))
        if sla.id in table:
            raise ConfigError('Duplicate SLA class id %i' % sla.id)
        table[sla.id] = sla
    return table


class Allocation(namedtuple('Allocation', ['vno_id', 'onu_id', 'sla_id', 'start_time', 'size', 'max_time', 'seq',
                                           'frame'])):
    """One upstream grant request from a tenant's virtual bandwidth map."""
    __slots__ = ()

    @property
    def flow(self):
        return self.vno_id, self.sla_id

    @property
    def end_time(self):
        return self.start_time + self.size


def make_allocation(vno_id, onu_id, sla_id, start_time, size, seq=0, frame=0, max_time=None):
    return Allocation(vno_id, onu_id, sla_id, start_time, size, max_time, seq, frame)


VirtualBMap = namedtuple('VirtualBMap', ['vno_id', 'frame_index', 'allocations'])


class ScheduledAllocation(namedtuple('ScheduledAllocation', ['allocation', 'channel', 'sched_time'])):
    """An allocation bound to one channel and start time."""
    __slots__ = ()

    @property
    def end_time(self):
        return self.sched_time + self.allocation.size

    @property
    def delay(self):
        return self.sched_time - self.allocation.start_time

    @property
    def is_delayed(self):
        return self.sched_time > self.allocation.max_time


class ChannelState:
    """Earliest free time and per-frame allocation counter of every channel."""
    def __init__(self, n_channels, free_time=None):
        if n_channels < 1:
            raise ConfigError('At least one channel is required (got %i)' % n_channels)
        self.n_channels = n_channels
        self.free_time = [0] * n_channels if free_time is None else list(free_time)
        self.alloc_count = [0] * n_channels

    def reset_counts(self):
        self.alloc_count = [0] * self.n_channels

    def copy(self):
        state = ChannelState(self.n_channels, self.free_time)
        state.alloc_count = list(self.alloc_count)
        return state


class OnuState:
    """Tuned channel (None while untuned) and transmitter free time of every ONU."""
    def __init__(self, n_onus):
        self.n_onus = n_onus
        self.tuned_channel = [None] * n_onus
        self.free_time = [0] * n_onus

    def copy(self):
        state = OnuState(self.n_onus)
        state.tuned_channel = list(self.tuned_channel)
        state.free_time = list(self.free_time)
        return state


def calc_max_time(bmaps, sla_table):
    """Sets max_time = start_time + max latency of the allocation's SLA class.
    Returns new maps, the input maps are left as they are.
    """
    out = []
    for bmap in bmaps:
        allocations = []
        for alloc in bmap.allocations:
            sla = sla_table.get(alloc.sla_id)
            if sla is None:
                raise ConfigError('Allocation (vno %i, onu %i, seq %i) refers to unknown sla_id %s'
                                  % (alloc.vno_id, alloc.onu_id, alloc.seq, alloc.sla_id))
            if sla.best_effort:
                max_time = INF_TIME
            else:
                max_time = alloc.start_time + sla.max_latency
            allocations.append(alloc._replace(max_time=max_time))
        out.append(bmap._replace(allocations=tuple(allocations)))
    return out


def priority_key(alloc, breach):
    """Sort key equivalent to compare_alloc: higher flow breach, then earlier max_time, smaller size, lower seq."""
    return -breach.get(alloc.flow, 0.0), alloc.max_time, alloc.size, alloc.seq, alloc.frame


def compare_alloc(a, b, breach):
    """Returns -1 if a is scheduled before b, 1 if after, 0 if they are interchangeable."""
    key_a = priority_key(a, breach)
    key_b = priority_key(b, breach)
    if key_a < key_b:
        return -1
    if key_a > key_b:
        return 1
    return 0


def sort_allocations(allocations, breach):
    """Sorts allocations with compare_alloc (via its equivalent key)."""
    return sorted(allocations, key=lambda a: priority_key(a, breach))


def comparator(breach):
    """compare_alloc bound to a breach table, usable with sorted(key=...)."""
    return cmp_to_key(lambda a, b: compare_alloc(a, b, breach))
