import zlib
import heapq
from abc import ABC, abstractmethod
from collections import namedtuple, Counter
from .. import _timing
from ..model import ChannelState, OnuState, default_sla_table
from ..sla import FlowBreachState
from ..utils import init_config, check_config_keys, us_to_ns, ConfigError, InvariantViolation

DtwaConfig = namedtuple('DtwaConfig', ['n_channels', 'channel_tuning_time', 'line_rate_per_channel', 'guard_time'])


def make_dtwa_config(n_channels, tuning_time_us=0.0, line_rate_gbps=25.0, guard_time_us=0.21):
    """Scheduler parameters in internal units (ns). Raises ConfigError for W < 1 or negative durations."""
    if int(n_channels) < 1:
        raise ConfigError('N_CHANNELS must be at least 1 (got %s)' % n_channels)
    if tuning_time_us < 0:
        raise ConfigError('TUNING_TIME_US must be >= 0 (got %s)' % tuning_time_us)
    if guard_time_us < 0:
        raise ConfigError('GUARD_TIME_US must be >= 0 (got %s)' % guard_time_us)
    if line_rate_gbps <= 0:
        raise ConfigError('LINE_RATE_GBPS must be positive (got %s)' % line_rate_gbps)
    return DtwaConfig(int(n_channels), us_to_ns(tuning_time_us), float(line_rate_gbps), us_to_ns(guard_time_us))


def round_robin_channel_map(n_onus, n_channels):
    """Fixed ONU -> channel map, ONU o on channel o mod W."""
    return [o % n_channels for o in range(n_onus)]


class ReleaseQueue:
    """Allocations in priority order, handed out once they are requested.

    pop(now) returns the first allocation of the priority order among those whose start time is not after now.
    When none is requested by now, the allocations with the next start time are released. Priority therefore only
    decides between allocations that compete for the same channel time.
    """
    def __init__(self, ordered):
        self.ordered = list(ordered)
        self.by_start = sorted(range(len(self.ordered)), key=lambda i: (self.ordered[i].start_time, i))
        self.next = 0
        self.released = []

    def __len__(self):
        return len(self.ordered) - self.next + len(self.released)

    def pop(self, now):
        if len(self.released) == 0:
            now = max(now, self.ordered[self.by_start[self.next]].start_time)
        while self.next < len(self.by_start) and self.ordered[self.by_start[self.next]].start_time <= now:
            heapq.heappush(self.released, self.by_start[self.next])
            self.next += 1
        return self.ordered[heapq.heappop(self.released)]


class _BaseScheduler(ABC):
    """Merge engine owning the channel, ONU and breach state tables of one simulation run."""
    @abstractmethod
    def __init__(self, config=None, sla_table=None):
        self.config = init_config(config, self.get_default_scheduler_config(), self.get_name())
        check_config_keys(self.config, self.get_default_scheduler_config(), self.get_name())
        self.cfg = make_dtwa_config(self.config['N_CHANNELS'], self.config['TUNING_TIME_US'],
                                    self.config['LINE_RATE_GBPS'], self.config['GUARD_TIME_US'])
        self.sla_table = sla_table if sla_table is not None else default_sla_table()
        self.n_onus = int(self.config['N_ONUS'])
        if self.config['ONU_CHANNEL_MAP'] is None:
            self.onu_channel_map = round_robin_channel_map(self.n_onus, self.cfg.n_channels)
        else:
            self.onu_channel_map = [int(c) for c in self.config['ONU_CHANNEL_MAP']]
            bad = [c for c in self.onu_channel_map if not 0 <= c < self.cfg.n_channels]
            if len(self.onu_channel_map) != self.n_onus or len(bad) > 0:
                raise ConfigError('ONU_CHANNEL_MAP must give a channel in [0, %i) for each of the %i ONUs'
                                  % (self.cfg.n_channels, self.n_onus))
        self.reset()

    @staticmethod
    def get_default_scheduler_config():
        """Default scheduler config values"""
        default_config = {
            'N_CHANNELS': 8,
            'LINE_RATE_GBPS': 25.0,  # Per channel
            'TUNING_TIME_US': 0.0,
            'GUARD_TIME_US': 0.21,  # Appended after every burst when advancing free times
            'N_ONUS': 64,
            'ONU_CHANNEL_MAP': None,  # Fixed channel per ONU (SWA). If None, round robin by onu id
            'CHECK_CONSTRAINTS': False,  # Verify every merged frame (conservation, overlaps, tuning gaps)
            'PRINT_CONFIG': False,
        }
        return default_config

    @classmethod
    def get_name(cls):
        return cls.__name__

    def reset(self):
        """Allocates fresh state tables. Called once per run."""
        self.channels = ChannelState(self.cfg.n_channels)
        self.onus = OnuState(self.n_onus)
        self.breach_state = FlowBreachState(self.sla_table)
        self.frames_processed = 0

    #####################################################################
    # Abstract functions for subclasses to implement

    @abstractmethod
    def _merge(self, bmaps):
        """Runs one frame through the merge pipeline. Returns per-channel ScheduledAllocation lists."""
        ...

    #####################################################################

    def merge_frame(self, bmaps):
        scheduled = self._merge(bmaps)
        self.frames_processed += 1
        return scheduled

    def snapshot(self):
        return self.channels.copy(), self.onus.copy()

    def state_checksum(self, state=None, frames=None):
        """crc32 of the carried-over state tables. state is a (channels, onus) pair, the live tables if None."""
        channels, onus = state if state is not None else (self.channels, self.onus)
        frames = self.frames_processed if frames is None else frames
        text = repr((channels.free_time, onus.tuned_channel, onus.free_time, frames))
        return zlib.crc32(text.encode(), self.breach_state.checksum())

    def expected_state(self, before, scheduled):
        """Channel and ONU tables a merged frame leaves behind when applied to the snapshot taken before it."""
        channels, onus = before[0].copy(), before[1].copy()
        guard = self.cfg.guard_time
        for s in sorted((s for ch in scheduled for s in ch), key=lambda x: x.sched_time):
            free = s.end_time + guard
            channels.free_time[s.channel] = max(channels.free_time[s.channel], free)
            onus.free_time[s.allocation.onu_id] = free
            onus.tuned_channel[s.allocation.onu_id] = s.channel
        return channels, onus

    @_timing.time
    def check_frame(self, bmaps, scheduled, before):
        """Raises InvariantViolation if a merged frame loses or duplicates an allocation, double books a channel,
        overlaps an ONU's bursts, retunes faster than the tuning time, or transmits before the requested start.
        before is the snapshot() taken ahead of the merge.
        """
        channels_before, onus_before = before
        guard = self.cfg.guard_time
        requested = Counter(_identity(a) for bmap in bmaps for a in bmap.allocations)
        granted = Counter(_identity(s.allocation) for ch in scheduled for s in ch)
        if requested != granted:
            raise InvariantViolation('%s: merged allocations differ from requested ones (%i requested, %i merged)'
                                     % (self.get_name(), sum(requested.values()), sum(granted.values())))
        if len(scheduled) != self.cfg.n_channels:
            raise InvariantViolation('%s returned %i channel lists for %i channels'
                                     % (self.get_name(), len(scheduled), self.cfg.n_channels))

        per_onu = {}
        for ch, channel_list in enumerate(scheduled):
            free = channels_before.free_time[ch]
            for s in sorted(channel_list, key=lambda x: x.sched_time):
                if s.channel != ch:
                    raise InvariantViolation('Allocation %s listed on channel %i but bound to %i'
                                             % (s.allocation, ch, s.channel))
                if s.sched_time < s.allocation.start_time:
                    raise InvariantViolation('Allocation %s scheduled before its start time' % (s.allocation,))
                if s.sched_time < free:
                    raise InvariantViolation('Channel %i double booked at %i ns' % (ch, s.sched_time))
                free = s.end_time + guard
                per_onu.setdefault(s.allocation.onu_id, []).append(s)

        for onu, bursts in per_onu.items():
            tuned = onus_before.tuned_channel[onu]
            free = onus_before.free_time[onu]
            for s in sorted(bursts, key=lambda x: x.sched_time):
                ready = free if tuned is None or tuned == s.channel else free + self.cfg.channel_tuning_time
                if s.sched_time < ready:
                    raise InvariantViolation('ONU %i transmits at %i ns on channel %i before it is ready (%i ns)'
                                             % (onu, s.sched_time, s.channel, ready))
                tuned = s.channel
                free = s.end_time + guard
        return True


def _identity(alloc):
    # max_time is filled in by the merge, so it is left out
    return alloc._replace(max_time=None)
