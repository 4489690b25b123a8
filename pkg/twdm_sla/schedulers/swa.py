""" Static Wavelength Allocation.

Each ONU stays on one channel for the whole run. The frame's allocations are partitioned by channel and every
channel is sorted and timed on its own, with the same release rule as DTWA.
"""

from ._base_scheduler import _BaseScheduler, ReleaseQueue
from .. import _timing
from ..model import ChannelState, OnuState, ScheduledAllocation, calc_max_time, sort_allocations
from ..sla import update_breach
from ..utils import ConfigError


def _channel_of(onu_channel_map, onu):
    try:
        channel = onu_channel_map[onu]
    except (IndexError, KeyError):
        channel = None
    if channel is None:
        raise ConfigError('ONU %i has no channel in the ONU channel map' % onu)
    return channel


def partition_by_channel(bmaps, onu_channel_map, n_channels=None):
    """Splits all allocations into W lists by their ONU's fixed channel.
    If n_channels is None it is taken as the highest mapped channel + 1.
    """
    if n_channels is None:
        values = onu_channel_map.values() if isinstance(onu_channel_map, dict) else onu_channel_map
        n_channels = max(values) + 1
    per_channel = [[] for _ in range(n_channels)]
    for bmap in bmaps:
        for alloc in bmap.allocations:
            channel = _channel_of(onu_channel_map, alloc.onu_id)
            if not 0 <= channel < n_channels:
                raise ConfigError('ONU %i is mapped to channel %i, only %i channels exist'
                                  % (alloc.onu_id, channel, n_channels))
            per_channel[channel].append(alloc)
    return per_channel


def assign_channel(sorted_allocs, channel, channels, onus, cfg):
    """Times allocations on one channel: sched = max(channel free, ONU free, start time). Whenever the channel
    frees up it takes the first allocation of sorted_allocs already requested by then.
    """
    out = []
    queue = ReleaseQueue(sorted_allocs)
    while queue:
        alloc = queue.pop(channels.free_time[channel])
        sched = max(channels.free_time[channel], onus.free_time[alloc.onu_id], alloc.start_time)
        free = sched + alloc.size + cfg.guard_time
        channels.free_time[channel] = free
        channels.alloc_count[channel] += 1
        onus.free_time[alloc.onu_id] = free
        onus.tuned_channel[alloc.onu_id] = channel
        out.append(ScheduledAllocation(alloc, channel, sched))
    return out


@_timing.time
def swa_frame(bmaps, sla_table, breach_state, onu_channel_map, cfg, channels=None, onus=None):
    """One frame of SWA. channels and onus carry free times across frames. If not given, fresh tables are used.
    Returns the per-channel merged maps.
    """
    if channels is None:
        channels = ChannelState(cfg.n_channels)
    if onus is None:
        onus = OnuState(len(onu_channel_map))
    if len(bmaps) == 0:
        return [[] for _ in range(channels.n_channels)]
    bmaps = calc_max_time(bmaps, sla_table)
    channels.reset_counts()
    breach = breach_state.breach_table()
    scheduled = []
    for channel, allocs in enumerate(partition_by_channel(bmaps, onu_channel_map, channels.n_channels)):
        scheduled.append(assign_channel(sort_allocations(allocs, breach), channel, channels, onus, cfg))
    update_breach(scheduled, breach_state, bmaps[0].frame_index)
    return scheduled


class SWA(_BaseScheduler):
    """Static wavelength allocation: every ONU transmits on its mapped channel only."""
    def __init__(self, config=None, sla_table=None):
        super().__init__(config, sla_table)

    def _merge(self, bmaps):
        return swa_frame(bmaps, self.sla_table, self.breach_state, self.onu_channel_map, self.cfg,
                         self.channels, self.onus)
