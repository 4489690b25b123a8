""" Dynamic Time and Wavelength Allocation.

All tenants' allocations of a frame are merged into one list ordered by breach-aware priority. Whenever a channel
frees up, the highest priority allocation already requested is granted the earliest (channel, time) pair. An ONU
changes channel only when retuning gets it on air strictly earlier than staying where it is.
"""

from ._base_scheduler import _BaseScheduler, ReleaseQueue
from .. import _timing
from ..model import ScheduledAllocation, calc_max_time, sort_allocations
from ..sla import update_breach
from ..utils import ConfigError


def sort_bmaps(bmaps, breach):
    """Concatenates all virtual maps and sorts the result with compare_alloc. The input maps are not modified."""
    return sort_allocations([a for bmap in bmaps for a in bmap.allocations], breach)


def find_min_index(free_times, alloc_counts):
    """Channel with the earliest free time. Ties go to the channel with fewest allocations this frame, then to the
    lowest index.
    """
    min_val = min(free_times)
    min_indices = [i for i, t in enumerate(free_times) if t == min_val]
    return min(min_indices, key=lambda i: (alloc_counts[i], i))


def assign_resource(sorted_allocs, channels, onus, cfg):
    """Greedy channel and time assignment. Each time a channel frees up, the first allocation of sorted_allocs
    among those already requested by then is granted next, so an allocation requested later never holds back an
    earlier one. channels and onus are updated in place.
    Returns one list of ScheduledAllocation per channel, ordered by sched_time.
    """
    if cfg.n_channels < 1 or channels.n_channels < 1:
        raise ConfigError('At least one channel is required')
    scheduled = [[] for _ in range(channels.n_channels)]
    queue = ReleaseQueue(sorted_allocs)
    while queue:
        alloc = queue.pop(min(channels.free_time))
        onu = alloc.onu_id
        if not 0 <= onu < onus.n_onus:
            raise ConfigError('Allocation (vno %i, seq %i) refers to unknown ONU %i'
                              % (alloc.vno_id, alloc.seq, onu))
        tuned = onus.tuned_channel[onu]
        onu_free = onus.free_time[onu]
        earliest = find_min_index(channels.free_time, channels.alloc_count)

        if tuned is None:
            # First grant ever, the ONU tunes during activation
            channel = earliest
            sched = max(channels.free_time[earliest], onu_free, alloc.start_time)
        else:
            same = max(channels.free_time[tuned], onu_free, alloc.start_time)
            switch = max(channels.free_time[earliest], onu_free + cfg.channel_tuning_time, alloc.start_time)
            if switch < same:
                channel, sched = earliest, switch
            else:
                channel, sched = tuned, same

        free = sched + alloc.size + cfg.guard_time
        channels.free_time[channel] = free
        channels.alloc_count[channel] += 1
        onus.free_time[onu] = free
        onus.tuned_channel[onu] = channel
        scheduled[channel].append(ScheduledAllocation(alloc, channel, sched))

    for channel_list in scheduled:
        channel_list.sort(key=lambda s: s.sched_time)
    return scheduled


@_timing.time
def dtwa_frame(bmaps, sla_table, breach_state, channels, onus, cfg):
    """One frame of DTWA: max times, breach-aware sort, assignment, then SLA accounting.
    Returns the per-channel merged maps.
    """
    if len(bmaps) == 0:
        return [[] for _ in range(channels.n_channels)]
    bmaps = calc_max_time(bmaps, sla_table)
    channels.reset_counts()
    ordered = sort_bmaps(bmaps, breach_state.breach_table())
    scheduled = assign_resource(ordered, channels, onus, cfg)
    update_breach(scheduled, breach_state, bmaps[0].frame_index)
    return scheduled


class DTWA(_BaseScheduler):
    """Dynamic wavelength allocation: ONUs may retune between bursts."""
    def __init__(self, config=None, sla_table=None):
        super().__init__(config, sla_table)

    def _merge(self, bmaps):
        return dtwa_frame(bmaps, self.sla_table, self.breach_state, self.channels, self.onus, self.cfg)
