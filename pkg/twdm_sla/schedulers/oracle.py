from ._base_scheduler import _BaseScheduler
from .. import exact
from ..model import ScheduledAllocation, calc_max_time
from ..sla import update_breach


def oracle_frame(bmaps, sla_table, breach_state, channels, onus, cfg, max_allocations=None, max_channels=None):
    """One frame scheduled optimally for the frame's own flow breach count, starting from the carried-over
    channel and ONU state. Raises OracleSizeError when the frame is beyond the exact search bounds.
    """
    if max_allocations is None:
        max_allocations = exact.MAX_ALLOCATIONS
    if max_channels is None:
        max_channels = exact.MAX_CHANNELS
    if len(bmaps) == 0:
        return [[] for _ in range(channels.n_channels)]
    bmaps = calc_max_time(bmaps, sla_table)
    allocations = [a for bmap in bmaps for a in bmap.allocations]
    present = set(a.onu_id for a in allocations)
    instance = exact.make_instance(
        allocations, channels.n_channels, tuning_time=cfg.channel_tuning_time, guard_time=cfg.guard_time,
        sla_table=sla_table, channel_free=channels.free_time,
        onu_tuned={o: onus.tuned_channel[o] for o in present if onus.tuned_channel[o] is not None},
        onu_free={o: onus.free_time[o] for o in present})
    solution = exact.solve_exact(instance, max_allocations, max_channels)

    channels.reset_counts()
    scheduled = [[] for _ in range(channels.n_channels)]
    for alloc, (channel, sched) in sorted(zip(instance.allocations, solution.assignment), key=lambda x: x[1][1]):
        free = sched + alloc.size + cfg.guard_time
        channels.free_time[channel] = free
        channels.alloc_count[channel] += 1
        onus.free_time[alloc.onu_id] = free
        onus.tuned_channel[alloc.onu_id] = channel
        scheduled[channel].append(ScheduledAllocation(alloc, channel, sched))
    update_breach(scheduled, breach_state, bmaps[0].frame_index)
    return scheduled


class Oracle(_BaseScheduler):
    """Exact per-frame scheduling, for small frames only."""
    def __init__(self, config=None, sla_table=None):
        super().__init__(config, sla_table)
        self.max_allocations = int(self.config['MAX_ALLOCATIONS'])
        self.max_channels = int(self.config['MAX_CHANNELS'])

    @staticmethod
    def get_default_scheduler_config():
        default_config = _BaseScheduler.get_default_scheduler_config()
        default_config.update({
            'MAX_ALLOCATIONS': exact.MAX_ALLOCATIONS,  # Per frame, larger frames raise OracleSizeError
            'MAX_CHANNELS': exact.MAX_CHANNELS,
        })
        return default_config

    def _merge(self, bmaps):
        return oracle_frame(bmaps, self.sla_table, self.breach_state, self.channels, self.onus, self.cfg,
                            self.max_allocations, self.max_channels)
