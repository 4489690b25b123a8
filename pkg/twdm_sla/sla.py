""" Stateful SLA breach tracking over a sliding 1 ms (8 frame) window.

An allocation is delayed when its scheduled time is strictly later than its max_time. A flow (vno_id, sla_id) is
breached for a window position when its fraction of delayed allocations in the window exceeds the class's
breach threshold. Best-effort flows are tracked but never flagged.
"""

import zlib
from collections import deque
from .model import WINDOW_FRAMES
from .utils import InvariantViolation


class FlowBreachState:
    """Ring buffers of (delayed, total) per flow, advanced one slot per frame."""
    def __init__(self, sla_table, window=WINDOW_FRAMES):
        self.sla_table = sla_table
        self.window = window
        self.rings = {}
        self.delayed_sum = {}
        self.total_sum = {}
        self.fraction = {}
        self.breach_events = {}
        self.history = {}
        self.last_frame = -1

    def _add_flow(self, flow):
        self.rings[flow] = deque(maxlen=self.window)
        self.delayed_sum[flow] = 0
        self.total_sum[flow] = 0
        self.fraction[flow] = 0.0
        self.breach_events[flow] = 0
        self.history[flow] = []

    def is_breachable(self, flow):
        sla = self.sla_table.get(flow[1])
        return sla is not None and not sla.best_effort

    def advance(self, counts):
        """Slides the window by one frame. counts maps flow -> (delayed, total) for that frame.
        Returns the per-flow breach flags of the new window position.
        """
        for flow in counts.keys():
            if flow not in self.rings:
                self._add_flow(flow)
        flags = {}
        for flow, ring in self.rings.items():
            delayed, total = counts.get(flow, (0, 0))
            if len(ring) == ring.maxlen:
                old_delayed, old_total = ring[0]
                self.delayed_sum[flow] -= old_delayed
                self.total_sum[flow] -= old_total
            ring.append((delayed, total))
            self.delayed_sum[flow] += delayed
            self.total_sum[flow] += total
            if self.total_sum[flow] > 0:
                self.fraction[flow] = self.delayed_sum[flow] / self.total_sum[flow]
            else:
                self.fraction[flow] = 0.0

            if self.is_breachable(flow):
                breached = self.fraction[flow] > self.sla_table[flow[1]].breach_threshold
                if self.total_sum[flow] > 0:
                    self.history[flow].append(breached)
                if breached:
                    self.breach_events[flow] += 1
            else:
                breached = False
            flags[flow] = breached
        self.last_frame += 1
        return flags

    def breach_table(self):
        """Current window fraction per flow, the priority input of the merge comparator."""
        return dict(self.fraction)

    def checksum(self, seed=0):
        text = repr(sorted((flow, tuple(ring)) for flow, ring in self.rings.items())) + repr(self.last_frame)
        return zlib.crc32(text.encode(), seed)


def update_breach(scheduled, state, frame_index=None):
    """Accounts scheduled allocations into the breach state.

    scheduled is a list (per channel) of ScheduledAllocation lists. Allocations are bucketed by their frame so that
    one call over several frames equals one call per frame. If frame_index is given the window is advanced up to
    that frame even when it carried no allocation.
    Returns (state, flags) where flags holds the breach flags of the last window position.
    """
    per_frame = {}
    for channel_list in scheduled:
        for s in channel_list:
            frame_counts = per_frame.setdefault(s.allocation.frame, {})
            delayed, total = frame_counts.get(s.allocation.flow, (0, 0))
            frame_counts[s.allocation.flow] = (delayed + (1 if s.is_delayed else 0), total + 1)

    last = max(per_frame.keys()) if per_frame else state.last_frame
    if frame_index is not None:
        last = max(last, frame_index)
    if per_frame and min(per_frame.keys()) <= state.last_frame:
        raise InvariantViolation('Frame %i was already accounted (last accounted frame %i)'
                                 % (min(per_frame.keys()), state.last_frame))
    flags = {}
    for frame in range(state.last_frame + 1, last + 1):
        flags = state.advance(per_frame.get(frame, {}))
    return state, flags


def compliance_metric(history, sla_id=None):
    """Mean over SLA flows and window positions of 'window not breached'. 1.0 when nothing was recorded."""
    n_windows = 0
    n_breached = 0
    for flow, flags in history.items():
        if sla_id is not None and flow[1] != sla_id:
            continue
        n_windows += len(flags)
        n_breached += sum(1 for f in flags if f)
    if n_windows == 0:
        return 1.0
    return 1.0 - n_breached / n_windows


def breach_counts(history):
    """Raw counts behind compliance_metric."""
    windows = sum(len(flags) for flags in history.values())
    breached = sum(sum(1 for f in flags if f) for flags in history.values())
    flows_breached = sum(1 for flags in history.values() if any(flags))
    return {'Windows': windows, 'BreachedWindows': breached, 'FlowsBreached': flows_breached,
            'Flows': len(history)}
