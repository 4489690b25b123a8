""" Tests of the static wavelength merge engine (SWA). """

import sys
import os
import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
import twdm_sla as ts  # noqa: E402
from twdm_sla.model import make_allocation, default_sla_table, VirtualBMap, ChannelState, OnuState  # noqa: E402
from twdm_sla.schedulers.swa import partition_by_channel, swa_frame  # noqa: E402
from twdm_sla.schedulers._base_scheduler import make_dtwa_config, round_robin_channel_map  # noqa: E402
from twdm_sla.sla import FlowBreachState  # noqa: E402
from twdm_sla.traffic import make_traffic_config, TrafficGenerator  # noqa: E402
from twdm_sla.utils import ConfigError  # noqa: E402


def _frames(n_frames, seed=4, load=0.8):
    cfg = make_traffic_config({'LOAD': load})
    gen = TrafficGenerator(cfg, default_sla_table().values(), rng=np.random.default_rng(seed))
    return [gen.next_frame() for _ in range(n_frames)]


def test_round_robin_partition():
    mapping = round_robin_channel_map(64, 8)
    bmaps = [VirtualBMap(0, 0, tuple(make_allocation(0, o, 1, 0, 1000, seq=o) for o in range(64)))]
    per_channel = partition_by_channel(bmaps, mapping, 8)
    assert [len(ch) for ch in per_channel] == [8] * 8
    for c, allocs in enumerate(per_channel):
        assert all(a.onu_id % 8 == c for a in allocs)


def test_single_channel_partition_keeps_everything():
    allocs = tuple(make_allocation(v % 3, v, 1, 0, 1000, seq=v) for v in range(10))
    per_channel = partition_by_channel([VirtualBMap(0, 0, allocs)], round_robin_channel_map(10, 1))
    assert len(per_channel) == 1 and tuple(per_channel[0]) == allocs


def test_unmapped_onu_is_a_config_error():
    bmaps = [VirtualBMap(0, 0, (make_allocation(0, 7, 1, 0, 1000),))]
    try:
        partition_by_channel(bmaps, [0, 1, 0, 1], 2)
        assert False
    except ConfigError as err:
        assert 'ONU 7' in str(err)


def test_channel_served_in_max_time_order():
    sla = default_sla_table()
    allocs = (make_allocation(0, 0, 2, 0, 1000, seq=0),  # max 25 us
              make_allocation(1, 2, 1, 0, 1000, seq=1),  # max 12.5 us
              make_allocation(2, 4, 0, 0, 1000, seq=2),  # best effort
              make_allocation(3, 6, 1, 0, 500, seq=3))  # max 12.5 us, smaller
    scheduled = swa_frame([VirtualBMap(0, 0, allocs)], sla, FlowBreachState(sla), round_robin_channel_map(8, 2),
                          make_dtwa_config(2), ChannelState(2), OnuState(8))
    assert [s.allocation.seq for s in scheduled[0]] == [3, 1, 0, 2]
    assert scheduled[1] == []
    assert [s.sched_time for s in scheduled[0]] == [0, 710, 1920, 3130]


def test_later_request_does_not_hold_back_the_channel():
    sla = default_sla_table()
    allocs = (make_allocation(0, 0, 2, 0, 1000, seq=0),  # max 25 us
              make_allocation(1, 2, 1, 3000, 1000, seq=1),  # max 15.5 us
              make_allocation(2, 4, 1, 1000, 1000, seq=2),  # max 13.5 us
              make_allocation(3, 6, 0, 0, 1000, seq=3))  # best effort
    scheduled = swa_frame([VirtualBMap(0, 0, allocs)], sla, FlowBreachState(sla), round_robin_channel_map(8, 2),
                          make_dtwa_config(2), ChannelState(2), OnuState(8))
    # The channel idles for nobody: best effort goes while seq 1 is not yet requested
    assert [s.allocation.seq for s in scheduled[0]] == [0, 2, 3, 1]
    assert [s.sched_time for s in scheduled[0]] == [0, 1210, 2420, 3630]
    assert not any(s.is_delayed for s in scheduled[0][:3])


def test_empty_frame():
    state = FlowBreachState(default_sla_table())
    out = swa_frame([], default_sla_table(), state, round_robin_channel_map(8, 4), make_dtwa_config(4))
    assert out == [[], [], [], []] and state.last_frame == -1


def test_onus_never_leave_their_channel():
    swa = ts.schedulers.SWA({'TUNING_TIME_US': 15.0})
    for bmaps in _frames(4):
        before = swa.snapshot()
        scheduled = swa.merge_frame(bmaps)
        assert swa.check_frame(bmaps, scheduled, before)
        for c, channel_list in enumerate(scheduled):
            assert all(swa.onu_channel_map[s.allocation.onu_id] == c for s in channel_list)


def test_tuning_time_has_no_effect():
    frames = _frames(4, seed=8)
    results = []
    for tuning in [0.0, 0.25, 15.0]:
        swa = ts.schedulers.SWA({'TUNING_TIME_US': tuning})
        results.append([swa.merge_frame(bmaps) for bmaps in frames])
    assert results[0] == results[1] == results[2]


def test_custom_channel_map():
    mapping = [0] * 32 + [1] * 32
    swa = ts.schedulers.SWA({'N_CHANNELS': 2, 'ONU_CHANNEL_MAP': mapping})
    assert swa.onu_channel_map == mapping
    for bad in [[0] * 10, [0] * 63 + [2]]:
        try:
            ts.schedulers.SWA({'N_CHANNELS': 2, 'ONU_CHANNEL_MAP': bad})
            assert False
        except ConfigError:
            pass


if __name__ == '__main__':
    for name, test in sorted(globals().items()):
        if name.startswith('test_') and callable(test):
            test()
    print('All tests passed')
