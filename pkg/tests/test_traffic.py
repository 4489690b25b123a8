""" Tests of the traffic generator: arrival distributions, burst sizes, frame budget and SLA marking. """

import sys
import os
import numpy as np
from scipy import stats

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from twdm_sla import traffic  # noqa: E402
from twdm_sla.model import default_sla_table  # noqa: E402
from twdm_sla.utils import ConfigError, FrameOverflowError  # noqa: E402

N_DRAWS = 10 ** 6
ALPHA = 0.01


def _chi_square_p(observed, probs):
    expected = np.asarray(probs, dtype=float)
    expected = expected / expected.sum() * observed.sum()
    return stats.chisquare(observed, expected).pvalue


def test_discrete_distributions_fit():
    for seed, name in enumerate(['uniform', 'poisson', 'zipf_mandelbrot']):
        cfg = traffic.make_traffic_config({'DISTRIBUTION': name})
        support, pmf = traffic.arrival_support(cfg)
        draws = traffic.sample_arrivals_au(cfg, np.random.default_rng(100 + seed), N_DRAWS).astype(int)
        assert draws.min() >= support[0] and draws.max() <= support[-1]
        observed = np.bincount(draws, minlength=support[-1] + 1)[support[0]:]
        p = _chi_square_p(observed, pmf)
        assert p > ALPHA, (name, p)


def test_pareto_fits():
    cfg = traffic.make_traffic_config({'DISTRIBUTION': 'pareto'})
    draws = traffic.sample_arrivals_au(cfg, np.random.default_rng(7), N_DRAWS)
    assert draws.min() >= 1.0 and draws.max() <= 20.0
    edges = np.linspace(1, 20, 39)
    observed, _ = np.histogram(draws, bins=edges)
    p = _chi_square_p(observed, np.diff(traffic.truncated_pareto_cdf(cfg, edges)))
    assert p > ALPHA, p


def test_sample_means():
    for name in ['uniform', 'poisson']:
        cfg = traffic.make_traffic_config({'DISTRIBUTION': name})
        mean = traffic.sample_arrivals_au(cfg, np.random.default_rng(11), N_DRAWS).mean()
        assert abs(mean - 10) <= 0.1, (name, mean)
        assert abs(mean - traffic.expected_arrival_au(cfg)) <= 0.05
    cfg = traffic.make_traffic_config({'DISTRIBUTION': 'pareto'})
    mean = traffic.sample_arrivals_au(cfg, np.random.default_rng(12), N_DRAWS).mean()
    assert abs(mean - traffic.expected_arrival_au(cfg)) <= 0.05


def test_burst_size_range():
    cfg = traffic.make_traffic_config()
    assert cfg.min_burst == 840 and cfg.max_burst == 7000
    sizes = traffic.sample_bursts(cfg, np.random.default_rng(0), 10000)
    assert sizes.min() >= 840 and sizes.max() <= 7000
    # 160 bytes at 25 Gb/s
    assert 0 <= traffic.sample_arrival(cfg, np.random.default_rng(0)) <= int(round(20 * 51.2))

    sizes = traffic.sample_bursts(cfg, np.random.default_rng(1), N_DRAWS)
    assert abs(sizes.mean() - 3920) <= 20

    fixed = traffic.make_traffic_config({'MIN_BURST_US': 2.5, 'MAX_BURST_US': 2.5})
    assert all(traffic.sample_burst(fixed, np.random.default_rng(s)) == 2500 for s in range(5))


def test_pareto_median_below_uniform():
    medians = {}
    for name in ['uniform', 'pareto']:
        cfg = traffic.make_traffic_config({'DISTRIBUTION': name})
        medians[name] = np.median(traffic.sample_arrivals_au(cfg, np.random.default_rng(13), N_DRAWS))
    assert medians['pareto'] < medians['uniform']


def test_topology_split():
    topo = traffic.make_topology(5, 64, np.random.default_rng(3))
    assert [len(m) for m in topo.vno_onus] == [13, 13, 13, 13, 12]
    assert sorted(o for m in topo.vno_onus for o in m) == list(range(64))
    for v, members in enumerate(topo.vno_onus):
        assert all(topo.onu_to_vno[o] == v for o in members)
    try:
        traffic.make_topology(5, 3, np.random.default_rng(0))
        assert False
    except ConfigError:
        pass


def test_frame_budget_and_placement():
    slas = default_sla_table().values()
    for distribution in traffic.DISTRIBUTIONS:
        cfg = traffic.make_traffic_config({'DISTRIBUTION': distribution, 'LOAD': 0.8})
        gen = traffic.TrafficGenerator(cfg, slas, rng=np.random.default_rng(5))
        budget = int(round(0.8 * 8 * 125000))
        for f in range(3):
            bmaps = gen.next_frame()
            assert len(bmaps) == 5
            total = traffic.total_size(bmaps)
            assert budget - cfg.min_burst < total <= budget
            ends = {}
            for bmap in bmaps:
                assert bmap.frame_index == f
                for a in sorted(bmap.allocations, key=lambda x: x.start_time):
                    assert a.frame == f and a.vno_id == bmap.vno_id
                    assert gen.topology.onu_to_vno[a.onu_id] == bmap.vno_id
                    assert f * 125000 <= a.start_time and a.end_time <= (f + 1) * 125000
                    # one ONU never requests overlapping bursts
                    assert a.start_time >= ends.get(a.onu_id, 0)
                    ends[a.onu_id] = a.end_time + cfg.guard_time
            seqs = [a.seq for bmap in bmaps for a in bmap.allocations]
            assert sorted(seqs) == list(range(len(seqs)))


def test_generate_frame_at_later_index():
    cfg = traffic.make_traffic_config({'N_CHANNELS': 2, 'LOAD': 0.5})
    rng = np.random.default_rng(21)
    topo = traffic.make_topology(3, 12, rng)
    bmaps = traffic.generate_frame(cfg, topo, default_sla_table().values(), 4, rng)
    assert [bmap.vno_id for bmap in bmaps] == [0, 1, 2]
    allocations = [a for bmap in bmaps for a in bmap.allocations]
    assert all(a.frame == 4 and 4 * 125000 <= a.start_time < 5 * 125000 for a in allocations)
    assert 125000 - cfg.min_burst < traffic.total_size(bmaps) <= 125000


def test_sla_fraction_marking():
    slas = default_sla_table().values()
    for fraction in [0.0, 0.3, 0.5, 1.0]:
        cfg = traffic.make_traffic_config({'SLA_FRACTION': fraction, 'LOAD': 0.5})
        gen = traffic.TrafficGenerator(cfg, slas, rng=np.random.default_rng(9))
        bmaps = gen.next_frame()
        allocations = [a for bmap in bmaps for a in bmap.allocations]
        total = sum(a.size for a in allocations)
        sla_total = sum(a.size for a in allocations if a.sla_id != 0)
        assert abs(sla_total - fraction * total) <= cfg.max_burst / 2
        if fraction == 0.0:
            assert sla_total == 0
        if fraction == 1.0:
            assert sla_total == total
        if 0 < fraction:
            counts = [sum(1 for a in allocations if a.sla_id == c) for c in (1, 2)]
            assert abs(counts[0] - counts[1]) <= 1


def test_per_vno_assignment():
    cfg = traffic.make_traffic_config({'SLA_ASSIGNMENT': 'per_vno', 'SLA_FRACTION': 1.0})
    gen = traffic.TrafficGenerator(cfg, default_sla_table().values(), rng=np.random.default_rng(2))
    for bmap in gen.next_frame():
        assert all(a.sla_id == 1 + bmap.vno_id % 2 for a in bmap.allocations)


def test_same_seed_same_frames():
    cfg = traffic.make_traffic_config({'DISTRIBUTION': 'zipf_mandelbrot'})
    a = traffic.TrafficGenerator(cfg, default_sla_table().values(), rng=np.random.default_rng(42))
    b = traffic.TrafficGenerator(cfg, default_sla_table().values(), rng=np.random.default_rng(42))
    for _ in range(3):
        assert a.next_frame() == b.next_frame()


def test_fit_onu_gap():
    busy = [(1000, 3210), (5000, 6210)]
    assert traffic.fit_onu_gap(busy, 0, 1000, 210, 10000) == 3210
    assert traffic.fit_onu_gap(busy, 4000, 1000, 210, 10000) == 6210
    # No room after the nominal position, so the burst ends at the frame end
    assert traffic.fit_onu_gap(busy, 9500, 1000, 210, 10000) == 9000
    assert traffic.fit_onu_gap([(0, 2000), (4000, 9500)], 3000, 1500, 210, 10000) == 2290
    assert traffic.fit_onu_gap([(0, 9000)], 500, 1500, 210, 10000) is None
    assert traffic.fit_onu_gap([], 500, 1500, 210, 10000) == 500


def test_low_load_with_wide_span_fits_in_frame():
    slas = default_sla_table().values()
    cfg = traffic.make_traffic_config({'LOAD': 0.2, 'REQUEST_SPAN': 0.94})
    gen = traffic.TrafficGenerator(cfg, slas, rng=np.random.default_rng(0))
    for f in range(300):
        ends = {}
        for bmap in gen.next_frame():
            for a in sorted(bmap.allocations, key=lambda x: x.start_time):
                assert f * 125000 <= a.start_time and a.end_time <= (f + 1) * 125000
                assert a.start_time >= ends.get(a.onu_id, 0)
                ends[a.onu_id] = a.end_time + cfg.guard_time


def test_request_span_default():
    for load, span in [(0.2, 1.0), (0.5, 1.0), (0.8, 0.7), (1.0, 0.5)]:
        assert abs(traffic.make_traffic_config({'LOAD': load}).request_span - span) < 1e-9
    assert traffic.make_traffic_config({'LOAD': 0.8, 'REQUEST_SPAN': 0.3}).request_span == 0.3


def test_burst_reference_rate():
    cfg = traffic.make_traffic_config({'BURST_REFERENCE_GBPS': 25.0, 'LINE_RATE_GBPS': 200.0, 'N_CHANNELS': 1})
    assert cfg.min_burst == 105 and cfg.max_burst == 875
    cfg = traffic.make_traffic_config({'BURST_REFERENCE_GBPS': 25.0})
    assert cfg.min_burst == 840 and cfg.max_burst == 7000
    try:
        traffic.make_traffic_config({'BURST_REFERENCE_GBPS': 0})
        assert False
    except ConfigError:
        pass


def test_frame_overflow():
    cfg = traffic.make_traffic_config({'FRAME_US': 20, 'MIN_BURST_US': 10, 'MAX_BURST_US': 10, 'N_CHANNELS': 1,
                                       'LOAD': 1.0})
    gen = traffic.TrafficGenerator(cfg, default_sla_table().values(), n_vnos=1, n_onus=1,
                                   rng=np.random.default_rng(0))
    try:
        gen.next_frame()
        assert False
    except FrameOverflowError as err:
        assert 'frame 0' in str(err)


def test_invalid_config():
    for bad in [{'DISTRIBUTION': 'normal'}, {'LOAD': 0}, {'LOAD': 1.2}, {'SLA_FRACTION': -0.1},
                {'ZIPF_S': 1.0, 'DISTRIBUTION': 'zipf_mandelbrot'}, {'MIN_BURST_US': 9, 'MAX_BURST_US': 8},
                {'NOT_A_KEY': 1}]:
        try:
            traffic.make_traffic_config(bad)
            assert False, bad
        except ConfigError:
            pass


if __name__ == '__main__':
    for name, test in sorted(globals().items()):
        if name.startswith('test_') and callable(test):
            test()
    print('All tests passed')
