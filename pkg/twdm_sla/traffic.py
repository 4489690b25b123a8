""" Virtual bandwidth map generation.

Every frame each tenant (VNO) emits one virtual BMap. Burst sizes are uniform between the sizes at which the guard
time is 25% and 3% of the burst. Arrival gaps are drawn in allocation units (AU) from one of four distributions,
each renormalized onto [0, ARRIVAL_RANGE_AU], and the gaps of a tenant's map are stretched over the request span of
the frame. Up to half load the requests cover the whole frame, beyond that they crowd towards its start.
A burst that meets another burst of its ONU moves into the nearest free gap of that ONU.
"""

import bisect
from collections import namedtuple
import numpy as np
from scipy import stats
from . import _timing
from .model import make_allocation, VirtualBMap
from .utils import ConfigError, FrameOverflowError, us_to_ns, au_duration_ns, init_config, check_config_keys

DISTRIBUTIONS = ['uniform', 'poisson', 'zipf_mandelbrot', 'pareto']
SLA_ASSIGNMENTS = ['round_robin', 'per_vno']

TrafficConfig = namedtuple('TrafficConfig', [
    'distribution', 'arrival_range_au', 'poisson_lambda', 'zipf_s', 'zipf_q', 'pareto_alpha',
    'min_burst', 'max_burst', 'guard_time', 'load_fraction', 'sla_fraction', 'sla_assignment', 'request_span',
    'frame_duration', 'n_channels', 'line_rate_gbps', 'seed'])

Topology = namedtuple('Topology', ['onu_to_vno', 'vno_onus'])


def get_default_traffic_config():
    """Default traffic config values"""
    default_config = {
        'DISTRIBUTION': 'uniform',  # Valid: 'uniform', 'poisson', 'zipf_mandelbrot', 'pareto'
        'ARRIVAL_RANGE_AU': 20,  # Arrival gaps lie in [0, ARRIVAL_RANGE_AU] allocation units
        'POISSON_LAMBDA': 10.0,
        'ZIPF_S': 2.0,
        'ZIPF_Q': 0.0,  # Mandelbrot offset, 0 gives pure Zipf
        'PARETO_ALPHA': 1.0,
        'GUARD_TIME_US': 0.21,
        'MIN_BURST_US': None,  # If None, GUARD_TIME_US / 0.25
        'MAX_BURST_US': None,  # If None, GUARD_TIME_US / 0.03
        'LOAD': 0.5,  # Fraction of aggregate upstream capacity requested per frame
        'SLA_FRACTION': 0.5,  # Share of the load carried by SLA classes, the rest is best effort
        'SLA_ASSIGNMENT': 'round_robin',  # 'round_robin' over SLA allocations, or 'per_vno'
        'REQUEST_SPAN': None,  # Fraction of the frame arrivals are spread over. If None, min(1, 1.5 - LOAD)
        'BURST_REFERENCE_GBPS': None,  # Burst durations hold at this line rate and scale to LINE_RATE_GBPS. If None, fixed
        'FRAME_US': 125.0,
        'N_CHANNELS': 8,
        'LINE_RATE_GBPS': 25.0,
        'SEED': 0,
        'PRINT_CONFIG': False,
    }
    return default_config


def make_traffic_config(config=None):
    """Merges config with defaults, validates it and converts durations to ns."""
    config = init_config(config, get_default_traffic_config(), 'Traffic')
    check_config_keys(config, get_default_traffic_config(), 'Traffic')
    guard = us_to_ns(config['GUARD_TIME_US'])
    min_burst_us = config['MIN_BURST_US'] if config['MIN_BURST_US'] is not None else config['GUARD_TIME_US'] / 0.25
    max_burst_us = config['MAX_BURST_US'] if config['MAX_BURST_US'] is not None else config['GUARD_TIME_US'] / 0.03
    load = float(config['LOAD'])
    span = config['REQUEST_SPAN'] if config['REQUEST_SPAN'] is not None else min(1.0, 1.5 - load)
    if config['BURST_REFERENCE_GBPS'] is not None:
        if float(config['BURST_REFERENCE_GBPS']) <= 0 or float(config['LINE_RATE_GBPS']) <= 0:
            raise ConfigError('BURST_REFERENCE_GBPS and LINE_RATE_GBPS must be positive')
        scale = float(config['BURST_REFERENCE_GBPS']) / float(config['LINE_RATE_GBPS'])
        min_burst_us, max_burst_us = min_burst_us * scale, max_burst_us * scale
    cfg = TrafficConfig(distribution=config['DISTRIBUTION'],
                        arrival_range_au=int(config['ARRIVAL_RANGE_AU']),
                        poisson_lambda=float(config['POISSON_LAMBDA']),
                        zipf_s=float(config['ZIPF_S']),
                        zipf_q=float(config['ZIPF_Q']),
                        pareto_alpha=float(config['PARETO_ALPHA']),
                        min_burst=us_to_ns(min_burst_us),
                        max_burst=us_to_ns(max_burst_us),
                        guard_time=guard,
                        load_fraction=load,
                        sla_fraction=float(config['SLA_FRACTION']),
                        sla_assignment=config['SLA_ASSIGNMENT'],
                        request_span=float(span),
                        frame_duration=us_to_ns(config['FRAME_US']),
                        n_channels=int(config['N_CHANNELS']),
                        line_rate_gbps=float(config['LINE_RATE_GBPS']),
                        seed=int(config['SEED']))
    validate_traffic_config(cfg)
    return cfg


def validate_traffic_config(cfg):
    if cfg.distribution not in DISTRIBUTIONS:
        raise ConfigError('Unknown arrival distribution %s. Valid: %s' % (cfg.distribution, ', '.join(DISTRIBUTIONS)))
    if cfg.arrival_range_au < 1:
        raise ConfigError('ARRIVAL_RANGE_AU must be at least 1')
    if cfg.distribution == 'poisson' and cfg.poisson_lambda <= 0:
        raise ConfigError('POISSON_LAMBDA must be > 0 (got %s)' % cfg.poisson_lambda)
    if cfg.distribution == 'zipf_mandelbrot' and (cfg.zipf_s <= 1 or cfg.zipf_q < 0):
        raise ConfigError('ZIPF_S must be > 1 and ZIPF_Q >= 0 (got s=%s, q=%s)' % (cfg.zipf_s, cfg.zipf_q))
    if cfg.distribution == 'pareto' and cfg.pareto_alpha <= 0:
        raise ConfigError('PARETO_ALPHA must be > 0 (got %s)' % cfg.pareto_alpha)
    if not 0 < cfg.min_burst <= cfg.max_burst:
        raise ConfigError('Burst sizes must satisfy 0 < min <= max (got %i ns, %i ns)' % (cfg.min_burst, cfg.max_burst))
    if not 0 < cfg.load_fraction <= 1:
        raise ConfigError('LOAD must be in (0, 1] (got %s)' % cfg.load_fraction)
    if not 0 <= cfg.sla_fraction <= 1:
        raise ConfigError('SLA_FRACTION must be in [0, 1] (got %s)' % cfg.sla_fraction)
    if cfg.sla_assignment not in SLA_ASSIGNMENTS:
        raise ConfigError('Unknown SLA_ASSIGNMENT %s. Valid: %s' % (cfg.sla_assignment, ', '.join(SLA_ASSIGNMENTS)))
    if not 0 < cfg.request_span <= 1:
        raise ConfigError('REQUEST_SPAN must be in (0, 1] (got %s)' % cfg.request_span)
    if cfg.n_channels < 1:
        raise ConfigError('N_CHANNELS must be at least 1')
    if cfg.line_rate_gbps <= 0:
        raise ConfigError('LINE_RATE_GBPS must be positive')


#####################################################################
# Arrival distributions

def arrival_support(cfg):
    """Support and probabilities of the discrete arrival distributions (in AU). None for pareto."""
    r = cfg.arrival_range_au
    if cfg.distribution == 'uniform':
        support = np.arange(0, r + 1)
        pmf = np.ones(len(support))
    elif cfg.distribution == 'poisson':
        support = np.arange(0, r + 1)
        pmf = stats.poisson.pmf(support, cfg.poisson_lambda)
    elif cfg.distribution == 'zipf_mandelbrot':
        support = np.arange(1, r + 1)
        pmf = 1.0 / (support + cfg.zipf_q) ** cfg.zipf_s
    else:
        return None
    return support, pmf / pmf.sum()


def truncated_pareto_cdf(cfg, x):
    """CDF of the pareto (scale 1 AU) renormalized onto [1, ARRIVAL_RANGE_AU]."""
    dist = stats.pareto(cfg.pareto_alpha)
    lo, hi = dist.cdf(1.0), dist.cdf(cfg.arrival_range_au)
    return np.clip((dist.cdf(x) - lo) / (hi - lo), 0.0, 1.0)


def expected_arrival_au(cfg):
    """Analytic mean of the truncated arrival distribution in AU."""
    discrete = arrival_support(cfg)
    if discrete is not None:
        support, pmf = discrete
        return float(np.sum(support * pmf))
    a, r = cfg.pareto_alpha, float(cfg.arrival_range_au)
    norm = 1 - r ** -a
    if a == 1:
        return float(np.log(r) / norm)
    return float(a / (a - 1) * (1 - r ** (1 - a)) / norm)


def sample_arrivals_au(cfg, rng, size):
    """Vector of arrival gaps in AU drawn from the configured truncated distribution."""
    discrete = arrival_support(cfg)
    if discrete is not None:
        support, pmf = discrete
        if cfg.distribution == 'uniform':
            return rng.integers(0, cfg.arrival_range_au + 1, size=size).astype(float)
        return rng.choice(support, size=size, p=pmf).astype(float)
    # Inverse CDF of the pareto truncated to [1, range]
    a = cfg.pareto_alpha
    u = rng.random(size)
    tail = 1 - float(cfg.arrival_range_au) ** -a
    return (1 - u * tail) ** (-1.0 / a)


def sample_arrival(cfg, rng):
    """One arrival gap as a duration in ns (AU converted at the configured line rate)."""
    au = sample_arrivals_au(cfg, rng, 1)[0]
    return int(round(au * au_duration_ns(cfg.line_rate_gbps)))


#####################################################################
# Burst sizes

def sample_bursts(cfg, rng, size):
    """Vector of burst durations in ns, uniform over [min_burst, max_burst]."""
    return rng.integers(cfg.min_burst, cfg.max_burst + 1, size=size)


def sample_burst(cfg, rng):
    return int(sample_bursts(cfg, rng, 1)[0])


def _draw_frame_sizes(cfg, rng, budget):
    """Burst sizes whose sum lies within one minimum burst below budget."""
    if budget < cfg.min_burst:
        return []
    n_max = budget // cfg.min_burst + 1
    sizes = sample_bursts(cfg, rng, n_max)
    cums = np.cumsum(sizes)
    k = int(np.searchsorted(cums, budget, side='right'))
    sizes = [int(s) for s in sizes[:k]]
    remainder = budget - sum(sizes)
    if remainder >= cfg.min_burst:
        sizes.append(int(remainder))
    return sizes


#####################################################################
# Topology and frames

def make_topology(n_vnos, n_onus, rng):
    """Shuffles ONUs onto VNOs as evenly as possible (64 over 5 gives 13, 13, 13, 13, 12)."""
    if n_vnos < 1 or n_onus < n_vnos:
        raise ConfigError('Need at least one ONU per VNO (got %i VNOs, %i ONUs)' % (n_vnos, n_onus))
    order = rng.permutation(n_onus)
    counts = [n_onus // n_vnos + (1 if v < n_onus % n_vnos else 0) for v in range(n_vnos)]
    onu_to_vno = [0] * n_onus
    vno_onus = []
    pos = 0
    for v, c in enumerate(counts):
        members = sorted(int(o) for o in order[pos:pos + c])
        for o in members:
            onu_to_vno[o] = v
        vno_onus.append(members)
        pos += c
    return Topology(onu_to_vno, vno_onus)


def _split_sla_classes(slas):
    sla_classes = sorted([s for s in slas if not s.best_effort], key=lambda s: s.id)
    be_classes = sorted([s for s in slas if s.best_effort], key=lambda s: s.id)
    return sla_classes, be_classes


def _assign_classes(cfg, sizes, vnos, slas, rng):
    """SLA class id per allocation: a sla_fraction share of the load is SLA, the rest best effort."""
    sla_classes, be_classes = _split_sla_classes(slas)
    n = len(sizes)
    target = cfg.sla_fraction * sum(sizes)
    if target > 0 and len(sla_classes) == 0:
        raise ConfigError('SLA_FRACTION > 0 but no breachable SLA class is configured')
    if target < sum(sizes) and len(be_classes) == 0:
        raise ConfigError('SLA_FRACTION < 1 but no best effort class is configured')
    classes = [be_classes[0].id if be_classes else None] * n
    cum = 0
    count = 0
    for idx in rng.permutation(n):
        size = sizes[idx]
        if cum + size / 2 <= target:
            if cfg.sla_assignment == 'per_vno':
                classes[idx] = sla_classes[vnos[idx] % len(sla_classes)].id
            else:
                classes[idx] = sla_classes[count % len(sla_classes)].id
            cum += size
            count += 1
    return classes


def fit_onu_gap(busy, nominal, size, guard, frame_duration):
    """Offset for a burst of one ONU, clear of the ONU's other bursts and ending inside the frame.

    busy holds the ONU's sorted (start, end + guard) intervals. The first fit at or after nominal is taken, else the
    last fit before it. Returns None if the ONU has no gap wide enough.
    """
    t = nominal
    for start, end in busy:
        if t + size + guard <= start:
            break
        t = max(t, end)
    if t + size <= frame_duration:
        return t
    t = min(nominal, frame_duration - size)
    for start, end in reversed(busy):
        if t >= end:
            break
        if t + size + guard > start:
            t = start - size - guard
    return t if t >= 0 else None


@_timing.time
def generate_frame(cfg, topology, slas, frame_index, rng):
    """Generates one virtual BMap per VNO for the given frame.

    Total requested transmission time is load_fraction x n_channels x frame duration, less at most one burst.
    Requested start times are absolute (frame_index x frame duration + offset).
    """
    n_vnos = len(topology.vno_onus)
    n_onus = len(topology.onu_to_vno)
    budget = int(round(cfg.load_fraction * cfg.n_channels * cfg.frame_duration))
    sizes = _draw_frame_sizes(cfg, rng, budget)
    onus = [int(o) for o in rng.integers(0, n_onus, size=len(sizes))]
    vnos = [topology.onu_to_vno[o] for o in onus]
    classes = _assign_classes(cfg, sizes, vnos, slas, rng)

    frame_start = frame_index * cfg.frame_duration
    span = cfg.request_span * cfg.frame_duration
    bmaps = []
    seq = 0
    for v in range(n_vnos):
        members = [i for i in range(len(sizes)) if vnos[i] == v]
        gaps = sample_arrivals_au(cfg, rng, len(members) + 1)
        if gaps.sum() <= 0:
            gaps = np.ones(len(gaps))
        nominal = span * np.cumsum(gaps)[:len(members)] / gaps.sum()

        busy = {}
        placed = []
        for pos in np.argsort(nominal, kind='stable'):
            idx = members[pos]
            onu = onus[idx]
            intervals = busy.setdefault(onu, [])
            offset = fit_onu_gap(intervals, int(nominal[pos]), sizes[idx], cfg.guard_time, cfg.frame_duration)
            if offset is None:
                raise FrameOverflowError(
                    'Load %.2f cannot be placed in frame %i: ONU %i of VNO %i has no room left for a %.2f us burst'
                    % (cfg.load_fraction, frame_index, onu, v, sizes[idx] / 1000))
            bisect.insort(intervals, (offset, offset + sizes[idx] + cfg.guard_time))
            placed.append((offset, idx))

        allocations = []
        for offset, idx in sorted(placed):
            allocations.append(make_allocation(v, onus[idx], classes[idx], frame_start + offset, sizes[idx],
                                               seq=seq, frame=frame_index))
            seq += 1
        bmaps.append(VirtualBMap(v, frame_index, tuple(allocations)))
    return bmaps


def total_size(bmaps):
    return sum(a.size for bmap in bmaps for a in bmap.allocations)


class TrafficGenerator:
    """Frame source for one simulation run: owns the rng, topology and SLA class list."""
    def __init__(self, cfg, slas, n_vnos=5, n_onus=64, rng=None):
        self.cfg = cfg
        self.slas = list(slas)
        self.rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        self.topology = make_topology(n_vnos, n_onus, self.rng)
        self.frame_index = 0

    def next_frame(self):
        bmaps = generate_frame(self.cfg, self.topology, self.slas, self.frame_index, self.rng)
        self.frame_index += 1
        return bmaps
