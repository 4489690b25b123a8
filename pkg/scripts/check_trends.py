""" check_trends.py

Runs the long comparisons that are too slow for the test suite and prints PASS / FAIL per check:
    1  constraint suite over >= 10,000 randomized frames
    2  near-perfect compliance at loads 20% and 50%
    3  high-load degradation and the 8x25G vs 1x200G ordering
    4  tuning time sensitivity (1x200G unaffected)
    5  SWA close to DTWA at 15 us tuning
    6  arrival distribution ordering
    7  oracle optimality gap on random small instances
    8  runtime trends vs line capacity
    9  W=1 equivalence of DTWA and SWA

Run example:
check_trends.py --checks 2 3 9 --frames 300
"""

import sys
import os
import argparse
import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
import twdm_sla as ts  # noqa: E402

CONFIGS = ['8x25G', '4x50G', '1x200G']
TUNINGS = [0.0, 0.25, 1.0, 15.0]
DISTRIBUTIONS = ['uniform', 'poisson', 'zipf_mandelbrot', 'pareto']


def _sim():
    return ts.Simulator({'PRINT_RESULTS': False, 'PRINT_CONFIG': False, 'TIME_PROGRESS': False})


def _rows(sim, **scenario):
    return sim.run_scenario(scenario).rows


def _mean(rows, **match):
    values = [r['Compliance'] for r in rows if all(r[k] == v for k, v in match.items())]
    return float(np.mean(values))


def check_constraints(sim, frames):
    rows = _rows(sim, NAME='constraints', CHANNEL_CONFIGS=CONFIGS, TUNING_TIMES_US=TUNINGS,
                 DISTRIBUTIONS=DISTRIBUTIONS, ALGORITHMS=['dtwa', 'swa'], LOADS=[0.2, 0.5, 0.8],
                 SLA_FRACTIONS=[0.5], FRAMES=max(frames // 10, 36), CHECK_CONSTRAINTS=True)
    total = sum(r['Frames'] for r in rows)
    # Any violation raises InvariantViolation inside the run
    return total >= 10000, '%i frames merged without violation' % total


def check_low_load(sim, frames):
    rows = _rows(sim, NAME='low_load', CHANNEL_CONFIGS=CONFIGS, LOADS=[0.2, 0.5],
                 SLA_FRACTIONS=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9], FRAMES=frames)
    worst = min(rows, key=lambda r: r['Compliance'])
    return worst['Compliance'] >= 0.98, 'lowest compliance %.4f (%s, load %g, sla %g)' % (
        worst['Compliance'], worst['ChannelConfig'], worst['Load'], worst['SlaFraction'])


def check_high_load(sim, frames):
    rows = _rows(sim, NAME='high_load', CHANNEL_CONFIGS=CONFIGS, LOADS=[0.8], SLA_FRACTIONS=[0.4, 0.8, 1.0],
                 REPETITIONS=5, FRAMES=frames)
    ok = True
    text = []
    for c in CONFIGS:
        low, high = _mean(rows, ChannelConfig=c, SlaFraction=0.4), _mean(rows, ChannelConfig=c, SlaFraction=1.0)
        ok = ok and high < low
        text.append('%s %.3f>%.3f' % (c, low, high))
    multi, single = _mean(rows, ChannelConfig='8x25G', SlaFraction=0.8), _mean(rows, ChannelConfig='1x200G',
                                                                                 SlaFraction=0.8)
    ok = ok and multi >= single
    text.append('8x25G %.3f >= 1x200G %.3f at 0.8' % (multi, single))
    return ok, ', '.join(text)


def check_tuning(sim, frames):
    rows = _rows(sim, NAME='tuning', CHANNEL_CONFIGS=CONFIGS, TUNING_TIMES_US=TUNINGS, LOADS=[0.8],
                 SLA_FRACTIONS=[0.2, 0.4, 0.6, 0.8, 1.0], FRAMES=frames)
    ok = True
    text = []
    for c in ['8x25G', '4x50G']:
        means = [_mean(rows, ChannelConfig=c, TuningUs=t) for t in TUNINGS]
        ok = ok and all(b <= a + 1e-12 for a, b in zip(means, means[1:]))
        text.append('%s %s' % (c, ' '.join('%.3f' % m for m in means)))
    single = [r['Checksum'] for r in rows if r['ChannelConfig'] == '1x200G']
    checksums = {}
    for r in rows:
        if r['ChannelConfig'] == '1x200G':
            checksums.setdefault(r['SlaFraction'], set()).add(r['Checksum'])
    identical = all(len(v) == 1 for v in checksums.values())
    ok = ok and identical and len(single) > 0
    text.append('1x200G identical across tuning: %s' % identical)
    return ok, ', '.join(text)


def check_swa_vs_dtwa(sim, frames):
    rows = _rows(sim, NAME='swa_vs_dtwa', CHANNEL_CONFIGS=CONFIGS, TUNING_TIMES_US=[15.0], ALGORITHMS=['dtwa', 'swa'],
                 LOADS=[0.8], FRAMES=frames)
    worst = 0.0
    for c in CONFIGS:
        d = _mean(rows, ChannelConfig=c, Algorithm='dtwa')
        s = _mean(rows, ChannelConfig=c, Algorithm='swa')
        worst = max(worst, abs(d - s))
    return worst <= 0.05, 'largest mean |DTWA - SWA| %.4f' % worst


def check_distributions(sim, frames):
    rows = _rows(sim, NAME='distributions', CHANNEL_CONFIGS=CONFIGS, TUNING_TIMES_US=TUNINGS,
                 DISTRIBUTIONS=DISTRIBUTIONS, LOADS=[0.2, 0.5, 0.8], REPETITIONS=5, FRAMES=frames)
    summary = {r['Distribution']: r['Compliance'] for r in ts.Simulator.summarize_by(rows, 'DISTRIBUTIONS')}
    p, u, z, pa = summary['poisson'], summary['uniform'], summary['zipf_mandelbrot'], summary['pareto']
    ok = p >= u - 0.01 and u >= pa - 0.01 and pa >= z - 0.01 and u - z >= 0.05
    return ok, 'poisson %.4f uniform %.4f pareto %.4f zipf %.4f' % (p, u, pa, z)


def check_oracle(sim, n_instances):
    rows, summary = sim.oracle_compare(n_instances=n_instances, max_allocations=8, tuning_time_ns=250)
    rate = summary['DtwaEqualRateLowSla']
    return rate is not None and rate >= 0.8, 'DTWA optimal on %.3f (sla <= 0.6), %.3f (sla > 0.6), dominance on ' \
        'all %i' % (rate or 0, summary['DtwaEqualRateHighSla'] or 0, summary['Instances'])


def check_runtime(sim, frames):
    rows = sim.profile_runtime(['dtwa', 'swa'], [50, 100, 200], frames=max(frames, 1000))
    med = {(r['Algorithm'], r['CapacityGbps']): r['RuntimeMedianUs'] for r in rows}
    caps = [50, 100, 200]
    ok = all(med[('swa', c)] <= med[('dtwa', c)] for c in caps)
    for a in ['dtwa', 'swa']:
        ok = ok and med[(a, 50)] < med[(a, 100)] < med[(a, 200)]
    ok = ok and med[('dtwa', 200)] - med[('dtwa', 50)] > med[('swa', 200)] - med[('swa', 50)]
    return ok, ', '.join('%s@%i %.1fus' % (a, c, med[(a, c)]) for a in ['dtwa', 'swa'] for c in caps)


def check_single_channel(sim, frames):
    rows = _rows(sim, NAME='single_channel', CHANNEL_CONFIGS=['1x200G'], ALGORITHMS=['dtwa', 'swa'],
                 TUNING_TIMES_US=[0.0, 15.0], SEED=7, FRAMES=frames)
    pairs = {}
    for r in rows:
        pairs.setdefault((r['TuningUs'], r['Load'], r['SlaFraction']), set()).add(r['Checksum'])
    same = all(len(v) == 1 for v in pairs.values())
    return same, '%i cells compared' % len(pairs)


CHECKS = {1: check_constraints, 2: check_low_load, 3: check_high_load, 4: check_tuning, 5: check_swa_vs_dtwa,
          6: check_distributions, 7: check_oracle, 8: check_runtime, 9: check_single_channel}

if __name__ == '__main__':
    parser = argparse.ArgumentParser()
    parser.add_argument('--checks', nargs='+', type=int, default=sorted(CHECKS.keys()))
    parser.add_argument('--frames', type=int, default=1000)
    parser.add_argument('--instances', type=int, default=500)
    args = parser.parse_args()

    sim = _sim()
    failed = 0
    for number in args.checks:
        amount = args.instances if number == 7 else args.frames
        ok, text = CHECKS[number](sim, amount)
        failed += 0 if ok else 1
        print('%-6s %i %-22s %s' % ('PASS' if ok else 'FAIL', number, CHECKS[number].__name__[6:], text))
    sys.exit(1 if failed else 0)
