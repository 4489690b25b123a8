import numpy as np
from ._base_metric import _BaseMetric
from .. import _timing


def runtime_stats(samples):
    """Median, interquartile range and mean of wall-clock samples (µs)."""
    samples = np.asarray(samples, dtype=float)
    if len(samples) == 0:
        return {'RuntimeMedianUs': 0.0, 'RuntimeIQRUs': 0.0, 'RuntimeMeanUs': 0.0, 'RuntimeSamples': 0}
    q1, median, q3 = np.percentile(samples, [25, 50, 75])
    return {'RuntimeMedianUs': float(median), 'RuntimeIQRUs': float(q3 - q1), 'RuntimeMeanUs': float(samples.mean()),
            'RuntimeSamples': len(samples)}


class Runtime(_BaseMetric):
    """Per-frame merge wall time. Repetitions are pooled rather than averaged."""
    def __init__(self):
        super().__init__()
        self.integer_fields = ['RuntimeSamples']
        self.float_fields = ['RuntimeMedianUs', 'RuntimeIQRUs', 'RuntimeMeanUs']
        self.fields = self.float_fields + self.integer_fields
        self.summary_fields = self.fields

    @_timing.time
    def eval_run(self, data):
        res = runtime_stats(data['runtime_us'])
        res['samples'] = np.asarray(data['runtime_us'], dtype=float)
        return res

    def combine_runs(self, all_res):
        """Statistics of all repetitions' samples pooled together"""
        pooled = [all_res[k]['samples'] for k in all_res.keys()]
        res = runtime_stats(np.concatenate(pooled) if len(pooled) > 0 else [])
        for field in self.fields:
            res[field + '_std'] = self._combine_std(all_res, field)
        return res
