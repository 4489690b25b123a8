import numpy as np
from abc import ABC, abstractmethod
from .. import _timing
from ..utils import TwdmException

COMBINED = 'COMBINED_REPS'


class _BaseMetric(ABC):
    @abstractmethod
    def __init__(self):
        self.integer_fields = []
        self.float_fields = []
        self.percent_fields = []
        self.fields = []
        self.summary_fields = []

    #####################################################################
    # Abstract functions for subclasses to implement

    @_timing.time
    @abstractmethod
    def eval_run(self, data):
        """Results of one repetition of one sweep cell"""
        ...

    def combine_runs(self, all_res):
        """Combines repetitions: mean of every field plus its sample standard deviation as <field>_std"""
        res = {}
        for field in self.fields:
            res[field] = self._combine_mean(all_res, field)
            res[field + '_std'] = self._combine_std(all_res, field)
        return res

    #####################################################################
    # Helper functions which are useful for all metrics:

    @classmethod
    def get_name(cls):
        return cls.__name__

    @staticmethod
    def _combine_mean(all_res, field):
        return float(np.mean([all_res[k][field] for k in all_res.keys()])) if len(all_res) > 0 else 0.0

    @staticmethod
    def _combine_std(all_res, field):
        """Sample standard deviation, 0 for a single repetition"""
        values = [all_res[k][field] for k in all_res.keys()]
        if len(values) < 2:
            return 0.0
        return float(np.std(values, ddof=1))

    def print_table(self, table_res, algorithm, cell):
        """Prints table of results for all repetitions of a cell"""
        print('')
        metric_name = self.get_name()
        self._row_print([metric_name + ': ' + algorithm + '-' + cell] + self.summary_fields)
        for rep, results in sorted(table_res.items()):
            if rep == COMBINED:
                continue
            self._row_print([rep] + self._summary_row(results))
        self._row_print(['COMBINED'] + self._summary_row(table_res[COMBINED]))

    def _summary_row(self, results_):
        vals = []
        for h in self.summary_fields:
            if h in self.percent_fields:
                vals.append("{0:1.5g}".format(100 * float(results_[h])))
            elif h in self.integer_fields:
                vals.append("{0:d}".format(int(round(results_[h]))))
            else:
                vals.append("{0:1.5g}".format(float(results_[h])))
        return vals

    @staticmethod
    def _row_print(*argv):
        """Prints results in an evenly spaced rows, with more space in first row"""
        if len(argv) == 1:
            argv = argv[0]
        to_print = '%-40s' % argv[0]
        for v in argv[1:]:
            to_print += '%-16s' % str(v)
        print(to_print)

    def detailed_results(self, table_res):
        """Returns the combined fields (mean and std) of a cell, unformatted"""
        detailed_fields = []
        for h in self.fields:
            detailed_fields += [h, h + '_std']
        res = table_res[COMBINED]
        missing = [h for h in detailed_fields if h not in res]
        if len(missing) > 0:
            raise TwdmException('Metric %s is missing combined field(s) %s' % (self.get_name(), ', '.join(missing)))
        return {h: res[h] for h in detailed_fields}
