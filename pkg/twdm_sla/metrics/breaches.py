from ._base_metric import _BaseMetric
from .. import _timing
from ..sla import breach_counts


class Breaches(_BaseMetric):
    """Raw breach and delay counts behind the compliance figure."""
    def __init__(self):
        super().__init__()
        self.integer_fields = ['Windows', 'BreachedWindows', 'FlowsBreached', 'Flows', 'BreachEvents', 'Allocs',
                               'DelayedAllocs']
        self.float_fields = ['DelayedFraction', 'MeanDelayUs']
        self.percent_fields = ['DelayedFraction']
        self.fields = self.integer_fields + self.float_fields
        self.summary_fields = ['BreachedWindows', 'FlowsBreached', 'DelayedFraction', 'MeanDelayUs']

    @_timing.time
    def eval_run(self, data):
        """Returns breach counts of one run"""
        res = breach_counts(data['history'])
        res['BreachEvents'] = sum(data['breach_events'].values())
        res['Allocs'] = data['allocations']
        res['DelayedAllocs'] = data['delayed']
        res['DelayedFraction'] = data['delayed'] / max(1, data['allocations'])
        res['MeanDelayUs'] = data['total_delay_ns'] / 1000.0 / max(1, data['allocations'])
        return res
