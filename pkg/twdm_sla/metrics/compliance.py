from ._base_metric import _BaseMetric
from .. import _timing
from ..model import default_sla_table
from ..sla import compliance_metric


class Compliance(_BaseMetric):
    """Share of (SLA flow, window) pairs that were not breached, overall and per SLA class."""
    def __init__(self, sla_table=None):
        super().__init__()
        if sla_table is None:
            sla_table = default_sla_table()
        self.sla_ids = sorted(s.id for s in sla_table.values() if not s.best_effort)
        self.float_fields = ['Compliance'] + ['Compliance_SLA%i' % i for i in self.sla_ids]
        self.percent_fields = self.float_fields
        self.fields = self.float_fields
        self.summary_fields = self.fields

    @_timing.time
    def eval_run(self, data):
        """Returns compliance of one run"""
        res = {'Compliance': compliance_metric(data['history'])}
        for i in self.sla_ids:
            res['Compliance_SLA%i' % i] = compliance_metric(data['history'], sla_id=i)
        return res
