"""
Cost model: closed-form costs, Kerberos baseline, timing presets and reconciliation
"""

from src.costmodel.formulas import (
    CommCost,
    CompCost,
    OpCounts,
    WorkFactor,
    comm_hga,
    comm_hgaka,
    comm_kerberos,
    comp_hga,
    comp_hgaka,
    comp_kerberos,
    message_count,
    work_factor,
)
from src.costmodel.reconcile import Discrepancy, ReconciliationReport, reconcile
from src.costmodel.report import CSV_COLUMNS, CostRow, cost_rows, relative_summary, write_csv
from src.costmodel.timing import (
    REFERENCE_2019_LAPTOP,
    PRESETS,
    UNIT,
    TimingModel,
    calibrate,
    load_timing,
    pcc_ms,
)

__all__ = [
    "CSV_COLUMNS",
    "CommCost",
    "CompCost",
    "CostRow",
    "Discrepancy",
    "OpCounts",
    "REFERENCE_2019_LAPTOP",
    "PRESETS",
    "ReconciliationReport",
    "TimingModel",
    "UNIT",
    "WorkFactor",
    "calibrate",
    "comm_hga",
    "comm_hgaka",
    "comm_kerberos",
    "comp_hga",
    "comp_hgaka",
    "comp_kerberos",
    "cost_rows",
    "load_timing",
    "message_count",
    "pcc_ms",
    "reconcile",
    "relative_summary",
    "work_factor",
]
