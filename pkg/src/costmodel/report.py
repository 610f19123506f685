"""
Cost tables over a range of group sizes
"""

import csv
from typing import Dict, Iterable, List, TextIO

from pydantic import BaseModel

from src.costmodel.formulas import (
    comm_hga,
    comm_hgaka,
    comm_kerberos,
    comp_hga,
    comp_hgaka,
    comp_kerberos,
)
from src.costmodel.timing import TimingModel, pcc_ms


class CostRow(BaseModel):
    """One CSV row; field order is the column order"""

    nc: int
    comm_hgaka_bits: int
    comm_hga_bits: int
    comm_m2o_total: int
    comm_kerberos: int
    pcc_hgaka_ms: float
    pcc_hga_ms: float
    pcc_kerberos_ms: float

    @property
    def pcc_m2o_ms(self) -> float:
        return self.pcc_hgaka_ms + self.pcc_hga_ms


CSV_COLUMNS = list(CostRow.model_fields)


def cost_row(nc: int, timing: TimingModel) -> CostRow:
    hgaka = comm_hgaka(nc).bits
    hga = comm_hga(nc).bits
    return CostRow(
        nc=nc,
        comm_hgaka_bits=hgaka,
        comm_hga_bits=hga,
        comm_m2o_total=hgaka + hga,
        comm_kerberos=comm_kerberos(nc).bits,
        pcc_hgaka_ms=round(pcc_ms(comp_hgaka(nc), timing), 6),
        pcc_hga_ms=round(pcc_ms(comp_hga(nc), timing), 6),
        pcc_kerberos_ms=round(pcc_ms(comp_kerberos(nc), timing), 6)
    )


def cost_rows(ncs: Iterable[int], timing: TimingModel) -> List[CostRow]:
    return [cost_row(nc, timing) for nc in ncs]


def write_csv(rows: Iterable[CostRow], stream: TextIO) -> None:
    writer = csv.DictWriter(stream, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.model_dump())


def relative_summary(rows: List[CostRow]) -> Dict[str, float]:
    """
    Range of the M2O overhead relative to Kerberos, in percent

    Returns:
        Min and max percentage increase for communication and PCC
    """
    if not rows:
        return {}
    comm = [100.0 * (r.comm_m2o_total / r.comm_kerberos - 1) for r in rows]
    pcc = [100.0 * (r.pcc_m2o_ms / r.pcc_kerberos_ms - 1) for r in rows]
    return {
        "comm_increase_min_pct": round(min(comm), 2),
        "comm_increase_max_pct": round(max(comm), 2),
        "pcc_increase_min_pct": round(min(pcc), 2),
        "pcc_increase_max_pct": round(max(pcc), 2),
    }
