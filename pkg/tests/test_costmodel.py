"""
Tests for the analytic cost model, timing presets and reconciliation
"""

import csv
import io
import math
from pathlib import Path
from types import SimpleNamespace

import pytest
from pydantic import ValidationError

from src.actors import GroupConfig, KeyRegistry
from src.costmodel import (
    CSV_COLUMNS,
    REFERENCE_2019_LAPTOP,
    UNIT,
    CommCost,
    CompCost,
    OpCounts,
    TimingModel,
    calibrate,
    comm_hga,
    comm_hgaka,
    comm_kerberos,
    comp_hga,
    comp_hgaka,
    comp_kerberos,
    cost_rows,
    load_timing,
    message_count,
    pcc_ms,
    reconcile,
    relative_summary,
    work_factor,
    write_csv,
)
from src.crypto import DeterministicRandom, KeySize, Protocol
from src.errors import CalibrationError, ConfigError, DomainError, MissingUnitCost
from src.netsim import get_scenario, run


def test_comm_at_three_clients() -> None:
    """Test the nc=3 totals: 6272 and 17200 bits"""
    hgaka = comm_hgaka(3)
    hga = comm_hga(3)
    assert hgaka.bits == 6272
    assert hgaka.byte_count == 784
    assert hga.bits == 17200
    assert hga.byte_count == 2150


def test_comm_at_two_clients() -> None:
    """Test the smallest group follows the closed forms"""
    assert comm_hgaka(2).bits == 5376
    assert comm_hga(2).bits == 11472


def test_comm_breakdown_labels() -> None:
    """Test the per-message breakdown is keyed by tag label"""
    breakdown = comm_hgaka(3).breakdown
    assert breakdown["HGAKA-MSG2"] == 256
    assert breakdown["HGAKA-CHAIN"] == 3 * 256
    assert set(comm_hga(3).breakdown) == {"PRE-HGA", "HGA-MSG1", "HGA-MSG2", "HGA-SHARE"}


def test_rsa_block_step() -> None:
    """Test the jump when the OrNonces outgrow one RSA input block"""
    assert comm_hgaka(20).bits - comm_hgaka(19).bits == 768 + 2560


def test_comm_is_monotone() -> None:
    """Test costs never shrink as the group grows"""
    for nc in range(2, 400):
        assert comm_hgaka(nc + 1).bits > comm_hgaka(nc).bits
        assert comm_hga(nc + 1).bits > comm_hga(nc).bits


def test_kerberos_comm() -> None:
    """Test 6080 bits per client"""
    assert comm_kerberos(1).bits == 6080
    assert comm_kerberos(3).bits == 18240
    assert comm_kerberos(100).bits == 608000


def test_domain_errors() -> None:
    """Test group sizes outside each formula's domain"""
    with pytest.raises(DomainError):
        comm_hgaka(1)
    with pytest.raises(DomainError):
        comp_hga(1)
    with pytest.raises(DomainError):
        comm_kerberos(0)
    with pytest.raises(DomainError):
        comp_kerberos(0)
    with pytest.raises(DomainError):
        comm_hgaka(True)
    with pytest.raises(DomainError):
        message_count(Protocol.HGA, 1)


def test_comp_counts() -> None:
    """Test operation counts and their role split"""
    hgaka = comp_hgaka(3)
    assert hgaka.counts == OpCounts(se=14, ae=1, hmac=6, h=1)
    assert hgaka.roles["server"] == OpCounts(se=8, ae=1, hmac=3, h=1)

    hga = comp_hga(5)
    assert hga.counts == OpCounts(se=14, ae=6, ad=1, h=1)
    assert hga.roles["target"] == OpCounts(se=8, ae=1, ad=1, h=1)

    kerberos = comp_kerberos(2)
    assert kerberos.counts == OpCounts(kse=24, ksd=26)


def test_role_split_must_add_up() -> None:
    """Test inconsistent breakdowns are refused"""
    with pytest.raises(ValidationError):
        CompCost(counts=OpCounts(se=2), roles={"a": OpCounts(se=1)})
    with pytest.raises(ValidationError):
        CommCost(bits=100, breakdown={"a": 99})


def test_message_counts() -> None:
    """Test 3 + 2nc and 2nc messages"""
    assert message_count(Protocol.HGAKA, 3) == 9
    assert message_count(Protocol.HGA, 3) == 6


@pytest.mark.parametrize("nc", [5, 50, 400])
def test_pcc_with_reference_timings(nc: int) -> None:
    """Test PCC grows linearly with the reference unit costs"""
    assert pcc_ms(comp_hgaka(nc), REFERENCE_2019_LAPTOP) == pytest.approx(0.096 * nc + 2.248)
    assert pcc_ms(comp_hga(nc), REFERENCE_2019_LAPTOP) == pytest.approx(2.131 * nc + 18.636)
    assert pcc_ms(comp_kerberos(nc), REFERENCE_2019_LAPTOP) == pytest.approx(1.7 * nc)


def test_pcc_reference_points() -> None:
    """Test PCC stays within 10% of the reference figures"""
    assert pcc_ms(comp_hgaka(5), REFERENCE_2019_LAPTOP) == pytest.approx(3.0, rel=0.1)
    assert pcc_ms(comp_hgaka(400), REFERENCE_2019_LAPTOP) == pytest.approx(41.0, rel=0.1)
    assert pcc_ms(comp_hga(5), REFERENCE_2019_LAPTOP) == pytest.approx(29.0, rel=0.1)
    assert pcc_ms(comp_hga(400), REFERENCE_2019_LAPTOP) == pytest.approx(871.0, rel=0.1)


def test_pcc_unit_preset_counts_operations() -> None:
    """Test unit costs turn PCC into an operation count"""
    assert pcc_ms(comp_hgaka(4), UNIT) == comp_hgaka(4).counts.total
    assert pcc_ms(CompCost(counts=OpCounts()), UNIT) == 0.0


def test_missing_unit_cost() -> None:
    """Test a model without a needed unit cost"""
    partial = TimingModel(name="partial", unit_costs_ms={"se": 1.0})
    with pytest.raises(MissingUnitCost):
        pcc_ms(comp_hgaka(3), partial)


def test_timing_model_validation() -> None:
    """Test non-positive or unknown unit costs"""
    with pytest.raises(ValidationError):
        TimingModel(name="bad", unit_costs_ms={"se": 0.0})
    with pytest.raises(ValidationError):
        TimingModel(name="bad", unit_costs_ms={"rot13": 1.0})


def test_load_timing(tmp_path: Path) -> None:
    """Test presets by name and from a saved file"""
    assert load_timing("reference-2019-laptop") is REFERENCE_2019_LAPTOP
    path = tmp_path / "timing.json"
    UNIT.save(path)
    assert load_timing(str(path)).unit_costs_ms == UNIT.unit_costs_ms
    with pytest.raises(ConfigError):
        load_timing("no-such-preset")


def test_work_factor() -> None:
    """Test 2^128 scaled by the group size for HGAKA, 2^129 for HGA"""
    assert work_factor(Protocol.HGAKA, 4).log2_ops == 130
    assert work_factor(Protocol.HGAKA, 3).log2_ops == pytest.approx(128 + math.log2(3))
    assert work_factor(Protocol.HGA, 1).log2_ops == 129
    for nc in range(2, 401):
        assert work_factor(Protocol.HGAKA, nc).log2_ops >= 128
    with pytest.raises(DomainError):
        work_factor(Protocol.HGAKA, 1)


def test_cost_rows_and_csv() -> None:
    """Test one CSV row per group size"""
    rows = cost_rows(range(5, 401), REFERENCE_2019_LAPTOP)
    assert len(rows) == 396
    assert all(r.comm_m2o_total > r.comm_kerberos for r in rows)

    stream = io.StringIO()
    write_csv(rows[:2], stream)
    parsed = list(csv.DictReader(io.StringIO(stream.getvalue())))
    assert list(parsed[0]) == CSV_COLUMNS
    assert parsed[0]["nc"] == "5"
    assert int(parsed[1]["comm_kerberos"]) == 6 * 6080


def test_relative_summary() -> None:
    """Test the overhead range against Kerberos"""
    summary = relative_summary(cost_rows(range(5, 401), REFERENCE_2019_LAPTOP))
    assert summary["comm_increase_min_pct"] <= summary["comm_increase_max_pct"]
    assert summary["comm_increase_min_pct"] > 0
    assert relative_summary([]) == {}


@pytest.mark.asyncio
async def test_reconcile_honest_runs() -> None:
    """Test measured runs match the formulas exactly for nc = 2..50"""
    for nc in range(2, 51):
        config = GroupConfig.sequential(nc)
        registry = KeyRegistry.provision(config, KeySize.TEST_512, DeterministicRandom(nc))
        transcript = await run(config, registry, seed=nc)
        report = reconcile(transcript, nc)
        assert report.ok, report.render()
        assert report.payload_bits[Protocol.HGAKA] == comm_hgaka(nc).bits
        assert report.message_counts[Protocol.HGA] == 2 * nc


@pytest.mark.asyncio
async def test_reconcile_flags_replay_work() -> None:
    """Test the AS's extra decryption of a replayed Msg1 is reported"""
    _, transcript = await get_scenario("replay-msg1").execute(3)
    report = reconcile(transcript, 3)
    items = {d.item for d in report.discrepancies if d.protocol is Protocol.HGAKA}
    assert "ops:server.se" in items
    assert "zero discrepancies" not in report.render()


def test_calibrate_needs_enough_iterations() -> None:
    """Test the iteration floor"""
    with pytest.raises(ConfigError):
        calibrate(iterations=10)


@pytest.mark.parametrize("iterations", [0, -1])
def test_calibrate_zero_iterations_is_not_the_default(iterations: int) -> None:
    """Test an explicit non-positive count is refused instead of replaced by the setting"""
    with pytest.raises(ConfigError):
        calibrate(iterations=iterations)


def test_calibrate_refuses_coarse_clock(mocker) -> None:
    """Test a clock coarser than a microsecond"""
    mocker.patch("src.costmodel.timing.time.get_clock_info", return_value=SimpleNamespace(resolution=0.01))
    with pytest.raises(CalibrationError):
        calibrate(iterations=100, key_size=KeySize.TEST_512)


def test_calibrate_measures_every_primitive() -> None:
    """Test a calibrated model covers every operation kind"""
    model = calibrate(iterations=100, key_size=KeySize.TEST_512)
    assert set(model.unit_costs_ms) == {"se", "ae", "ad", "h", "hmac", "kse", "ksd"}
    assert all(v > 0 for v in model.unit_costs_ms.values())
    assert set(model.sem_ms) == set(model.unit_costs_ms)
    assert model.iterations == 100
