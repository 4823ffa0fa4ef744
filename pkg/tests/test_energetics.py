import dataclasses
import math

import pytest

from qdsim.adder import PulseSchedule, default_schedule
from qdsim.energetics import (
    REFERENCE_MEASUREMENT_EV,
    CostModel,
    audit_mismatch,
    comparison_table,
    cooling_headroom,
    energy_ledger,
    flops_to_ev_per_bitop,
    measurement_cost,
    write_comparison_csv,
)
from qdsim.fock import LOGICAL_INPUTS
from qdsim.units import ev_to_joule, joule_to_ev

E_CHARGE = 1.602176634e-19


@pytest.fixture(scope="module")
def schedule():
    return default_schedule(1, 1, 1)


@pytest.fixture(scope="module")
def ledger(schedule):
    return energy_ledger(schedule)


def test_totals(ledger):
    t = ledger.totals
    assert (t.charging, t.eps_control, t.gamma_control, t.measurements) == (16, 20, 12, 2)
    assert ledger.total_u == 28
    # 28 U of 21.83 Gamma plus 20 Gamma, Gamma = 44 micro-eV
    assert ledger.total_mev == pytest.approx((28 * 21.83 + 20) * 0.044, rel=1e-12)
    assert ledger.total_mev == pytest.approx(27.77, abs=0.01)


def test_rows(ledger):
    assert [r.step for r in ledger.rows] == ["0->1", "1->2", "2->3", "3->4", "4->5", "5->6", "6->0"]
    assert [r.charging for r in ledger.rows] == [4, 2, 2, 0, 0, 2, 6]
    assert [r.gamma_control for r in ledger.rows] == [2, 2, 2, 2, 2, 2, 0]
    assert [r.eps_control for r in ledger.rows] == [0, 0, 0, 20, 0, 0, 0]
    assert [r.measurements for r in ledger.rows] == [0, 0, 0, 1, 0, 0, 1]


def test_ledger_independent_of_input():
    ref = energy_ledger(default_schedule(0, 0, 0)).totals
    for bits in LOGICAL_INPUTS:
        assert energy_ledger(default_schedule(*bits)).totals == ref


def test_empty_schedule(schedule):
    empty = energy_ledger(PulseSchedule((), schedule.params))
    assert empty.rows == ()
    assert empty.total_mev == 0 and empty.total_with_measurement_ev == 0


def test_additive_over_concatenation(schedule, ledger):
    shifted = tuple(dataclasses.replace(s, phase=s.phase + 7) for s in schedule.steps)
    both = PulseSchedule(schedule.steps + shifted, schedule.params)
    lb = energy_ledger(both)
    assert len(lb.rows) == 14
    assert lb.total_mev == pytest.approx(2 * ledger.total_mev, rel=1e-14)
    assert lb.totals.measurement_ev == pytest.approx(2 * ledger.totals.measurement_ev, rel=1e-14)


def test_gamma_si_scaling(schedule, ledger):
    half = energy_ledger(PulseSchedule(schedule.steps, schedule.params.replace(gamma_si=22)))
    assert half.total_mev == pytest.approx(ledger.total_mev / 2, rel=1e-14)
    assert half.totals == ledger.totals


def test_measurement_cost():
    dem = measurement_cost(1e-3, 30e-9, 10e-6)
    assert dem == pytest.approx(1e-3 * 30e-9 * 10e-6 / E_CHARGE, rel=1e-12)
    assert dem == pytest.approx(1872.45, abs=0.01)
    assert measurement_cost(2e-3, 30e-9, 10e-6) == pytest.approx(2 * dem)
    assert measurement_cost(1e-3, 30e-9, 30e-6) == pytest.approx(3 * dem)
    with pytest.raises(ValueError):
        measurement_cost(0, 1, 1)
    with pytest.raises(ValueError):
        measurement_cost(1, -1, 1)


def test_measurement_override(schedule):
    led = energy_ledger(schedule, CostModel(measurement_ev=REFERENCE_MEASUREMENT_EV))
    assert led.totals.measurement_ev == 2 * REFERENCE_MEASUREMENT_EV
    assert led.total_with_measurement_ev == pytest.approx(led.total_ev + 7200)


def test_unit_round_trip():
    for x in (1e-6, 1.0, 3.6e3):
        assert joule_to_ev(ev_to_joule(x)) == pytest.approx(x, rel=1e-15)
    assert ev_to_joule(1.0) == E_CHARGE


def test_flops_conversion():
    v = flops_to_ev_per_bitop(52.227)
    assert v == pytest.approx(1 / (52.227e12 * E_CHARGE), rel=1e-12)
    assert v == pytest.approx(1.195e5, rel=1e-3)
    assert flops_to_ev_per_bitop(62.684) == pytest.approx(9.957e4, rel=1e-3)
    with pytest.raises(ValueError):
        flops_to_ev_per_bitop(0)


def test_cooling_headroom(schedule, ledger):
    t = schedule.coherent_time_ps() * 1e-12
    n = cooling_headroom(ledger.total_ev, t, 500e-6)
    power = ev_to_joule(ledger.total_ev) / t
    assert n == math.floor(500e-6 / power)
    assert n * power <= 500e-6 < (n + 1) * power
    assert cooling_headroom(ledger.total_ev, t, 1500e-6) >= 3 * n
    with pytest.raises(ValueError):
        cooling_headroom(ledger.total_ev, t, 0)


def test_comparison_orders(ledger, tmp_path):
    rows = comparison_table(ledger)
    orders = {r.technology: r.order_of_magnitude for r in rows}
    assert orders == {
        "modern_supercomputers": 5,
        "transistor_full_adders": 3,
        "qd_cellular_automata": 0,
        "qd_full_adder_coherent": -2,
        "qd_full_adder_measurement": 3,
    }
    text = write_comparison_csv(rows, tmp_path / "c.csv").read_text().splitlines()
    assert text[0] == "technology,cost_ev_per_bitop,order_of_magnitude"
    assert len(text) == 6


def test_audit_mode(schedule):
    audit = energy_ledger(schedule, audit=True)
    assert audit.totals.gamma_control == 12
    mism = audit_mismatch(schedule)
    steps = {m[0] for m in mism}
    assert "0->1" in steps and "6->0" in steps
    for step, ref, act in mism:
        assert ref != act


def test_cost_model_validation():
    with pytest.raises(ValueError):
        CostModel(barrier_toggle_cost=-1)
    with pytest.raises(ValueError):
        CostModel(measurement_ev=-1)
    with pytest.raises(ValueError):
        CostModel(measurement_time=0)


def test_text_and_csv(ledger, tmp_path):
    text = ledger.to_text()
    assert "6->0" in text and "Grand total without measurement: 27.7746 meV" in text
    lines = ledger.to_csv(tmp_path / "l.csv").read_text().splitlines()
    assert lines[0].startswith("step,charging_u")
    assert lines[-1].startswith("total,16.0,20.0,12.0,2,")
