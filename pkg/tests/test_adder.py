import json
import math

import numpy as np
import pytest

from qdsim.adder import (
    REFERENCE_FIDELITY,
    AuxSwapInterval,
    CalibrationError,
    FredkinInterval,
    Load,
    Measure,
    PulseSchedule,
    ScheduleError,
    adder_params,
    adder_truth_table,
    aux_swap_calibration,
    default_schedule,
    run_adder,
    sample_adder_shots,
    step_from_dict,
    write_adder_csv,
)
from qdsim.fock import LOGICAL_INPUTS
from qdsim.fredkin import gate_time
from qdsim.hamiltonian import HubbardParams

P = adder_params()


@pytest.fixture(scope="module")
def table():
    return adder_truth_table()


def test_default_gamma01():
    assert P.gamma01 == 1.0
    assert adder_params(HubbardParams(gamma01=0.5)).gamma01 == 0.5


def test_schedule_structure():
    s = default_schedule(1, 0, 1)
    assert s.count("fredkin_interval") == 5
    assert s.count("aux_swap_interval") == 1
    assert s.count("measure") == 2
    assert s.count("reset") == 1
    reloads = sorted(st.phase for st in s.steps if isinstance(st, Load) and st.dot == 0 and st.phase > 0)
    assert reloads == [1, 2, 5]
    labels = [st.label for st in s.steps if isinstance(st, Measure)]
    assert labels == ["parity", "carry"]
    aux = next(st for st in s.steps if isinstance(st, AuxSwapInterval))
    assert aux.conditional_detune == pytest.approx(2 * P.capacitive)


def test_runtime_close_to_six_gate_times():
    s = default_schedule(0, 0, 0)
    assert s.reference_time() == pytest.approx(6 * gate_time(P).natural)
    assert s.coherent_time_ps() == pytest.approx(858, rel=0.01)


def test_json_round_trip(tmp_path):
    s = default_schedule(0, 1, 1)
    path = tmp_path / "s.json"
    s.to_json(path)
    back = PulseSchedule.from_json(path)
    assert back == s
    assert PulseSchedule.from_json(s.to_json()) == s
    assert json.loads(s.to_json())["time_unit"] == "hbar_over_gamma"


def test_calibration_both_branches():
    cal = aux_swap_calibration(P)
    assert min(cal.branch_fidelities) >= 0.99
    assert cal.fidelity == min(cal.branch_fidelities)
    assert 0 < cal.duration <= 4 * gate_time(P).natural


def test_calibration_fails_without_aux_coupling():
    with pytest.raises(CalibrationError) as info:
        aux_swap_calibration(P.replace(gamma01=0))
    assert len(info.value.times) == len(info.value.curve)


def test_truth_table_correct(table):
    assert [r.inputs for r in table] == list(LOGICAL_INPUTS)
    for r in table:
        p, q, r_ = r.inputs
        assert r.parity == (p + q + r_) % 2
        assert r.carry == int(p + q + r_ >= 2)
        assert r.correct
        assert r.g in (0, 1)


def test_fidelity_is_product_of_steps(table):
    for r in table:
        assert len(r.step_fidelities) == 6
        assert r.fidelity == pytest.approx(math.prod(r.step_fidelities), abs=1e-12)


def test_fidelities_match_reference(table):
    for r in table:
        assert abs(r.fidelity - REFERENCE_FIDELITY[r.inputs]) <= 0.005


def test_sampled_majority():
    for bits in [(0, 0, 0), (1, 0, 1), (1, 1, 1)]:
        rec = sample_adder_shots(default_schedule(*bits), 10_000, seed=3)
        p, q, r = bits
        assert rec.majority() == ((p + q + r) % 2, int(p + q + r >= 2))
        assert sum(rec.outcome_counts().values()) == 10_000
        assert rec.leaked.mean() < 0.05


def test_sampled_deterministic():
    s = default_schedule(0, 1, 0)
    a = sample_adder_shots(s, 200, seed=9)
    b = sample_adder_shots(s, 200, seed=9)
    assert np.array_equal(a.parity, b.parity) and np.array_equal(a.carry, b.carry)
    # shot k depends only on (seed, k)
    c = sample_adder_shots(s, 50, seed=9)
    assert np.array_equal(a.parity[:50], c.parity)


def test_run_adder_modes():
    s = default_schedule(1, 1, 0)
    one = run_adder(s, "sampled", seed=1)
    assert one.mode == "sampled"
    assert one.fidelity == run_adder(s).fidelity
    with pytest.raises(ValueError):
        run_adder(s, "bogus")
    with pytest.raises(ValueError):
        sample_adder_shots(s, 0)


def test_schedule_errors():
    with pytest.raises(ScheduleError):
        default_schedule(2, 0, 0)
    with pytest.raises(ScheduleError):
        Load(0, "nowhere")
    with pytest.raises(ScheduleError):
        Load(3, "p")
    with pytest.raises(ScheduleError):
        FredkinInterval(0.0)
    with pytest.raises(ScheduleError):
        Measure(1, "")
    with pytest.raises(ScheduleError):
        PulseSchedule((AuxSwapInterval(1.0, 20.0, "parity"),), P)
    with pytest.raises(ScheduleError):
        PulseSchedule((Load(0, "parity_register"),), P)
    with pytest.raises(ScheduleError):
        PulseSchedule((Measure(1, "parity"), AuxSwapInterval(1.0, 20.0)), P.replace(gamma01=0))
    with pytest.raises(ScheduleError):
        PulseSchedule((FredkinInterval(1.0),), P.replace(gamma12=0))
    with pytest.raises(ScheduleError):
        PulseSchedule((), P, (0, 1))
    with pytest.raises(ScheduleError):
        step_from_dict({"kind": "teleport"})
    with pytest.raises(ScheduleError):
        step_from_dict({"kind": "load", "dot": 0})


def test_csv(tmp_path, table):
    path = write_adder_csv(table, tmp_path / "a.csv", {"seed": 0})
    lines = path.read_text().splitlines()
    assert lines[0] == "# seed=0"
    assert lines[1].startswith("p,q,r,parity,carry,fidelity")
    assert len(lines) == 10
