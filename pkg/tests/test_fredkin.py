import math

import numpy as np
import pytest
from scipy.linalg import expm

from conftest import oracle_hamiltonian
from qdsim.fock import LOGICAL_INPUTS, SINGLE_ELECTRON, TWO_ELECTRON, logical_to_fock
from qdsim.fredkin import (
    SWAP_INPUT,
    analyze_gate,
    fredkin_output,
    gate_fidelity,
    gate_time,
    gate_trajectories,
    input_fidelities,
    leakage_probability_analytic,
    leakage_trajectory,
    mode_frequencies,
    slow_mode_period,
    truth_table,
    u_sweep,
)
from qdsim.hamiltonian import HubbardParams

P = HubbardParams()
HBAR_MEV_PS = 0.6582119569


def _code(bits):
    return sum(1 << (5 - 2 * l) | 1 << (4 - 2 * l) for l, b in enumerate(bits) if b == 0)


def _oracle_fidelities(u=21.83, v=10.0):
    d = u - v
    t = 2 * math.pi / abs(d - math.sqrt(16 + d * d))
    ut = expm(-1j * oracle_hamiltonian(U=u, V=v) * t)
    return {b: abs(ut[_code(fredkin_output(b)), _code(b)]) ** 2 for b in LOGICAL_INPUTS}


def test_fredkin_truth_function():
    assert fredkin_output((1, 0, 1)) == (1, 1, 0)
    assert fredkin_output((0, 0, 1)) == (0, 0, 1)


def test_gate_time_defaults():
    tg = gate_time(P)
    d = 11.83
    assert tg.natural == pytest.approx(2 * math.pi / abs(d - math.sqrt(16 + d * d)), rel=1e-14)
    assert tg.ps == pytest.approx(tg.natural * HBAR_MEV_PS / 0.044, rel=1e-14)
    assert tg.ps == pytest.approx(142.9, rel=0.01)


def test_mode_frequencies():
    om1, om2, om3 = mode_frequencies(P)
    assert om1 == pytest.approx(math.sqrt(16 + 11.83**2))
    assert om2 - om3 == pytest.approx(om1)
    assert om2 + om3 == pytest.approx(11.83)
    assert slow_mode_period(P) == pytest.approx(2 * gate_time(P).natural)


def test_gate_time_requires_coupling():
    with pytest.raises(ValueError):
        gate_time(P.replace(gamma12=0))


def test_gate_time_scales_with_gamma_si():
    assert gate_time(P.replace(gamma_si=22)).ps == pytest.approx(2 * gate_time(P).ps)


def test_input_fidelities_match_oracle():
    got = input_fidelities(P)
    ref = _oracle_fidelities()
    for b in LOGICAL_INPUTS:
        assert got[b] == pytest.approx(ref[b], abs=1e-10)
    # control-0 inputs with equal targets are stationary
    assert got[(0, 0, 0)] == pytest.approx(1, abs=1e-12)
    assert got[(1, 1, 1)] == pytest.approx(1, abs=1e-12)


def test_gate_fidelity_defaults():
    assert gate_fidelity(P) >= 0.999
    assert gate_fidelity(P) == pytest.approx(np.mean(list(_oracle_fidelities().values())), abs=1e-10)


def test_truth_table_matches_fredkin():
    rep = truth_table(P)
    assert rep.all_correct
    assert [r.inputs for r in rep.rows] == list(LOGICAL_INPUTS)
    for r in rep.rows:
        assert r.output == fredkin_output(r.inputs)
        assert not r.leaky


def test_truth_table_flags_wrong_time():
    rep = truth_table(P, t=gate_time(P).natural / 2)
    assert not rep.all_correct


def test_leakage_closed_form():
    t = np.linspace(0, gate_time(P).natural, 301)
    num = leakage_trajectory(P, t)
    per_state = leakage_probability_analytic(t, P)
    # two leakage states share the population equally
    assert np.sqrt(np.mean((num - 2 * per_state) ** 2)) <= 1e-12
    assert num[-1] <= 1e-3


def test_leakage_closed_form_needs_equal_targets():
    with pytest.raises(ValueError):
        leakage_probability_analytic(1.0, P.with_eps(eps1=0.5))


def test_single_electron_mode():
    tg = gate_time(P, SINGLE_ELECTRON)
    assert tg.natural == pytest.approx(math.pi / 2)
    assert tg.ps == pytest.approx(23.5, abs=0.05)
    assert 5.5 <= gate_time(P).ps / tg.ps <= 6.5
    fids = input_fidelities(P, SINGLE_ELECTRON)
    # control 1 (empty dot 0) swaps perfectly
    for b in LOGICAL_INPUTS:
        if b[0] == 1:
            assert fids[b] == pytest.approx(1.0, abs=1e-12)
    assert truth_table(P, encoding=SINGLE_ELECTRON).all_correct
    t = np.linspace(0, tg.natural, 50)
    for bits in LOGICAL_INPUTS:
        assert not np.any(leakage_trajectory(P, t, bits, SINGLE_ELECTRON))


def test_trajectories_cover_inputs():
    traj = gate_trajectories(P, n_snapshots=5)
    assert set(traj) == set(LOGICAL_INPUTS)
    res = traj[SWAP_INPUT]
    assert res.populations.shape == (5, 64)
    assert res.population(logical_to_fock(SWAP_INPUT))[0] == pytest.approx(1.0, abs=1e-12)


def test_u_sweep_properties():
    res = u_sweep(P, (18, 25), 71, workers=2)
    assert len(res.charging) == 71
    assert np.max(np.abs(np.diff(res.fidelity))) < 0.05
    u, f = res.nearest_local_maximum(21.83)
    assert abs(u - 21.83) <= 0.1
    assert f >= 0.998
    again = u_sweep(P, (18, 25), 71, workers=1)
    assert np.array_equal(res.fidelity, again.fidelity)


def test_u_sweep_validation():
    with pytest.raises(ValueError):
        u_sweep(P, (25, 18), 5)
    with pytest.raises(ValueError):
        u_sweep(P, (18, 25), 0)


def test_analyze_gate_dict():
    d = analyze_gate(P).to_dict()
    assert d["fidelity"] >= 0.999
    assert d["t_star_ps"] == pytest.approx(142.856, abs=1e-3)
    assert set(d["input_fidelities"]) == {"".join(map(str, b)) for b in LOGICAL_INPUTS}
