"""Fredkin gate analysis: timing, leakage, fidelity and truth tables."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dynamics import evolve_sampled, StateVector, worker_count
from .fock import (
    LOGICAL_INPUTS,
    TWO_ELECTRON,
    Encoding,
    EncodingVariant,
    codeword_mask,
    full_basis,
    logical_to_fock,
    fock_to_logical,
)
from .hamiltonian import HubbardParams, build_fredkin_hamiltonian
from .units import natural_time_to_ps

Bits = tuple[int, int, int]

# a control-1 input whose targets must swap
SWAP_INPUT: Bits = (1, 0, 1)


def fredkin_output(bits: Sequence[int]) -> Bits:
    """Swap the targets iff the control bit is 1."""
    c, t1, t2 = bits
    return (c, t2, t1) if c == 1 else (c, t1, t2)


def mode_frequencies(params: HubbardParams) -> tuple[float, float, float]:
    """Oscillation frequencies of the control-1 pair-swap dynamics (Gamma/hbar)."""
    d = params.charging - params.capacitive
    om1 = math.sqrt(16.0 * params.gamma12**2 + d * d)
    return om1, (d + om1) / 2.0, (d - om1) / 2.0


@dataclass(frozen=True)
class GateTime:
    natural: float  # hbar / Gamma
    ps: float


def gate_time(params: HubbardParams, encoding: Encoding = TWO_ELECTRON) -> GateTime:
    """Completion time of the conditional swap.

    Two-electron encoding: ``2 pi / |U - V - sqrt(16 Gamma^2 + (U - V)^2)|``.
    Single-electron encoding: resonant single-particle transfer, ``pi / 2 Gamma``.
    """
    if params.gamma12 == 0:
        raise ValueError("gate time is undefined without 1-2 tunnel coupling")
    if encoding.variant is EncodingVariant.SINGLE_ELECTRON:
        t = math.pi / (2.0 * abs(params.gamma12))
    else:
        om1, _, om3 = mode_frequencies(params)
        t = 2.0 * math.pi / abs(2.0 * om3)
    return GateTime(t, natural_time_to_ps(t, params.gamma_si))


def slow_mode_period(params: HubbardParams) -> float:
    """``2 pi / |Omega_3|``: twice the gate time, where the swap has undone itself."""
    return 2.0 * math.pi / abs(mode_frequencies(params)[2])


def leakage_probability_analytic(t, params: HubbardParams):
    """Population of each of the two singly-occupied leakage states.

    ``2 (1 - cos(Omega_1 t)) / Omega_1^2`` for identical target dots; the
    total non-codeword population is twice this.
    """
    if params.eps[1] != params.eps[2]:
        raise ValueError("closed-form leakage needs identical target dots (eps1 == eps2)")
    om1 = mode_frequencies(params)[0]
    return 2.0 * (1.0 - np.cos(om1 * np.asarray(t, dtype=float))) / om1**2


def _gate_unitary_columns(params: HubbardParams, encoding: Encoding, t: float) -> dict[Bits, np.ndarray]:
    h = build_fredkin_hamiltonian(params, full_basis())
    out = {}
    for bits in LOGICAL_INPUTS:
        psi0 = h.basis.basis_vector(logical_to_fock(bits, encoding))
        out[bits] = h.spectrum.propagate(psi0, t)
    return out


def input_fidelities(params: HubbardParams, encoding: Encoding = TWO_ELECTRON,
                     t: Optional[float] = None) -> dict[Bits, float]:
    """Population of the correct Fredkin output at ``t`` (default: gate time) per input."""
    t = gate_time(params, encoding).natural if t is None else t
    basis = full_basis()
    cols = _gate_unitary_columns(params, encoding, t)
    return {bits: float(abs(psi[basis.index(logical_to_fock(fredkin_output(bits), encoding))]) ** 2)
            for bits, psi in cols.items()}


def gate_fidelity(params: HubbardParams, encoding: Encoding = TWO_ELECTRON, t: Optional[float] = None) -> float:
    """Mean over the 8 logical inputs of the correct-output population."""
    return float(np.mean(list(input_fidelities(params, encoding, t).values())))


@dataclass(frozen=True)
class TruthRow:
    inputs: Bits
    output: Bits  # most populated codeword
    expected: Bits
    target_population: float
    leakage: float  # total non-codeword population
    leaky: bool

    @property
    def correct(self) -> bool:
        return self.output == self.expected


@dataclass(frozen=True)
class TruthTableReport:
    rows: tuple[TruthRow, ...]
    t: float
    encoding: Encoding

    @property
    def all_correct(self) -> bool:
        return all(r.correct for r in self.rows)


def truth_table(params: HubbardParams, encoding: Encoding = TWO_ELECTRON,
                leakage_threshold: float = 0.01, t: Optional[float] = None) -> TruthTableReport:
    t = gate_time(params, encoding).natural if t is None else t
    basis = full_basis()
    mask = codeword_mask(basis, encoding)
    code_idx = np.flatnonzero(mask)
    rows = []
    for bits, psi in _gate_unitary_columns(params, encoding, t).items():
        pops = np.abs(psi) ** 2
        best = code_idx[np.argmax(pops[code_idx])]
        expected = fredkin_output(bits)
        leak = float(pops[~mask].sum())
        rows.append(TruthRow(
            inputs=bits,
            output=fock_to_logical(basis.states[best], encoding),
            expected=expected,
            target_population=float(pops[basis.index(logical_to_fock(expected, encoding))]),
            leakage=leak,
            leaky=leak > leakage_threshold,
        ))
    return TruthTableReport(tuple(rows), t, encoding)


def leakage_trajectory(params: HubbardParams, times, inputs: Bits = SWAP_INPUT,
                       encoding: Encoding = TWO_ELECTRON) -> np.ndarray:
    """Total non-codeword population at each time, from exact evolution."""
    h = build_fredkin_hamiltonian(params, full_basis())
    psi0 = h.basis.basis_vector(logical_to_fock(inputs, encoding))
    amps = h.spectrum.propagate(psi0, np.asarray(times, dtype=float))
    mask = codeword_mask(h.basis, encoding)
    return (np.abs(amps[:, ~mask]) ** 2).sum(axis=1)


@dataclass(frozen=True)
class SweepResult:
    charging: np.ndarray
    fidelity: np.ndarray

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.fidelity))

    @property
    def argmax_charging(self) -> float:
        return float(self.charging[self.argmax])

    @property
    def max_fidelity(self) -> float:
        return float(self.fidelity[self.argmax])

    def local_maxima(self) -> list[tuple[float, float]]:
        f = self.fidelity
        idx = [i for i in range(1, len(f) - 1) if f[i] > f[i - 1] and f[i] >= f[i + 1]]
        return [(float(self.charging[i]), float(f[i])) for i in idx]

    def nearest_local_maximum(self, charging: float) -> tuple[float, float]:
        peaks = self.local_maxima() or [(self.argmax_charging, self.max_fidelity)]
        return min(peaks, key=lambda p: abs(p[0] - charging))


def u_sweep(params: HubbardParams, u_range: tuple[float, float], n_points: int,
            encoding: Encoding = TWO_ELECTRON, workers: Optional[int] = None) -> SweepResult:
    """Gate fidelity versus charging energy, with the gate time recomputed per point."""
    lo, hi = (float(x) for x in u_range)
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    if lo <= 0 or hi <= 0 or hi < lo:
        raise ValueError(f"invalid U range {u_range}")
    grid = np.array([lo]) if n_points == 1 else np.linspace(lo, hi, n_points)
    grid = np.round(grid, 12)

    def fid(u):
        return gate_fidelity(params.replace(charging=float(u)), encoding)

    workers = workers or worker_count()
    if workers > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(fid, grid))
    else:
        vals = [fid(u) for u in grid]
    return SweepResult(grid, np.array(vals))


@dataclass(frozen=True)
class GateAnalysis:
    t_star: GateTime
    t_star_slow_mode: float
    omega1: float
    omega2: float
    omega3: float
    fidelity: float
    leakage_at_tstar: float
    encoding: Encoding = TWO_ELECTRON
    argmax_U: Optional[float] = None
    input_fidelities: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "encoding": str(self.encoding),
            "t_star_ps": self.t_star.ps,
            "t_star_natural": self.t_star.natural,
            "t_star_slow_mode_natural": self.t_star_slow_mode,
            "omega1": self.omega1,
            "omega2": self.omega2,
            "omega3": self.omega3,
            "fidelity": self.fidelity,
            "leakage_at_tstar": self.leakage_at_tstar,
            "argmax_U": self.argmax_U,
            "input_fidelities": {"".join(map(str, k)): v for k, v in self.input_fidelities.items()},
        }


def analyze_gate(params: HubbardParams, encoding: Encoding = TWO_ELECTRON,
                 argmax_U: Optional[float] = None) -> GateAnalysis:
    tg = gate_time(params, encoding)
    om1, om2, om3 = mode_frequencies(params)
    fids = input_fidelities(params, encoding, tg.natural)
    leak = float(leakage_trajectory(params, [tg.natural], SWAP_INPUT, encoding)[0])
    return GateAnalysis(
        t_star=tg,
        t_star_slow_mode=slow_mode_period(params),
        omega1=om1,
        omega2=om2,
        omega3=om3,
        fidelity=float(np.mean(list(fids.values()))),
        leakage_at_tstar=leak,
        encoding=encoding,
        argmax_U=argmax_U,
        input_fidelities=fids,
    )


def gate_trajectories(params: HubbardParams, encoding: Encoding = TWO_ELECTRON,
                      t_final: Optional[float] = None, n_snapshots: int = 401):
    """Exact population trajectories for every logical input."""
    t_final = gate_time(params, encoding).natural if t_final is None else t_final
    h = build_fredkin_hamiltonian(params, full_basis())
    out = {}
    for bits in LOGICAL_INPUTS:
        psi0 = StateVector.from_fock(h.basis, logical_to_fock(bits, encoding))
        out[bits] = evolve_sampled(h, psi0, t_final, n_snapshots)
    return out
