"""Three-dot full-adder protocol as a pulse-schedule state machine.

The protocol alternates classical loads of dot 0, coherent Fredkin
intervals, one auxiliary 0-1 swap and projective charge measurements of
dot 1.  Two execution modes are provided:

``ideal_branch``
    After every coherent interval the state is projected onto the
    logically correct codeword; that population is the step fidelity and
    the run fidelity is their product.
``sampled``
    Loads and measurements draw outcomes from the Born distribution, so a
    run is one stochastic trajectory.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .dynamics import run_rng
from .fock import (
    LOGICAL_INPUTS,
    N_SITES,
    _full_creation,
    build_basis,
    full_basis,
    logical_to_fock,
)
from .fredkin import fredkin_output, gate_time
from .hamiltonian import HubbardParams, build_adder_hamiltonian, build_fredkin_hamiltonian
from .units import natural_time_to_ps

Bits = tuple[int, int, int]

SOURCES = ("p", "q", "r", "const0", "const1", "parity_register")

# per-input fidelities of the reference truth table
REFERENCE_FIDELITY: dict[Bits, float] = {
    (0, 0, 0): 0.986,
    (0, 0, 1): 0.991,
    (0, 1, 0): 0.994,
    (0, 1, 1): 0.997,
    (1, 0, 0): 0.994,
    (1, 0, 1): 0.997,
    (1, 1, 0): 0.994,
    (1, 1, 1): 0.999,
}

# quoted runtime of one adder, counted as six gate times
REFERENCE_RUNTIME_PS = 858.0

# Gamma* used when a parameter set leaves the auxiliary coupling off
DEFAULT_GAMMA01 = 1.0


class ScheduleError(ValueError):
    pass


class CalibrationError(RuntimeError):
    """No duration in the search window reaches the required swap fidelity."""

    def __init__(self, message: str, times: np.ndarray, curve: np.ndarray):
        super().__init__(message)
        self.times = times
        self.curve = curve


# --- protocol steps ---------------------------------------------------------


@dataclass(frozen=True)
class Load:
    dot: int
    source: str
    phase: int = 0
    kind: str = field(default="load", init=False)

    def __post_init__(self):
        if self.dot not in range(N_SITES):
            raise ScheduleError(f"load targets unknown dot {self.dot}")
        if self.source not in SOURCES:
            raise ScheduleError(f"unknown bit source {self.source!r}")


@dataclass(frozen=True)
class FredkinInterval:
    duration: float
    phase: int = 0
    kind: str = field(default="fredkin_interval", init=False)

    def __post_init__(self):
        if not self.duration > 0:
            raise ScheduleError("interval duration must be > 0")


@dataclass(frozen=True)
class AuxSwapInterval:
    """Gamma off, Gamma* on; ``eps0`` raised by ``conditional_detune`` when the
    register ``condition`` holds 1."""

    duration: float
    conditional_detune: float
    condition: str = "parity"
    phase: int = 0
    kind: str = field(default="aux_swap_interval", init=False)

    def __post_init__(self):
        if not self.duration > 0:
            raise ScheduleError("interval duration must be > 0")


@dataclass(frozen=True)
class Measure:
    dot: int
    label: str
    phase: int = 0
    kind: str = field(default="measure", init=False)

    def __post_init__(self):
        if self.dot not in range(N_SITES):
            raise ScheduleError(f"measurement targets unknown dot {self.dot}")
        if not self.label:
            raise ScheduleError("measurement needs an output label")


@dataclass(frozen=True)
class Reset:
    """Empty every dot; dot 2 is read out first as the garbage bit ``g``."""

    phase: int = 0
    kind: str = field(default="reset", init=False)


ProtocolStep = Union[Load, FredkinInterval, AuxSwapInterval, Measure, Reset]
_STEP_TYPES = {cls.__dataclass_fields__["kind"].default: cls
               for cls in (Load, FredkinInterval, AuxSwapInterval, Measure, Reset)}
COHERENT_KINDS = ("fredkin_interval", "aux_swap_interval")


def step_to_dict(step: ProtocolStep) -> dict:
    out = {"kind": step.kind}
    for name in step.__dataclass_fields__:
        if name != "kind":
            out[name] = getattr(step, name)
    return out


def step_from_dict(doc: dict) -> ProtocolStep:
    doc = dict(doc)
    kind = doc.pop("kind", None)
    if kind not in _STEP_TYPES:
        raise ScheduleError(f"unknown step kind {kind!r}")
    try:
        return _STEP_TYPES[kind](**doc)
    except TypeError as exc:
        raise ScheduleError(f"bad fields for {kind}: {exc}") from None


@dataclass(frozen=True)
class PulseSchedule:
    steps: tuple[ProtocolStep, ...]
    params: HubbardParams
    inputs: Bits = (0, 0, 0)

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "inputs", tuple(int(b) for b in self.inputs))
        if len(self.inputs) != 3 or any(b not in (0, 1) for b in self.inputs):
            raise ScheduleError(f"inputs must be three bits, got {self.inputs}")
        registers = set()
        for step in self.steps:
            if isinstance(step, Load) and step.source == "parity_register" and "parity" not in registers:
                raise ScheduleError("parity_register loaded before any parity measurement")
            if isinstance(step, AuxSwapInterval):
                if step.condition not in registers:
                    raise ScheduleError(f"aux swap conditioned on unmeasured register {step.condition!r}")
                if self.params.gamma01 == 0:
                    raise ScheduleError("aux swap needs gamma01 > 0")
            if isinstance(step, FredkinInterval) and self.params.gamma12 == 0:
                raise ScheduleError("Fredkin interval needs gamma12 > 0")
            if isinstance(step, Measure):
                registers.add(step.label)

    def count(self, kind: str) -> int:
        return sum(1 for s in self.steps if s.kind == kind)

    def coherent_time(self) -> float:
        """Total coherent evolution, hbar/Gamma."""
        return float(sum(s.duration for s in self.steps if s.kind in COHERENT_KINDS))

    def coherent_time_ps(self) -> float:
        return float(natural_time_to_ps(self.coherent_time(), self.params.gamma_si))

    def reference_time(self) -> float:
        """Runtime counted as six gate times."""
        return 6.0 * gate_time(self.params).natural

    def to_dict(self) -> dict:
        return {
            "inputs": list(self.inputs),
            "params": self.params.to_config(),
            "steps": [step_to_dict(s) for s in self.steps],
            "time_unit": "hbar_over_gamma",
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_dict(cls, doc: dict) -> "PulseSchedule":
        from .hamiltonian import params_from_mapping

        try:
            params = params_from_mapping({k: str(v) for k, v in doc["params"].items()})
            steps = [step_from_dict(s) for s in doc["steps"]]
            inputs = tuple(doc.get("inputs", (0, 0, 0)))
        except KeyError as exc:
            raise ScheduleError(f"schedule document lacks {exc}") from None
        return cls(tuple(steps), params, inputs)

    @classmethod
    def from_json(cls, text_or_path) -> "PulseSchedule":
        text = str(text_or_path)
        if not text.lstrip().startswith("{"):
            text = Path(text_or_path).read_text()
        return cls.from_dict(json.loads(text))


def adder_params(params: Optional[HubbardParams] = None) -> HubbardParams:
    """Defaults for the adder: the auxiliary coupling on at ``Gamma* = Gamma``."""
    if params is None:
        return HubbardParams(gamma01=DEFAULT_GAMMA01)
    return params


# --- auxiliary swap calibration ----------------------------------------------


def _aux_params(params: HubbardParams, detuned: bool) -> HubbardParams:
    eps0 = params.eps[0] + (2.0 * params.capacitive if detuned else 0.0)
    return params.replace(gamma12=0.0, eps=(eps0, params.eps[1], params.eps[2]))


def _swap_branch(params: HubbardParams, parity: int):
    """Eigen-data for the aux-swap configuration reached with a given parity."""
    bits = (1 - parity, parity, 1 - parity)
    swapped = (bits[1], bits[0], bits[2])
    s_in, s_out = logical_to_fock(bits), logical_to_fock(swapped)
    basis = build_basis(s_in.sector)
    h = build_adder_hamiltonian(_aux_params(params, bool(parity)), basis).matrix
    w, v = np.linalg.eigh(h)
    return w, v[basis.index(s_out)] * v[basis.index(s_in)].conj()


def _swap_fidelity(branches, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    vals = [np.abs(np.exp(-1j * np.outer(t, w)) @ c) ** 2 for w, c in branches]
    return np.min(vals, axis=0)


@dataclass(frozen=True)
class AuxCalibration:
    duration: float
    fidelity: float  # worst branch at ``duration``
    branch_fidelities: tuple[float, float]  # parity 0, parity 1


@lru_cache(maxsize=32)
def aux_swap_calibration(params: HubbardParams, n_grid: int = 4000, threshold: float = 0.9) -> AuxCalibration:
    """Duration in ``(0, 4 t*]`` maximising the worse of the two parity branches."""
    if params.gamma01 == 0:
        t = np.linspace(0.0, 1.0, 2)
        raise CalibrationError("aux swap calibration failed: gamma01 = 0 cannot swap dots 0 and 1",
                               t, np.zeros_like(t))
    t_max = 4.0 * gate_time(params).natural
    branches = [_swap_branch(params, par) for par in (0, 1)]
    times = np.linspace(t_max / n_grid, t_max, n_grid)
    curve = _swap_fidelity(branches, times)
    i = int(np.argmax(curve))
    if curve[i] < threshold:
        raise CalibrationError(
            f"aux swap calibration failed: best swap fidelity {curve[i]:.4g} < {threshold}", times, curve)
    lo, hi = times[max(i - 1, 0)], times[min(i + 1, n_grid - 1)]
    res = minimize_scalar(lambda t: -_swap_fidelity(branches, t)[0], bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-10})
    best = float(res.x) if -res.fun >= curve[i] else float(times[i])
    per = tuple(float(_swap_fidelity([b], best)[0]) for b in branches)
    return AuxCalibration(best, min(per), per)


# --- default protocol ---------------------------------------------------------


def default_schedule(p: int, q: int, r: int, params: Optional[HubbardParams] = None,
                     aux_duration: Optional[float] = None) -> PulseSchedule:
    """The canonical seven-phase protocol.

    Dots start empty (logical 1).  Phase 0 loads ``p`` and 0, phases 1, 2 and
    5 reload dot 0, phases 3 and 6 read dot 1 into ``parity`` and ``carry``.
    Phase 6 ends by emptying all dots for the next run.
    """
    params = adder_params(params)
    for b in (p, q, r):
        if b not in (0, 1):
            raise ScheduleError(f"inputs must be bits, got {(p, q, r)}")
    t_f = gate_time(params).natural
    t_aux = aux_swap_calibration(params).duration if aux_duration is None else aux_duration
    steps = (
        Load(0, "p", 0), Load(1, "const0", 0), FredkinInterval(t_f, 0),
        Load(0, "q", 1), FredkinInterval(t_f, 1),
        Load(0, "r", 2), FredkinInterval(t_f, 2),
        Measure(1, "parity", 3), AuxSwapInterval(t_aux, 2.0 * params.capacitive, "parity", 3),
        FredkinInterval(t_f, 4),
        Load(0, "q", 5), FredkinInterval(t_f, 5),
        Measure(1, "carry", 6), Reset(6),
    )
    return PulseSchedule(steps, params, (p, q, r))


# --- execution ----------------------------------------------------------------


@dataclass(frozen=True)
class AdderResult:
    inputs: Bits
    parity: int
    carry: int
    g: int  # final logical value of dot 2, kept for reversibility
    step_fidelities: tuple[float, ...]
    fidelity: float
    mode: str = "ideal_branch"
    leaked: bool = False

    @property
    def expected(self) -> tuple[int, int]:
        p, q, r = self.inputs
        return p ^ q ^ r, int(p + q + r >= 2)

    @property
    def correct(self) -> bool:
        return (self.parity, self.carry) == self.expected

    @property
    def reference_fidelity(self) -> float:
        return REFERENCE_FIDELITY[self.inputs]

    def to_dict(self) -> dict:
        return {
            "p": self.inputs[0],
            "q": self.inputs[1],
            "r": self.inputs[2],
            "parity": self.parity,
            "carry": self.carry,
            "g": self.g,
            "fidelity": self.fidelity,
            "reference_fidelity": self.reference_fidelity,
            "step_fidelities": list(self.step_fidelities),
            "mode": self.mode,
            "leaked": self.leaked,
        }


class _Propagators:
    """Cached full-space unitaries for the intervals of one schedule."""

    def __init__(self, params: HubbardParams):
        self.params = params
        self._fredkin = build_fredkin_hamiltonian(params.replace(gamma01=0.0))
        self._aux = {}
        self._cache = {}

    def fredkin(self, t: float) -> np.ndarray:
        key = ("f", t)
        if key not in self._cache:
            self._cache[key] = self._fredkin.spectrum.unitary(t)
        return self._cache[key]

    def aux(self, t: float, detune: float) -> np.ndarray:
        key = ("a", t, detune)
        if key not in self._cache:
            p = self.params
            h = build_adder_hamiltonian(p.replace(gamma12=0.0, eps=(p.eps[0] + detune, p.eps[1], p.eps[2])))
            self._cache[key] = h.spectrum.unitary(t)
        return self._cache[key]


def _source_bit(source: str, inputs: Bits, registers: dict) -> int:
    if source in ("p", "q", "r"):
        return inputs["pqr".index(source)]
    if source == "parity_register":
        return registers["parity"]
    return int(source[-1])


def _interval_unitary(step, props: _Propagators, registers: dict) -> np.ndarray:
    if isinstance(step, FredkinInterval):
        return props.fredkin(step.duration)
    detune = step.conditional_detune if registers.get(step.condition) == 1 else 0.0
    return props.aux(step.duration, detune)


def _ideal_target(step, bits: Bits) -> Bits:
    if isinstance(step, FredkinInterval):
        return fredkin_output(bits)
    return (bits[1], bits[0], bits[2])


def _run_ideal(schedule: PulseSchedule) -> AdderResult:
    basis = full_basis()
    props = _Propagators(schedule.params)
    bits: Bits = (1, 1, 1)
    registers: dict[str, int] = {}
    fids = []
    g = None
    for step in schedule.steps:
        if isinstance(step, Reset):
            g, bits = bits[2], (1, 1, 1)
        elif isinstance(step, Load):
            b = list(bits)
            b[step.dot] = _source_bit(step.source, schedule.inputs, registers)
            bits = tuple(b)
        elif isinstance(step, Measure):
            registers[step.label] = bits[step.dot]
        else:
            u = _interval_unitary(step, props, registers)
            target = _ideal_target(step, bits)
            amp = u[basis.index(logical_to_fock(target)), basis.index(logical_to_fock(bits))]
            fids.append(float(abs(amp) ** 2))
            bits = target
    return AdderResult(
        inputs=schedule.inputs,
        parity=registers.get("parity", -1),
        carry=registers.get("carry", -1),
        g=bits[2] if g is None else g,
        step_fidelities=tuple(fids),
        fidelity=float(np.prod(fids)),
    )


# dot configurations (up, down) and their electron counts
_CONFIGS = ((0, 0), (1, 0), (0, 1), (1, 1))


@lru_cache(maxsize=None)
def _dot_tables(dot: int):
    """Configuration index of ``dot`` for every full-basis state."""
    occ = full_basis().occupations
    return np.array([_CONFIGS.index((int(o[2 * dot]), int(o[2 * dot + 1]))) for o in occ])


@lru_cache(maxsize=None)
def _reload_operator(dot: int, old: int, new: int) -> np.ndarray:
    """Empty ``dot`` from configuration ``old`` and refill it as ``new``."""
    cfg = _dot_tables(dot)
    op = np.diag((cfg == old).astype(float))
    for spin, filled in enumerate(_CONFIGS[old]):
        if filled:
            op = _full_creation(2 * dot + spin).T @ op
    for spin, filled in reversed(list(enumerate(_CONFIGS[new]))):
        if filled:
            op = _full_creation(2 * dot + spin) @ op
    return op


def _sample_categories(probs: np.ndarray, rng_u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs, axis=1)
    cdf /= cdf[:, -1:]
    return np.minimum((rng_u[:, None] > cdf).sum(axis=1), probs.shape[1] - 1)


@dataclass(frozen=True)
class ShotRecord:
    inputs: Bits
    parity: np.ndarray
    carry: np.ndarray
    g: np.ndarray
    leaked: np.ndarray
    seed: int

    @property
    def shots(self) -> int:
        return len(self.parity)

    def majority(self) -> tuple[int, int]:
        return int(2 * self.parity.sum() > self.shots), int(2 * self.carry.sum() > self.shots)

    def outcome_counts(self) -> dict[tuple[int, int], int]:
        keys, counts = np.unique(np.stack([self.parity, self.carry], axis=1), axis=0, return_counts=True)
        return {(int(k[0]), int(k[1])): int(c) for k, c in zip(keys, counts)}


def sample_adder_shots(schedule: PulseSchedule, shots: int, seed: int = 0) -> ShotRecord:
    """Born-sampled trajectories, vectorised over shots.

    Loads measure the target dot's configuration, drop it and refill it with
    the new logical value.  A singly occupied dot reads as a charged dot
    (logical 0) and flags the shot as leaked.  Dot 2 is read at the reset,
    or at the end when the schedule has none.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    basis = full_basis()
    props = _Propagators(schedule.params)
    n_events = sum(1 for s in schedule.steps if s.kind in ("load", "measure", "reset")) + 1
    u = np.empty((shots, n_events))
    for k in range(shots):
        u[k] = run_rng(seed, k).random(n_events)
    vacuum = basis.index(logical_to_fock((1, 1, 1)))
    psi = np.zeros((shots, basis.dim), dtype=complex)
    psi[:, vacuum] = 1.0
    registers: dict[str, np.ndarray] = {}
    leaked = np.zeros(shots, dtype=bool)
    g = None
    event = 0

    def read(dot):
        nonlocal psi, event
        charge = basis.charges[:, dot].astype(int)
        probs = np.stack([(np.abs(psi[:, charge == n]) ** 2).sum(axis=1) for n in range(3)], axis=1)
        n = _sample_categories(probs, u[:, event])
        event += 1
        psi = psi * (charge[None, :] == n[:, None])
        psi /= np.linalg.norm(psi, axis=1, keepdims=True)
        return np.where(n == 0, 1, 0), n == 1

    for step in schedule.steps:
        if isinstance(step, Reset):
            g, leak = read(2)
            leaked |= leak
            psi = np.zeros_like(psi)
            psi[:, vacuum] = 1.0
        elif isinstance(step, Load):
            cfg = _dot_tables(step.dot)
            probs = np.stack([(np.abs(psi[:, cfg == c]) ** 2).sum(axis=1) for c in range(4)], axis=1)
            old = _sample_categories(probs, u[:, event])
            event += 1
            if step.source == "parity_register":
                vals = registers["parity"]
            else:
                vals = np.full(shots, _source_bit(step.source, schedule.inputs, {}))
            new = np.where(vals == 0, 3, 0)
            out = np.empty_like(psi)
            for o in np.unique(old):
                for nw in np.unique(new):
                    sel = (old == o) & (new == nw)
                    if sel.any():
                        out[sel] = psi[sel] @ _reload_operator(step.dot, int(o), int(nw)).T
            psi = out / np.linalg.norm(out, axis=1, keepdims=True)
        elif isinstance(step, Measure):
            bit, leak = read(step.dot)
            registers[step.label] = bit
            leaked |= leak
        elif isinstance(step, FredkinInterval):
            psi = psi @ props.fredkin(step.duration).T
        else:
            cond = registers[step.condition]
            out = np.empty_like(psi)
            for c in (0, 1):
                sel = cond == c
                if sel.any():
                    out[sel] = psi[sel] @ props.aux(step.duration, step.conditional_detune if c else 0.0).T
            psi = out
    if g is None:
        g, leak = read(2)
        leaked |= leak
    missing = np.full(shots, -1)
    return ShotRecord(schedule.inputs, registers.get("parity", missing), registers.get("carry", missing),
                      g, leaked, seed)


def run_adder(schedule: PulseSchedule, mode: str = "ideal_branch", seed: int = 0) -> AdderResult:
    """Execute a schedule.

    In ``sampled`` mode the result is a single shot; ``step_fidelities``
    then holds the ideal-branch values for reference.
    """
    ideal = _run_ideal(schedule)
    if mode == "ideal_branch":
        return ideal
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    rec = sample_adder_shots(schedule, 1, seed)
    return AdderResult(
        inputs=schedule.inputs,
        parity=int(rec.parity[0]),
        carry=int(rec.carry[0]),
        g=int(rec.g[0]),
        step_fidelities=ideal.step_fidelities,
        fidelity=ideal.fidelity,
        mode="sampled",
        leaked=bool(rec.leaked[0]),
    )


def adder_truth_table(params: Optional[HubbardParams] = None) -> list[AdderResult]:
    params = adder_params(params)
    return [run_adder(default_schedule(*bits, params)) for bits in LOGICAL_INPUTS]


ADDER_CSV_COLUMNS = ("p", "q", "r", "parity", "carry", "fidelity", "step_fidelities")


def write_adder_csv(results: Sequence[AdderResult], path, header: Optional[dict] = None) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        for k, v in (header or {}).items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ADDER_CSV_COLUMNS)
        for res in results:
            w.writerow([*res.inputs, res.parity, res.carry, f"{res.fidelity:.12e}",
                        ";".join(f"{f:.12e}" for f in res.step_fidelities)])
    return path
