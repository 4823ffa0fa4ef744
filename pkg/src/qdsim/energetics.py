"""Energy accounting of the full-adder protocol and classical baselines.

Protocol costs are counted per action: ``U`` per potential electron moved
into or out of a dot, ``U`` per barrier toggle (each interval switches a
coupling on and off), the raised amount for on-site detuning, and
``V I dt`` per charge measurement.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .adder import COHERENT_KINDS, AuxSwapInterval, Load, Measure, PulseSchedule, Reset
from .fock import N_SITES
from .units import ev_to_joule, joule_to_ev

# quoted cost of one charge measurement
REFERENCE_MEASUREMENT_EV = 3.6e3
# electrons a dot can hold under the two-electron encoding
POTENTIAL_ELECTRONS_PER_DOT = 2
BITOPS_PER_FLOP = 1000
FRONTIER_GFLOPS_PER_W = 52.227
FRONTIER_TDS_GFLOPS_PER_W = 62.684


class LedgerError(ValueError):
    pass


def _positive(**values):
    for name, v in values.items():
        if not v > 0:
            raise ValueError(f"{name} must be > 0, got {v!r}")


def measurement_cost(voltage: float, current: float, duration: float) -> float:
    """``V I dt`` in eV."""
    _positive(voltage=voltage, current=current, duration=duration)
    return joule_to_ev(voltage * current * duration)


def flops_to_ev_per_bitop(gflops_per_watt: float, bitops_per_flop: float = BITOPS_PER_FLOP) -> float:
    _positive(gflops_per_watt=gflops_per_watt, bitops_per_flop=bitops_per_flop)
    return 1.0 / (gflops_per_watt * 1e9 * bitops_per_flop) / ev_to_joule(1.0)


def cooling_headroom(adder_energy_ev: float, adder_time_s: float, cooling_power_w: float) -> int:
    """How many adders running back to back a fridge can absorb."""
    _positive(adder_energy_ev=adder_energy_ev, adder_time_s=adder_time_s, cooling_power_w=cooling_power_w)
    return math.floor(cooling_power_w / (ev_to_joule(adder_energy_ev) / adder_time_s))


@dataclass(frozen=True)
class CostModel:
    barrier_toggle_cost: float = 1.0  # U per on or off action
    electron_transfer_cost: float = 1.0  # U per electron
    onsite_raise_cost: float = 1.0  # per Gamma raised
    measurement_voltage: float = 1e-3  # V
    measurement_current: float = 30e-9  # A
    measurement_time: float = 10e-6  # s
    measurement_ev: Optional[float] = None  # overrides V I dt when set

    def __post_init__(self):
        for name in ("barrier_toggle_cost", "electron_transfer_cost", "onsite_raise_cost"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.measurement_ev is not None and self.measurement_ev < 0:
            raise ValueError("measurement_ev must be >= 0")
        _positive(measurement_voltage=self.measurement_voltage, measurement_current=self.measurement_current,
                  measurement_time=self.measurement_time)

    @property
    def delta_e_m(self) -> float:
        if self.measurement_ev is not None:
            return self.measurement_ev
        return measurement_cost(self.measurement_voltage, self.measurement_current, self.measurement_time)


@dataclass(frozen=True)
class LedgerRow:
    step: str
    charging: float  # U
    eps_control: float  # Gamma
    gamma_control: float  # U
    measurements: int
    measurement_ev: float

    def __add__(self, other: "LedgerRow") -> "LedgerRow":
        return LedgerRow("total", self.charging + other.charging, self.eps_control + other.eps_control,
                         self.gamma_control + other.gamma_control, self.measurements + other.measurements,
                         self.measurement_ev + other.measurement_ev)


_ZERO = LedgerRow("total", 0.0, 0.0, 0.0, 0, 0.0)


@dataclass(frozen=True)
class EnergyLedger:
    rows: tuple[LedgerRow, ...]
    charging_ueV: float  # U in micro-eV
    gamma_ueV: float
    delta_e_m: float  # eV per measurement

    @property
    def totals(self) -> LedgerRow:
        total = _ZERO
        for r in self.rows:
            total = total + r
        return total

    def row_mev(self, row: LedgerRow) -> float:
        return ((row.charging + row.gamma_control) * self.charging_ueV + row.eps_control * self.gamma_ueV) * 1e-3

    @property
    def total_u(self) -> float:
        """Charging plus barrier costs in units of U."""
        t = self.totals
        return t.charging + t.gamma_control

    @property
    def total_mev(self) -> float:
        """Grand total without measurement."""
        return self.row_mev(self.totals)

    @property
    def total_ev(self) -> float:
        return self.total_mev * 1e-3

    @property
    def total_with_measurement_ev(self) -> float:
        return self.total_ev + self.totals.measurement_ev

    def column_mev(self) -> dict[str, float]:
        t = self.totals
        return {
            "charging": t.charging * self.charging_ueV * 1e-3,
            "eps_control": t.eps_control * self.gamma_ueV * 1e-3,
            "gamma_control": t.gamma_control * self.charging_ueV * 1e-3,
        }

    def summary(self) -> dict:
        t = self.totals
        return {
            "charging_u": t.charging,
            "eps_control_gamma": t.eps_control,
            "gamma_control_u": t.gamma_control,
            "measurements": t.measurements,
            "measurement_ev": t.measurement_ev,
            "delta_e_m_ev": self.delta_e_m,
            "reference_delta_e_m_ev": REFERENCE_MEASUREMENT_EV,
            "total_u": self.total_u,
            "total_mev": self.total_mev,
            "total_with_measurement_ev": self.total_with_measurement_ev,
        }

    def to_csv(self, path, header: Optional[dict] = None) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            for k, v in (header or {}).items():
                fh.write(f"# {k}={v}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "charging_u", "eps_control_gamma", "gamma_control_u",
                        "measurements", "measurement_ev", "energy_mev"])
            for r in (*self.rows, self.totals):
                w.writerow([r.step, r.charging, r.eps_control, r.gamma_control, r.measurements,
                            repr(r.measurement_ev), repr(self.row_mev(r))])
        return path

    def to_text(self) -> str:
        """Aligned table: one row per step transition, then totals in U/Gamma and SI."""

        def fmt(x, unit):
            if x == 0:
                return "-"
            return unit if x == 1 and unit == "dE_M" else f"{x:g}{unit}"

        t = self.totals
        head = ("Step", "Charging", "C(eps)", "C(Gamma)", "Measure")
        body = [(r.step, fmt(r.charging, "U"), fmt(r.eps_control, "Gamma"), fmt(r.gamma_control, "U"),
                 fmt(r.measurements, "dE_M")) for r in self.rows]
        cols = self.column_mev()
        body.append(("Total", fmt(t.charging, "U"), fmt(t.eps_control, "Gamma"), fmt(t.gamma_control, "U"),
                     fmt(t.measurements, "dE_M")))
        body.append(("", f"{cols['charging']:.3g} meV", f"{cols['eps_control']:.3g} meV",
                     f"{cols['gamma_control']:.3g} meV", f"{t.measurement_ev / 1e3:.3g} keV"))
        widths = [max(len(row[i]) for row in (head, *body)) for i in range(len(head))]
        line = lambda row: "  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()
        out = [line(head), "-" * len(line(head))] + [line(r) for r in body]
        out.append(f"Grand total without measurement: {self.total_mev:.4f} meV")
        out.append(f"Grand total with measurement: {self.total_with_measurement_ev:.4g} eV")
        return "\n".join(out) + "\n"


def _dot_values(schedule: PulseSchedule) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Logical dot values before and after each step along the ideal branch."""
    from .adder import _run_ideal

    parity = _run_ideal(schedule).parity
    p, q, r = schedule.inputs
    src = {"p": p, "q": q, "r": r, "const0": 0, "const1": 1, "parity_register": parity}
    bits = [1] * N_SITES
    out = []
    for step in schedule.steps:
        before = tuple(bits)
        if isinstance(step, Load):
            bits[step.dot] = src[step.source]
        elif isinstance(step, Reset):
            bits = [1] * N_SITES
        elif step.kind == "fredkin_interval" and bits[0] == 1:
            bits[1], bits[2] = bits[2], bits[1]
        elif step.kind == "aux_swap_interval":
            bits[0], bits[1] = bits[1], bits[0]
        out.append((before, tuple(bits)))
    return out


def energy_ledger(schedule: PulseSchedule, model: CostModel = CostModel(), audit: bool = False) -> EnergyLedger:
    """Cost rows per protocol phase.

    The default counting charges every load and every dot emptied at a reset
    for its full two-electron capacity.  ``audit=True`` instead charges the
    electrons that actually move along the ideal branch of this input.
    """
    phases: dict[int, list] = {}
    for step in schedule.steps:
        if step.kind not in ("load", "measure", "reset", *COHERENT_KINDS):
            raise LedgerError(f"unknown step kind {step.kind!r}")
        phases.setdefault(step.phase, []).append(step)
    values = dict(zip(map(id, schedule.steps), _dot_values(schedule))) if audit and schedule.steps else {}
    per_electron = model.electron_transfer_cost
    dem = model.delta_e_m
    order = sorted(phases)
    rows = []
    for n, ph in enumerate(order):
        charging = eps = gamma = 0.0
        meas = 0
        for step in phases[ph]:
            if isinstance(step, Load):
                if audit:
                    before, after = values[id(step)]
                    moved = POTENTIAL_ELECTRONS_PER_DOT * ((before[step.dot] == 0) + (after[step.dot] == 0))
                else:
                    moved = POTENTIAL_ELECTRONS_PER_DOT
                charging += per_electron * moved
            elif isinstance(step, Reset):
                if audit:
                    moved = POTENTIAL_ELECTRONS_PER_DOT * sum(b == 0 for b in values[id(step)][0])
                else:
                    moved = POTENTIAL_ELECTRONS_PER_DOT * N_SITES
                charging += per_electron * moved
            elif isinstance(step, Measure):
                meas += 1
            else:
                gamma += 2 * model.barrier_toggle_cost
                if isinstance(step, AuxSwapInterval):
                    eps += model.onsite_raise_cost * step.conditional_detune
        nxt = order[n + 1] if n + 1 < len(order) else order[0]
        rows.append(LedgerRow(f"{ph}->{nxt}", charging, eps, gamma, meas, meas * dem))
    p = schedule.params
    return EnergyLedger(tuple(rows), p.charging * p.gamma_si, p.gamma_si, dem)


def audit_mismatch(schedule: PulseSchedule, model: CostModel = CostModel()) -> list[tuple[str, float, float]]:
    """Rows whose actual electron flow differs from the reference charging count."""
    ref = energy_ledger(schedule, model)
    act = energy_ledger(schedule, model, audit=True)
    return [(a.step, b.charging, a.charging) for a, b in zip(act.rows, ref.rows) if a.charging != b.charging]


# --- classical comparison -------------------------------------------------------


def default_baselines() -> dict[str, float]:
    """Reference costs per bit operation in eV."""
    return {
        "modern_supercomputers": flops_to_ev_per_bitop(FRONTIER_GFLOPS_PER_W),
        "transistor_full_adders": 1e3,
        "qd_cellular_automata": 1.0,
    }


@dataclass(frozen=True)
class ComparisonRow:
    technology: str
    cost_ev_per_bitop: float

    @property
    def order_of_magnitude(self) -> int:
        return math.floor(math.log10(self.cost_ev_per_bitop))


def comparison_table(ledger: EnergyLedger, baselines: Optional[dict[str, float]] = None,
                     bitops_per_adder: float = 1.0) -> list[ComparisonRow]:
    """Classical baselines followed by this adder with and without measurement."""
    baselines = default_baselines() if baselines is None else baselines
    rows = [ComparisonRow(k, v) for k, v in baselines.items()]
    rows.append(ComparisonRow("qd_full_adder_coherent", ledger.total_ev / bitops_per_adder))
    rows.append(ComparisonRow("qd_full_adder_measurement", ledger.total_with_measurement_ev / bitops_per_adder))
    return rows


def write_comparison_csv(rows: Sequence[ComparisonRow], path, header: Optional[dict] = None) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        for k, v in (header or {}).items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["technology", "cost_ev_per_bitop", "order_of_magnitude"])
        for r in rows:
            w.writerow([r.technology, repr(r.cost_ev_per_bitop), r.order_of_magnitude])
    return path
