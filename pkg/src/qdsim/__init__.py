"""Charge-encoded Fredkin gate and full-adder on a three-site Hubbard model."""

from .adder import (
    AdderResult,
    PulseSchedule,
    adder_truth_table,
    aux_swap_calibration,
    default_schedule,
    run_adder,
)
from .dynamics import StateVector, evolve, evolve_noisy
from .energetics import CostModel, EnergyLedger, energy_ledger
from .fock import SINGLE_ELECTRON, TWO_ELECTRON, FockBasis, FockState, build_basis
from .fredkin import gate_fidelity, gate_time, truth_table, u_sweep
from .hamiltonian import HubbardParams, build_adder_hamiltonian, build_fredkin_hamiltonian
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "AdderResult",
    "BACKEND",
    "CostModel",
    "EnergyLedger",
    "FockBasis",
    "FockState",
    "HubbardParams",
    "PulseSchedule",
    "SINGLE_ELECTRON",
    "StateVector",
    "TWO_ELECTRON",
    "adder_truth_table",
    "aux_swap_calibration",
    "build_adder_hamiltonian",
    "build_basis",
    "build_fredkin_hamiltonian",
    "default_schedule",
    "energy_ledger",
    "evolve",
    "evolve_noisy",
    "gate_fidelity",
    "gate_time",
    "run_adder",
    "truth_table",
    "u_sweep",
]
