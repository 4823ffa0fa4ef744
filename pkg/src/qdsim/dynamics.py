"""Time evolution: exact spectral propagation and stochastic on-site noise.

Exact evolution diagonalises ``H`` block by block over the (N, Sz) sectors
of the basis, so amplitudes outside the initial sector stay exactly zero.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .fock import FockBasis, FockState, restrict, sector_blocks
from .hamiltonian import HamiltonianMatrix
from .units import natural_time_to_ps


class BasisMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    basis: FockBasis

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.basis.dim,):
            raise BasisMismatchError(f"{amps.shape[0]} amplitudes for a basis of dimension {self.basis.dim}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_fock(cls, basis: FockBasis, state: FockState) -> "StateVector":
        return cls(basis.basis_vector(state), basis)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def population(self, state: FockState) -> float:
        return float(self.populations[self.basis.index(state)])

    def amplitude(self, state: FockState) -> complex:
        return complex(self.amplitudes[self.basis.index(state)])

    def normalized(self) -> "StateVector":
        return StateVector(self.amplitudes / self.norm, self.basis)


class Spectrum:
    """Block-wise eigendecomposition of a Hamiltonian.

    Blocks follow the (N, Sz) sectors when ``H`` respects them; otherwise a
    single dense block is used.
    """

    def __init__(self, matrix: np.ndarray, basis: FockBasis):
        self.basis = basis
        self.dim = basis.dim
        blocks = sector_blocks(basis)
        mask = np.zeros((self.dim, self.dim), dtype=bool)
        for idx in blocks:
            mask[np.ix_(idx, idx)] = True
        if np.any(matrix[~mask] != 0):
            blocks = [np.arange(self.dim)]
        self.blocks = []
        for idx in blocks:
            w, v = np.linalg.eigh(matrix[np.ix_(idx, idx)])
            self.blocks.append((idx, w, v))

    @classmethod
    def from_hamiltonian(cls, h: HamiltonianMatrix) -> "Spectrum":
        return cls(h.matrix, h.basis)

    def propagate(self, psi: np.ndarray, t) -> np.ndarray:
        """``exp(-iHt) psi`` for a scalar ``t``, or a (len(t), dim) array for a 1-D ``t``."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros((len(t_arr), self.dim), dtype=complex)
        for idx, w, v in self.blocks:
            sub = psi[idx]
            if not np.any(sub):
                continue
            coeff = v.conj().T @ sub
            phases = np.exp(-1j * np.outer(t_arr, w))
            out[:, idx] = (phases * coeff) @ v.T
        return out[0] if np.ndim(t) == 0 else out

    def unitary(self, t: float) -> np.ndarray:
        u = np.zeros((self.dim, self.dim), dtype=complex)
        for idx, w, v in self.blocks:
            u[np.ix_(idx, idx)] = (v * np.exp(-1j * w * t)) @ v.conj().T
        return u


def _check_basis(h: HamiltonianMatrix, psi: StateVector) -> None:
    if psi.basis is not h.basis and psi.basis.states != h.basis.states:
        raise BasisMismatchError("state and Hamiltonian are expressed in different bases")


def evolve(h: HamiltonianMatrix, psi0: StateVector, t: float) -> StateVector:
    """``exp(-iHt)|psi0>`` with hbar = 1 and ``t`` in hbar/Gamma."""
    _check_basis(h, psi0)
    if t < 0:
        raise ValueError("t must be >= 0")
    return StateVector(h.spectrum.propagate(psi0.amplitudes, float(t)), h.basis)


@dataclass(frozen=True)
class EvolutionResult:
    times: np.ndarray
    amplitudes: np.ndarray  # (n_times, dim)
    basis: FockBasis

    @property
    def states(self) -> list[StateVector]:
        return [StateVector(a, self.basis) for a in self.amplitudes]

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def population(self, state: FockState) -> np.ndarray:
        return self.populations[:, self.basis.index(state)]

    def to_csv(self, path, gamma_si: float, header: Optional[dict] = None,
               states: Optional[Sequence[FockState]] = None) -> Path:
        """One row per snapshot: natural time, time in ps, then populations.

        ``header`` entries are written first as ``# key=value`` comment lines.
        """
        states = list(states) if states is not None else list(self.basis.states)
        cols = [self.basis.index(s) for s in states]
        path = Path(path)
        with path.open("w", newline="") as fh:
            for key, value in (header or {}).items():
                fh.write(f"# {key}={value}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["time_hbar_over_gamma", "time_ps"] + [f"pop_{s.label()}" for s in states])
            pops = self.populations
            for k, t in enumerate(self.times):
                writer.writerow([repr(float(t)), repr(float(natural_time_to_ps(t, gamma_si)))]
                                + [f"{pops[k, c]:.12e}" for c in cols])
        return path


def evolve_sampled(h: HamiltonianMatrix, psi0: StateVector, t_final: float, n_snapshots: int) -> EvolutionResult:
    """Uniform snapshots on ``[0, t_final]`` from a single diagonalisation."""
    _check_basis(h, psi0)
    if n_snapshots < 2:
        raise ValueError("n_snapshots must be >= 2")
    if t_final < 0:
        raise ValueError("t_final must be >= 0")
    times = np.linspace(0.0, float(t_final), int(n_snapshots))
    return EvolutionResult(times, h.spectrum.propagate(psi0.amplitudes, times), h.basis)


# --- stochastic on-site noise ------------------------------------------------

NOISE_WHITE = "white"
NOISE_PER_STEP = "per_step"


def run_rng(seed: int, run_index: int) -> np.random.Generator:
    """Generator for one Monte-Carlo run, independent of execution order."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(run_index),)))


def worker_count() -> int:
    env = os.environ.get("QDSIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, min(8, os.cpu_count() or 1))


def step_grid(t_final: float, dt: float) -> tuple[int, float]:
    """Number of steps and the actual step length that lands on ``t_final``."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if t_final <= 0:
        raise ValueError("t_final must be > 0")
    n = max(1, int(np.ceil(t_final / dt - 1e-9)))
    return n, t_final / n


def noise_scale(amplitude: float, dt: float, convention: str = NOISE_WHITE) -> float:
    """Standard deviation of the per-step on-site offset.

    ``white``: ``amplitude`` is the intensity of a white-noise process, so a
    step of length ``dt`` draws ``amplitude * N(0,1) / sqrt(dt)`` (Wiener
    increment ``amplitude * dW`` spread over the step).  ``per_step``: each
    step draws ``amplitude * N(0,1)`` regardless of ``dt``.
    """
    if amplitude < 0:
        raise ValueError("noise amplitude must be >= 0")
    if convention == NOISE_WHITE:
        return amplitude / np.sqrt(dt)
    if convention == NOISE_PER_STEP:
        return amplitude
    raise ValueError(f"unknown noise convention {convention!r}")


def draw_noise(seed: int, run_indices: Sequence[int], n_steps: int, n_sites: int, scale: float) -> np.ndarray:
    out = np.empty((len(run_indices), n_steps, n_sites))
    for k, r in enumerate(run_indices):
        out[k] = run_rng(seed, r).standard_normal((n_steps, n_sites)) * scale
    return out


def _support_basis(h: HamiltonianMatrix, psi: np.ndarray) -> np.ndarray:
    """Indices of every sector that ``psi`` touches."""
    touched = {h.basis.sectors[i] for i in np.flatnonzero(psi)}
    return np.array([i for i, sec in enumerate(h.basis.sectors) if sec in touched])


@dataclass(frozen=True)
class NoisyEnsemble:
    """Final states and watched populations of a batch of noisy runs."""

    amplitudes: np.ndarray  # (runs, dim) over the full basis of H
    watched: np.ndarray  # (runs, steps + 1, n_watch)
    times: np.ndarray
    dt: float
    basis: FockBasis


def noisy_ensemble(h: HamiltonianMatrix, psi0: StateVector, t_final: float, dt: float,
                   noise_amplitude: float, seed: int, run_indices: Sequence[int],
                   watch: Sequence[FockState] = (), convention: str = NOISE_WHITE,
                   workers: Optional[int] = None, backend: Optional[str] = None) -> NoisyEnsemble:
    """Run :func:`evolve_noisy` for several run indices in one batch.

    Run ``k`` uses the generator ``run_rng(seed, k)``; the result does not
    depend on batching or thread count.
    """
    _check_basis(h, psi0)
    n_steps, dt_eff = step_grid(t_final, dt)
    scale = noise_scale(noise_amplitude, dt_eff, convention)
    support = _support_basis(h, psi0.amplitudes)
    sub_h = h.matrix[np.ix_(support, support)]
    charges = h.basis.charges[support]
    psi_sub = psi0.amplitudes[support]
    pos = {int(g): i for i, g in enumerate(support)}
    watch_global = [h.basis.index(s) for s in watch]
    watch_sub = np.array([pos.get(g, -1) for g in watch_global], dtype=np.int64)
    valid = watch_sub >= 0

    impl = kernels.available_backends()[backend] if backend else kernels.noisy_propagate
    run_indices = list(run_indices)
    workers = workers or worker_count()
    chunks = [run_indices[i::workers] for i in range(workers)] if workers > 1 else [run_indices]
    chunks = [c for c in chunks if c]

    def job(chunk):
        noise = draw_noise(seed, chunk, n_steps, charges.shape[1], scale)
        return impl(sub_h, charges, noise, psi_sub, dt_eff, watch_sub[valid])

    if len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(job, chunks))
    else:
        results = [job(c) for c in chunks]

    runs = len(run_indices)
    amps = np.zeros((runs, h.basis.dim), dtype=complex)
    watched = np.zeros((runs, n_steps + 1, len(watch_sub)))
    order = {r: i for i, r in enumerate(run_indices)}
    for chunk, (psi_out, pops) in zip(chunks, results):
        rows = [order[r] for r in chunk]
        norms = np.linalg.norm(psi_out, axis=1, keepdims=True)
        amps[np.ix_(rows, support)] = psi_out / norms
        watched[np.ix_(rows, range(n_steps + 1), np.flatnonzero(valid))] = pops
    times = np.linspace(0.0, n_steps * dt_eff, n_steps + 1)
    return NoisyEnsemble(amps, watched, times, dt_eff, h.basis)


def evolve_noisy(h_base: HamiltonianMatrix, psi0: StateVector, t_final: float, dt: float,
                 noise_amplitude: float, rng_seed: int, run_index: int = 0,
                 convention: str = NOISE_WHITE) -> StateVector:
    """One realisation of on-site charge noise.

    On every step of length ``dt`` (adjusted to land on ``t_final``) each
    dot receives an independent Gaussian offset ``X_l`` added to
    ``X_l * n_l``, and the state is propagated exactly for the step.
    """
    ens = noisy_ensemble(h_base, psi0, t_final, dt, noise_amplitude, rng_seed, [run_index],
                         convention=convention, workers=1)
    return StateVector(ens.amplitudes[0], h_base.basis)


def evolve_piecewise_eigh(h: HamiltonianMatrix, psi0: StateVector, noise: np.ndarray, dt: float) -> StateVector:
    """Reference path for one noise realisation: per-step eigendecomposition.

    ``noise`` has shape ``(steps, 3)``.  Slow; meant for cross-checking the
    kernels.
    """
    psi = psi0.amplitudes.copy()
    charges = h.basis.charges
    for x in noise:
        w, v = np.linalg.eigh(h.matrix + np.diag(charges @ x))
        psi = v @ (np.exp(-1j * w * dt) * (v.conj().T @ psi))
    return StateVector(psi, h.basis)
