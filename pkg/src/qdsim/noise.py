"""Charge-noise sensitivity of the conditional swap.

The success metric is the population of the swapped output for the
control-1 input ``(1, 0, 1)`` at the noise-free gate time.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import (
    NOISE_WHITE,
    StateVector,
    noisy_ensemble,
    run_rng,
    worker_count,
)
from .fock import build_basis, logical_to_fock, TWO_ELECTRON
from .fredkin import SWAP_INPUT, fredkin_output, gate_time
from .hamiltonian import HubbardParams, build_fredkin_hamiltonian

ALPHA = 0.12
BETA = 0.25
# degradation quoted alongside the closed-form average at eps_bar = 0.01 Gamma
REPORTED_QUASISTATIC_CHANGE = 4.6e-2

_SWAP_SECTOR = (2, 0)


def lambda_coefficient(params: HubbardParams, alpha: float = ALPHA, beta: float = BETA) -> float:
    """Detuning sensitivity ``alpha ((U - V) / Gamma)^2 + beta``."""
    return alpha * ((params.charging - params.capacitive) / params.gamma12) ** 2 + beta


def _swap_setup(params: HubbardParams):
    basis = build_basis(_SWAP_SECTOR)
    h = build_fredkin_hamiltonian(params, basis)
    i_in = basis.index(logical_to_fock(SWAP_INPUT, TWO_ELECTRON))
    i_out = basis.index(logical_to_fock(fredkin_output(SWAP_INPUT), TWO_ELECTRON))
    return h, i_in, i_out


def swap_success_probability(params: HubbardParams, offsets=None, t: Optional[float] = None):
    """Swap success at ``t`` for each row of on-site offsets ``(eps0, eps1, eps2)``.

    ``offsets`` has shape ``(n, 3)`` (or ``(3,)``) and is added to
    ``params.eps``; ``t`` defaults to the noise-free gate time.
    """
    h, i_in, i_out = _swap_setup(params)
    t = gate_time(params).natural if t is None else t
    offs = np.zeros((1, 3)) if offsets is None else np.atleast_2d(np.asarray(offsets, dtype=float))
    shifts = offs @ h.basis.charges.T  # (n, d)
    mats = h.matrix[None, :, :] + shifts[:, :, None] * np.eye(h.dim)[None]
    w, v = np.linalg.eigh(mats)
    amp = np.einsum("nj,nj->n", v[:, i_out, :], np.exp(-1j * w * t) * v[:, i_in, :].conj())
    p = np.abs(amp) ** 2
    if offsets is None or np.ndim(offsets) == 1:
        return float(p[0])
    return p


def noise_free_success(params: HubbardParams) -> float:
    return float(swap_success_probability(params))


def noise_free_amplitude(params: HubbardParams) -> float:
    """``f0 = sqrt(p0)``, so the closed form reproduces ``p0`` at zero detuning."""
    return float(np.sqrt(noise_free_success(params)))


def quasistatic_success_analytic(params: HubbardParams, eps1_offset: float, eps2_offset: float,
                                 f0: Optional[float] = None, alpha: float = ALPHA, beta: float = BETA) -> float:
    """``[f0 - Lambda ((eps1 - eps2)/Gamma)^2]^2``."""
    f0 = noise_free_amplitude(params) if f0 is None else f0
    lam = lambda_coefficient(params, alpha, beta)
    delta = (eps1_offset - eps2_offset) / params.gamma12
    return (f0 - lam * delta**2) ** 2


def quasistatic_average_analytic(params: HubbardParams, eps_bar: float, f0: Optional[float] = None,
                                 alpha: float = ALPHA, beta: float = BETA) -> float:
    """Gaussian average of the closed form over independent target offsets of std ``eps_bar``."""
    if eps_bar < 0:
        raise ValueError("eps_bar must be >= 0")
    f0 = noise_free_amplitude(params) if f0 is None else f0
    lam = lambda_coefficient(params, alpha, beta)
    x = (eps_bar / params.gamma12) ** 2
    return (f0 - 2 * lam * x) ** 2 + 8 * lam**2 * x**2


@dataclass(frozen=True)
class QuasistaticModel:
    epsilon_bar: float
    n_samples: int = 10_000
    seed: int = 0
    alpha: float = ALPHA
    beta: float = BETA
    include_control: bool = False

    def __post_init__(self):
        if self.epsilon_bar < 0:
            raise ValueError("epsilon_bar must be >= 0")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")


@dataclass(frozen=True)
class HighFrequencyModel:
    amplitude: float
    dt: Optional[float] = None  # default: gate time / 1000
    n_runs: int = 1000
    seed: int = 0
    convention: str = NOISE_WHITE

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be > 0")


@dataclass
class NoiseReport:
    kind: str
    p0: float
    mean: float
    std: float
    stderr: float
    n: int
    seed: int
    samples: np.ndarray = field(repr=False)
    offsets: Optional[np.ndarray] = field(default=None, repr=False)
    times: Optional[np.ndarray] = field(default=None, repr=False)
    mean_trajectory: Optional[np.ndarray] = field(default=None, repr=False)
    std_trajectory: Optional[np.ndarray] = field(default=None, repr=False)
    clean_trajectory: Optional[np.ndarray] = field(default=None, repr=False)
    settings: dict = field(default_factory=dict)

    @property
    def change(self) -> float:
        """Noise-free success minus the ensemble mean (positive = degradation)."""
        return self.p0 - self.mean

    def summary(self) -> dict:
        out = {
            "kind": self.kind,
            "p0": self.p0,
            "mean": self.mean,
            "std": self.std,
            "stderr": self.stderr,
            "change": self.change,
            "n": self.n,
            "seed": self.seed,
        }
        out.update(self.settings)
        return out

    def to_json(self, path, extra: Optional[dict] = None) -> Path:
        doc = self.summary()
        if extra:
            doc.update(extra)
        path = Path(path)
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return path

    def to_csv(self, path, header: Optional[dict] = None) -> Path:
        """Trajectory rows (high-frequency) or per-sample rows (quasistatic)."""
        path = Path(path)
        meta = {"seed": self.seed, "n": self.n}
        meta.update(self.settings)
        meta.update(header or {})
        with path.open("w", newline="") as fh:
            for k, v in meta.items():
                fh.write(f"# {k}={v}\n")
            w = csv.writer(fh, lineterminator="\n")
            if self.times is not None:
                w.writerow(["time_hbar_over_gamma", "mean_success", "std_success", "noise_free_success", "change"])
                for row in zip(self.times, self.mean_trajectory, self.std_trajectory, self.clean_trajectory):
                    t, m, s, c = (float(x) for x in row)
                    w.writerow([repr(t), f"{m:.12e}", f"{s:.12e}", f"{c:.12e}", f"{c - m:.12e}"])
            else:
                w.writerow(["sample", "eps0_offset", "eps1_offset", "eps2_offset", "success"])
                for i, (off, p) in enumerate(zip(self.offsets, self.samples)):
                    w.writerow([i] + [repr(float(x)) for x in off] + [f"{p:.12e}"])
        return path


def _draw_offsets(model: QuasistaticModel) -> np.ndarray:
    offs = np.zeros((model.n_samples, 3))
    for i in range(model.n_samples):
        x = run_rng(model.seed, i).standard_normal(3) * model.epsilon_bar
        offs[i, 1:] = x[1:]
        if model.include_control:
            offs[i, 0] = x[0]
    return offs


def quasistatic_average_mc(params: HubbardParams, model: QuasistaticModel,
                           workers: Optional[int] = None) -> NoiseReport:
    """Monte-Carlo average of the numeric swap success over static Gaussian offsets."""
    offsets = _draw_offsets(model)
    p0 = noise_free_success(params)
    chunk = 1000
    parts = [offsets[i:i + chunk] for i in range(0, len(offsets), chunk)]
    workers = workers or worker_count()
    if workers > 1 and len(parts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            res = list(pool.map(lambda o: swap_success_probability(params, o), parts))
    else:
        res = [swap_success_probability(params, o) for o in parts]
    p = np.concatenate(res)
    # zero offsets are the noise-free gate by definition
    p[~offsets.any(axis=1)] = p0
    if np.all(p == p[0]):
        mean, std = float(p[0]), 0.0
    else:
        mean = float(p.mean())
        std = float(p.std(ddof=1))
    return NoiseReport(
        kind="quasistatic",
        p0=p0,
        mean=mean,
        std=std,
        stderr=std / np.sqrt(len(p)),
        n=len(p),
        seed=model.seed,
        samples=p,
        offsets=offsets,
        settings={
            "epsilon_bar": model.epsilon_bar,
            "alpha": model.alpha,
            "beta": model.beta,
            "include_control": model.include_control,
        },
    )


@dataclass(frozen=True)
class LambdaFit:
    f0: float
    lam: float
    residual_rms: float


def fit_lambda(report: NoiseReport, gamma: float = 1.0) -> LambdaFit:
    """Least-squares fit of ``sqrt(p) = f0 - Lambda ((eps1 - eps2)/Gamma)^2``."""
    d2 = ((report.offsets[:, 1] - report.offsets[:, 2]) / gamma) ** 2
    design = np.column_stack([np.ones_like(d2), -d2])
    y = np.sqrt(report.samples)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return LambdaFit(float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid**2))))


def high_frequency_ensemble(params: HubbardParams, model: HighFrequencyModel,
                            workers: Optional[int] = None, backend: Optional[str] = None) -> NoiseReport:
    """Swap success versus time, averaged over independent noise runs."""
    t_star = gate_time(params).natural
    dt = model.dt if model.dt is not None else t_star / 1000
    basis = build_basis(_SWAP_SECTOR)
    h = build_fredkin_hamiltonian(params, basis)
    psi0 = StateVector.from_fock(basis, logical_to_fock(SWAP_INPUT))
    target = logical_to_fock(fredkin_output(SWAP_INPUT))
    ens = noisy_ensemble(h, psi0, t_star, dt, model.amplitude, model.seed, range(model.n_runs),
                         watch=[target], convention=model.convention, workers=workers, backend=backend)
    traj = ens.watched[:, :, 0]
    clean = h.spectrum.propagate(psi0.amplitudes, ens.times)[:, basis.index(target)]
    clean = np.abs(clean) ** 2
    final = np.abs(ens.amplitudes[:, basis.index(target)]) ** 2
    std = float(final.std(ddof=1)) if len(final) > 1 else 0.0
    return NoiseReport(
        kind="highfreq",
        p0=float(clean[-1]),
        mean=float(final.mean()),
        std=std,
        stderr=std / np.sqrt(len(final)),
        n=model.n_runs,
        seed=model.seed,
        samples=final,
        times=ens.times,
        mean_trajectory=traj.mean(axis=0),
        std_trajectory=traj.std(axis=0, ddof=1) if model.n_runs > 1 else np.zeros(len(ens.times)),
        clean_trajectory=clean,
        settings={
            "amplitude": model.amplitude,
            "dt": ens.dt,
            "convention": model.convention,
            "steps": len(ens.times) - 1,
        },
    )
