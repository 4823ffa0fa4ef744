"""Three-site Hubbard Hamiltonians for the Fredkin gate and the adder.

All energies are in units of the 1-2 tunnel coupling ``Gamma``; ``gamma_si``
(micro-eV) is only used when converting to SI.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Literal, Union

import numpy as np

from .fock import (
    N_SITES,
    FockBasis,
    Spin,
    SpinSite,
    full_basis,
    hopping_operator,
    number_operator,
    total_number_operator,
    total_sz_operator,
)

DEFAULT_CHARGING = 21.83
DEFAULT_CAPACITIVE = 10.0
DEFAULT_GAMMA_SI_UEV = 44.0


@dataclass(frozen=True)
class HubbardParams:
    """Parameter set of the Hamiltonian, in units of ``Gamma``.

    ``gamma12`` couples dots 1 and 2, ``gamma01`` (the adder's auxiliary
    coupling) couples dots 0 and 1.  ``charging`` is the on-site ``U`` and
    ``capacitive`` the nearest-neighbour ``V``.
    """

    eps: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gamma12: float = 1.0
    gamma01: float = 0.0
    charging: float = DEFAULT_CHARGING
    capacitive: float = DEFAULT_CAPACITIVE
    gamma_si: float = DEFAULT_GAMMA_SI_UEV

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps)
        if len(eps) != N_SITES:
            raise ValueError(f"eps needs {N_SITES} entries, got {self.eps}")
        object.__setattr__(self, "eps", eps)
        for name in ("gamma12", "gamma01", "charging", "capacitive", "gamma_si"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.charging < 0:
            raise ValueError("charging energy U must be >= 0")
        if self.capacitive < 0:
            raise ValueError("capacitive coupling V must be >= 0")
        if self.gamma_si <= 0:
            raise ValueError("gamma_si must be > 0")

    @property
    def U(self) -> float:
        return self.charging

    @property
    def V(self) -> float:
        return self.capacitive

    def replace(self, **changes) -> "HubbardParams":
        return dataclasses.replace(self, **changes)

    def with_eps(self, eps0=None, eps1=None, eps2=None) -> "HubbardParams":
        new = list(self.eps)
        for i, v in enumerate((eps0, eps1, eps2)):
            if v is not None:
                new[i] = v
        return self.replace(eps=tuple(new))

    def scaled(self, alpha: float) -> "HubbardParams":
        """All energy coefficients multiplied by ``alpha`` (``gamma_si`` untouched)."""
        return self.replace(
            eps=tuple(alpha * e for e in self.eps),
            gamma12=alpha * self.gamma12,
            gamma01=alpha * self.gamma01,
            charging=alpha * self.charging,
            capacitive=alpha * self.capacitive,
        )

    def to_config(self) -> dict[str, float]:
        return {
            "eps0": self.eps[0],
            "eps1": self.eps[1],
            "eps2": self.eps[2],
            "gamma12": self.gamma12,
            "gamma01": self.gamma01,
            "U": self.charging,
            "V": self.capacitive,
            "gamma_si_ueV": self.gamma_si,
        }


CONFIG_KEYS = ("eps0", "eps1", "eps2", "gamma12", "gamma01", "U", "V", "gamma_si_ueV")


class ConfigError(ValueError):
    pass


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def params_from_mapping(values: dict[str, str], base: HubbardParams | None = None) -> HubbardParams:
    base = base or HubbardParams()
    cfg = base.to_config()
    for key, raw in values.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown parameter {key!r}; expected one of {', '.join(CONFIG_KEYS)}")
        try:
            cfg[key] = float(raw)
        except ValueError:
            raise ConfigError(f"parameter {key!r}: not a number: {raw!r}") from None
    try:
        return HubbardParams(
            eps=(cfg["eps0"], cfg["eps1"], cfg["eps2"]),
            gamma12=cfg["gamma12"],
            gamma01=cfg["gamma01"],
            charging=cfg["U"],
            capacitive=cfg["V"],
            gamma_si=cfg["gamma_si_ueV"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_params(path: Union[str, Path]) -> HubbardParams:
    """Read a parameter file; keys not present keep their defaults."""
    return params_from_mapping(parse_config_text(Path(path).read_text()))


def format_params(params: HubbardParams) -> str:
    return "".join(f"{k} = {v!r}\n" for k, v in params.to_config().items())


@dataclass(frozen=True)
class HamiltonianMatrix:
    matrix: np.ndarray
    basis: FockBasis
    params: HubbardParams
    variant: Literal["fredkin", "adder"] = "fredkin"

    @property
    def dim(self) -> int:
        return self.basis.dim

    @cached_property
    def spectrum(self):
        from .dynamics import Spectrum

        return Spectrum.from_hamiltonian(self)


def _restrict(mat: np.ndarray, basis: FockBasis) -> np.ndarray:
    full = full_basis()
    if basis is full or basis.states == full.states:
        return mat
    idx = [full.index(s) for s in basis.states]
    return mat[np.ix_(idx, idx)]


def _fredkin_terms(params: HubbardParams, basis: FockBasis) -> np.ndarray:
    occ = basis.occupations.astype(float)
    charge = occ[:, 0::2] + occ[:, 1::2]
    # number-operator terms are diagonal in the Fock basis
    diag = charge @ np.asarray(params.eps)
    diag += params.capacitive * (charge[:, 0] * charge[:, 1] + charge[:, 1] * charge[:, 2])
    diag += params.charging * (occ[:, 0::2] * occ[:, 1::2]).sum(axis=1)
    h = np.diag(diag)
    if params.gamma12:
        for spin in Spin:
            h = h + params.gamma12 * hopping_operator(basis, 1, 2, spin)
    return h


def build_fredkin_hamiltonian(params: HubbardParams, basis: FockBasis | None = None) -> HamiltonianMatrix:
    """Hamiltonian with on-site, 1-2 hopping, capacitive and charging terms."""
    basis = basis or full_basis()
    return HamiltonianMatrix(_fredkin_terms(params, basis), basis, params, "fredkin")


def build_adder_hamiltonian(params: HubbardParams, basis: FockBasis | None = None) -> HamiltonianMatrix:
    """The Fredkin Hamiltonian plus the 0-1 hopping ``gamma01``."""
    basis = basis or full_basis()
    h = _fredkin_terms(params, basis)
    if params.gamma01:
        for spin in Spin:
            h = h + params.gamma01 * hopping_operator(basis, 0, 1, spin)
    return HamiltonianMatrix(h, basis, params, "adder")


def onsite_charge_operators(basis: FockBasis) -> list[np.ndarray]:
    """``n_l = n_lu + n_ld`` for each dot."""
    return [number_operator(basis, SpinSite(l, Spin.UP)) + number_operator(basis, SpinSite(l, Spin.DOWN))
            for l in range(N_SITES)]


@dataclass(frozen=True)
class ChargeReport:
    number_commutator: float
    sz_commutator: float

    @property
    def conserved(self) -> bool:
        return max(self.number_commutator, self.sz_commutator) <= 1e-13


def conserved_charges(h: HamiltonianMatrix) -> ChargeReport:
    """Max-norm of ``[H, N]`` and ``[H, Sz]``."""
    n_op = total_number_operator(h.basis)
    sz_op = total_sz_operator(h.basis)
    m = h.matrix
    return ChargeReport(
        float(np.max(np.abs(m @ n_op - n_op @ m), initial=0.0)),
        float(np.max(np.abs(m @ sz_op - sz_op @ m), initial=0.0)),
    )


def hermiticity_residual(h: HamiltonianMatrix) -> float:
    return float(np.max(np.abs(h.matrix - h.matrix.conj().T), initial=0.0))
