"""Fock space of three single-level quantum dots.

Modes are ordered ``(0 up, 0 down, 1 up, 1 down, 2 up, 2 down)``.  A Fock
state is the ordered product ``(c0u+)^n0 (c0d+)^n1 ... (c2d+)^n5 |vac>``, so
the fermionic sign of ``c_m`` or ``c_m+`` acting on a state is the parity of
the occupied modes with index below ``m``.

Operators are dense ``float64`` matrices.  Every element is 0 or +-1, so
operator algebra on them is exact.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

N_SITES = 3
N_MODES = 2 * N_SITES


class EmptySectorError(ValueError):
    """Requested (N, Sz) sector contains no Fock states."""


class DimensionError(ValueError):
    """Operator requested between incompatible bases."""


class Spin(enum.IntEnum):
    UP = 0
    DOWN = 1


@dataclass(frozen=True)
class SpinSite:
    site: int
    spin: Spin

    def __post_init__(self):
        if not 0 <= self.site < N_SITES:
            raise ValueError(f"site must be in 0..{N_SITES - 1}, got {self.site}")
        object.__setattr__(self, "spin", Spin(self.spin))

    @property
    def index(self) -> int:
        return 2 * self.site + int(self.spin)


def all_modes() -> list[SpinSite]:
    return [SpinSite(site, spin) for site in range(N_SITES) for spin in Spin]


@dataclass(frozen=True, order=True)
class FockState:
    """Occupation pattern, one entry (0 or 1) per mode in canonical order."""

    occupation: tuple[int, ...]

    def __post_init__(self):
        occ = tuple(int(x) for x in self.occupation)
        if len(occ) != N_MODES or any(x not in (0, 1) for x in occ):
            raise ValueError(f"occupation must be {N_MODES} bits, got {self.occupation}")
        object.__setattr__(self, "occupation", occ)

    @classmethod
    def vacuum(cls) -> "FockState":
        return cls((0,) * N_MODES)

    @property
    def n_electrons(self) -> int:
        return sum(self.occupation)

    @property
    def sz(self) -> int:
        """Total spin-z in units of hbar/2."""
        return sum(self.occupation[0::2]) - sum(self.occupation[1::2])

    @property
    def sector(self) -> tuple[int, int]:
        return self.n_electrons, self.sz

    def charge(self, site: int) -> int:
        return self.occupation[2 * site] + self.occupation[2 * site + 1]

    @property
    def charges(self) -> tuple[int, ...]:
        return tuple(self.charge(s) for s in range(N_SITES))

    def label(self) -> str:
        """Per-dot occupancy string: ``0`` empty, ``u``/``d`` single, ``2`` double."""
        chars = []
        for s in range(N_SITES):
            up, dn = self.occupation[2 * s], self.occupation[2 * s + 1]
            chars.append({(0, 0): "0", (1, 0): "u", (0, 1): "d", (1, 1): "2"}[(up, dn)])
        return "".join(chars)

    def __str__(self) -> str:
        return f"|{self.label()}>"


@dataclass(frozen=True)
class FockBasis:
    states: tuple[FockState, ...]
    sector: Optional[tuple[int, int]] = None
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.states)})

    def __len__(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return len(self.states)

    def index(self, state: FockState) -> int:
        try:
            return self._index[state]
        except KeyError:
            raise KeyError(f"{state} is not in this basis") from None

    def __contains__(self, state: FockState) -> bool:
        return state in self._index

    @cached_property
    def occupations(self) -> np.ndarray:
        """(dim, 6) array of mode occupations."""
        return np.array([s.occupation for s in self.states], dtype=np.int8).reshape(-1, N_MODES)

    @cached_property
    def charges(self) -> np.ndarray:
        """(dim, 3) array of per-dot electron counts."""
        occ = self.occupations.astype(float)
        return occ[:, 0::2] + occ[:, 1::2]

    @cached_property
    def sectors(self) -> list[tuple[int, int]]:
        return [s.sector for s in self.states]

    def basis_vector(self, state: FockState) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(state)] = 1.0
        return v


def _check_sector(n: int, sz: int) -> None:
    n_up2 = n + sz
    if not 0 <= n <= N_MODES or n_up2 % 2:
        raise EmptySectorError(f"no states with N={n}, Sz={sz}")
    n_up, n_dn = n_up2 // 2, (n - sz) // 2
    if not (0 <= n_up <= N_SITES and 0 <= n_dn <= N_SITES):
        raise EmptySectorError(f"no states with N={n}, Sz={sz}")


def build_basis(sector: Optional[tuple[int, int]] = None) -> FockBasis:
    """All Fock states, or those of one ``(N, Sz)`` sector, in canonical order.

    ``Sz`` is in units of hbar/2, i.e. ``n_up - n_down``.
    """
    if sector is not None:
        n, sz = (int(x) for x in sector)
        _check_sector(n, sz)
        sector = (n, sz)
    # itertools.product over (0, 1) yields ascending lexicographic order
    states = [FockState(occ) for occ in itertools.product((0, 1), repeat=N_MODES)]
    if sector is not None:
        states = [s for s in states if s.sector == sector]
    return FockBasis(tuple(states), sector)


def full_basis() -> FockBasis:
    return _FULL


def _apply_creation(state: FockState, m: int) -> tuple[int, Optional[FockState]]:
    occ = state.occupation
    if occ[m]:
        return 0, None
    sign = -1 if sum(occ[:m]) % 2 else 1
    new = list(occ)
    new[m] = 1
    return sign, FockState(tuple(new))


def _as_mode(mode) -> SpinSite:
    if isinstance(mode, SpinSite):
        return mode
    site, spin = mode
    return SpinSite(site, spin)


def _shifted_sector(sector, mode: SpinSite, delta: int):
    n, sz = sector
    dsz = 1 if mode.spin == Spin.UP else -1
    return n + delta, sz + delta * dsz


def creation_operator(basis_in: FockBasis, basis_out: FockBasis, mode) -> np.ndarray:
    """Matrix of ``c+_mode`` mapping ``basis_in`` to ``basis_out``.

    Shape is ``(len(basis_out), len(basis_in))``.
    """
    mode = _as_mode(mode)
    if (basis_in.sector is None) != (basis_out.sector is None):
        raise DimensionError("cannot mix sector-restricted and unrestricted bases")
    if basis_in.sector is not None and basis_out.sector != _shifted_sector(basis_in.sector, mode, +1):
        raise DimensionError(
            f"c+ of spin {mode.spin.name} maps sector {basis_in.sector} to "
            f"{_shifted_sector(basis_in.sector, mode, +1)}, not {basis_out.sector}"
        )
    mat = np.zeros((basis_out.dim, basis_in.dim))
    for j, state in enumerate(basis_in.states):
        sign, new = _apply_creation(state, mode.index)
        if sign and new in basis_out:
            mat[basis_out.index(new), j] = sign
    return mat


def annihilation_operator(basis_in: FockBasis, basis_out: FockBasis, mode) -> np.ndarray:
    """Matrix of ``c_mode`` mapping ``basis_in`` to ``basis_out``."""
    return creation_operator(basis_out, basis_in, mode).T.copy()


def number_operator(basis: FockBasis, mode) -> np.ndarray:
    mode = _as_mode(mode)
    return np.diag(basis.occupations[:, mode.index].astype(float))


def hopping_operator(basis: FockBasis, site_a: int, site_b: int, spin) -> np.ndarray:
    """``c+_{a,spin} c_{b,spin} + h.c.`` within a single basis.

    Built on the full space and restricted, which is exact because hopping
    preserves (N, Sz).
    """
    full = full_basis()
    a, b = SpinSite(site_a, spin), SpinSite(site_b, spin)
    term = _full_creation(a.index) @ _full_creation(b.index).T
    term = term + term.T
    if basis is full:
        return term
    idx = [full.index(s) for s in basis.states]
    return term[np.ix_(idx, idx)]


def total_number_operator(basis: FockBasis) -> np.ndarray:
    return np.diag(basis.occupations.sum(axis=1).astype(float))


def total_sz_operator(basis: FockBasis) -> np.ndarray:
    """Total spin-z in units of hbar/2."""
    occ = basis.occupations.astype(float)
    return np.diag(occ[:, 0::2].sum(axis=1) - occ[:, 1::2].sum(axis=1))


# --- logical encoding ------------------------------------------------------


class EncodingVariant(str, enum.Enum):
    TWO_ELECTRON = "two_electron"
    SINGLE_ELECTRON = "single_electron"


@dataclass(frozen=True)
class Encoding:
    """Logical 1 is always an empty dot; logical 0 is a charged dot."""

    variant: EncodingVariant = EncodingVariant.TWO_ELECTRON
    fixed_spin: Spin = Spin.UP

    def __post_init__(self):
        object.__setattr__(self, "variant", EncodingVariant(self.variant))
        object.__setattr__(self, "fixed_spin", Spin(self.fixed_spin))

    def dot_occupation(self, bit: int) -> tuple[int, int]:
        if bit not in (0, 1):
            raise ValueError(f"logical bit must be 0 or 1, got {bit!r}")
        if bit == 1:
            return (0, 0)
        if self.variant is EncodingVariant.TWO_ELECTRON:
            return (1, 1)
        return (1, 0) if self.fixed_spin == Spin.UP else (0, 1)

    def __str__(self) -> str:
        if self.variant is EncodingVariant.TWO_ELECTRON:
            return "two-electron"
        return f"single-electron({self.fixed_spin.name.lower()})"


TWO_ELECTRON = Encoding()
SINGLE_ELECTRON = Encoding(EncodingVariant.SINGLE_ELECTRON, Spin.UP)

LOGICAL_INPUTS: tuple[tuple[int, int, int], ...] = tuple(itertools.product((0, 1), repeat=3))


def logical_to_fock(bits: Sequence[int], encoding: Encoding = TWO_ELECTRON) -> FockState:
    """Product Fock state for bits ``(control, target1, target2)`` on dots 0, 1, 2."""
    bits = tuple(bits)
    if len(bits) != N_SITES:
        raise ValueError(f"need {N_SITES} bits, got {bits}")
    occ: list[int] = []
    for b in bits:
        occ.extend(encoding.dot_occupation(b))
    return FockState(tuple(occ))


def fock_to_logical(state: FockState, encoding: Encoding = TWO_ELECTRON) -> Optional[tuple[int, int, int]]:
    """Inverse of :func:`logical_to_fock`; ``None`` for a leakage state."""
    lookup = {encoding.dot_occupation(b): b for b in (0, 1)}
    bits = []
    for s in range(N_SITES):
        pair = (state.occupation[2 * s], state.occupation[2 * s + 1])
        if pair not in lookup:
            return None
        bits.append(lookup[pair])
    return tuple(bits)


def codewords(encoding: Encoding = TWO_ELECTRON) -> dict[tuple[int, int, int], FockState]:
    return {bits: logical_to_fock(bits, encoding) for bits in LOGICAL_INPUTS}


def codeword_mask(basis: FockBasis, encoding: Encoding = TWO_ELECTRON) -> np.ndarray:
    return np.array([fock_to_logical(s, encoding) is not None for s in basis.states])


def sector_blocks(basis: FockBasis) -> list[np.ndarray]:
    """Index arrays grouping the basis by (N, Sz) sector, in first-seen order."""
    groups: dict[tuple[int, int], list[int]] = {}
    for i, sec in enumerate(basis.sectors):
        groups.setdefault(sec, []).append(i)
    return [np.array(v) for v in groups.values()]


def restrict(basis: FockBasis, keep: Iterable[int]) -> FockBasis:
    """Sub-basis from a set of indices (kept in canonical order)."""
    idx = sorted(set(int(i) for i in keep))
    states = tuple(basis.states[i] for i in idx)
    sectors = {s.sector for s in states}
    sector = sectors.pop() if len(sectors) == 1 else None
    return FockBasis(states, sector)


_FULL = build_basis()
_FULL_CREATION: dict[int, np.ndarray] = {}


def _full_creation(m: int) -> np.ndarray:
    if m not in _FULL_CREATION:
        mat = np.zeros((_FULL.dim, _FULL.dim))
        for j, state in enumerate(_FULL.states):
            sign, new = _apply_creation(state, m)
            if sign:
                mat[_FULL.index(new), j] = sign
        mat.setflags(write=False)
        _FULL_CREATION[m] = mat
    return _FULL_CREATION[m]
