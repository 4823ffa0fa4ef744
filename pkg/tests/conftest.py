"""Shared fixtures and an independent Hamiltonian oracle.

The oracle builds the three-site Hubbard matrix directly from bit strings
(mode 0 is the most significant bit), without the package's operator code.
"""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from qdsim.fock import full_basis

N_MODES = 6


def _bit(s, m):
    return (s >> (N_MODES - 1 - m)) & 1


def _hop(s, src, dst):
    """``c_dst^dagger c_src |s>`` as (sign, state) or None."""
    if not _bit(s, src) or (_bit(s, dst) and src != dst):
        return None
    sign = (-1) ** sum(_bit(s, k) for k in range(src))
    s1 = s & ~(1 << (N_MODES - 1 - src))
    if _bit(s1, dst):
        return None
    sign *= (-1) ** sum(_bit(s1, k) for k in range(dst))
    return sign, s1 | (1 << (N_MODES - 1 - dst))


def oracle_hamiltonian(eps=(0.0, 0.0, 0.0), g12=1.0, g01=0.0, U=21.83, V=10.0):
    """64 x 64 matrix indexed by the integer value of the occupation bits."""
    h = np.zeros((64, 64))
    for s in range(64):
        n = [_bit(s, 2 * l) + _bit(s, 2 * l + 1) for l in range(3)]
        h[s, s] = sum(e * x for e, x in zip(eps, n)) + V * (n[0] * n[1] + n[1] * n[2])
        h[s, s] += U * sum(_bit(s, 2 * l) * _bit(s, 2 * l + 1) for l in range(3))
        for a, b, g in ((1, 2, g12), (0, 1, g01)):
            if not g:
                continue
            for spin in (0, 1):
                for src, dst in ((2 * a + spin, 2 * b + spin), (2 * b + spin, 2 * a + spin)):
                    r = _hop(s, src, dst)
                    if r:
                        h[r[1], s] += g * r[0]
    return h


def oracle_in_basis(basis, **kw):
    """Oracle matrix re-indexed to ``basis``."""
    idx = [int("".join(map(str, st.occupation)), 2) for st in basis.states]
    return oracle_hamiltonian(**kw)[np.ix_(idx, idx)]


def integrate(h, psi, t):
    """Adaptive 8th-order Runge-Kutta for ``i dpsi/dt = H psi``."""
    sol = solve_ivp(lambda _, y: -1j * (h @ y), (0.0, t), psi.astype(complex),
                    method="DOP853", rtol=1e-13, atol=1e-13)
    return sol.y[:, -1]


@pytest.fixture(scope="session")
def basis():
    return full_basis()
