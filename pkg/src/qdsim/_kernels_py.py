"""Pure-numpy fallback for the propagation kernels.

``noisy_propagate`` evolves a batch of state vectors under a piecewise
constant Hamiltonian ``h + diag(charges @ x_step)``.  Each step applies
``exp(-i H dt)`` as a Taylor series summed until the next term falls below
1e-17, after splitting the step so that ``||H dt||_inf <= 1``.  The compiled
version in ``_kernels.pyx`` implements the identical algorithm one run at a
time; this one vectorises across runs.
"""

import numpy as np

MAX_TERMS = 80
TERM_TOL = 1e-17


def noisy_propagate(h, charges, noise, psi0, dt, watch):
    """Propagate ``runs`` independent noise realisations.

    Parameters
    ----------
    h : (d, d) real symmetric array
        Noise-free Hamiltonian.
    charges : (d, n_sites) float array
        Per-basis-state dot occupations; noise couples through them.
    noise : (runs, steps, n_sites) float array
        On-site energy offset of every dot on every step.
    psi0 : (d,) complex array
    dt : float
        Step length.
    watch : (k,) int array
        Basis indices whose populations are recorded after every step.

    Returns
    -------
    psi : (runs, d) complex array
    pops : (runs, steps + 1, k) float array
    """
    h = np.asarray(h)
    if np.iscomplexobj(h):
        if np.any(h.imag != 0):
            raise ValueError("kernel needs a real symmetric Hamiltonian")
        h = h.real
    h = np.asarray(h, dtype=np.float64)
    charges = np.asarray(charges, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    watch = np.asarray(watch, dtype=np.int64)
    d = h.shape[0]
    if charges.shape[0] != d or len(psi0) != d or h.shape[1] != d:
        raise ValueError("dimension mismatch between h, charges and psi0")
    if noise.shape[2] != charges.shape[1]:
        raise ValueError("noise and charges disagree on the number of sites")
    runs, steps, _ = noise.shape

    psi = np.tile(np.asarray(psi0, dtype=np.complex128), (runs, 1))
    pops = np.empty((runs, steps + 1, len(watch)))
    pops[:, 0] = np.abs(psi[:, watch]) ** 2
    diag_h = np.diag(h)
    offdiag_rows = np.abs(h).sum(axis=1) - np.abs(diag_h)
    for s in range(steps):
        shift = noise[:, s] @ charges.T  # (runs, d)
        # infinity norm of h + diag(shift), per run
        row = offdiag_rows[None, :] + np.abs(diag_h[None, :] + shift)
        nsub = np.maximum(1, np.ceil(row.max(axis=1) * dt)).astype(int)
        for n in np.unique(nsub):
            sel = nsub == n
            psi[sel] = _taylor(h, shift[sel], psi[sel], dt / n, n)
        pops[:, s + 1] = np.abs(psi[:, watch]) ** 2
    return psi, pops


def _taylor(h, shift, psi, h_dt, nsub):
    for _ in range(nsub):
        term = psi
        out = psi.copy()
        for k in range(1, MAX_TERMS + 1):
            term = (-1j * h_dt / k) * (term @ h.T + shift * term)
            out += term
            if np.max(np.abs(term.real) + np.abs(term.imag), initial=0.0) < TERM_TOL:
                break
        psi = out
    return psi
