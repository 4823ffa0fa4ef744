# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled propagation kernels.

Same contract as :mod:`qdsim._kernels_py`; see there for the algorithm.
The state is carried as separate real and imaginary parts because ``H`` is
real symmetric, which turns every Taylor term into two real mat-vecs; the
off-diagonal (hopping) part is stored as CSR since it is very sparse.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport ceil, fabs

cnp.import_array()

cdef int MAX_TERMS = 80
cdef double TERM_TOL = 1e-17


cdef void _step(const double* h_diag, const long long* indptr, const long long* indices,
                const double* data, Py_ssize_t d, const double* charges, Py_ssize_t ns,
                const double* x, double* re, double* im, double* diag,
                double* t_re, double* t_im, double* n_re, double* n_im,
                double dt) noexcept nogil:
    cdef Py_ssize_t i, j, p, l, k, sub, nsub
    cdef double row, norm, mag, fac, a_re, a_im, hij

    norm = 0.0
    for i in range(d):
        diag[i] = h_diag[i]
        for l in range(ns):
            diag[i] = diag[i] + charges[i * ns + l] * x[l]
        row = fabs(diag[i])
        for p in range(indptr[i], indptr[i + 1]):
            row = row + fabs(data[p])
        if row > norm:
            norm = row
    nsub = <Py_ssize_t> ceil(norm * dt)
    if nsub < 1:
        nsub = 1
    cdef double h_dt = dt / nsub

    for sub in range(nsub):
        for i in range(d):
            t_re[i] = re[i]
            t_im[i] = im[i]
        for k in range(1, MAX_TERMS + 1):
            fac = h_dt / k
            mag = 0.0
            for i in range(d):
                a_re = diag[i] * t_re[i]
                a_im = diag[i] * t_im[i]
                for p in range(indptr[i], indptr[i + 1]):
                    j = indices[p]
                    hij = data[p]
                    a_re = a_re + hij * t_re[j]
                    a_im = a_im + hij * t_im[j]
                # multiply by -i * fac
                n_re[i] = fac * a_im
                n_im[i] = -fac * a_re
            for i in range(d):
                t_re[i] = n_re[i]
                t_im[i] = n_im[i]
                re[i] = re[i] + t_re[i]
                im[i] = im[i] + t_im[i]
                if fabs(t_re[i]) + fabs(t_im[i]) > mag:
                    mag = fabs(t_re[i]) + fabs(t_im[i])
            if mag < TERM_TOL:
                break


def noisy_propagate(h_in, charges_in, noise_in, psi0_in, double dt, watch_in):
    h_arr = np.asarray(h_in)
    if np.iscomplexobj(h_arr):
        if np.any(h_arr.imag != 0):
            raise ValueError("compiled kernel needs a real symmetric Hamiltonian")
        h_arr = h_arr.real
    h_arr = np.ascontiguousarray(h_arr, dtype=np.float64)
    if h_arr.ndim != 2 or h_arr.shape[0] != h_arr.shape[1]:
        raise ValueError("h must be a square matrix")
    off = h_arr.copy()
    np.fill_diagonal(off, 0.0)
    nz_rows, nz_cols = np.nonzero(off)
    cdef double[::1] h_diag = np.ascontiguousarray(np.diag(h_arr))
    cdef long long[::1] indptr = np.concatenate(
        ([0], np.cumsum(np.bincount(nz_rows, minlength=h_arr.shape[0])))).astype(np.int64)
    cdef long long[::1] indices = np.ascontiguousarray(nz_cols, dtype=np.int64)
    cdef double[::1] data = np.ascontiguousarray(off[nz_rows, nz_cols])
    cdef long long* ip = &indptr[0]
    cdef long long* ix = NULL
    cdef double* dp = NULL
    if indices.shape[0]:
        ix = &indices[0]
        dp = &data[0]
    cdef double[:, ::1] charges = np.ascontiguousarray(charges_in, dtype=np.float64)
    cdef double[:, :, ::1] noise = np.ascontiguousarray(noise_in, dtype=np.float64)
    psi0 = np.asarray(psi0_in, dtype=np.complex128)
    cdef double[::1] psi0_re = np.ascontiguousarray(psi0.real)
    cdef double[::1] psi0_im = np.ascontiguousarray(psi0.imag)
    cdef long long[::1] watch = np.ascontiguousarray(watch_in, dtype=np.int64)

    cdef Py_ssize_t d = h_diag.shape[0]
    cdef Py_ssize_t runs = noise.shape[0], steps = noise.shape[1]
    cdef Py_ssize_t nw = watch.shape[0]
    if charges.shape[0] != d or psi0_re.shape[0] != d:
        raise ValueError("dimension mismatch between h, charges and psi0")
    if noise.shape[2] != charges.shape[1]:
        raise ValueError("noise and charges disagree on the number of sites")

    re_np = np.empty((runs, d))
    im_np = np.empty((runs, d))
    pops_np = np.empty((runs, steps + 1, nw))
    cdef double[:, ::1] re = re_np
    cdef double[:, ::1] im = im_np
    cdef double[:, :, ::1] pops = pops_np
    cdef double[:, ::1] scratch = np.empty((5, d))
    cdef double* diag = &scratch[0, 0]
    cdef double* t_re = &scratch[1, 0]
    cdef double* t_im = &scratch[2, 0]
    cdef double* n_re = &scratch[3, 0]
    cdef double* n_im = &scratch[4, 0]
    cdef Py_ssize_t ns = charges.shape[1]
    cdef Py_ssize_t r, s, i, w, c
    if runs == 0 or d == 0:
        return re_np + 1j * im_np, pops_np

    with nogil:
        for r in range(runs):
            for i in range(d):
                re[r, i] = psi0_re[i]
                im[r, i] = psi0_im[i]
            for w in range(nw):
                c = watch[w]
                pops[r, 0, w] = re[r, c] * re[r, c] + im[r, c] * im[r, c]
            for s in range(steps):
                _step(&h_diag[0], ip, ix, dp, d, &charges[0, 0], ns, &noise[r, s, 0], &re[r, 0], &im[r, 0],
                      diag, t_re, t_im, n_re, n_im, dt)
                for w in range(nw):
                    c = watch[w]
                    pops[r, s + 1, w] = re[r, c] * re[r, c] + im[r, c] * im[r, c]
    return re_np + 1j * im_np, pops_np
