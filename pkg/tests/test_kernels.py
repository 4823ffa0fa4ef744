import numpy as np
import pytest

from qdsim import _kernels_py, kernels
from qdsim.dynamics import StateVector, draw_noise, evolve_piecewise_eigh
from qdsim.fock import build_basis, logical_to_fock
from qdsim.hamiltonian import HubbardParams, build_fredkin_hamiltonian


@pytest.fixture(scope="module")
def setup():
    b = build_basis((2, 0))
    h = build_fredkin_hamiltonian(HubbardParams(eps=(0.5, 0.1, -0.2)), b)
    psi0 = b.basis_vector(logical_to_fock((1, 0, 1)))
    noise = draw_noise(2, range(6), 200, 3, 0.3)
    return h, psi0, noise


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")
    assert "python" in kernels.available_backends()


@pytest.mark.skipif("cython" not in kernels.available_backends(), reason="compiled kernels not built")
def test_backends_agree(setup):
    h, psi0, noise = setup
    be = kernels.available_backends()
    a = be["cython"](h.matrix, h.basis.charges, noise, psi0, 0.05, [0, 3])
    b = be["python"](h.matrix, h.basis.charges, noise, psi0, 0.05, [0, 3])
    assert np.max(np.abs(a[0] - b[0])) <= 1e-12
    assert np.max(np.abs(a[1] - b[1])) <= 1e-12


@pytest.mark.parametrize("name", sorted(kernels.available_backends()))
def test_kernel_matches_eigh_reference(setup, name):
    h, psi0, noise = setup
    fn = kernels.available_backends()[name]
    psi, pops = fn(h.matrix, h.basis.charges, noise, psi0, 0.05, [h.basis.index(logical_to_fock((1, 1, 0)))])
    for r in range(noise.shape[0]):
        ref = evolve_piecewise_eigh(h, StateVector(psi0, h.basis), noise[r], 0.05).amplitudes
        assert np.max(np.abs(psi[r] - ref)) <= 1e-10
    assert pops.shape == (6, 201, 1)
    assert np.all(pops[:, 0, 0] == 0.0)


@pytest.mark.parametrize("name", sorted(kernels.available_backends()))
def test_kernel_large_step_substeps(setup, name):
    h, psi0, _ = setup
    noise = np.zeros((1, 2, 3))
    fn = kernels.available_backends()[name]
    psi, _ = fn(h.matrix, h.basis.charges, noise, psi0, 3.0, [])
    ref = h.spectrum.propagate(psi0, 6.0)
    assert np.max(np.abs(psi[0] - ref)) <= 1e-10


@pytest.mark.parametrize("name", sorted(kernels.available_backends()))
def test_kernel_input_checks(setup, name):
    h, psi0, noise = setup
    fn = kernels.available_backends()[name]
    with pytest.raises(ValueError):
        fn(h.matrix + 1j * np.eye(h.dim), h.basis.charges, noise, psi0, 0.1, [])
    with pytest.raises(ValueError):
        fn(h.matrix, h.basis.charges[:-1], noise, psi0, 0.1, [])
    with pytest.raises(ValueError):
        fn(h.matrix, h.basis.charges, noise[:, :, :2], psi0, 0.1, [])
    psi, pops = fn(h.matrix, h.basis.charges, noise[:0], psi0, 0.1, [0])
    assert psi.shape == (0, h.dim) and pops.shape == (0, 201, 1)


def test_python_fallback_accepts_real_complex_dtype(setup):
    h, psi0, noise = setup
    a = _kernels_py.noisy_propagate(h.matrix.astype(complex), h.basis.charges, noise[:1], psi0, 0.05, [])
    b = _kernels_py.noisy_propagate(h.matrix, h.basis.charges, noise[:1], psi0, 0.05, [])
    assert np.array_equal(a[0], b[0])
