"""Compare the compiled and numpy propagation kernels on the noisy swap.

Usage: python benchmarks/bench_kernels.py [--runs N] [--steps N] [--repeat N]
"""

import argparse
import time

import numpy as np

from qdsim.dynamics import draw_noise, noise_scale
from qdsim.fock import build_basis, logical_to_fock
from qdsim.fredkin import SWAP_INPUT, fredkin_output, gate_time
from qdsim.hamiltonian import HubbardParams, build_fredkin_hamiltonian
from qdsim.kernels import available_backends


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--steps", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    params = HubbardParams()
    basis = build_basis((2, 0))
    h = build_fredkin_hamiltonian(params, basis).matrix
    dt = gate_time(params).natural / args.steps
    noise = draw_noise(0, range(args.runs), args.steps, 3, noise_scale(0.01, dt))
    psi0 = basis.basis_vector(logical_to_fock(SWAP_INPUT))
    watch = [basis.index(logical_to_fock(fredkin_output(SWAP_INPUT)))]

    results = {}
    print(f"dim={basis.dim} runs={args.runs} steps={args.steps}")
    for name, fn in available_backends().items():
        best = np.inf
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            psi, pops = fn(h, basis.charges, noise, psi0, dt, watch)
            best = min(best, time.perf_counter() - t0)
        results[name] = psi
        print(f"{name:>7}: {best:.3f} s  ({best / args.runs * 1e3:.2f} ms/run)")
    if len(results) == 2:
        diff = np.max(np.abs(results["cython"] - results["python"]))
        print(f"max |psi_cython - psi_python| = {diff:.2e}")


if __name__ == "__main__":
    main()
