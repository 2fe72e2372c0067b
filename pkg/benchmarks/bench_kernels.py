"""Numba vs numpy timings for the two hot kernels.

    python3 benchmarks/bench_kernels.py [--n 8 10 12] [--repeat 3]

Both paths run in the same process (``use_numba`` is passed explicitly), the
results are compared bit for bit, and the best of ``--repeat`` runs is shown.
"""

import argparse
import time

import numpy as np

from tfim_magic import kernels
from tfim_magic._accel import NUMBA_ENABLED
from tfim_magic.freefermion import build_kernel_finite
from tfim_magic.wick import monomial_count


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, nargs="+", default=[8, 10, 12])
    p.add_argument("--pauli-n", type=int, nargs="+", default=[6, 8])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    if not NUMBA_ENABLED:
        print("numba disabled; only the numpy path is timed")

    print(f"{'kernel':<14}{'N':>4}{'work':>14}{'numpy s':>11}{'numba s':>11}{'speedup':>9}  identical")
    for n in args.n:
        g = build_kernel_finite(1.0, n).entries
        t_np, r_np = best_of(lambda: kernels.minor_power_sums(g, use_numba=False), args.repeat)
        row = f"{'minors':<14}{n:>4}{monomial_count(n):>14,}{t_np:>11.4f}"
        if NUMBA_ENABLED:
            kernels.minor_power_sums(g[:2, :2], use_numba=True)  # compile outside the timing
            t_nb, r_nb = best_of(lambda: kernels.minor_power_sums(g, use_numba=True), args.repeat)
            same = r_np[:3] == r_nb[:3]
            row += f"{t_nb:>11.4f}{t_np / t_nb:>9.1f}  {same}"
        print(row)

    rng = np.random.default_rng(0)
    for n in args.pauli_n:
        psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        psi /= np.linalg.norm(psi)
        rho = np.outer(psi, psi.conj())
        t_np, r_np = best_of(lambda: kernels.pauli_power_sums(rho, use_numba=False), args.repeat)
        row = f"{'pauli':<14}{n:>4}{4**n:>14,}{t_np:>11.4f}"
        if NUMBA_ENABLED:
            kernels.pauli_power_sums(rho[:2, :2], use_numba=True)
            t_nb, r_nb = best_of(lambda: kernels.pauli_power_sums(rho, use_numba=True), args.repeat)
            row += f"{t_nb:>11.4f}{t_np / t_nb:>9.1f}  {r_np == r_nb}"
        print(row)


if __name__ == "__main__":
    main()
