"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5]

Each pair is checked for agreement before timing. The first numba call is
excluded, since it includes compilation.
"""
import argparse
import timeit

import numpy as np

from opsevqa import kernels
from opsevqa.haar import haar_batch
from opsevqa.linalg import random_state


def cases(rng):
    n = 10
    state = random_state(n, rng)
    mat = haar_batch(4, 1, rng)[0]
    targets = np.array([3, 7])
    yield "apply_matrix (10 qubits, 2-qubit gate)", kernels.apply_matrix_np, kernels.apply_matrix_nb, (state, mat, targets, n)

    x = rng.standard_normal((32, 4, 4)) + 1j * rng.standard_normal((32, 4, 4))
    dx = rng.standard_normal((40, 32, 4, 4)) + 1j * rng.standard_normal((40, 32, 4, 4))
    yield "tsallis_fd_value_grad (d=32, 40 params)", kernels.tsallis_fd_value_grad_np, kernels.tsallis_fd_value_grad_nb, (x, dx)

    us = haar_batch(8, 100_000, rng)
    idx = (np.array([0, 1, 2, 3]),) * 3 + (np.array([1, 0, 3, 2]),)
    yield "monomial_products (d=8, p=4, 1e5 draws)", kernels.monomial_products_np, kernels.monomial_products_nb, (us, *idx)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':44s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, f_np, f_nb, a in cases(rng):
        ref, got = f_np(*a), f_nb(*a)
        for r, g in zip(ref if isinstance(ref, tuple) else (ref,), got if isinstance(got, tuple) else (got,)):
            np.testing.assert_allclose(g, r, rtol=1e-9, atol=1e-12)
        t_np = min(timeit.repeat(lambda: f_np(*a), number=1, repeat=args.repeat)) * 1e3
        t_nb = min(timeit.repeat(lambda: f_nb(*a), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:44s} {t_np:10.3f} {t_nb:10.3f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
