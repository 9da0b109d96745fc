"""The numba and numpy kernels compute the same thing."""
import numpy as np
import pytest

from opsevqa import kernels
from opsevqa._accel import HAVE_NUMBA
from opsevqa.haar import haar_batch
from opsevqa.linalg import random_state

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not importable")


@needs_numba
@pytest.mark.parametrize("n,targets", [(1, [0]), (3, [1]), (3, [2, 0]), (4, [3, 1, 0]), (2, [])])
def test_apply_matrix_twins_agree(rng, n, targets):
    psi = random_state(n, rng)
    t = len(targets)
    mat = haar_batch(1 << t, 1, rng)[0]
    a = kernels.apply_matrix_np(psi, mat, targets, n)
    b = kernels.apply_matrix_nb(psi, mat, targets, n)
    assert np.max(np.abs(a - b)) < 1e-12


def test_apply_matrix_matches_kron(rng):
    psi = random_state(3, rng)
    m = haar_batch(2, 1, rng)[0]
    full = np.kron(np.kron(np.eye(2), m), np.eye(2))
    assert np.allclose(kernels.apply_matrix(psi, m, [1], 3), full @ psi, atol=1e-12)


def _random_branch_tensor(rng, d, da, db, npar):
    x = rng.standard_normal((d, da, db)) + 1j * rng.standard_normal((d, da, db))
    dx = rng.standard_normal((npar, d, da, db)) + 1j * rng.standard_normal((npar, d, da, db))
    return x, dx


@needs_numba
@pytest.mark.parametrize("shape", [(1, 2, 2, 0), (4, 2, 2, 3), (8, 2, 4, 5), (2, 1, 4, 1)])
def test_tsallis_twins_agree(rng, shape):
    x, dx = _random_branch_tensor(rng, *shape)
    va, ga = kernels.tsallis_fd_value_grad_np(x, dx)
    vb, gb = kernels.tsallis_fd_value_grad_nb(x, dx)
    assert abs(va - vb) < 1e-10
    assert ga.shape == gb.shape == (shape[3],)
    assert np.allclose(ga, gb, atol=1e-10)


def test_tsallis_gradient_is_directional_derivative(rng):
    x, dx = _random_branch_tensor(rng, 4, 2, 2, 2)
    h = 1e-6
    _, g = kernels.tsallis_fd_value_grad(x, dx)
    for p in range(2):
        up, _ = kernels.tsallis_fd_value_grad(x + h * dx[p], dx[:0])
        down, _ = kernels.tsallis_fd_value_grad(x - h * dx[p], dx[:0])
        assert abs((up - down) / (2 * h) - g[p]) < 1e-6


@needs_numba
def test_monomial_twins_agree(rng):
    u = haar_batch(4, 200, rng)
    args = ([0, 1, 2], [0, 1, 3], [0, 1, 2], [1, 3, 0])
    a = kernels.monomial_products_np(u, *args)
    b = kernels.monomial_products_nb(u, *args)
    assert np.max(np.abs(a - b)) < 1e-14


def test_backend_flag():
    assert kernels.BACKEND in ("numba", "numpy")
