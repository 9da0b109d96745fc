"""Hot inner loops, each as a numba kernel and a numpy twin.

The public names (``apply_matrix``, ``tsallis_fd_value_grad``,
``monomial_products``) are bound at import time to the numba version when
:data:`opsevqa._accel.USE_NUMBA` is true and to the numpy version otherwise.
Both versions stay importable under ``*_nb`` / ``*_np`` so the benchmark and
the tests can compare them directly.

Conventions: qubit 0 is the most significant bit of a basis index.
"""
import numpy as np

from ._accel import USE_NUMBA, njit


# -- gate application --------------------------------------------------------


def apply_matrix_np(state, mat, targets, n):
    """Return ``mat`` applied to ``targets`` of an ``n``-qubit amplitude vector."""
    targets = [int(q) for q in targets]
    t = len(targets)
    psi = np.asarray(state).reshape((2,) * n)
    psi = np.moveaxis(psi, targets, list(range(t)))
    shape = psi.shape
    psi = (mat @ psi.reshape(1 << t, -1)).reshape(shape)
    return np.moveaxis(psi, list(range(t)), targets).reshape(-1)


@njit
def _apply_matrix_loop(state, mat, targets, n):
    t = targets.shape[0]
    m = 1 << t
    out = np.empty_like(state)
    pos = np.empty(t, np.int64)
    mask = 0
    for k in range(t):
        pos[k] = n - 1 - targets[k]
        mask |= 1 << pos[k]
    offsets = np.zeros(m, np.int64)
    for r in range(m):
        for k in range(t):
            if (r >> (t - 1 - k)) & 1:
                offsets[r] |= 1 << pos[k]
    buf = np.empty(m, state.dtype)
    for base in range(1 << n):
        if base & mask:
            continue
        for r in range(m):
            buf[r] = state[base | offsets[r]]
        for r in range(m):
            acc = 0j
            for c in range(m):
                acc += mat[r, c] * buf[c]
            out[base | offsets[r]] = acc
    return out


def apply_matrix_nb(state, mat, targets, n):
    return _apply_matrix_loop(
        np.ascontiguousarray(state, dtype=np.complex128),
        np.ascontiguousarray(mat, dtype=np.complex128),
        np.asarray(targets, dtype=np.int64),
        int(n),
    )


# -- T_{f,d} value and gradient over ensemble branches -----------------------


def tsallis_fd_value_grad_np(X, dX):
    """Value and parameter gradient of ``sum_i q_i^2 T2(phi_i)``.

    ``X[i]`` is the unnormalized branch state ``sqrt(q_i)|phi_i>`` reshaped to
    ``(dim_a, dim_b)``; ``dX[p, i]`` is its derivative with respect to
    parameter ``p``. The cost is ``sum_i q_i^2 - Tr((Tr_A Phi_i)^2)``.
    """
    q = np.einsum("iab,iab->i", X.conj(), X).real
    rho = np.einsum("iab,iac->ibc", X, X.conj())
    value = float(np.sum(q * q) - np.sum(np.abs(rho) ** 2))
    if dX.shape[0] == 0:
        return value, np.zeros(0)
    dq = 2.0 * np.einsum("iab,piab->pi", X.conj(), dX).real
    m = np.einsum("piab,iac->pibc", dX, X.conj())
    tr = 2.0 * np.einsum("icb,pibc->pi", rho, m).real
    grad = 2.0 * np.sum(q[None, :] * dq - tr, axis=1)
    return value, grad


@njit
def _tsallis_fd_loop(X, dX):
    d, da, db = X.shape
    npar = dX.shape[0]
    value = 0.0
    grad = np.zeros(npar)
    rho = np.empty((db, db), np.complex128)
    for i in range(d):
        q = 0.0
        for a in range(da):
            for b in range(db):
                z = X[i, a, b]
                q += z.real * z.real + z.imag * z.imag
        pur = 0.0
        for b in range(db):
            for c in range(db):
                acc = 0j
                for a in range(da):
                    acc += X[i, a, b] * np.conj(X[i, a, c])
                rho[b, c] = acc
                pur += acc.real * acc.real + acc.imag * acc.imag
        value += q * q - pur
        for p in range(npar):
            dq = 0.0
            for a in range(da):
                for b in range(db):
                    dq += 2.0 * (np.conj(X[i, a, b]) * dX[p, i, a, b]).real
            tr = 0j
            for b in range(db):
                for c in range(db):
                    mbc = 0j
                    for a in range(da):
                        mbc += dX[p, i, a, b] * np.conj(X[i, a, c])
                    tr += rho[c, b] * mbc
            grad[p] += 2.0 * (q * dq - 2.0 * tr.real)
    return value, grad


def tsallis_fd_value_grad_nb(X, dX):
    value, grad = _tsallis_fd_loop(
        np.ascontiguousarray(X, dtype=np.complex128),
        np.ascontiguousarray(dX, dtype=np.complex128),
    )
    return float(value), grad


# -- Haar monomials ----------------------------------------------------------


def monomial_products_np(U, rows, cols, rows_c, cols_c):
    """Per-sample ``prod_k U[r_k, c_k] * prod_k conj(U[r'_k, c'_k])``.

    ``U`` has shape ``(n_samples, d, d)``.
    """
    out = np.ones(U.shape[0], dtype=np.complex128)
    for r, c in zip(rows, cols):
        out *= U[:, r, c]
    for r, c in zip(rows_c, cols_c):
        out *= np.conj(U[:, r, c])
    return out


@njit
def _monomial_loop(U, rows, cols, rows_c, cols_c):
    n = U.shape[0]
    out = np.empty(n, np.complex128)
    for s in range(n):
        acc = 1.0 + 0j
        for k in range(rows.shape[0]):
            acc *= U[s, rows[k], cols[k]]
        for k in range(rows_c.shape[0]):
            acc *= np.conj(U[s, rows_c[k], cols_c[k]])
        out[s] = acc
    return out


def monomial_products_nb(U, rows, cols, rows_c, cols_c):
    as_idx = lambda v: np.asarray(v, dtype=np.int64).reshape(-1)
    return _monomial_loop(
        np.ascontiguousarray(U, dtype=np.complex128),
        as_idx(rows),
        as_idx(cols),
        as_idx(rows_c),
        as_idx(cols_c),
    )


if USE_NUMBA:
    apply_matrix = apply_matrix_nb
    tsallis_fd_value_grad = tsallis_fd_value_grad_nb
    monomial_products = monomial_products_nb
else:
    apply_matrix = apply_matrix_np
    tsallis_fd_value_grad = tsallis_fd_value_grad_np
    monomial_products = monomial_products_np

BACKEND = "numba" if USE_NUMBA else "numpy"
