"""Haar-random unitaries, Weingarten values for ``p <= 4``, and Haar moment integrals.

Weingarten values are kept as exact rational functions of ``d`` and
evaluated with :class:`fractions.Fraction`, so pole detection is exact.
"""
import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .ensembles import branch_states
from .linalg import DimensionError, dagger

MAX_ORDER = 4
#: Haar draws generated per QR batch
CHUNK = 50_000


class WeingartenDomainError(ValueError):
    """The tabulated rational function has a pole at the requested ``d``."""


# -- sampling ----------------------------------------------------------------


def haar_batch(d, n, rng):
    """``n`` Haar unitaries of size ``d``, shape ``(n, d, d)``.

    QR of a complex Ginibre matrix, with the columns of ``Q`` rephased so
    ``diag(R)`` is positive; this makes the factorization unique and the
    distribution exactly Haar.
    """
    if d < 1:
        raise DimensionError("dimension must be at least 1")
    out = np.empty((n, d, d), dtype=complex)
    for start in range(0, n, CHUNK):
        m = min(CHUNK, n - start)
        z = (rng.standard_normal((m, d, d)) + 1j * rng.standard_normal((m, d, d))) / np.sqrt(2.0)
        q, r = np.linalg.qr(z)
        diag = np.diagonal(r, axis1=1, axis2=2)
        out[start : start + m] = q * (diag / np.abs(diag))[:, None, :]
    return out


def haar_sample(d, rng):
    return haar_batch(d, 1, rng)[0]


# -- permutations and the Weingarten table ----------------------------------


def check_permutation(sigma):
    """Images of ``0..p-1`` as a tuple; raises unless it is a bijection."""
    sigma = tuple(int(v) for v in sigma)
    if sorted(sigma) != list(range(len(sigma))):
        raise ValueError(f"{sigma} is not a permutation of 0..{len(sigma) - 1}")
    return sigma


def cycle_type(sigma):
    """Cycle lengths of ``sigma``, sorted in decreasing order (``(2, 1, 1)`` etc.)."""
    sigma = check_permutation(sigma)
    seen = [False] * len(sigma)
    lengths = []
    for start in range(len(sigma)):
        if seen[start]:
            continue
        n, k = 0, start
        while not seen[k]:
            seen[k] = True
            k = sigma[k]
            n += 1
        lengths.append(n)
    return tuple(sorted(lengths, reverse=True))


def compose(sigma, tau):
    """``(sigma tau)(k) = sigma(tau(k))``."""
    return tuple(sigma[t] for t in tau)


def inverse(sigma):
    inv = [0] * len(sigma)
    for k, v in enumerate(sigma):
        inv[v] = k
    return tuple(inv)


def _poly(*coeffs):
    """Coefficients in ``d``, lowest degree first."""
    return tuple(Fraction(c) for c in coeffs)


#: cycle type -> (numerator, denominator) polynomials in ``d``
WEINGARTEN_TABLE = {
    (1,): (_poly(1), _poly(0, 1)),
    (1, 1): (_poly(1), _poly(-1, 0, 1)),
    (2,): (_poly(-1), _poly(0, -1, 0, 1)),
    (1, 1, 1): (_poly(-2, 0, 1), _poly(0, 4, 0, -5, 0, 1)),
    (2, 1): (_poly(-1), _poly(4, 0, -5, 0, 1)),
    (3,): (_poly(2), _poly(0, 4, 0, -5, 0, 1)),
    (1, 1, 1, 1): (_poly(6, 0, -8, 0, 1), _poly(0, 0, -36, 0, 49, 0, -14, 0, 1)),
    (2, 1, 1): (_poly(-1), _poly(0, 9, 0, -10, 0, 1)),
    (2, 2): (_poly(6, 0, 1), _poly(0, 0, -36, 0, 49, 0, -14, 0, 1)),
    (3, 1): (_poly(-3, 0, 2), _poly(0, 0, -36, 0, 49, 0, -14, 0, 1)),
    (4,): (_poly(-5), _poly(0, -36, 0, 49, 0, -14, 0, 1)),
}


def _eval(poly, d):
    return sum(c * d**k for k, c in enumerate(poly))


def weingarten_exact(ct, d, table=None):
    """``Wg`` of cycle type ``ct`` at dimension ``d`` as a Fraction."""
    table = WEINGARTEN_TABLE if table is None else table
    ct = tuple(sorted((int(v) for v in ct), reverse=True))
    if ct not in table:
        raise ValueError(f"no Weingarten entry for cycle type {ct} (orders up to {MAX_ORDER})")
    num, den = table[ct]
    d = Fraction(int(d))
    bottom = _eval(den, d)
    if bottom == 0:
        raise WeingartenDomainError(f"Wg{ct} has a pole at d = {d}")
    return _eval(num, d) / bottom


def weingarten(ct, d, table=None):
    return float(weingarten_exact(ct, d, table))


def monomial_integral_exact(rows, cols, rows_c, cols_c, d, table=None):
    """``int U[i1,j1]..U[ip,jp] conj(U[i'1,j'1]..U[i'q,j'q]) dU`` over Haar ``U(d)``.

    Sum over ``sigma, tau`` in ``S_p`` of ``delta(i_k = i'_sigma(k))
    delta(j_k = j'_tau(k)) Wg(sigma tau^-1)``; zero when ``p != q``.
    """
    rows, cols, rows_c, cols_c = (tuple(int(v) for v in x) for x in (rows, cols, rows_c, cols_c))
    if len(rows) != len(cols) or len(rows_c) != len(cols_c):
        raise ValueError("row and column index lists differ in length")
    for v in rows + cols + rows_c + cols_c:
        if not 0 <= v < d:
            raise IndexError(f"index {v} outside 0..{d - 1}")
    p = len(rows)
    if p != len(rows_c):
        return Fraction(0)
    if p > MAX_ORDER:
        raise ValueError(f"monomials of order {p} > {MAX_ORDER} are not supported")
    if p == 0:
        return Fraction(1)
    perms = list(itertools.permutations(range(p)))
    row_ok = [s for s in perms if all(rows[k] == rows_c[s[k]] for k in range(p))]
    col_ok = [t for t in perms if all(cols[k] == cols_c[t[k]] for k in range(p))]
    total = Fraction(0)
    for s in row_ok:
        for t in col_ok:
            total += weingarten_exact(cycle_type(compose(s, inverse(t))), d, table)
    return total


def monomial_integral(rows, cols, rows_c, cols_c, d, table=None):
    return float(monomial_integral_exact(rows, cols, rows_c, cols_c, d, table))


def isolating_pattern(ct):
    """Index lists whose integral is exactly ``Wg(ct)``.

    Rows are all distinct and equal on both sides, so only ``sigma = id``
    survives; the conjugate columns are a permutation of cycle type ``ct``
    applied to distinct columns, so a single ``tau`` survives.
    """
    tau, start = [], 0
    for n in ct:
        tau.extend(start + (k + 1) % n for k in range(n))
        start += n
    p = len(tau)
    idx = tuple(range(p))
    # cols_c[tau[k]] = cols[k]
    cols_c = [0] * p
    for k in range(p):
        cols_c[tau[k]] = k
    return idx, idx, idx, tuple(cols_c)


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: complex
    stderr: float
    n: int

    def within(self, exact, sigmas=5.0):
        return abs(self.mean - exact) <= sigmas * self.stderr


def monomial_monte_carlo(rows, cols, rows_c, cols_c, d, n_samples, rng=None, unitaries=None):
    """Sample mean and standard error of the monomial over Haar draws."""
    u = haar_batch(d, n_samples, rng) if unitaries is None else unitaries
    vals = kernels.monomial_products(u, rows, cols, rows_c, cols_c)
    n = vals.shape[0]
    err = np.sqrt((np.var(vals.real, ddof=1) + np.var(vals.imag, ddof=1)) / n)
    return MonteCarloEstimate(complex(vals.mean()), float(err), n)


# -- average gate fidelity ------------------------------------------------------


def avg_gate_fidelity_exact(u, v):
    """``(|Tr U^* V|^2 + d) / (d (d + 1))``."""
    u, v = np.asarray(u, dtype=complex), np.asarray(v, dtype=complex)
    if u.shape != v.shape or u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionError(f"fidelity of {u.shape} and {v.shape}")
    d = u.shape[0]
    return float((abs(np.trace(dagger(u) @ v)) ** 2 + d) / (d * (d + 1)))


def avg_gate_fidelity_mc(u, v, n_samples, rng):
    """Mean of ``|<psi0| W^* U^* V W |psi0>|^2`` over Haar ``W``; returns ``(estimate, stderr)``."""
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    u, v = np.asarray(u, dtype=complex), np.asarray(v, dtype=complex)
    avg_gate_fidelity_exact(u, v)
    m = dagger(u) @ v
    w = haar_batch(u.shape[0], n_samples, rng)[:, :, 0]
    vals = np.abs(np.einsum("si,ij,sj->s", w.conj(), m, w)) ** 2
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_samples))


# -- branch-probability moments -----------------------------------------------


@dataclass(frozen=True)
class QMoments:
    d: int
    n: int
    mean_q: np.ndarray
    stderr_q: np.ndarray
    #: estimate of ``E[1/q_i^2]`` per branch after clipping
    mean_inv_q2: np.ndarray
    clip_floor: float
    clip_count: int


def q_moments(p, n_samples, rng, clip_floor=1e-6):
    """Haar statistics of the branch probabilities ``q_i = ||(Psi U^T) e_i||^2``.

    ``1/q_i^2`` is heavy-tailed, so ``q_i`` is floored at ``clip_floor``
    before inversion and the number of floored draws is reported.
    """
    d = p.dim_ancilla
    us = haar_batch(d, n_samples, rng)
    q = np.empty((n_samples, d))
    for s in range(n_samples):
        q[s] = np.sum(np.abs(branch_states(p, us[s])) ** 2, axis=1)
    clipped = q < clip_floor
    inv = 1.0 / np.maximum(q, clip_floor) ** 2
    return QMoments(
        d=d,
        n=n_samples,
        mean_q=q.mean(axis=0),
        stderr_q=q.std(axis=0, ddof=1) / np.sqrt(n_samples),
        mean_inv_q2=inv.mean(axis=0),
        clip_floor=clip_floor,
        clip_count=int(clipped.sum()),
    )
