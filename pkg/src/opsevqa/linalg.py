"""Dense complex linear algebra on qubit registers.

States are 1-D complex arrays of length ``2**n``; operators are 2-D complex
arrays. Qubit 0 is the most significant bit of the basis index, so
``|q0 q1 ... q_{n-1}>`` has index ``sum_k q_k 2**(n-1-k)`` and
``kron(a, b)`` puts ``a`` on the leading qubits.
"""
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .tolerances import NORM_TOL, PSD_TOL

#: largest operator side length handled (2**14 amplitudes)
MAX_DIM = 1 << 14

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class DimensionError(ValueError):
    """Shapes or register sizes do not fit together."""


def num_qubits(dim):
    """Number of qubits for a power-of-two dimension."""
    dim = int(dim)
    if dim < 1 or dim & (dim - 1):
        raise DimensionError(f"dimension {dim} is not a power of two")
    return dim.bit_length() - 1


@dataclass(frozen=True)
class BipartiteSplit:
    """Assignment of register qubits to the two parties A and B."""

    qubits_a: tuple
    qubits_b: tuple

    def __post_init__(self):
        object.__setattr__(self, "qubits_a", tuple(int(q) for q in self.qubits_a))
        object.__setattr__(self, "qubits_b", tuple(int(q) for q in self.qubits_b))
        if set(self.qubits_a) & set(self.qubits_b):
            raise DimensionError("split parties overlap")
        if len(set(self.qubits_a)) != len(self.qubits_a) or len(set(self.qubits_b)) != len(self.qubits_b):
            raise DimensionError("repeated qubit in split")

    @classmethod
    def contiguous(cls, n_a, n_b):
        """A = qubits ``0..n_a-1``, B = the following ``n_b`` qubits."""
        return cls(tuple(range(n_a)), tuple(range(n_a, n_a + n_b)))

    @property
    def num_qubits(self):
        return len(self.qubits_a) + len(self.qubits_b)

    @property
    def dims(self):
        return 1 << len(self.qubits_a), 1 << len(self.qubits_b)

    def check(self, n):
        if sorted(self.qubits_a + self.qubits_b) != list(range(n)):
            raise DimensionError(f"split {self.qubits_a}|{self.qubits_b} does not cover a {n}-qubit register")


def kron(a, b):
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    b = np.atleast_2d(np.asarray(b, dtype=complex))
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if max(rows, cols) > MAX_DIM:
        raise DimensionError(f"kron result {rows}x{cols} exceeds {MAX_DIM}")
    return np.kron(a, b)


def kron_all(mats):
    return reduce(kron, mats, np.ones((1, 1), dtype=complex))


def as_party_matrix(psi, split):
    """Reshape a pure state into the ``(dim_a, dim_b)`` coefficient matrix."""
    n = split.num_qubits
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (1 << n,):
        raise DimensionError(f"state of length {psi.shape} does not match {n}-qubit split")
    split.check(n)
    order = split.qubits_a + split.qubits_b
    t = np.transpose(psi.reshape((2,) * n), order) if n else psi
    return t.reshape(split.dims)


def partial_trace(rho, split, keep="A"):
    """Reduced density operator of the party ``keep`` (``"A"`` or ``"B"``).

    Kept qubits appear in the order listed in the split.
    """
    rho = np.asarray(rho, dtype=complex)
    n = split.num_qubits
    if rho.shape != (1 << n, 1 << n):
        raise DimensionError(f"operator {rho.shape} does not match {n}-qubit split")
    split.check(n)
    if keep == "A":
        kept, traced = split.qubits_a, split.qubits_b
    elif keep == "B":
        kept, traced = split.qubits_b, split.qubits_a
    else:
        raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")
    dk, dt = 1 << len(kept), 1 << len(traced)
    order = kept + traced
    t = rho.reshape((2,) * (2 * n))
    t = np.transpose(t, order + tuple(n + q for q in order)).reshape(dk, dt, dk, dt)
    return np.einsum("ajbj->ab", t)


def pauli_string_matrix(labels):
    """Matrix of a Pauli string such as ``"XZ"`` (label k acts on qubit k)."""
    labels = str(labels).upper()
    try:
        return kron_all([PAULI[c] for c in labels])
    except KeyError as exc:
        raise ValueError(f"bad Pauli label in {labels!r}") from exc


def exp_i_theta_pauli(theta, labels):
    """``exp(i theta P) = cos(theta) I + i sin(theta) P`` for a Pauli string ``P``."""
    p = pauli_string_matrix(labels)
    return np.cos(theta) * np.eye(p.shape[0]) + 1j * np.sin(theta) * p


def hilbert_schmidt_inner(a, b):
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def ketbra(psi, phi=None):
    psi = np.asarray(psi, dtype=complex)
    phi = psi if phi is None else np.asarray(phi, dtype=complex)
    return np.outer(psi, phi.conj())


# -- predicates and validation ----------------------------------------------


def is_unitary(u, tol=NORM_TOL):
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.allclose(dagger(u) @ u, np.eye(u.shape[0]), atol=tol, rtol=0))


def check_unitary(u, tol=NORM_TOL):
    if not is_unitary(u, tol):
        raise ValueError("matrix is not unitary")
    return np.asarray(u, dtype=complex)


def check_state(psi, tol=NORM_TOL):
    """Validate a normalized amplitude vector over a qubit register."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise DimensionError("state must be a 1-D amplitude array")
    num_qubits(psi.shape[0])
    if not np.all(np.isfinite(psi)):
        raise ValueError("state has non-finite amplitudes")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"state norm {norm:.12g} is not 1")
    return psi


def check_density(rho, tol=NORM_TOL):
    """Validate Hermiticity, unit trace and positivity."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density must be square, got {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ValueError("density has non-finite entries")
    if np.max(np.abs(rho - dagger(rho)), initial=0.0) > tol:
        raise ValueError("density is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density trace {tr.real:.12g} is not 1")
    evals = np.linalg.eigvalsh(rho)
    if evals.min() < -PSD_TOL:
        raise ValueError(f"density has negative eigenvalue {evals.min():.3g}")
    return rho


def psd_eigh(rho):
    """Hermitian eigendecomposition with eigenvalues above ``-PSD_TOL`` clipped to 0."""
    evals, evecs = np.linalg.eigh(0.5 * (rho + dagger(rho)))
    if evals.size and evals.min() < -PSD_TOL:
        raise ValueError(f"operator has negative eigenvalue {evals.min():.3g}")
    return np.clip(evals, 0.0, None), evecs


def basis_state(index, n):
    psi = np.zeros(1 << n, dtype=complex)
    psi[index] = 1.0
    return psi


def random_state(n, rng):
    """Haar-random pure state on ``n`` qubits."""
    z = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return z / np.linalg.norm(z)


def random_density(n, rng, rank=None):
    """Random density operator of the given rank (full rank by default)."""
    dim = 1 << n
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def fix_global_phase(psi):
    """Rotate so the largest-magnitude amplitude is real and positive."""
    psi = np.asarray(psi, dtype=complex)
    k = int(np.argmax(np.abs(psi)))
    if abs(psi[k]) == 0.0:
        return psi
    return psi * (abs(psi[k]) / psi[k])
