"""Pure-state entanglement measures and the ensemble costs built from them.

Logarithms are base 2. All pure-state measures go through the Schmidt
coefficients of the state across the split.
"""
import enum
from dataclasses import dataclass

import numpy as np

from . import kernels
from .ensembles import branch_states, unnormalized_phi
from .linalg import BipartiteSplit, DimensionError, as_party_matrix, partial_trace
from .simulator import (
    ensemble_concurrence_probabilities,
    measure_subsystem_exact,
    sample_shots,
    swap_test,
)
from .tolerances import ENTROPY_EPS, NORM_TOL, Q_PRUNE


class MeasureKind(enum.Enum):
    TSALLIS2 = "tsallis2"
    VON_NEUMANN = "von_neumann"
    CONCURRENCE_EOF = "concurrence_eof"


class WeightFunction(enum.Enum):
    """The weight ``f`` applied to branch probabilities."""

    SQUARE = "square"
    IDENTITY = "identity"

    def __call__(self, x):
        return x * x if self is WeightFunction.SQUARE else x


def schmidt_weights(psi, split):
    s = np.linalg.svd(as_party_matrix(psi, split), compute_uv=False)
    return s * s


def tsallis2_pure(psi, split):
    """``T2 = 1 - Tr((Tr_A |psi><psi|)^2)``."""
    w = schmidt_weights(psi, split)
    return float(max(0.0, 1.0 - np.sum(w * w)))


def von_neumann_pure(psi, split):
    w = schmidt_weights(psi, split)
    w = w[w > ENTROPY_EPS]
    return float(max(0.0, -np.sum(w * np.log2(w))))


def concurrence(psi):
    """``C = 2 |c00 c11 - c01 c10|`` for a 2-qubit state."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (4,):
        raise DimensionError("concurrence is defined for 2-qubit states")
    return float(min(1.0, 2.0 * abs(psi[0] * psi[3] - psi[1] * psi[2])))


def binary_entropy(x):
    x = float(np.clip(x, 0.0, 1.0))
    return float(-sum(t * np.log2(t) for t in (x, 1.0 - x) if t > ENTROPY_EPS))


def eof_from_concurrence(c):
    if c < -NORM_TOL or c > 1.0 + NORM_TOL:
        raise ValueError(f"concurrence {c} outside [0, 1]")
    c = min(max(c, 0.0), 1.0)
    return binary_entropy((1.0 + np.sqrt(1.0 - c * c)) / 2.0)


def tsallis_of_density(x):
    """``T(X) = 1 - Tr(X^2)``."""
    x = np.asarray(x, dtype=complex)
    return float(1.0 - np.sum(np.abs(x) ** 2))


def tsallis_overlap_form(probs, states, shots=0, rng=None):
    """``1 - sum_ij l_i l_j |<v_i|v_j>|^2`` for a (not necessarily orthogonal) decomposition.

    With ``shots > 0`` each off-diagonal overlap is a swap-test estimate.
    """
    lam = np.asarray(probs, dtype=float)
    vs = np.atleast_2d(np.asarray(states, dtype=complex))
    if not shots:
        ov = np.abs(vs.conj() @ vs.T) ** 2
    else:
        n = lam.shape[0]
        ov = np.eye(n)
        for i in range(n):
            for j in range(i + 1, n):
                ov[i, j] = ov[j, i] = swap_test(vs[i], vs[j], shots, rng)
    return float(1.0 - lam @ ov @ lam)


def default_split(n):
    """Halve an ``n``-qubit register, A taking the leading ``n // 2`` qubits."""
    return BipartiteSplit.contiguous(n // 2, n - n // 2)


def measure(kind, psi, split):
    if kind is MeasureKind.TSALLIS2:
        return tsallis2_pure(psi, split)
    if kind is MeasureKind.VON_NEUMANN:
        return von_neumann_pure(psi, split)
    if kind is MeasureKind.CONCURRENCE_EOF:
        if split.num_qubits != 2:
            raise DimensionError("CONCURRENCE_EOF needs a 2-qubit system register")
        return eof_from_concurrence(concurrence(as_party_matrix(psi, split).reshape(-1)))
    raise ValueError(f"unknown measure {kind!r}")


def _branches(p, u):
    x = branch_states(p, u)
    q = np.sum(np.abs(x) ** 2, axis=1)
    return x, q


def cost_f_d(p, u, m, f, split):
    """``sum_i f(q_i) mu(phi_i)`` over branches with ``q_i >= Q_PRUNE``."""
    x, q = _branches(p, u)
    total = 0.0
    for i in np.flatnonzero(q >= Q_PRUNE):
        total += f(q[i]) * measure(m, x[i] / np.sqrt(q[i]), split)
    return float(total)


def cost_convex_roof(p, u, m, split):
    """``sum_i q_i mu(phi_i)``."""
    return cost_f_d(p, u, m, WeightFunction.IDENTITY, split)


def tsallis_fd_succinct(p, u, split):
    """``sum_i (q_i^2 - Tr((Tr_A Phi_i)^2))`` evaluated from the operators ``Phi_i``."""
    total = 0.0
    for i in range(p.dim_ancilla):
        phi = unnormalized_phi(p, u, i)
        red = partial_trace(phi, split, keep="B")
        total += np.trace(phi).real ** 2 - np.sum(np.abs(red) ** 2)
    return float(total)


def party_tensor(x, split):
    """Branch rows of ``x`` reshaped to ``(d, dim_a, dim_b)`` along the split."""
    return np.stack([as_party_matrix(row, split) for row in x]) if x.shape[0] else x.reshape(0, *split.dims)


def tsallis_fd_cost(p, u, split):
    """Kernel evaluation of ``T_{f,d}`` for ``f(x) = x^2``."""
    x = party_tensor(branch_states(p, u), split)
    value, _ = kernels.tsallis_fd_value_grad(x, np.zeros((0,) + x.shape, dtype=complex))
    return value


class Verdict(enum.Enum):
    SEPARABLE = "separable-evidence"
    ENTANGLED = "entangled-evidence"


@dataclass(frozen=True)
class SeparabilityVerdict:
    verdict: Verdict
    value: float
    threshold: float


def separability_verdict(minimized_cost, threshold=1e-3):
    """Values strictly below ``threshold`` count as separable evidence.

    The optimizer only bounds the infimum from above, so the separable
    verdict is the conclusive one; the entangled verdict is heuristic.
    """
    v = Verdict.SEPARABLE if minimized_cost < threshold else Verdict.ENTANGLED
    return SeparabilityVerdict(v, float(minimized_cost), float(threshold))


# -- shot-based estimators -------------------------------------------------------


def _shot_tsallis(phi, split, shots, rng):
    # measure B in the Z basis; collect the A-states it leaves behind
    branches = measure_subsystem_exact(phi, list(split.qubits_b))
    lam = np.array([b.probability for b in branches])
    xis = np.array([b.residual for b in branches])
    return tsallis_overlap_form(lam / lam.sum(), xis, shots, rng)


def _shot_eof_branches(p, u, shots, rng):
    k = p.ancilla_qubits
    d = p.dim_ancilla
    probs = ensemble_concurrence_probabilities(p.state, k, u)
    counts = sample_shots(probs / probs.sum(), shots, rng)
    m = 2 + k
    q_hat = np.zeros(d)
    same = np.zeros(d)
    hit = np.zeros(d)
    for outcome, c in counts.counts.items():
        bits = format(outcome, f"0{2 * m}b")
        i = int(bits[2:m], 2) if k else 0
        j = int(bits[m + 2 :], 2) if k else 0
        q_hat[i] += c
        if i == j:
            same[i] += c
            if bits[:2] == "00" and bits[m : m + 2] == "00":
                hit[i] += c
    q_hat /= shots
    c2 = np.divide(8.0 * hit, same, out=np.zeros(d), where=same > 0)
    return q_hat, np.sqrt(np.clip(c2, 0.0, 1.0))


def estimate_cost(p, u, m, f, split, shots, rng):
    """Shot estimate of ``sum_i f(q_i) mu(phi_i)``.

    ``q_i`` comes from ancilla measurement counts. ``mu`` is estimated by the
    circuit that measures it: the two-copy concurrence circuit for
    ``CONCURRENCE_EOF`` and swap tests on the Z-measured reduced state for
    ``TSALLIS2``. ``VON_NEUMANN`` uses the exact branch entropy.
    """
    if not shots:
        return cost_f_d(p, u, m, f, split)
    if m is MeasureKind.CONCURRENCE_EOF:
        q_hat, c_hat = _shot_eof_branches(p, u, shots, rng)
        return float(sum(f(q_hat[i]) * eof_from_concurrence(c_hat[i]) for i in np.flatnonzero(q_hat > 0)))
    x, q = _branches(p, u)
    q = np.clip(q, 0.0, None)
    q_hat = np.zeros_like(q)
    for k, c in sample_shots(q / q.sum(), shots, rng).counts.items():
        q_hat[k] = c / shots
    total = 0.0
    for i in np.flatnonzero(q_hat > 0):
        phi = x[i] / np.sqrt(q[i])
        if m is MeasureKind.TSALLIS2:
            mu = _shot_tsallis(phi, split, shots, rng)
        else:
            mu = measure(m, phi, split)
        total += f(q_hat[i]) * mu
    return float(total)

