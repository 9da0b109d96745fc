"""Gate-level statevector simulation with exact measurement and shot sampling.

Exact mode (``shots=0``) reads probabilities off the amplitudes; shot mode
draws a multinomial sample from the same probabilities, so both modes share
everything up to the sampling step.
"""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .linalg import PAULI, DimensionError, check_state, check_unitary, kron, num_qubits
from .tolerances import NORM_TOL, PRUNE_TOL

_S2 = 1.0 / np.sqrt(2.0)

#: the rotation R of the concurrence circuit
R_CONC = _S2 * np.array([[1, 1], [-1, 1]], dtype=complex)

_H = _S2 * np.array([[1, 1], [1, -1]], dtype=complex)


def _controlled(u):
    k = u.shape[0]
    out = np.eye(2 * k, dtype=complex)
    out[k:, k:] = u
    return out


_SWAP = np.eye(4, dtype=complex)[[0, 2, 1, 3]]

_FIXED = {
    "H": _H,
    "X": PAULI["X"],
    "Y": PAULI["Y"],
    "Z": PAULI["Z"],
    "CX": _controlled(PAULI["X"]),
    "CZ": _controlled(PAULI["Z"]),
    "SWAP": _SWAP,
    "CSWAP": _controlled(_SWAP),
    "R_CONC": R_CONC,
}

# kind -> number of target qubits (None: set by the matrix payload)
ARITY = {
    "RX": 1, "RY": 1, "RZ": 1, "PHASE": 1,
    "H": 1, "X": 1, "Y": 1, "Z": 1, "R_CONC": 1,
    "CX": 2, "CZ": 2, "SWAP": 2, "CSWAP": 3,
    "UNITARY": None,
}
PARAMETRIZED = {"RX", "RY", "RZ", "PHASE"}


@dataclass(frozen=True)
class Gate:
    """One gate. Controlled kinds list the control qubit first."""

    kind: str
    targets: tuple
    param: float = None
    matrix_payload: np.ndarray = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        if kind not in ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(set(self.targets)) != len(self.targets):
            raise DimensionError(f"{kind}: repeated target in {self.targets}")
        if kind == "UNITARY":
            if self.matrix_payload is None:
                raise ValueError("UNITARY gate needs a matrix")
            u = check_unitary(self.matrix_payload)
            if u.shape[0] != 1 << len(self.targets):
                raise DimensionError(f"UNITARY of size {u.shape[0]} on {len(self.targets)} qubits")
            object.__setattr__(self, "matrix_payload", u)
        elif len(self.targets) != ARITY[kind]:
            raise DimensionError(f"{kind} takes {ARITY[kind]} qubits, got {len(self.targets)}")
        if kind in PARAMETRIZED and self.param is None:
            raise ValueError(f"{kind} needs an angle")

    def matrix(self):
        k, t = self.kind, self.param
        if k == "RX":
            return np.cos(t / 2) * np.eye(2) - 1j * np.sin(t / 2) * PAULI["X"]
        if k == "RY":
            return np.cos(t / 2) * np.eye(2) - 1j * np.sin(t / 2) * PAULI["Y"]
        if k == "RZ":
            return np.cos(t / 2) * np.eye(2) - 1j * np.sin(t / 2) * PAULI["Z"]
        if k == "PHASE":
            # global phase exp(i theta), as in the universal set {Rx, Ry, Rz, Ph, CNOT}
            return np.exp(1j * t) * np.eye(2, dtype=complex)
        if k == "UNITARY":
            return self.matrix_payload
        return _FIXED[k]


@dataclass
class Circuit:
    num_qubits: int
    gates: list = field(default_factory=list)

    def add(self, kind, *targets, param=None, matrix=None):
        gate = Gate(kind, targets, param, matrix)
        if max(gate.targets, default=-1) >= self.num_qubits or min(gate.targets, default=0) < 0:
            raise DimensionError(f"{gate.kind} targets {gate.targets} outside {self.num_qubits} qubits")
        self.gates.append(gate)
        return self

    def extend(self, other, qubit_map=None):
        """Append ``other``'s gates, relabelling qubit ``q`` as ``qubit_map[q]``."""
        qubit_map = list(range(other.num_qubits)) if qubit_map is None else list(qubit_map)
        for g in other.gates:
            self.add(g.kind, *(qubit_map[q] for q in g.targets), param=g.param, matrix=g.matrix_payload)
        return self


def apply_gate(state, gate, n):
    return kernels.apply_matrix(state, gate.matrix(), gate.targets, n)


def apply_circuit(state, circuit):
    psi = np.asarray(state, dtype=complex)
    n = circuit.num_qubits
    if psi.shape != (1 << n,):
        raise DimensionError(f"state of length {psi.shape[0]} for a {n}-qubit circuit")
    for g in circuit.gates:
        if max(g.targets) >= n:
            raise DimensionError(f"{g.kind} targets {g.targets} outside {n} qubits")
        psi = apply_gate(psi, g, n)
    return psi


def apply_unitary_on_subsystem(state, u, targets):
    """``(I (x) u)`` with ``u`` acting on ``targets`` (first target = leading bit of ``u``)."""
    psi = np.asarray(state, dtype=complex)
    n = num_qubits(psi.shape[0])
    targets = [int(q) for q in targets]
    if len(set(targets)) != len(targets) or any(q < 0 or q >= n for q in targets):
        raise DimensionError(f"bad targets {targets} for {n} qubits")
    u = check_unitary(u)
    if u.shape[0] != 1 << len(targets):
        raise DimensionError(f"unitary of size {u.shape[0]} on {len(targets)} qubits")
    if not targets:
        return psi * u[0, 0]
    return kernels.apply_matrix(psi, u, targets, n)


class MeasurementBranch(NamedTuple):
    outcome: int
    probability: float
    #: collapsed state on the full register
    state: np.ndarray
    #: normalized state of the unmeasured qubits (in increasing qubit order)
    residual: np.ndarray


def subsystem_probabilities(state, targets):
    """Outcome distribution of a computational-basis measurement of ``targets``."""
    psi = np.asarray(state, dtype=complex)
    n = num_qubits(psi.shape[0])
    t = np.moveaxis(psi.reshape((2,) * n), list(targets), list(range(len(targets))))
    t = t.reshape(1 << len(targets), -1)
    return np.sum(np.abs(t) ** 2, axis=1)


def measure_subsystem_exact(state, targets):
    """All outcomes of measuring ``targets``, with outcomes below ``PRUNE_TOL`` dropped.

    The outcome index reads the measured bits with ``targets[0]`` most significant.
    """
    psi = np.asarray(state, dtype=complex)
    n = num_qubits(psi.shape[0])
    targets = [int(q) for q in targets]
    if not targets:
        raise ValueError("nothing to measure")
    if len(set(targets)) != len(targets) or any(q < 0 or q >= n for q in targets):
        raise DimensionError(f"bad targets {targets} for {n} qubits")
    rest = [q for q in range(n) if q not in targets]
    t = np.moveaxis(psi.reshape((2,) * n), targets, list(range(len(targets))))
    t = t.reshape(1 << len(targets), -1)
    probs = np.sum(np.abs(t) ** 2, axis=1)
    branches = []
    for k, p in enumerate(probs):
        if p < PRUNE_TOL:
            continue
        residual = t[k] / np.sqrt(p)
        collapsed = np.zeros_like(t)
        collapsed[k] = residual
        collapsed = collapsed.reshape([2] * len(targets) + [2] * len(rest))
        collapsed = np.moveaxis(collapsed, list(range(len(targets))), targets).reshape(-1)
        branches.append(MeasurementBranch(k, float(p), collapsed, residual))
    return branches


@dataclass
class ShotCounts:
    counts: dict
    total_shots: int

    def frequency(self, outcome):
        return self.counts.get(outcome, 0) / self.total_shots if self.total_shots else 0.0

    def bitstrings(self, width):
        return {format(k, f"0{width}b"): v for k, v in self.counts.items()}


def sample_shots(distribution, n, rng):
    """Multinomial sample of ``n`` shots; ``distribution`` is a mapping or a probability array."""
    if isinstance(distribution, dict):
        outcomes = list(distribution)
        probs = np.array([distribution[k] for k in outcomes], dtype=float)
    else:
        probs = np.asarray(distribution, dtype=float)
        outcomes = list(range(probs.shape[0]))
    if np.any(probs < 0.0):
        if probs.min() < -PRUNE_TOL:
            raise ValueError(f"negative probability {probs.min():.3g}")
        probs = np.clip(probs, 0.0, None)
    if abs(probs.sum() - 1.0) > 1e-6:
        raise ValueError(f"probabilities sum to {probs.sum():.9g}")
    n = int(n)
    if n == 0:
        return ShotCounts({}, 0)
    draws = rng.multinomial(n, probs / probs.sum())
    return ShotCounts({k: int(c) for k, c in zip(outcomes, draws) if c}, n)


# -- library circuits --------------------------------------------------------


def swap_test_circuit(n):
    """Ancilla 0, first state on qubits 1..n, second on n+1..2n."""
    c = Circuit(2 * n + 1).add("H", 0)
    for k in range(n):
        c.add("CSWAP", 0, 1 + k, 1 + n + k)
    return c.add("H", 0)


def swap_test_p0(psi, phi):
    """Exact probability of reading 0 on the swap-test ancilla."""
    psi, phi = check_state(psi), check_state(phi)
    if psi.shape != phi.shape:
        raise DimensionError("swap test needs states of equal size")
    n = num_qubits(psi.shape[0])
    start = kron(np.array([1.0, 0.0]), kron(psi, phi)).reshape(-1)
    out = apply_circuit(start, swap_test_circuit(n))
    return float(subsystem_probabilities(out, [0])[0])


def swap_test(psi, phi, shots=0, rng=None):
    """Estimate ``|<psi|phi>|^2`` as ``2 P[0] - 1``; shot estimates are clamped to [0, 1]."""
    p0 = swap_test_p0(psi, phi)
    if not shots:
        return 2.0 * p0 - 1.0
    if rng is None:
        raise ValueError("shot mode needs a generator")
    counts = sample_shots({0: p0, 1: max(0.0, 1.0 - p0)}, shots, rng)
    return float(np.clip(2.0 * counts.frequency(0) - 1.0, 0.0, 1.0))


#: gate list of the two-copy concurrence circuit on wires (a1, b1, a2, b2)
CONCURRENCE_WIRING = (
    ("R_CONC", (0,)),
    ("R_CONC", (0,)),
    ("CX", (0, 2)),
    ("CX", (1, 3)),
    ("R_CONC", (0,)),
    ("R_CONC", (3,)),
    ("R_CONC", (3,)),
)


def concurrence_circuit():
    c = Circuit(4)
    for kind, targets in CONCURRENCE_WIRING:
        c.add(kind, *targets)
    return c


def concurrence_circuit_amplitude(psi):
    """``|0000>`` amplitude after the concurrence circuit acts on ``psi (x) psi``.

    Its magnitude is ``C(psi) / (2 sqrt 2)``.
    """
    psi = check_state(psi)
    if psi.shape != (4,):
        raise DimensionError("concurrence circuit takes a 2-qubit state")
    out = apply_circuit(np.kron(psi, psi), concurrence_circuit())
    return complex(out[0])


def ensemble_concurrence_circuit(num_ancilla, u):
    """Two copies of (2 system + ``num_ancilla``) qubits, ``u`` on each ancilla,
    then the concurrence block on the two system registers.

    Copy ``c`` occupies qubits ``c*m .. c*m+m-1`` with ``m = 2 + num_ancilla``;
    its system qubits come first.
    """
    m = 2 + num_ancilla
    c = Circuit(2 * m)
    if num_ancilla:
        for copy in range(2):
            anc = [copy * m + 2 + a for a in range(num_ancilla)]
            c.add("UNITARY", *anc, matrix=u)
    return c.extend(concurrence_circuit(), [0, 1, m, m + 1])


def ensemble_concurrence_probabilities(purification_state, num_ancilla, u):
    """Joint outcome distribution of every qubit of the combined circuit.

    Measuring the ancillae first and the system wires last gives the same
    statistics, since the two act on disjoint qubits after ``u``.
    """
    psi = np.asarray(purification_state, dtype=complex)
    if psi.shape != (1 << (2 + num_ancilla),):
        raise DimensionError("purification must have 2 system qubits")
    out = apply_circuit(np.kron(psi, psi), ensemble_concurrence_circuit(num_ancilla, u))
    return np.abs(out) ** 2


def norm_preserved(before, after, tol=NORM_TOL):
    return abs(np.linalg.norm(after) - np.linalg.norm(before)) <= tol
