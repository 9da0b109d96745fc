"""Pure-state ensembles, their purifications, and ensembles rotated on the ancilla.

A purification of ``{p_i, |psi_i>}`` lives on ``H (x) W``, with the system
register ``H`` on the leading qubits. As a matrix ``Psi[h, w]`` (row = system
index, column = ancilla index) it is ``Psi[:, i] = sqrt(p_i) |psi_i>``, and
applying ``U`` to the ancilla maps it to ``Psi @ U.T``; column ``i`` of that
product is the unnormalized branch state ``sqrt(q_i) |phi_i>``.
"""
import json
import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    DimensionError,
    BipartiteSplit,
    check_density,
    check_unitary,
    dagger,
    fix_global_phase,
    ketbra,
    num_qubits,
    partial_trace,
    psd_eigh,
)
from .simulator import apply_unitary_on_subsystem, measure_subsystem_exact
from .tolerances import NORM_TOL, Q_PRUNE

SCHEMA_VERSION = 1


class InputFormatError(ValueError):
    """Malformed ensemble or density file; the message names the location."""


@dataclass
class PureStateEnsemble:
    probs: np.ndarray
    #: one normalized state per row
    states: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float).reshape(-1)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=complex))
        if self.states.shape[0] != self.probs.shape[0]:
            raise DimensionError(f"{self.probs.shape[0]} weights for {self.states.shape[0]} states")
        num_qubits(self.states.shape[1])
        if np.any(self.probs < -NORM_TOL):
            raise ValueError("negative ensemble weight")
        if abs(self.probs.sum() - 1.0) > NORM_TOL:
            raise ValueError(f"ensemble weights sum to {self.probs.sum():.12g}")
        norms = np.linalg.norm(self.states, axis=1)
        live = self.probs > 0
        if np.any(np.abs(norms[live] - 1.0) > NORM_TOL):
            raise ValueError("ensemble state is not normalized")

    def __len__(self):
        return self.probs.shape[0]

    @property
    def num_qubits(self):
        return num_qubits(self.states.shape[1])

    def split_branches(self, n):
        """Each branch repeated ``n`` times with weight ``p_i / n``."""
        return PureStateEnsemble(np.repeat(self.probs / n, n), np.repeat(self.states, n, axis=0))


@dataclass
class Purification:
    system_qubits: int
    ancilla_qubits: int
    state: np.ndarray

    @property
    def dim_system(self):
        return 1 << self.system_qubits

    @property
    def dim_ancilla(self):
        return 1 << self.ancilla_qubits

    @property
    def matrix(self):
        """``Psi[h, w]`` with the system index as row."""
        return self.state.reshape(self.dim_system, self.dim_ancilla)

    @property
    def system_register(self):
        return list(range(self.system_qubits))

    @property
    def ancilla_register(self):
        return list(range(self.system_qubits, self.system_qubits + self.ancilla_qubits))

    def density(self):
        psi = self.matrix
        return psi @ dagger(psi)

    def padded(self, ancilla_qubits):
        """Same purification with the ancilla widened by zero columns."""
        if ancilla_qubits < self.ancilla_qubits:
            raise DimensionError("cannot shrink the ancilla")
        m = np.zeros((self.dim_system, 1 << ancilla_qubits), dtype=complex)
        m[:, : self.dim_ancilla] = self.matrix
        return Purification(self.system_qubits, ancilla_qubits, m.reshape(-1))


def ancilla_qubits_for(d):
    """Ancilla register for ``d`` branches: ``ceil(log2(max(d, 2)))`` qubits, so never empty."""
    if d < 1:
        raise ValueError("ensemble must have at least one branch")
    return math.ceil(math.log2(max(d, 2)))


def build_purification(e, ancilla_qubits=None):
    """``|psi> = sum_i sqrt(p_i) |psi_i> (x) |i>``, unused ancilla basis states zero-padded."""
    k = ancilla_qubits_for(len(e)) if ancilla_qubits is None else int(ancilla_qubits)
    if len(e) > 1 << k:
        raise DimensionError(f"{len(e)} branches do not fit {k} ancilla qubits")
    n = e.num_qubits
    m = np.zeros((1 << n, 1 << k), dtype=complex)
    m[:, : len(e)] = (np.sqrt(np.clip(e.probs, 0.0, None))[:, None] * e.states).T
    return Purification(n, k, m.reshape(-1))


def branch_states(p, u):
    """Columns ``sqrt(q_i)|phi_i>`` of ``Psi @ U^T``, returned one branch per row."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (p.dim_ancilla, p.dim_ancilla):
        raise DimensionError(f"unitary {u.shape} on a {p.ancilla_qubits}-qubit ancilla")
    return (p.matrix @ u.T).T


def _normalize_branches(x):
    q = np.sum(np.abs(x) ** 2, axis=1)
    states = np.zeros_like(x)
    states[:, 0] = 1.0
    for i in np.flatnonzero(q >= Q_PRUNE):
        states[i] = fix_global_phase(x[i] / np.sqrt(q[i]))
    q = np.where(q >= Q_PRUNE, q, 0.0)
    return PureStateEnsemble(q / q.sum(), states)


def ensemble_from_unitary(p, u):
    """Ensemble ``{q_i, |phi_i>}`` read off ``(I (x) U)|psi>``.

    Branches with ``q_i < Q_PRUNE`` get weight 0 and the placeholder ``|0...0>``.
    """
    check_unitary(u)
    return _normalize_branches(branch_states(p, u))


def ensemble_from_circuit(p, u):
    """Same ensemble, obtained by simulating ``U`` on the ancilla and measuring it."""
    psi = apply_unitary_on_subsystem(p.state, u, p.ancilla_register)
    q = np.zeros(p.dim_ancilla)
    x = np.zeros((p.dim_ancilla, p.dim_system), dtype=complex)
    if not p.ancilla_qubits:
        return _normalize_branches(psi[None, :])
    for br in measure_subsystem_exact(psi, p.ancilla_register):
        q[br.outcome] = br.probability
        x[br.outcome] = np.sqrt(br.probability) * br.residual
    return _normalize_branches(x)


def _ancilla_projector(p, u, i):
    u = check_unitary(u)
    e = np.zeros(p.dim_ancilla)
    e[i] = 1.0
    return dagger(u) @ np.outer(e, e) @ u


def q_operator_form(p, u, i):
    """``q_i = <psi| I (x) U^* |i><i| U |psi>``."""
    op = np.kron(np.eye(p.dim_system), _ancilla_projector(p, u, i))
    return float(np.vdot(p.state, op @ p.state).real)


def q_expanded_form(e, u, i):
    """``q_i = sum_{j,j'} sqrt(p_j p_j') <psi_j'|psi_j> U_ij conj(U_ij')`` from the defining ensemble."""
    d = len(e)
    row = np.asarray(u)[i, :d]
    amp = np.sqrt(np.clip(e.probs, 0.0, None)) * row
    gram = e.states.conj() @ e.states.T
    return float(np.real(np.conj(amp) @ gram @ amp))


def unnormalized_phi(p, u, i):
    """``Phi_i = Tr_W((I (x) U^* |i><i| U) |psi><psi|)``; trace equals ``q_i``."""
    op = np.kron(np.eye(p.dim_system), _ancilla_projector(p, u, i))
    full = op @ ketbra(p.state)
    split = BipartiteSplit.contiguous(p.system_qubits, p.ancilla_qubits)
    return partial_trace(full, split, keep="A")


def reconstruct_density(e):
    return np.einsum("i,ia,ib->ab", e.probs, e.states, e.states.conj())


def ensemble_from_density(rho, tol=NORM_TOL):
    """Eigen-ensemble of ``rho``: one branch per eigenvalue above ``tol``."""
    rho = check_density(rho)
    evals, evecs = psd_eigh(rho)
    order = np.argsort(evals)[::-1]
    keep = [k for k in order if evals[k] > tol]
    probs = evals[keep] / evals[keep].sum()
    states = np.array([fix_global_phase(evecs[:, k]) for k in keep])
    return PureStateEnsemble(probs, states)


# -- JSON ---------------------------------------------------------------------


def _pairs(z):
    return [[float(v.real), float(v.imag)] for v in np.asarray(z).reshape(-1)]


def _complex_vector(obj, where):
    if not isinstance(obj, list):
        raise InputFormatError(f"{where}: expected a list of [re, im] pairs")
    out = np.empty(len(obj), dtype=complex)
    for k, pair in enumerate(obj):
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(v, (int, float)) for v in pair)):
            raise InputFormatError(f"{where}[{k}]: expected [re, im] pair, got {pair!r}")
        out[k] = complex(pair[0], pair[1])
    return out


def _dims(obj, where):
    dims = obj.get("dims")
    if not (isinstance(dims, list) and len(dims) == 2 and all(isinstance(v, int) for v in dims)):
        raise InputFormatError(f"{where}.dims: expected [dim_a, dim_b]")
    for v in dims:
        try:
            num_qubits(v)
        except DimensionError as exc:
            raise InputFormatError(f"{where}.dims: {exc}") from None
    return dims


def ensemble_to_json(e, dims=None):
    dims = dims or [2 ** (e.num_qubits // 2), 2 ** (e.num_qubits - e.num_qubits // 2)]
    return {
        "schema_version": SCHEMA_VERSION,
        "dims": [int(v) for v in dims],
        "probs": [float(v) for v in e.probs],
        "states": [_pairs(s) for s in e.states],
    }


def ensemble_from_json(obj, where="ensemble"):
    if not isinstance(obj, dict):
        raise InputFormatError(f"{where}: expected an object")
    dims = _dims(obj, where)
    probs = obj.get("probs")
    if not isinstance(probs, list):
        raise InputFormatError(f"{where}.probs: expected a list of numbers")
    states = obj.get("states")
    if not isinstance(states, list):
        raise InputFormatError(f"{where}.states: expected a list of states")
    vecs = [_complex_vector(s, f"{where}.states[{k}]") for k, s in enumerate(states)]
    for k, v in enumerate(vecs):
        if v.shape[0] != dims[0] * dims[1]:
            raise InputFormatError(f"{where}.states[{k}]: length {v.shape[0]} != {dims[0]}*{dims[1]}")
    try:
        return PureStateEnsemble(np.array(probs, dtype=float), np.array(vecs)), dims
    except (ValueError, TypeError) as exc:
        raise InputFormatError(f"{where}: {exc}") from None


def density_to_json(rho, dims):
    rho = np.asarray(rho)
    return {
        "schema_version": SCHEMA_VERSION,
        "dims": [int(v) for v in dims],
        "matrix": [_pairs(row) for row in rho],
    }


def density_from_json(obj, where="density"):
    """Parse ``{"dims": [da, db], "matrix": [[[re, im], ...], ...]}`` and validate it."""
    if not isinstance(obj, dict):
        raise InputFormatError(f"{where}: expected an object")
    dims = _dims(obj, where)
    rows = obj.get("matrix")
    if not isinstance(rows, list):
        raise InputFormatError(f"{where}.matrix: expected a list of rows")
    dim = dims[0] * dims[1]
    if len(rows) != dim:
        raise InputFormatError(f"{where}.matrix: {len(rows)} rows, expected {dim}")
    mat = np.empty((dim, dim), dtype=complex)
    for r, row in enumerate(rows):
        vec = _complex_vector(row, f"{where}.matrix[{r}]")
        if vec.shape[0] != dim:
            raise InputFormatError(f"{where}.matrix[{r}]: {vec.shape[0]} entries, expected {dim}")
        mat[r] = vec
    try:
        return check_density(mat), dims
    except ValueError as exc:
        raise InputFormatError(f"{where}.matrix: {exc}") from None


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
