"""Layered ansatz ``U(theta) = prod_l exp(i theta_l V_l) E_l`` and its training loop.

Layer ``F_l = exp(i theta_l V_l) E_l``. As a matrix ``U = F_1 F_2 ... F_L``,
so ``F_L`` is the first factor to act on the ancilla state. Splitting after
layer ``j`` gives ``U = L R`` with ``L = F_1 ... F_j`` and
``R = F_{j+1} ... F_L``.
"""
import enum
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .ensembles import branch_states
from .linalg import DimensionError, dagger, exp_i_theta_pauli, pauli_string_matrix
from .measures import MeasureKind, WeightFunction, cost_f_d, party_tensor
from .simulator import Circuit, apply_circuit

TWO_PI = 2.0 * np.pi
PAULI_LABELS = "IXYZ"


class EntanglerKind(enum.Enum):
    CX_LADDER = "cx_ladder"
    CZ_LADDER = "cz_ladder"
    NONE = "none"


class GradientMode(enum.Enum):
    ANALYTIC = "analytic"
    FINITE_DIFF = "finite_diff"


class GradientModeError(ValueError):
    """Analytic gradients requested for a cost that has none."""


def entangler_matrix(kind, n):
    """Ladder ``CX(0,1) CX(1,2) ...`` with ``CX(0,1)`` acting first."""
    dim = 1 << n
    if kind is EntanglerKind.NONE or n < 2:
        return np.eye(dim, dtype=complex)
    gate = "CX" if kind is EntanglerKind.CX_LADDER else "CZ"
    c = Circuit(n)
    for q in range(n - 1):
        c.add(gate, q, q + 1)
    return np.stack([apply_circuit(col, c) for col in np.eye(dim, dtype=complex)], axis=1)


@dataclass(frozen=True)
class Ansatz:
    num_qubits: int
    #: ``(pauli_label, EntanglerKind)`` per layer
    layers: tuple

    def __post_init__(self):
        layers = tuple((str(v).upper(), EntanglerKind(e)) for v, e in self.layers)
        for v, _ in layers:
            if len(v) != self.num_qubits or any(c not in PAULI_LABELS for c in v):
                raise DimensionError(f"generator {v!r} does not act on {self.num_qubits} qubits")
        object.__setattr__(self, "layers", layers)

    @property
    def depth(self):
        return len(self.layers)

    def factors(self, theta):
        """Matrices ``exp(i theta_l V_l)`` and ``E_l`` for every layer."""
        theta = self._check(theta)
        ent = {}
        out = []
        for t, (v, e) in zip(theta, self.layers):
            if e not in ent:
                ent[e] = entangler_matrix(e, self.num_qubits)
            out.append((exp_i_theta_pauli(t, v) if v else np.exp(1j * t) * np.eye(1), ent[e]))
        return out

    def _check(self, theta):
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.shape[0] != self.depth:
            raise DimensionError(f"{theta.shape[0]} angles for {self.depth} layers")
        return theta


def build_unitary(a, theta):
    u = np.eye(1 << a.num_qubits, dtype=complex)
    for rot, ent in a.factors(theta):
        u = u @ rot @ ent
    return u


def random_ansatz(num_qubits, depth, rng, entangler=EntanglerKind.CX_LADDER):
    """Layers with uniformly random non-identity Pauli generators."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    labels = []
    for _ in range(depth):
        if num_qubits == 0:
            labels.append("")
            continue
        while True:
            code = rng.integers(0, 4, size=num_qubits)
            if code.any():
                break
        labels.append("".join(PAULI_LABELS[c] for c in code))
    return Ansatz(num_qubits, tuple((v, entangler) for v in labels))


def random_theta(a, rng):
    return rng.uniform(0.0, TWO_PI, size=a.depth)


def _prefix_suffix(a, theta):
    """``prefix[j] = F_1 ... F_j`` and ``suffix[j] = F_{j+1} ... F_L`` for ``j = 0..L``."""
    fs = [rot @ ent for rot, ent in a.factors(theta)]
    dim = 1 << a.num_qubits
    prefix = [np.eye(dim, dtype=complex)]
    for f in fs:
        prefix.append(prefix[-1] @ f)
    suffix = [np.eye(dim, dtype=complex)]
    for f in reversed(fs):
        suffix.append(f @ suffix[-1])
    return prefix, suffix[::-1]


def split_at(a, theta, j):
    """``(L, V, R)`` with ``L R = U`` and ``dU/dtheta_j = i L V R``.

    ``L = F_1 ... F_j``. Because the generator multiplies the layer before
    its entangler, the operator between ``L`` and ``R`` is ``E_j^* V_j E_j``.
    """
    if not 1 <= j <= a.depth:
        raise IndexError(f"layer {j} outside 1..{a.depth}")
    prefix, suffix = _prefix_suffix(a, theta)
    return prefix[j], _spliced_generator(a, j), suffix[j]


def _spliced_generator(a, j):
    v, e = a.layers[j - 1]
    ent = entangler_matrix(e, a.num_qubits)
    gen = pauli_string_matrix(v) if v else np.eye(1, dtype=complex)
    return dagger(ent) @ gen @ ent


def grad_projector(a, theta, j, i):
    """``d/dtheta_j`` of ``U^* |i><i| U``: ``i R^* [L^* |i><i| L, V] R``."""
    left, v, right = split_at(a, theta, j)
    dim = left.shape[0]
    if not 0 <= i < dim:
        raise IndexError(f"basis index {i} outside 0..{dim - 1}")
    row = left[i]
    proj = np.outer(row.conj(), row)
    return 1j * dagger(right) @ (proj @ v - v @ proj) @ right


def unitary_derivatives(a, theta):
    """``U`` and the stack of ``dU/dtheta_j`` for all layers."""
    prefix, suffix = _prefix_suffix(a, theta)
    ders = np.stack([1j * prefix[j] @ _spliced_generator(a, j) @ suffix[j] for j in range(1, a.depth + 1)])
    return prefix[-1], ders


def tsallis_fd_value_and_grad(p, u, du, split):
    """Kernel value and gradient of ``T_{f,d}``, ``f(x) = x^2``, given ``U`` and ``dU`` stack."""
    x = party_tensor(branch_states(p, u), split)
    dx = np.stack([party_tensor(branch_states(p, dm), split) for dm in du]) if len(du) else np.zeros((0,) + x.shape, complex)
    return kernels.tsallis_fd_value_grad(x, dx)


def grad_cost_projector(p, a, theta, split):
    """Gradient from ``2 sum_i (q_i dq_i - Tr(Tr_A Phi_i d(Tr_A Phi_i)))`` via :func:`grad_projector`."""
    from .linalg import partial_trace

    u = build_unitary(a, theta)
    psi = p.matrix
    x = branch_states(p, u)
    grad = np.zeros(a.depth)
    for j in range(1, a.depth + 1):
        for i in range(p.dim_ancilla):
            dproj = grad_projector(a, theta, j, i)
            dphi = psi @ dproj.T @ dagger(psi)
            phi = np.outer(x[i], x[i].conj())
            q, dq = np.trace(phi).real, np.trace(dphi).real
            red = partial_trace(phi, split, keep="B")
            dred = partial_trace(dphi, split, keep="B")
            grad[j - 1] += 2.0 * (q * dq - np.trace(red @ dred).real)
    return grad


def cost_at(p, a, theta, m, f, split):
    return cost_f_d(p, build_unitary(a, theta), m, f, split)


def analytic_supported(m, f):
    return m is MeasureKind.TSALLIS2 and f is WeightFunction.SQUARE


def grad_cost(p, a, theta, m, f, split, mode=GradientMode.ANALYTIC, fd_step=1e-5):
    """Cost gradient; ANALYTIC is available only for ``(TSALLIS2, SQUARE)``."""
    theta = np.asarray(theta, dtype=float)
    if mode is GradientMode.ANALYTIC:
        if not analytic_supported(m, f):
            raise GradientModeError(f"no analytic gradient for ({m.name}, {f.name})")
        u, du = unitary_derivatives(a, theta)
        return tsallis_fd_value_and_grad(p, u, du, split)[1]
    grad = np.empty(theta.shape[0])
    for j in range(theta.shape[0]):
        step = np.zeros_like(theta)
        step[j] = fd_step
        grad[j] = (cost_at(p, a, theta + step, m, f, split) - cost_at(p, a, theta - step, m, f, split)) / (2 * fd_step)
    return grad


def value_and_grad(p, a, theta, m, f, split, mode, fd_step):
    if mode is GradientMode.ANALYTIC and analytic_supported(m, f):
        u, du = unitary_derivatives(a, theta)
        return tsallis_fd_value_and_grad(p, u, du, split)
    return cost_at(p, a, theta, m, f, split), grad_cost(p, a, theta, m, f, split, GradientMode.FINITE_DIFF, fd_step)


@dataclass
class OptimizerConfig:
    learning_rate: float = 0.1
    max_iters: int = 500
    grad_tol: float = 1e-6
    restarts: int = 8
    gradient_mode: GradientMode = GradientMode.ANALYTIC
    fd_step: float = 1e-5

    def __post_init__(self):
        self.gradient_mode = GradientMode(self.gradient_mode)
        if self.learning_rate <= 0 or self.fd_step <= 0:
            raise ValueError("learning_rate and fd_step must be positive")
        if self.max_iters < 0 or self.restarts < 1:
            raise ValueError("max_iters must be >= 0 and restarts >= 1")


@dataclass
class RestartRun:
    theta0: np.ndarray
    theta: np.ndarray
    best_cost: float
    converged: bool
    #: ``(cost, grad_norm)`` per iteration
    trace: list = field(default_factory=list)
    #: angles at which each trace entry was evaluated
    path: list = field(default_factory=list)


@dataclass
class OptimizeResult:
    theta: np.ndarray
    best_cost: float
    trace: list
    runs: list
    path: list = field(default_factory=list)

    @property
    def converged(self):
        return any(r.converged for r in self.runs)


def _descend(p, a, theta, cfg, m, f, split):
    mode = cfg.gradient_mode if analytic_supported(m, f) else GradientMode.FINITE_DIFF
    theta0 = theta.copy()
    best, best_theta = np.inf, theta.copy()
    trace, path = [], []
    converged = False
    for it in range(cfg.max_iters + 1):
        cost, grad = value_and_grad(p, a, theta, m, f, split, mode, cfg.fd_step)
        gnorm = float(np.linalg.norm(grad))
        trace.append((float(cost), gnorm))
        path.append(theta.copy())
        if cost < best:
            best, best_theta = float(cost), theta.copy()
        if gnorm < cfg.grad_tol:
            converged = True
            break
        if it == cfg.max_iters:
            break
        theta = np.mod(theta - cfg.learning_rate * grad, TWO_PI)
    return RestartRun(theta0, best_theta, best, converged, trace, path)


def optimize(p, a, cfg, m, f, split, rng):
    """Gradient descent with restarts; returns the best parameters seen.

    Each restart draws its initial angles from its own child stream of
    ``rng``, so results do not depend on how restarts are scheduled.
    """
    if p.ancilla_qubits != a.num_qubits:
        raise DimensionError(f"ansatz on {a.num_qubits} qubits for a {p.ancilla_qubits}-qubit ancilla")
    runs = []
    for child in rng.spawn(cfg.restarts):
        runs.append(_descend(p, a, random_theta(a, child), cfg, m, f, split))
    best = min(runs, key=lambda r: r.best_cost)
    return OptimizeResult(best.theta, best.best_cost, best.trace, runs, best.path)
