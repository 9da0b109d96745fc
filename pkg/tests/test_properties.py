"""Property-based checks of the invariants shared by all modules."""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from opsevqa.ansatz import build_unitary, grad_projector, random_ansatz, random_theta
from opsevqa.ensembles import (
    PureStateEnsemble,
    build_purification,
    ensemble_from_unitary,
    reconstruct_density,
)
from opsevqa.haar import haar_sample
from opsevqa.linalg import is_unitary, random_state
from opsevqa.measures import (
    MeasureKind,
    WeightFunction,
    concurrence,
    cost_f_d,
    default_split,
    eof_from_concurrence,
    measure,
    tsallis_fd_succinct,
    von_neumann_pure,
)
from opsevqa.simulator import Circuit, apply_circuit

SPLIT = default_split(2)
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def ensemble(rng, d):
    return PureStateEnsemble(rng.dirichlet(np.ones(d)), np.array([random_state(2, rng) for _ in range(d)]))


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_faithfulness(seed):
    rng = np.random.default_rng(seed)
    product = np.kron(random_state(1, rng), random_state(1, rng))
    generic = random_state(2, rng)
    schmidt = np.linalg.svd(generic.reshape(2, 2), compute_uv=False) ** 2
    for kind in MeasureKind:
        assert measure(kind, product, SPLIT) < 1e-9
        if 1 - np.sum(schmidt**2) > 1e-6:
            assert measure(kind, generic, SPLIT) > 0


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_local_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    psi = random_state(2, rng)
    local = np.kron(haar_sample(2, rng), haar_sample(2, rng))
    for kind in MeasureKind:
        assert abs(measure(kind, local @ psi, SPLIT) - measure(kind, psi, SPLIT)) < 1e-9


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_concurrence_entropy_consistency(seed):
    psi = random_state(2, np.random.default_rng(seed))
    assert abs(von_neumann_pure(psi, SPLIT) - eof_from_concurrence(concurrence(psi))) < 1e-9


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=4))
def test_succinct_identity_and_positivity(seed, d):
    rng = np.random.default_rng(seed)
    p = build_purification(ensemble(rng, d))
    u = haar_sample(p.dim_ancilla, rng)
    direct = cost_f_d(p, u, MeasureKind.TSALLIS2, WeightFunction.SQUARE, SPLIT)
    assert abs(direct - tsallis_fd_succinct(p, u, SPLIT)) < 1e-9
    for kind in MeasureKind:
        for f in WeightFunction:
            assert cost_f_d(p, u, kind, f, SPLIT) >= -1e-12


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=3), st.integers(min_value=2, max_value=4))
def test_splitting_decay(seed, d, n):
    rng = np.random.default_rng(seed)
    e = ensemble(rng, d)
    p = build_purification(e)
    base = cost_f_d(p, np.eye(p.dim_ancilla), MeasureKind.TSALLIS2, WeightFunction.SQUARE, SPLIT)
    q = build_purification(e.split_branches(n))
    split_cost = cost_f_d(q, np.eye(q.dim_ancilla), MeasureKind.TSALLIS2, WeightFunction.SQUARE, SPLIT)
    assert abs(split_cost - base / n) < 1e-9


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=4))
def test_trace_and_density_conservation(seed, d):
    rng = np.random.default_rng(seed)
    e = ensemble(rng, d)
    p = build_purification(e)
    u = haar_sample(p.dim_ancilla, rng)
    out = ensemble_from_unitary(p, u)
    assert abs(out.probs.sum() - 1) < 1e-9
    assert np.max(np.abs(reconstruct_density(out) - reconstruct_density(e))) < 1e-9


@settings(max_examples=40, deadline=None)
@given(seeds, st.lists(st.sampled_from(["H", "X", "Y", "Z", "RX", "RY", "RZ", "CX", "CZ", "SWAP", "CSWAP"]), max_size=12))
def test_circuits_preserve_norm(seed, kinds):
    rng = np.random.default_rng(seed)
    c = Circuit(3)
    for kind in kinds:
        width = {"CX": 2, "CZ": 2, "SWAP": 2, "CSWAP": 3}.get(kind, 1)
        param = float(rng.uniform(0, 2 * np.pi)) if kind.startswith("R") else None
        c.add(kind, *rng.permutation(3)[:width], param=param)
    psi = random_state(3, rng)
    assert abs(np.linalg.norm(apply_circuit(psi, c)) - 1) < 1e-9


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=3), st.integers(min_value=1, max_value=12))
def test_ansatz_unitary_and_probability_flow(seed, k, depth):
    rng = np.random.default_rng(seed)
    a = random_ansatz(k, depth, rng)
    t = random_theta(a, rng)
    assert is_unitary(build_unitary(a, t))
    j = int(rng.integers(1, depth + 1))
    total = sum(grad_projector(a, t, j, i) for i in range(1 << k))
    assert np.max(np.abs(total)) < 1e-9
