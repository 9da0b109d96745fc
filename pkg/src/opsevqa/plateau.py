"""Monte Carlo scans of the cost gradient ``d/dtheta_j T_{f,d}`` across ancilla sizes.

Two ways to draw the circuit around the differentiated layer:

* ``HAAR_EXACT``: ``U = L R`` with ``L`` and ``R`` independent Haar unitaries
  and a random Pauli generator ``V`` spliced in, so ``dU = i L V R``.
* ``ANSATZ``: a random layered ansatz with random angles, differentiated at
  layer ``j``.

Every sample gets its own generator seeded by ``SeedSequence(seed,
spawn_key=(k, s))``, so a scan gives the same numbers at any worker count.
"""
import enum
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import __version__, kernels
from .ansatz import _prefix_suffix, _spliced_generator, random_ansatz, random_theta
from .ensembles import branch_states, build_purification, ensemble_from_density
from .haar import haar_sample
from .linalg import DimensionError, check_density, pauli_string_matrix
from .measures import default_split, party_tensor

SCHEMA_VERSION = 1
MIN_SAMPLES = 30
Z95 = 1.959963984540054
CSV_COLUMNS = ("k", "d", "mean_grad", "stderr_mean", "var_grad", "stderr_var", "n")


def depth_4design(k):
    """Default ansatz depth treated as deep enough to mimic Haar: ``8 k`` layers."""
    return 8 * k


class SamplingMode(enum.Enum):
    HAAR_EXACT = "haar"
    ANSATZ = "ansatz"


class CostKind(enum.Enum):
    TSALLIS_FD = "tsallis_fd"
    #: ``sum_i q_i``, identically 1; its gradient is a zero control
    CONSTANT = "constant"


class GeneratorKind(enum.Enum):
    RANDOM_PAULI = "random_pauli"
    IDENTITY = "identity"


@dataclass
class VarianceScanConfig:
    k_range: tuple = (2, 3, 4, 5)
    mode: SamplingMode = SamplingMode.HAAR_EXACT
    #: ANSATZ depth; ``None`` means :func:`depth_4design` per ``k``
    depth: Optional[int] = None
    n_samples: int = 2000
    system_qubits: int = 2
    #: source density; ``None`` is the maximally mixed state
    source: Optional[np.ndarray] = None
    #: 1-based layer differentiated in ANSATZ mode; ``None`` is the middle layer
    layer_index: Optional[int] = None
    seed: int = 0
    cost: CostKind = CostKind.TSALLIS_FD
    generator: GeneratorKind = GeneratorKind.RANDOM_PAULI
    workers: int = 1

    def __post_init__(self):
        self.k_range = tuple(int(k) for k in self.k_range)
        self.mode = SamplingMode(self.mode)
        self.cost = CostKind(self.cost)
        self.generator = GeneratorKind(self.generator)
        if not self.k_range:
            raise ValueError("k_range is empty")
        if list(self.k_range) != sorted(set(self.k_range)):
            raise ValueError("k_range must be strictly ascending")
        if self.n_samples < MIN_SAMPLES:
            raise ValueError(f"need at least {MIN_SAMPLES} samples per k, got {self.n_samples}")
        if self.depth is not None and self.depth < 1:
            raise ValueError("depth must be at least 1")
        if self.source is not None:
            self.source = check_density(self.source)
            if self.source.shape[0] != 1 << self.system_qubits:
                raise DimensionError("source density does not match system_qubits")

    def source_density(self):
        if self.source is not None:
            return self.source
        dim = 1 << self.system_qubits
        return np.eye(dim, dtype=complex) / dim

    def depth_for(self, k):
        return depth_4design(k) if self.depth is None else self.depth

    def layer_for(self, k):
        depth = self.depth_for(k)
        j = (depth + 1) // 2 if self.layer_index is None else self.layer_index
        if not 1 <= j <= depth:
            raise ValueError(f"layer {j} outside 1..{depth}")
        return j

    def echo(self):
        out = asdict(self)
        out["mode"] = self.mode.value
        out["cost"] = self.cost.value
        out["generator"] = self.generator.value
        out["k_range"] = list(self.k_range)
        out["source"] = None if self.source is None else [[[float(z.real), float(z.imag)] for z in row] for row in self.source]
        return out


def sample_rng(seed, k, s):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k, s)))


def purification_for(cfg, k):
    e = ensemble_from_density(cfg.source_density())
    if len(e) > 1 << k:
        raise DimensionError(f"rank {len(e)} source does not fit {k} ancilla qubits")
    return build_purification(e, k)


def _random_pauli(k, rng):
    while True:
        code = rng.integers(0, 4, size=k)
        if code.any() or k == 0:
            return "".join("IXYZ"[c] for c in code)


def _splice(cfg, k, rng):
    """``(L, V, R)`` for one draw."""
    d = 1 << k
    if cfg.mode is SamplingMode.HAAR_EXACT:
        left, right = haar_sample(d, rng), haar_sample(d, rng)
        if cfg.generator is GeneratorKind.IDENTITY:
            v = np.eye(d, dtype=complex)
        else:
            v = pauli_string_matrix(_random_pauli(k, rng))
        return left, v, right
    a = random_ansatz(k, cfg.depth_for(k), rng)
    theta = random_theta(a, rng)
    j = cfg.layer_for(k)
    prefix, suffix = _prefix_suffix(a, theta)
    v = np.eye(d, dtype=complex) if cfg.generator is GeneratorKind.IDENTITY else _spliced_generator(a, j)
    return prefix[j], v, suffix[j]


def sample_gradient(cfg, k, rng, purification=None):
    """One draw of ``d/dtheta_j`` of the configured cost."""
    p = purification_for(cfg, k) if purification is None else purification
    left, v, right = _splice(cfg, k, rng)
    u = left @ right
    du = 1j * left @ v @ right
    x = branch_states(p, u)
    dx = branch_states(p, du)
    if cfg.cost is CostKind.CONSTANT:
        return float(2.0 * np.sum(np.conj(x) * dx).real)
    split = default_split(p.system_qubits)
    _, grad = kernels.tsallis_fd_value_grad(party_tensor(x, split), party_tensor(dx, split)[None])
    return float(grad[0])


def _sample_block(args):
    cfg, k, start, stop = args
    p = purification_for(cfg, k)
    return [sample_gradient(cfg, k, sample_rng(cfg.seed, k, s), p) for s in range(start, stop)]


def draw_samples(cfg, k):
    """All gradient draws for one ``k``, in sample order."""
    n = cfg.n_samples
    if cfg.workers <= 1:
        return np.array(_sample_block((cfg, k, 0, n)))
    edges = np.linspace(0, n, cfg.workers + 1).astype(int)
    jobs = [(cfg, k, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        parts = list(pool.map(_sample_block, jobs))
    return np.concatenate([np.asarray(part) for part in parts])


def jackknife_var_stderr(x):
    """Jackknife standard error of the unbiased sample variance."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 3:
        raise ValueError("jackknife needs at least 3 samples")
    s, q = x.sum(), np.sum(x * x)
    rest_s = s - x
    loo = (q - x * x - rest_s * rest_s / (n - 1)) / (n - 2)
    return float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))


@dataclass
class KRecord:
    k: int
    d: int
    mean_grad: float
    stderr_mean: float
    var_grad: float
    stderr_var: float
    n: int


def summarize(k, samples):
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    return KRecord(
        k=int(k),
        d=1 << int(k),
        mean_grad=float(samples.mean()),
        stderr_mean=float(samples.std(ddof=1) / np.sqrt(n)),
        var_grad=float(max(samples.var(ddof=1), 0.0)),
        stderr_var=jackknife_var_stderr(samples),
        n=int(n),
    )


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    slope_stderr: float
    ci_low: float
    ci_high: float

    @property
    def excludes_zero(self):
        return self.ci_high < 0.0 or self.ci_low > 0.0


def fit_log2_slope(records):
    """Weighted least squares of ``log2 var`` on ``k``; ``None`` if it is undefined.

    Weights are ``1 / sigma_y^2`` with ``sigma_y = stderr_var / (var ln 2)``
    (delta method). The 95% interval treats the weights as known variances.
    """
    if len(records) < 2 or any(r.var_grad <= 0 or r.stderr_var <= 0 for r in records):
        return None
    k = np.array([r.k for r in records], dtype=float)
    var = np.array([r.var_grad for r in records])
    y = np.log2(var)
    sigma = np.array([r.stderr_var for r in records]) / (var * np.log(2.0))
    w = 1.0 / sigma**2
    design = np.stack([np.ones_like(k), k], axis=1)
    cov = np.linalg.inv(design.T @ (w[:, None] * design))
    beta = cov @ design.T @ (w * y)
    se = float(np.sqrt(cov[1, 1]))
    slope = float(beta[1])
    return SlopeFit(slope, float(beta[0]), se, slope - Z95 * se, slope + Z95 * se)


@dataclass
class ScanResult:
    records: list
    fit: Optional[SlopeFit]
    seed: int
    config: dict
    version: str = __version__
    schema_version: int = SCHEMA_VERSION
    samples: dict = field(default_factory=dict, repr=False)

    def record(self, k):
        for r in self.records:
            if r.k == k:
                return r
        raise KeyError(k)

    def to_json(self):
        return {
            "schema_version": self.schema_version,
            "version": self.version,
            "seed": self.seed,
            "config": self.config,
            "records": [asdict(r) for r in self.records],
            "fit": None if self.fit is None else asdict(self.fit),
        }

    @classmethod
    def from_json(cls, obj):
        fit = obj.get("fit")
        return cls(
            records=[KRecord(**r) for r in obj["records"]],
            fit=None if fit is None else SlopeFit(**fit),
            seed=obj["seed"],
            config=obj["config"],
            version=obj["version"],
            schema_version=obj["schema_version"],
        )

    def csv_rows(self):
        return [[getattr(r, c) for c in CSV_COLUMNS] for r in self.records]

    def dumps(self):
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def variance_scan(cfg, keep_samples=False):
    """Per-``k`` gradient statistics and the fitted ``log2`` variance slope."""
    records, samples = [], {}
    for k in cfg.k_range:
        draws = draw_samples(cfg, k)
        records.append(summarize(k, draws))
        if keep_samples:
            samples[k] = draws
    return ScanResult(records, fit_log2_slope(records), cfg.seed, cfg.echo(), samples=samples)


def mean_scan(cfg):
    """``(k, mean_grad, stderr_mean)`` for each ``k``."""
    return [(r.k, r.mean_grad, r.stderr_mean) for r in variance_scan(cfg).records]
