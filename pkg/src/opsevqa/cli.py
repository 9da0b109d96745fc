"""``opsevqa`` command line: landscape, converge, variance, haar-check, witness.

Exit codes: 0 success, 2 invalid input or config, 3 a haar-check failed,
4 I/O error.
"""
import argparse
import os
import sys

import numpy as np

from . import __version__, haar, plateau
from .ansatz import Ansatz, EntanglerKind, OptimizerConfig, build_unitary, optimize, random_ansatz
from .ensembles import (
    InputFormatError,
    PureStateEnsemble,
    ancilla_qubits_for,
    build_purification,
    density_from_json,
    ensemble_from_density,
    ensemble_from_unitary,
    ensemble_to_json,
    load_json,
)
from .linalg import DimensionError, num_qubits, random_density, random_state
from .measures import MeasureKind, WeightFunction, default_split, estimate_cost, separability_verdict
from .results import ExperimentResult, format_csv, provenance, write_text

EXIT_OK, EXIT_INVALID, EXIT_CHECK_FAILED, EXIT_IO = 0, 2, 3, 4

MEASURES = {
    "tsallis-fd": (MeasureKind.TSALLIS2, WeightFunction.SQUARE),
    "eof": (MeasureKind.CONCURRENCE_EOF, WeightFunction.IDENTITY),
    "convex-roof-tsallis": (MeasureKind.TSALLIS2, WeightFunction.IDENTITY),
}
WEIGHTS = {"square": WeightFunction.SQUARE, "identity": WeightFunction.IDENTITY}


class ConfigError(ValueError):
    pass


# -- density sources ---------------------------------------------------------


def bell_density():
    phi = np.zeros(4, dtype=complex)
    phi[[0, 3]] = 1 / np.sqrt(2)
    return np.outer(phi, phi.conj())


def werner_density(p):
    return p * bell_density() + (1 - p) * np.eye(4) / 4


def resolve_density(source):
    """Built-in name (``maximally-mixed``, ``bell``, ``werner:P``) or a density JSON path."""
    if source == "maximally-mixed":
        return np.eye(4, dtype=complex) / 4
    if source == "bell":
        return bell_density()
    if source.startswith("werner:"):
        try:
            p = float(source.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad Werner weight in {source!r}") from None
        if not 0.0 <= p <= 1.0:
            raise ConfigError("Werner weight must lie in [0, 1]")
        return werner_density(p)
    rho, _ = density_from_json(load_json(source), where=source)
    return rho


def purification_from(args, rho):
    """Default ensemble size is the rank ``d``, on exactly ``ceil(log2 d)`` qubits.

    A pure input therefore gets an empty ancilla and is only compared with
    itself, which a larger register would not do.
    """
    e = ensemble_from_density(rho)
    k = args.ancilla_qubits
    if k is None:
        k = ancilla_qubits_for(len(e)) if len(e) > 1 else 0
    return build_purification(e, k)


def measure_from(args):
    m, f = MEASURES[args.measure]
    if args.f is not None:
        if args.measure == "convex-roof-tsallis" and args.f != "identity":
            raise ConfigError("convex-roof-tsallis fixes f = identity")
        f = WEIGHTS[args.f]
    return m, f


def check_split(m, p):
    if m is MeasureKind.CONCURRENCE_EOF and p.system_qubits != 2:
        raise ConfigError("eof needs a 2-qubit system")


# -- subcommands ---------------------------------------------------------------


def landscape_ansatz(k):
    """Two layers, generators Z...Z then X...X, both followed by a CX ladder."""
    return Ansatz(k, (("Z" * k, EntanglerKind.CX_LADDER), ("X" * k, EntanglerKind.CX_LADDER)))


def cmd_landscape(args, rng):
    if args.depth not in (None, 2):
        raise ConfigError("landscape scans exactly two free parameters (depth 2)")
    if args.grid < 1:
        raise ConfigError("grid must be at least 1")
    args.depth = 2
    rho = resolve_density(args.density)
    p = purification_from(args, rho)
    m, f = measure_from(args)
    check_split(m, p)
    split = default_split(p.system_qubits)
    a = landscape_ansatz(p.ancilla_qubits)
    axis = np.linspace(0.0, 2 * np.pi, args.grid) if args.grid > 1 else np.zeros(1)
    rows = []
    for t in axis:
        for s in axis:
            u = build_unitary(a, [t, s])
            rows.append([float(t), float(s), estimate_cost(p, u, m, f, split, args.shots, rng)])
    return {"csv": (("theta", "phi", "cost"), rows)}


def _depth_default(args, default):
    if args.depth is None:
        args.depth = max(1, default)
    if args.depth < 1:
        raise ConfigError("depth must be at least 1")
    return args.depth


def _optimizer(args):
    return OptimizerConfig(learning_rate=args.lr, max_iters=args.iters, restarts=args.restarts)


def cmd_converge(args, rng):
    rho = resolve_density(args.density)
    p = purification_from(args, rho)
    m, f = measure_from(args)
    check_split(m, p)
    split = default_split(p.system_qubits)
    depth = _depth_default(args, 2 * p.ancilla_qubits)
    a = random_ansatz(p.ancilla_qubits, depth, rng)
    res = optimize(p, a, _optimizer(args), m, f, split, rng)
    rows = []
    for it, ((cost, gnorm), theta) in enumerate(zip(res.trace, res.path)):
        if args.shots:
            cost = estimate_cost(p, build_unitary(a, theta), m, f, split, args.shots, rng)
        rows.append([it, float(cost), float(gnorm)])
    payload = {
        "best_cost": res.best_cost,
        "theta": [float(t) for t in res.theta],
        "converged": res.converged,
        "restart_best_costs": [r.best_cost for r in res.runs],
        "ansatz": [[v, e.value] for v, e in a.layers],
    }
    return {"csv": (("iter", "cost", "grad_norm"), rows), "json": payload}


def cmd_variance(args, rng):
    if args.k_min > args.k_max:
        raise ConfigError("k-min exceeds k-max")
    rho = None if args.density == "maximally-mixed" else resolve_density(args.density)
    cfg = plateau.VarianceScanConfig(
        k_range=tuple(range(args.k_min, args.k_max + 1)),
        mode=args.mode,
        depth=args.depth,
        n_samples=args.samples,
        system_qubits=2 if rho is None else num_qubits(rho.shape[0]),
        source=rho,
        layer_index=args.layer,
        seed=args.seed,
        workers=args.workers,
    )
    result = plateau.variance_scan(cfg)
    return {"csv": (plateau.CSV_COLUMNS, result.csv_rows()), "json": result.to_json()}


def run_haar_checks(n_samples, fidelity_samples, seed, table=None, dims=(4, 5, 8), sigmas=5.0):
    """Weingarten rows vs Monte Carlo, gate fidelity exact vs Monte Carlo, and ``E[q_i] = 1/d``."""
    root = np.random.SeedSequence(seed)
    s_wg, s_fid, s_q = root.spawn(3)
    checks = []
    for d, ss in zip(dims, s_wg.spawn(len(dims))):
        us = haar.haar_batch(d, n_samples, np.random.default_rng(ss))
        for ct in haar.WEINGARTEN_TABLE:
            pattern = haar.isolating_pattern(ct)
            exact = haar.monomial_integral(*pattern, d, table=table)
            mc = haar.monomial_monte_carlo(*pattern, d, n_samples, unitaries=us)
            checks.append(_check(f"wg{list(ct)}@d={d}", exact, mc.mean.real, mc.stderr, sigmas))
    frng = np.random.default_rng(s_fid)
    for d in (2, 4):
        for pair in range(5):
            u, v = haar.haar_sample(d, frng), haar.haar_sample(d, frng)
            exact = haar.avg_gate_fidelity_exact(u, v)
            est, err = haar.avg_gate_fidelity_mc(u, v, fidelity_samples, frng)
            checks.append(_check(f"favg[{pair}]@d={d}", exact, est, err, sigmas))
    qrng = np.random.default_rng(s_q)
    for k in (2, 3):
        d = 1 << k
        rho = random_density(2, qrng) if d <= 4 else None
        e = ensemble_from_density(rho) if rho is not None else _random_ensemble(d, qrng)
        mom = haar.q_moments(build_purification(e, k), max(n_samples // 100, 1000), qrng)
        for i in range(d):
            checks.append(_check(f"mean_q[{i}]@d={d}", 1.0 / d, mom.mean_q[i], mom.stderr_q[i], sigmas))
        checks.append(
            {
                "name": f"inv_q2_jensen@d={d}",
                "exact": float(d * d),
                "estimate": float(mom.mean_inv_q2.min()),
                "clip_count": mom.clip_count,
                "pass": bool(mom.mean_inv_q2.min() >= d * d),
            }
        )
    return checks


def _random_ensemble(d, rng):
    w = rng.dirichlet(np.ones(d))
    return PureStateEnsemble(w, np.array([random_state(2, rng) for _ in range(d)]))


def _check(name, exact, estimate, stderr, sigmas):
    z = (estimate - exact) / stderr if stderr > 0 else (0.0 if estimate == exact else np.inf)
    return {
        "name": name,
        "exact": float(exact),
        "estimate": float(estimate),
        "stderr": float(stderr),
        "z": float(z),
        "pass": bool(abs(z) <= sigmas),
    }


def corrupted_table():
    """Weingarten table with the ``(2,)`` entry doubled; negative control for haar-check."""
    table = dict(haar.WEINGARTEN_TABLE)
    num, den = table[(2,)]
    table[(2,)] = (tuple(2 * c for c in num), den)
    return table


def cmd_haar_check(args, rng):
    table = corrupted_table() if args.corrupt_table else None
    checks = run_haar_checks(args.samples, args.fidelity_samples, args.seed, table)
    ok = all(c["pass"] for c in checks)
    return {"json": {"passed": ok, "checks": checks}, "status": EXIT_OK if ok else EXIT_CHECK_FAILED}


def cmd_witness(args, rng):
    if args.density in (None, ""):
        raise ConfigError("witness needs --density")
    rho = resolve_density(args.density)
    p = purification_from(args, rho)
    m, f = measure_from(args)
    check_split(m, p)
    split = default_split(p.system_qubits)
    depth = _depth_default(args, plateau.depth_4design(p.ancilla_qubits))
    a = random_ansatz(p.ancilla_qubits, depth, rng)
    res = optimize(p, a, _optimizer(args), m, f, split, rng)
    verdict = separability_verdict(res.best_cost, args.threshold)
    u = build_unitary(a, res.theta)
    ens = ensemble_from_unitary(p, u)
    dims = [1 << len(split.qubits_a), 1 << len(split.qubits_b)]
    payload = {
        "verdict": verdict.verdict.value,
        "best_cost": verdict.value,
        "threshold": verdict.threshold,
        "restart_best_costs": [r.best_cost for r in res.runs],
        "ensemble": ensemble_to_json(ens, dims),
        "theta": [float(t) for t in res.theta],
    }
    if args.shots:
        payload["best_cost_shots"] = estimate_cost(p, u, m, f, split, args.shots, rng)
    return {"json": payload}


COMMANDS = {
    "landscape": cmd_landscape,
    "converge": cmd_converge,
    "variance": cmd_variance,
    "haar-check": cmd_haar_check,
    "witness": cmd_witness,
}


# -- argument parsing ----------------------------------------------------------


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"{text} is negative")
    return v


def _shared(sp):
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--shots", type=_nonneg_int, default=0, help="0 = exact probabilities")
    sp.add_argument("--out", default=None, help="output path (CSV commands also write PATH.json)")
    sp.add_argument("--config", default=None, help="flat 'key = value' file; flags override it")


def _problem(sp, density="maximally-mixed"):
    sp.add_argument("--density", default=density, help="maximally-mixed, bell, werner:P or a density JSON file")
    sp.add_argument("--measure", choices=sorted(MEASURES), default="tsallis-fd")
    sp.add_argument("--f", choices=sorted(WEIGHTS), default=None)
    sp.add_argument("--ancilla-qubits", type=_nonneg_int, default=None)
    sp.add_argument("--depth", type=int, default=None)


def _training(sp, iters=500):
    sp.add_argument("--lr", type=float, default=0.1)
    sp.add_argument("--iters", type=_nonneg_int, default=iters)
    sp.add_argument("--restarts", type=int, default=8)


def build_parser():
    parser = argparse.ArgumentParser(prog="opsevqa", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("landscape", help="cost over a (theta, phi) grid")
    _shared(sp)
    _problem(sp)
    sp.add_argument("--grid", type=int, default=50)

    sp = sub.add_parser("converge", help="optimizer trace")
    _shared(sp)
    _problem(sp)
    _training(sp)

    sp = sub.add_parser("variance", help="gradient mean/variance versus ancilla size")
    _shared(sp)
    sp.add_argument("--density", default="maximally-mixed")
    sp.add_argument("--k-min", type=int, default=2)
    sp.add_argument("--k-max", type=int, default=5)
    sp.add_argument("--samples", type=int, default=2000)
    sp.add_argument("--mode", choices=[m.value for m in plateau.SamplingMode], default="haar")
    sp.add_argument("--depth", type=int, default=None, help="ansatz mode depth (default 8k)")
    sp.add_argument("--layer", type=int, default=None)
    sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("haar-check", help="Weingarten and gate-fidelity cross-checks")
    _shared(sp)
    sp.add_argument("--samples", type=int, default=1_000_000)
    sp.add_argument("--fidelity-samples", type=int, default=100_000)
    sp.add_argument("--corrupt-table", action="store_true", help=argparse.SUPPRESS)

    sp = sub.add_parser("witness", help="separability verdict for a density")
    _shared(sp)
    _problem(sp, density=None)
    _training(sp)
    sp.add_argument("--threshold", type=float, default=1e-3)
    return parser


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def read_config(path):
    """``key = value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (t.strip() for t in line.split("=", 1))
            out[key.replace("-", "_")] = (value, lineno)
    return out


def apply_config(sp, path):
    actions = {a.dest: a for a in sp._actions if a.dest not in ("help", "config")}
    defaults = {}
    for key, (value, lineno) in read_config(path).items():
        if key not in actions:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            v = value.lower() in ("1", "true", "yes")
        else:
            try:
                v = action.type(value) if action.type else value
            except (ValueError, argparse.ArgumentTypeError):
                raise ConfigError(f"{path}:{lineno}: bad value {value!r} for {key}") from None
        if action.choices is not None and v not in action.choices:
            raise ConfigError(f"{path}:{lineno}: {key} must be one of {sorted(action.choices)}")
        defaults[key] = v
    sp.set_defaults(**defaults)


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        apply_config(_subparser(parser, args.command), args.config)
        args = parser.parse_args(argv)
    return args


def _config_echo(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "out")}


def _emit(args, out):
    meta = provenance(args.command, _config_echo(args), args.seed)
    texts = []
    if "csv" in out:
        columns, rows = out["csv"]
        texts.append(("csv", format_csv(columns, rows, meta)))
    if "json" in out:
        texts.append(("json", ExperimentResult(args.command, meta["config"], args.seed, out["json"]).dumps()))
    if args.out is None:
        for _, text in texts:
            sys.stdout.write(text)
        return
    for kind, text in texts:
        path = args.out
        if kind == "json" and "csv" in out:
            path = os.path.splitext(args.out)[0] + ".json"
        write_text(path, text)


def main(argv=None):
    try:
        args = parse_args(argv)
    except ConfigError as exc:
        print(f"opsevqa: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"opsevqa: {exc}", file=sys.stderr)
        return EXIT_IO
    rng = np.random.default_rng(args.seed)
    try:
        out = COMMANDS[args.command](args, rng)
        _emit(args, out)
    except (ConfigError, InputFormatError, DimensionError, ValueError) as exc:
        print(f"opsevqa: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"opsevqa: {exc}", file=sys.stderr)
        return EXIT_IO
    return out.get("status", EXIT_OK)


if __name__ == "__main__":
    sys.exit(main())
