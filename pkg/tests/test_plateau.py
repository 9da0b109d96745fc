import json

import numpy as np
import pytest

from opsevqa.plateau import (
    CostKind,
    GeneratorKind,
    KRecord,
    SamplingMode,
    ScanResult,
    VarianceScanConfig,
    depth_4design,
    fit_log2_slope,
    jackknife_var_stderr,
    mean_scan,
    sample_gradient,
    sample_rng,
    summarize,
    variance_scan,
)

BELL = np.outer([1, 0, 0, 1], [1, 0, 0, 1]) / 2


def cfg(**kw):
    base = dict(k_range=(2, 3), n_samples=60, seed=5)
    base.update(kw)
    return VarianceScanConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        cfg(n_samples=10)
    with pytest.raises(ValueError):
        cfg(k_range=())
    with pytest.raises(ValueError):
        cfg(k_range=(3, 2))
    with pytest.raises(ValueError):
        cfg(source=np.eye(2) / 2)
    assert depth_4design(3) == 24
    assert cfg(mode="ansatz").layer_for(2) == 8


def test_sample_is_deterministic():
    c = cfg()
    a = sample_gradient(c, 2, sample_rng(5, 2, 0))
    b = sample_gradient(c, 2, sample_rng(5, 2, 0))
    assert a == b
    assert sample_gradient(c, 2, sample_rng(5, 2, 1)) != a


def test_single_branch_source_has_zero_gradient():
    c = cfg(k_range=(0,), source=BELL, n_samples=30)
    r = variance_scan(c)
    assert r.records[0].var_grad == 0.0 and r.records[0].mean_grad == 0.0
    assert r.fit is None


def test_constant_cost_control():
    r = variance_scan(cfg(cost=CostKind.CONSTANT, k_range=(2, 3, 4)))
    for rec in r.records:
        assert rec.var_grad < 1e-28
    r = variance_scan(cfg(cost=CostKind.CONSTANT, mode=SamplingMode.ANSATZ, depth=3))
    assert max(rec.var_grad for rec in r.records) < 1e-28


def test_identity_generator_control():
    for mode in SamplingMode:
        r = variance_scan(cfg(generator=GeneratorKind.IDENTITY, mode=mode, depth=3))
        for rec in r.records:
            assert abs(rec.mean_grad) < 1e-15 and rec.var_grad < 1e-28


def test_variance_nonnegative_and_reproducible():
    a = variance_scan(cfg())
    b = variance_scan(cfg())
    assert a.to_json() == b.to_json()
    assert all(r.var_grad >= 0 for r in a.records)


def test_workers_do_not_change_results():
    a = variance_scan(cfg(workers=1), keep_samples=True)
    b = variance_scan(cfg(workers=2), keep_samples=True)
    for k in (2, 3):
        assert np.array_equal(a.samples[k], b.samples[k])


def test_stderr_shrinks_with_samples():
    small = variance_scan(cfg(k_range=(2,), n_samples=400)).records[0]
    large = variance_scan(cfg(k_range=(2,), n_samples=1600)).records[0]
    ratio = large.stderr_var / small.stderr_var
    # CLT: 1/2 for four times the samples
    assert 0.35 < ratio < 0.7


def test_jackknife_matches_brute_force(rng):
    x = rng.standard_normal(40) ** 2
    loo = np.array([np.var(np.delete(x, i), ddof=1) for i in range(40)])
    ref = np.sqrt(39 / 40 * np.sum((loo - loo.mean()) ** 2))
    assert abs(jackknife_var_stderr(x) - ref) < 1e-12
    with pytest.raises(ValueError):
        jackknife_var_stderr([1.0, 2.0])


def test_fit_recovers_exact_slope():
    recs = [KRecord(k, 1 << k, 0.0, 0.1, 2.0 ** (-1.0 * k + 3), 0.01 * 2.0 ** (-k), 100) for k in range(2, 6)]
    fit = fit_log2_slope(recs)
    assert abs(fit.slope + 1.0) < 1e-12 and abs(fit.intercept - 3.0) < 1e-12
    assert fit.ci_low < fit.slope < fit.ci_high and fit.excludes_zero
    assert fit_log2_slope(recs[:1]) is None


def test_scan_json_round_trip():
    r = variance_scan(cfg())
    back = ScanResult.from_json(json.loads(r.dumps()))
    assert back.to_json() == r.to_json()
    assert back.record(3).d == 8
    rows = r.csv_rows()
    assert len(rows) == 2 and rows[0][:2] == [2, 4]


def test_mean_scan_matches_variance_scan():
    c = cfg()
    assert mean_scan(c) == [(r.k, r.mean_grad, r.stderr_mean) for r in variance_scan(c).records]


def test_summarize():
    rec = summarize(3, np.array([1.0, 2.0, 3.0, 4.0]))
    assert rec.d == 8 and rec.mean_grad == 2.5 and abs(rec.var_grad - 5 / 3) < 1e-12


@pytest.mark.slow
def test_deep_ansatz_matches_haar():
    c = dict(k_range=(2, 3, 4), n_samples=1000, seed=11)
    haar = variance_scan(VarianceScanConfig(mode="haar", **c))
    deep = variance_scan(VarianceScanConfig(mode="ansatz", **c))
    for h, a in zip(haar.records, deep.records):
        assert abs(h.var_grad - a.var_grad) < 5 * np.hypot(h.stderr_var, a.stderr_var)


@pytest.mark.slow
def test_shallow_ansatz_exceeds_haar():
    c = dict(k_range=(5,), n_samples=4000, seed=12)
    haar = variance_scan(VarianceScanConfig(mode="haar", **c)).records[0]
    shallow = variance_scan(VarianceScanConfig(mode="ansatz", depth=1, **c)).records[0]
    assert shallow.var_grad - haar.var_grad > 5 * np.hypot(shallow.stderr_var, haar.stderr_var)
