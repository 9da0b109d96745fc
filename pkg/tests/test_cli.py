import json

import numpy as np
import pytest

from opsevqa.cli import EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_IO, main, werner_density
from opsevqa.ensembles import density_to_json
from opsevqa.results import ExperimentResult, read_csv


def run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def costs(path):
    _, header, rows = read_csv(path)
    return header, np.array([[float(v) for v in r] for r in rows])


def test_landscape_maximally_mixed(tmp_path):
    code, out = run(tmp_path, "landscape", "--grid", "50")
    assert code == 0
    header, grid = costs(out)
    assert header == ["theta", "phi", "cost"] and grid.shape == (2500, 3)
    assert grid[:, 2].min() >= -1e-12 and grid[:, 2].min() < 0.02
    assert grid[:, :2].min() == 0.0 and abs(grid[:, :2].max() - 2 * np.pi) < 1e-12


def test_landscape_bell_is_flat(tmp_path):
    code, out = run(tmp_path, "landscape", "--density", "bell", "--grid", "5")
    _, grid = costs(out)
    assert code == 0 and np.allclose(grid[:, 2], 0.5, atol=1e-12)


def test_landscape_single_cell_and_bad_depth(tmp_path):
    code, out = run(tmp_path, "landscape", "--grid", "1")
    assert code == 0 and costs(out)[1].shape == (1, 3)
    assert run(tmp_path, "landscape", "--depth", "3")[0] == EXIT_INVALID


def test_landscape_shots_track_exact(tmp_path):
    _, exact = run(tmp_path, "landscape", "--grid", "3", "--measure", "convex-roof-tsallis", name="a.csv")
    _, shot = run(tmp_path, "landscape", "--grid", "3", "--measure", "convex-roof-tsallis", "--shots", "100000", name="b.csv")
    diff = np.abs(costs(exact)[1][:, 2] - costs(shot)[1][:, 2])
    assert diff.max() < 5 * 4 / np.sqrt(100_000)


def test_converge_bell_eof_is_flat(tmp_path):
    code, out = run(tmp_path, "converge", "--density", "bell", "--measure", "eof", "--iters", "5", "--restarts", "2")
    assert code == 0
    _, trace = costs(out)
    assert np.allclose(trace[:, 1], 1.0, atol=1e-12)
    side = json.loads(out.with_suffix(".json").read_text())
    assert abs(side["payload"]["best_cost"] - 1.0) < 1e-12


def test_converge_zero_iterations(tmp_path):
    code, out = run(tmp_path, "converge", "--iters", "0", "--restarts", "3")
    _, trace = costs(out)
    assert code == 0 and trace.shape == (1, 3) and trace[0, 0] == 0


def test_converge_rejects_eof_on_large_system(tmp_path):
    rho = np.eye(8) / 8
    path = tmp_path / "rho.json"
    path.write_text(json.dumps(density_to_json(rho, [2, 4])))
    assert run(tmp_path, "converge", "--density", str(path), "--measure", "eof")[0] == EXIT_INVALID


def test_variance_single_k_and_determinism(tmp_path):
    args = ("variance", "--k-min", "2", "--k-max", "2", "--samples", "40", "--seed", "3")
    code, a = run(tmp_path, *args, name="a.csv")
    _, b = run(tmp_path, *args, name="b.csv")
    assert code == 0 and a.read_bytes() == b.read_bytes()
    assert json.loads(a.with_suffix(".json").read_text())["payload"]["fit"] is None
    header, rows = costs(a)
    assert header == ["k", "d", "mean_grad", "stderr_mean", "var_grad", "stderr_var", "n"]


def test_variance_reports_fit(tmp_path):
    code, out = run(tmp_path, "variance", "--k-min", "2", "--k-max", "3", "--samples", "60")
    assert code == 0
    assert json.loads(out.with_suffix(".json").read_text())["payload"]["fit"]["slope"] < 0


def test_haar_check_passes_and_negative_control_fails(tmp_path):
    args = ("haar-check", "--samples", "30000", "--fidelity-samples", "20000")
    code, out = run(tmp_path, *args, name="ok.json")
    report = json.loads(out.read_text())
    assert code == 0 and report["payload"]["passed"]
    assert len(report["payload"]["checks"]) == 3 * 11 + 10 + 4 + 1 + 8 + 1
    code, out = run(tmp_path, *args, "--corrupt-table", name="bad.json")
    report = json.loads(out.read_text())
    assert code == EXIT_CHECK_FAILED and not report["payload"]["passed"]
    failed = {c["name"] for c in report["payload"]["checks"] if not c["pass"]}
    assert failed and all(n.startswith("wg[2]") for n in failed)


def test_witness_bell(tmp_path):
    code, out = run(tmp_path, "witness", "--density", "bell", name="w.json")
    res = ExperimentResult.from_json(json.loads(out.read_text()))
    assert code == 0 and res.payload["verdict"] == "entangled-evidence"
    assert abs(res.payload["best_cost"] - 0.5) < 1e-9
    assert res.to_json() == json.loads(out.read_text())


def test_witness_needs_density(tmp_path):
    assert main(["witness"]) == EXIT_INVALID


def test_witness_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dims": [2, 2],\n "matrix": [[[1, 0]]]}')
    assert main(["witness", "--density", str(bad)]) == EXIT_INVALID
    assert "matrix" in capsys.readouterr().err
    assert main(["witness", "--density", str(tmp_path / "missing.json")]) == EXIT_IO
    garbled = tmp_path / "garbled.json"
    garbled.write_text("{\n\n  nope\n}")
    assert main(["witness", "--density", str(garbled)]) == EXIT_INVALID
    assert "line 3" in capsys.readouterr().err


def test_witness_density_file(tmp_path):
    path = tmp_path / "w.json"
    path.write_text(json.dumps(density_to_json(werner_density(0.9), [2, 2])))
    code, out = run(tmp_path, "witness", "--density", str(path), "--iters", "50", "--restarts", "1", "--depth", "4", name="v.json")
    payload = json.loads(out.read_text())["payload"]
    assert code == 0 and payload["verdict"] == "entangled-evidence"
    assert len(payload["ensemble"]["probs"]) == 4


def test_config_file_and_overrides(tmp_path):
    conf = tmp_path / "run.cfg"
    conf.write_text("# landscape settings\ngrid = 2\ndensity = bell\n")
    code, out = run(tmp_path, "landscape", "--config", str(conf))
    meta, _, rows = read_csv(out)
    assert code == 0 and len(rows) == 4 and meta["config"]["density"] == "bell"
    code, out = run(tmp_path, "landscape", "--config", str(conf), "--grid", "3")
    assert len(read_csv(out)[2]) == 9
    conf.write_text("gird = 2\n")
    assert main(["landscape", "--config", str(conf)]) == EXIT_INVALID
    conf.write_text("measure = nonsense\n")
    assert main(["landscape", "--config", str(conf)]) == EXIT_INVALID
    assert main(["landscape", "--config", str(tmp_path / "none.cfg")]) == EXIT_IO


def test_csv_provenance_line(tmp_path):
    _, out = run(tmp_path, "landscape", "--grid", "2", "--seed", "9")
    meta, _, _ = read_csv(out)
    assert meta["seed"] == 9 and meta["version"] and meta["schema_version"] == 1
    assert meta["command"] == "landscape"


def test_stdout_when_no_out(capsys):
    assert main(["landscape", "--grid", "1"]) == 0
    text = capsys.readouterr().out
    assert text.startswith("# ") and "theta,phi,cost" in text


def test_bad_flags_exit_invalid():
    with pytest.raises(SystemExit) as exc:
        main(["landscape", "--shots", "-3"])
    assert exc.value.code == EXIT_INVALID
