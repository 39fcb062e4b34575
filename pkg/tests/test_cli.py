import io
import json
import subprocess
import sys

import pytest

from positivity_lab import cli
from positivity_lab.cli import (
    ConfigError,
    cell_seed,
    load_config,
    main,
    parse_config,
    reports_from_csv,
    run_sweep,
    verify_all,
)
from positivity_lab.verification import check_induction_bound

BASE = {
    "measure": {"generator": "antipodal", "N": 4},
    "v_grid": [0],
    "eps_grid": [0.5],
    "estimators": ["positivity"],
    "reps": 4,
    "field_draws": 8,
}


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2))
    return path


def test_zero_v_row(tmp_path):
    cfg = write_config(tmp_path, BASE)
    assert main(["--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    rows = reports_from_csv((tmp_path / "out" / "results.csv").read_text())
    assert len(rows) == 1
    assert rows[0].mean == 0.5 and rows[0].stderr == 0.0 and rows[0].status == "ok"
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["config"]["v_grid"] == [0.0] and "wall_time_s" in manifest and "version" in manifest


def test_empty_grid_reports_line(tmp_path, capsys):
    cfg = write_config(tmp_path, dict(BASE, v_grid=[]))
    assert main(["--config", str(cfg), "--out", str(tmp_path / "out")]) == 1
    err = capsys.readouterr().err
    assert "v_grid" in err and "line 6" in err


@pytest.mark.parametrize("patch,key", [
    ({"eps_grid": [1.5]}, "eps_grid"),
    ({"reps": 1}, "reps"),
    ({"n_grid": [0]}, "n_grid"),
    ({"v_grid": [-1]}, "v_grid"),
    ({"estimators": ["nope"]}, "estimators"),
    ({"backend": "gpu"}, "backend"),
    ({"bogus": 1}, "bogus"),
])
def test_validation_errors(patch, key):
    text = json.dumps(dict(BASE, **patch), indent=2)
    with pytest.raises(ConfigError) as info:
        parse_config(json.loads(text), text)
    assert key in str(info.value) and info.value.line is not None


def test_bad_json_has_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "v_grid": [0,\n}')
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.line == 3


def test_measure_sources(tmp_path):
    atoms = {"dim": 2, "atoms": [{"coords": [1, 0], "weight": 1}, {"coords": [-1, 0], "weight": 1}]}
    (tmp_path / "m.json").write_text(json.dumps(atoms))
    for src in ({"file": "m.json"}, {"inline": atoms}, atoms, {"generator": "simplex", "N": 3},
                {"generator": "random", "N": 3, "M": 5, "seed": 2}, {"generator": "point_mass", "N": 2}):
        cfg = load_config(write_config(tmp_path, dict(BASE, measure=src)))
        assert cfg.measure.size >= 1


def test_seed_override_and_missing_mode(tmp_path, capsys):
    assert main([]) == 1
    cfg = write_config(tmp_path, dict(BASE, v_grid=[1.0]))
    out = tmp_path / "o"
    assert main(["--config", str(cfg), "--out", str(out), "--seed", "9"]) == 0
    assert reports_from_csv((out / "results.csv").read_text())[0].seed == cell_seed(9, "positivity", 0)


def test_cell_seed_ignores_v_and_separates_estimators():
    assert cell_seed(0, "positivity", 0) == cell_seed(0, "positivity", 0)
    assert cell_seed(0, "positivity", 0) != cell_seed(0, "fn", 0)
    assert cell_seed(0, "positivity", 0) != cell_seed(1, "positivity", 0)


def sweep_doc():
    return dict(BASE, v_grid=[0, 1, 3], eps_grid=[0.2, 0.5], n_grid=[1, 2],
                estimators=["positivity", "gg_residual", "fn", "lemma1", "concentration"],
                field_draws=100, reps=3)


def test_sweep_is_byte_identical_and_worker_independent(tmp_path):
    cfg = parse_config(sweep_doc())
    run_sweep(cfg, tmp_path / "a", workers=1)
    run_sweep(cfg, tmp_path / "b", workers=1)
    run_sweep(cfg, tmp_path / "c", workers=3)
    a = (tmp_path / "a" / "results.csv").read_bytes()
    assert a == (tmp_path / "b" / "results.csv").read_bytes() == (tmp_path / "c" / "results.csv").read_bytes()


def test_csv_roundtrip_and_error_rows(tmp_path):
    cfg = parse_config(sweep_doc())
    reports = run_sweep(cfg, tmp_path / "a")
    back = reports_from_csv((tmp_path / "a" / "results.csv").read_text())
    ok = [r for r in reports if r.status == "ok"]
    assert back == reports and len(ok) > 0
    # fn at n=1 is rejected by the estimator and surfaces as an error row
    errors = [r for r in reports if r.status == "error"]
    assert errors and all(r.estimator == "fn" and r.meta["n"] == 1 for r in errors)


def test_common_random_numbers_across_v(tmp_path):
    cfg = parse_config(dict(BASE, v_grid=[1.0, 2.0], reps=3))
    reports = run_sweep(cfg, tmp_path)
    assert reports[0].seed == reports[1].seed


def test_verify_all_passes_and_is_deterministic():
    first, second = io.StringIO(), io.StringIO()
    assert verify_all(stream=first) == 0
    assert verify_all(stream=second) == 0
    assert first.getvalue() == second.getvalue()
    assert first.getvalue().count("PASS") == len(cli.default_checks())


def test_verify_reports_injected_failure():
    def corrupted():
        check_induction_bound(1.5, 10)
        return True, ""

    stream = io.StringIO()
    code = verify_all([("induction_bound", lambda: (True, "")), ("corrupted_induction", corrupted)], stream)
    assert code == 2
    text = stream.getvalue()
    assert "FAIL  corrupted_induction" in text and "a must lie in [0, 1]" in text


def test_module_entry_point_verify():
    proc = subprocess.run([sys.executable, "-m", "positivity_lab", "--verify"], capture_output=True, text=True)
    assert proc.returncode == 0 and "all" in proc.stdout


@pytest.mark.slow
def test_demo_runs(tmp_path):
    assert main(["--demo", "--out", str(tmp_path / "demo"), "--workers", "2"]) == 0
    rows = reports_from_csv((tmp_path / "demo" / "results.csv").read_text())
    pos = [r for r in rows if r.estimator == "positivity"]
    assert pos[0].mean == 0.5 and pos[-1].mean < pos[0].mean


def test_shipped_config_matches_demo():
    from pathlib import Path

    shipped = json.loads((Path(__file__).parents[1] / "docs" / "demo_config.json").read_text())
    assert shipped == cli.DEMO_CONFIG
