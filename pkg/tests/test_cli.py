import csv
import json
from pathlib import Path

import numpy as np
import pytest

from apglab import cli


def write_config(path: Path, runs, out_dir=None) -> Path:
    cfg = {"version": 1, "out_dir": str(out_dir or path.parent / "runs"), "runs": runs}
    path.write_text(json.dumps(cfg))
    return path


QUAD_RUN = {
    "name": "q",
    "problem": {"name": "quadratic", "diag": [1.0, 4.0], "b": [1.0, 1.0]},
    "algorithm": "fista",
    "schedule": {"kind": "classical"},
    "max_iters": 120,
}


def test_run_happy_path_writes_trace_and_report(mini_config, capsys):
    code = cli.main(["run", str(mini_config)])
    out = capsys.readouterr().out
    assert code == 0
    cfg = json.loads(mini_config.read_text())
    out_dir = Path(cfg["out_dir"])
    for run in cfg["runs"]:
        assert (out_dir / f"{run['name']}.csv").exists()
        assert (out_dir / f"{run['name']}.report.json").exists()
        assert f"run {run['name']}: pass" in out
    assert "3 runs, 0 failed" in out


def test_run_missing_config_exits_2(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "nope.json")]) == 2
    assert "error:" in capsys.readouterr().err


def test_run_invalid_json_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["run", str(bad)]) == 2


def test_run_unknown_config_key_exits_2(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"version": 1, "runs": [QUAD_RUN], "extra": 1}))
    assert cli.main(["run", str(cfg)]) == 2


def test_run_wrong_version_exits_2(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"version": 2, "runs": [QUAD_RUN]}))
    assert cli.main(["run", str(cfg)]) == 2


def test_run_inadmissible_custom_schedule_exits_3(tmp_path, capsys):
    run = dict(QUAD_RUN, schedule={"kind": "custom", "values": [1.0, 3.0]}, max_iters=1)
    cfg = write_config(tmp_path / "c.json", [run])
    assert cli.main(["run", str(cfg)]) == 3
    assert "inadmissible" in capsys.readouterr().err


def test_run_short_custom_schedule_exits_3(tmp_path):
    run = dict(QUAD_RUN, schedule={"kind": "custom", "values": [1.0, 1.5, 2.0]}, max_iters=5)
    cfg = write_config(tmp_path / "c.json", [run])
    assert cli.main(["run", str(cfg)]) == 3


def test_run_unknown_algorithm_exits_3(tmp_path):
    cfg = write_config(tmp_path / "c.json", [dict(QUAD_RUN, algorithm="newton")])
    assert cli.main(["run", str(cfg)]) == 3


def test_run_ista_with_momentum_schedule_exits_3(tmp_path):
    cfg = write_config(tmp_path / "c.json",
                       [dict(QUAD_RUN, algorithm="ista", schedule={"kind": "classical"})])
    assert cli.main(["run", str(cfg)]) == 3


def test_run_duplicate_names_exit_2(tmp_path):
    cfg = write_config(tmp_path / "c.json", [QUAD_RUN, dict(QUAD_RUN)])
    assert cli.main(["run", str(cfg)]) == 2


def test_parallel_runs_are_byte_identical_to_sequential(tmp_path, mini_config):
    seq_dir = tmp_path / "seq"
    par_dir = tmp_path / "par"
    assert cli.main(["run", str(mini_config), "--out", str(seq_dir)]) == 0
    assert cli.main(["run", str(mini_config), "--jobs", "2", "--out", str(par_dir)]) == 0
    for csv in sorted(seq_dir.glob("*.csv")):
        assert csv.read_bytes() == (par_dir / csv.name).read_bytes()


def test_apg_seed_overrides_config_seed(tmp_path, monkeypatch):
    run = {
        "name": "l",
        "problem": {"name": "lasso", "dim": 4, "seed": 1},
        "algorithm": "fista",
        "schedule": {"kind": "classical"},
        "max_iters": 80,
    }
    cfg = write_config(tmp_path / "c.json", [run])
    monkeypatch.delenv("APG_SEED", raising=False)
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "a")]) == 0
    monkeypatch.setenv("APG_SEED", "123")
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "b")]) == 0
    base = (tmp_path / "a" / "l.csv").read_bytes()
    fuzzed = (tmp_path / "b" / "l.csv").read_bytes()
    assert base != fuzzed

    monkeypatch.setenv("APG_SEED", "not-a-number")
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "c")]) == 2


def test_schedule_table_shows_golden_ratio_second_step(capsys):
    assert cli.main(["schedule", "classical", "--n", "3"]) == 0
    out = capsys.readouterr().out
    assert "1.61803398875" in out
    assert "admissibility: ok" in out
    assert "kappa bound" in out


def test_schedule_chambolle_alpha_column(capsys):
    assert cli.main(["schedule", "chambolle_dossal", "--rho", "2", "--n", "4"]) == 0
    rows = [line.split() for line in capsys.readouterr().out.splitlines()[1:5]]
    alpha = [float(r[2]) for r in rows]
    n = np.arange(1, 5, dtype=float)
    np.testing.assert_allclose(alpha, (n - 1.0) / (n + 2.0), rtol=1e-11)


def test_schedule_single_row_table(capsys):
    assert cli.main(["schedule", "constant", "--tau", "1.5", "--n", "1"]) == 0
    assert "tau sup bound: 1.5" in capsys.readouterr().out


def test_schedule_gate_failures_exit_3(capsys):
    assert cli.main(["schedule", "aujol_dossal", "--a", "1", "--d", "1", "--n", "5"]) == 3
    assert cli.main(["schedule", "custom", "--values", "1,3", "--n", "2"]) == 3
    assert cli.main(["schedule", "custom", "--values", "1,zap", "--n", "2"]) == 3
    assert cli.main(["schedule", "classical", "--n", "0"]) == 3
    capsys.readouterr()


def test_plotdata_writes_dat_and_svg(tmp_path, mini_config):
    assert cli.main(["run", str(mini_config)]) == 0
    out_dir = Path(json.loads(mini_config.read_text())["out_dir"])
    plots = tmp_path / "plots"
    code = cli.main(["plotdata", str(out_dir / "quad-fista.csv"), str(out_dir / "quad-ista.csv"),
                     "--quantity", "h_gap", "--loglog", "--out", str(plots)])
    assert code == 0
    svg = (plots / "h_gap.svg").read_text()
    assert svg.startswith("<svg")
    for stem in ("quad-fista", "quad-ista"):
        lines = (plots / f"{stem}.h_gap.dat").read_text().splitlines()
        assert len(lines) > 50
        first = lines[0].split()
        assert int(first[0]) == 1
        float(first[1])


def test_plotdata_uses_sibling_report_reference(tmp_path, mini_config):
    assert cli.main(["run", str(mini_config)]) == 0
    out_dir = Path(json.loads(mini_config.read_text())["out_dir"])
    plots = tmp_path / "plots"
    assert cli.main(["plotdata", str(out_dir / "quad-fista.csv"), "--quantity", "h_gap",
                     "--out", str(plots)]) == 0
    report = json.loads((out_dir / "quad-fista.report.json").read_text())
    gap_first = float((plots / "quad-fista.h_gap.dat").read_text().split("\n")[0].split()[1])
    with open(out_dir / "quad-fista.csv") as fh:
        row = next(csv.DictReader(fh))
    assert gap_first == pytest.approx(float(row["h_xn"]) - report["reference"]["min_h"], rel=1e-12)

    override = tmp_path / "plots2"
    assert cli.main(["plotdata", str(out_dir / "quad-fista.csv"), "--quantity", "h_gap",
                     "--min-h", "-1.0", "--out", str(override)]) == 0
    forced = float((override / "quad-fista.h_gap.dat").read_text().split("\n")[0].split()[1])
    assert forced == pytest.approx(float(row["h_xn"]) + 1.0, rel=1e-12)


def test_plotdata_missing_trace_exits_2(tmp_path, capsys):
    assert cli.main(["plotdata", str(tmp_path / "ghost.csv"), "--quantity", "sigma"]) == 2


def test_plotdata_rejects_unknown_quantity(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["plotdata", str(tmp_path / "x.csv"), "--quantity", "entropy"])
    assert exc.value.code == 2


def test_no_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2
