import csv
import json
import math

import pytest

from barron_ground.cli import build_parser, fmt, main

ONE = {"dim": 1, "coeffs": [{"k": [0], "v": 1.0}]}
VCOS = {"dim": 1, "coeffs": [{"k": [0], "v": 1.0}, {"k": [1], "v": 0.5}]}


@pytest.fixture
def files(tmp_path):
    for name, data in {"one.json": ONE, "v.json": VCOS, "neg.json": {"dim": 1, "coeffs": [{"k": [0], "v": -2.0}]}}.items():
        (tmp_path / name).write_text(json.dumps(data))
    (tmp_path / "bad.json").write_text("{not json")
    return tmp_path


def run(tmp_path, *args):
    return main(["--out-dir", str(tmp_path / "out"), *[str(a) for a in args]])


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_reference_constant(files):
    assert run(files, "reference", files / "one.json", "--cutoff", "8") == 0
    truth = json.loads((files / "out" / "truth.json").read_text())
    assert truth["lambda0"] == pytest.approx(1.0, abs=1e-12)
    assert truth["gap"] == pytest.approx(math.pi**2, abs=1e-10)


def test_exit_codes(files, capsys):
    assert run(files, "reference", files / "bad.json") == 2
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 2 and err["error"] == "InvalidInputError"
    assert run(files, "reference", files / "neg.json") == 3
    assert json.loads(capsys.readouterr().err)["error"] == "AssumptionViolation"
    assert run(files, "reference", files / "missing.json") == 2
    assert run(files, "stability", files / "v.json", "--trials", "0") == 2
    with pytest.raises(SystemExit) as exc:
        run(files, "bounds", "--B", "1")
    assert exc.value.code == 2


def test_numeric_exit_code(files):
    (files / "big.json").write_text(json.dumps({"dim": 3, "coeffs": [{"k": [0, 0, 0], "v": 1.0}]}))
    assert run(files, "reference", files / "big.json", "--cutoff", "40") == 4


def test_bounds_table(files):
    assert run(files, "bounds", "--B", "1", "--m", "16", "--n", "1000000", "--delta", "0.1", "--vmax", "1") == 0
    table = {r["quantity"]: r["value"] for r in rows(files / "out" / "bounds.csv")}
    assert float(table["M_F"]) == 16.0
    assert table["oracle_rhs"] == ""
    data = json.loads((files / "out" / "bounds.json").read_text())
    assert data["seed"] == 0 and data["status"].startswith("infeasible")


def test_solve_constant_and_trace(files, capsys):
    assert run(files, "--seed", "3", "solve", files / "one.json", "--n", "1024", "--m", "32", "--steps", "40", "--refit-every", "10") == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("solve seed=3 m=32")
    excess = float(line.split("excess=")[1].split()[0])
    assert excess <= 1e-6
    trace = rows(files / "out" / "solve_trace.csv")
    assert list(trace[0]) == ["step", "E_n"] and len(trace) == 40
    data = json.loads((files / "out" / "solve.json").read_text())
    assert data["seed"] == 3 and data["config"]["seed"] == 3


def test_solve_default_width_echo(files):
    assert run(files, "solve", files / "v.json", "--n", "4096", "--steps", "2") == 0
    data = json.loads((files / "out" / "solve.json").read_text())
    assert data["config"]["m"] == 64 and data["config"]["tau"] == 8.0


def test_solve_config_file(files, capsys):
    (files / "cfg.json").write_text(json.dumps({"n": 128, "steps": 3, "bogus": 1}))
    assert run(files, "solve", files / "v.json", "--config", files / "cfg.json") == 2
    assert "bogus" in json.loads(capsys.readouterr().err)["message"]
    (files / "cfg.json").write_text(json.dumps({"n": 128, "steps": 3, "optimizer": "pgd"}))
    assert run(files, "solve", files / "v.json", "--config", files / "cfg.json", "--steps", "5") == 0
    data = json.loads((files / "out" / "solve.json").read_text())
    assert data["config"]["optimizer"] == "pgd" and data["config"]["steps"] == 5


def test_truth_round_trip(files, capsys):
    assert run(files, "reference", files / "v.json", "--cutoff", "32") == 0
    args = ["solve", files / "v.json", "--n", "128", "--steps", "10"]
    assert run(files, *args, "--cutoff", "32", "--out", files / "a") == 0
    assert run(files, *args, "--truth", files / "out" / "truth.json", "--out", files / "b") == 0
    assert (files / "a.json").read_bytes() == (files / "b.json").read_bytes()


def test_barron_csv(files):
    assert run(files, "barron", files / "v.json", "--s", "2", "--cutoffs", "8,16,32,64") == 0
    out = rows(files / "out" / "barron.csv")
    assert [r["K"] for r in out] == ["8", "16", "32", "64"]
    assert float(out[-1]["rel_change"]) < 1e-3


def test_stability_and_approx(files):
    assert run(files, "stability", files / "v.json", "--trials", "20") == 0
    out = rows(files / "out" / "stability.csv")
    assert len(out) == 20 and all(r["violated"] == "0" for r in out)
    assert run(files, "approx", "--m-list", "8,16", "--seeds", "0,1", "--steps", "30", "--refit-every", "10") == 0
    out = rows(files / "out" / "approx.csv")
    assert [r["m"] for r in out] == ["8", "16"] and all(r["within_bound"] == "1" for r in out)


def test_sweep_outputs(files):
    assert run(files, "sweep", files / "one.json", "--n-list", "16,32,64", "--steps", "4", "--refit-every", "2", "--cutoff", "4") == 0
    out = rows(files / "out" / "sweep.csv")
    assert list(out[0]) == ["seed", "n", "m", "energy", "excess", "p_perp_l2", "p_perp_h1"]
    assert len(out) == 15
    summary = json.loads((files / "out" / "sweep.json").read_text())
    assert summary["slope"] is None and summary["seeds"] == [0, 1, 2, 3, 4]


def test_help_lists_flags(capsys):
    parser = build_parser()
    for verb, flag in [("reference", "--cutoff"), ("solve", "--refit-every"), ("sweep", "--n-list"), ("bounds", "--vmax"),
                       ("stability", "--trials"), ("approx", "--m-list"), ("barron", "--cutoffs")]:
        with pytest.raises(SystemExit):
            parser.parse_args([verb, "--help"])
        text = capsys.readouterr().out
        assert flag in text and "--seed" in text and "--out-dir" in text


def test_global_flags_after_verb(files):
    assert run(files, "bounds", "--B", "1", "--m", "4", "--n", "100", "--vmax", "1", "--seed", "9") == 0
    assert json.loads((files / "out" / "bounds.json").read_text())["seed"] == 9


def test_float_format_round_trips():
    for v in (math.pi, 1e-300, 0.1, -2.5e17):
        assert float(fmt(v)) == v
    assert fmt(None) == "" and fmt(3) == "3"
