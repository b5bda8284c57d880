import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

from nctails.cli import main
from nctails.series import read_samples_csv

SCENARIOS = Path(__file__).resolve().parent.parent / "src" / "nctails" / "scenarios"
MIXED = {
    "name": "m",
    "blocks": [{"d": 1, "singular_values": [3]}, {"d": 2, "singular_values": [2, 1]}],
    "trials": 20000,
    "seed": 42,
    "t_grid": [0.5, 1, 2],
    "lambda": 4,
    "checks": [],
}


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


@pytest.fixture
def mixed_config(tmp_path):
    path = tmp_path / "mixed.json"
    path.write_text(json.dumps(MIXED))
    return path


# --- kfunc --------------------------------------------------------------------------


def test_kfunc_examples(tmp_path, capsys):
    seq = tmp_path / "a.txt"
    seq.write_text("# ones\n1\n1\n1\n1\n")
    code, out, _ = run(capsys, "kfunc", seq, "--t", "0.5", "--t", "1,2")
    assert code == 0
    table = rows(out)
    assert table[0] == ["t", "k_exact", "k_holmstedt"]
    # flat sequence of length 4: K = t * sqrt(4) up to t = 2, then ||a||_1 = 4
    assert [float(r[1]) for r in table[1:]] == pytest.approx([1.0, 2.0, 4.0])


def test_kfunc_out_file_and_zero(tmp_path, capsys):
    seq = tmp_path / "z.txt"
    seq.write_text("0\n0\n")
    out = tmp_path / "k.csv"
    code, stdout, _ = run(capsys, "kfunc", seq, "--t", "1", "--out", out)
    assert code == 0 and stdout == ""
    assert rows(out.read_text())[1] == ["1.0", "0.0", "0.0"]


def test_kfunc_errors(tmp_path, capsys):
    code, _, err = run(capsys, "kfunc", tmp_path / "missing.txt", "--t", "1")
    assert code == 3 and "missing.txt" in err
    bad = tmp_path / "bad.txt"
    bad.write_text("1\nx\n")
    code, _, err = run(capsys, "kfunc", bad, "--t", "1")
    assert code == 2 and ":2:" in err
    code, _, _ = run(capsys, "kfunc", bad, "--t", "-1")
    assert code == 2


# --- simulate -----------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["epsilon", "gauss"])
def test_simulate_variance_and_determinism(mixed_config, tmp_path, capsys, kind):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "simulate", mixed_config, "--kind", kind, "--out", a)[0] == 0
    assert run(capsys, "simulate", mixed_config, "--kind", kind, "--out", b, "--workers", "2")[0] == 0
    assert a.read_bytes() == b.read_bytes()
    x = read_samples_csv(a)
    assert x.size == 20000
    assert np.std(x, ddof=1) == pytest.approx(math.sqrt(19), rel=0.05)


def test_simulate_errors(mixed_config, tmp_path, capsys):
    code, _, err = run(capsys, "simulate", mixed_config, "--kind", "bogus", "--out", tmp_path / "x.csv")
    assert code == 2 and "unknown series kind" in err
    code, _, _ = run(capsys, "simulate", mixed_config, "--kind", "epsilon", "--out", tmp_path / "x.csv",
                     "--trials", "0")
    assert code == 2


def test_seed_precedence(tmp_path, capsys, monkeypatch):
    cfg = dict(MIXED, trials=100)
    del cfg["seed"]
    path = tmp_path / "noseed.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "s.csv"
    monkeypatch.delenv("NC_TAILS_SEED", raising=False)
    code, _, err = run(capsys, "simulate", path, "--kind", "epsilon", "--out", out)
    assert code == 2 and "seed" in err
    monkeypatch.setenv("NC_TAILS_SEED", "0x11")
    code, stdout, _ = run(capsys, "simulate", path, "--kind", "epsilon", "--out", out)
    assert code == 0 and "seed=17" in stdout
    code, stdout, _ = run(capsys, "simulate", path, "--kind", "epsilon", "--out", out, "--seed", "5")
    assert "seed=5" in stdout
    # the config seed wins over the environment, the flag over both
    with_seed = tmp_path / "seed.json"
    with_seed.write_text(json.dumps(dict(MIXED, trials=100)))
    assert "seed=42" in run(capsys, "simulate", with_seed, "--kind", "epsilon", "--out", out)[1]
    assert "seed=9" in run(capsys, "simulate", with_seed, "--kind", "epsilon", "--out", out, "--seed", "9")[1]


# --- norms --------------------------------------------------------------------------


def write_samples(path, values):
    path.write_text("trial,value\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(values)))
    return path


def test_norms_constant(tmp_path, capsys):
    path = write_samples(tmp_path / "c.csv", [2.0] * 50)
    code, out, _ = run(capsys, "norms", path, "--orlicz-p", "1", "--lorentz", "2", "inf", "--pnorms", "1,2")
    assert code == 0
    table = {r[0]: (float(r[1]), r[2]) for r in rows(out)[1:]}
    assert table["orlicz_exp p=1"][0] == pytest.approx(2 / math.log(2), rel=1e-8)
    assert table["lorentz q=2 r=inf"][0] == pytest.approx(2.0)
    assert table["lp p=1"] == (pytest.approx(2.0), "true")


def test_norms_gaussian_pnorms(mixed_config, tmp_path, capsys):
    out = tmp_path / "g.csv"
    run(capsys, "simulate", mixed_config, "--kind", "gauss", "--out", out)
    code, text, _ = run(capsys, "norms", out, "--pnorms", "2,4")
    assert code == 0
    values = [float(r[1]) for r in rows(text)[1:]]
    assert values[0] == pytest.approx(math.sqrt(19), rel=0.05)
    assert values[1] == pytest.approx(math.sqrt(19) * 3 ** 0.25, rel=0.10)


def test_norms_as_printed_reports_divergence(tmp_path, capsys):
    path = write_samples(tmp_path / "c.csv", [1.0] * 20)
    code, out, _ = run(capsys, "norms", path, "--orlicz-lorentz", "3", "1", "--weight-mode", "as_printed")
    assert code == 0
    assert rows(out)[1] == ["orlicz_lorentz p=3 r=1 as_printed", "inf", "false"]


def test_norms_errors(tmp_path, capsys):
    path = write_samples(tmp_path / "c.csv", [1.0] * 5)
    assert run(capsys, "norms", path, "--lorentz", "0", "1")[0] == 2
    assert run(capsys, "norms", path)[0] == 2
    assert run(capsys, "norms", tmp_path / "nope.csv", "--pnorms", "1")[0] == 3


# --- verify -------------------------------------------------------------------------


def test_verify_commutative(tmp_path, capsys):
    code, out, _ = run(capsys, "verify", SCENARIOS / "commutative.json", "--report", tmp_path / "rep")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 8 and all(line.startswith("PASS") for line in lines)
    assert (tmp_path / "rep" / "report.json").exists()
    assert (tmp_path / "rep" / "theorem21.png").exists()


def test_verify_unwritable_report_dir(mixed_config, tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code, _, err = run(capsys, "verify", mixed_config, "--report", blocker / "rep", "--no-figures")
    assert code == 3 and "I/O error" in err


def test_verify_config_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(dict(MIXED, checks=["nosuch"])))
    code, _, err = run(capsys, "verify", path)
    assert code == 2 and "checks/0" in err


@pytest.mark.parametrize("argv", [[], ["kfunc"], ["norms"], ["simulate"], ["verify"]])
def test_help(capsys, argv):
    assert main(argv + ["--help"]) == 0
    assert "usage" in capsys.readouterr().out


def test_no_command_is_usage_error(capsys):
    assert main([]) == 2
