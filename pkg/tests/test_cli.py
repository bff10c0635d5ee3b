import json

import jsonschema
import numpy as np
import pytest

from polyrec.cli import main
from polyrec.core import DenseSet, GridSet, write_grid, write_set
from polyrec.schemas import SCHEMAS, SCHEMA_VERSION


@pytest.fixture
def files(tmp_path):
    A = DenseSet.from_members(60, [a for a in range(1, 61) if a % 3 != 1])
    B = GridSet(np.random.default_rng(0).random((12, 12)) < 0.5)
    write_set(A, tmp_path / "A.txt")
    write_grid(B, tmp_path / "B.txt")
    return tmp_path


def run(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out.read_text() if out.exists() else None


def run_json(argv, tmp_path):
    code, text = run(argv, tmp_path)
    assert code == 0
    doc = json.loads(text)
    assert doc["schema_version"] == SCHEMA_VERSION
    jsonschema.validate(doc, SCHEMAS[doc["command"]])
    return doc


def test_counterexample_build(files):
    doc = run_json(["counterexample", "build", "--poly", "0,1", "--L", "2"], files)
    assert (doc["a"], doc["M"], doc["period"], doc["block"]) == (3, 36, 108, [37, 72])


def test_profile_csv_single_row(files):
    code, text = run(["profile", "--set", str(files / "A.txt"), "--poly", "0,1", "--L", "0",
                      "--format", "csv"], files, "p.csv")
    assert code == 0
    assert text == "n,Pn,count,ratio\n0,0,40,0.6666666666666666\n"


def test_weyl_eval_alternating(files):
    doc = run_json(["weyl", "eval", "--mu", "4", "--alpha", "1/2", "--k", "1"], files)
    assert abs(doc["re"]) < 1e-12 and abs(doc["im"]) < 1e-12


ALL_JSON_COMMANDS = [
    ["profile", "--set", "{A}", "--poly", "1,1", "--L", "5", "--format", "json"],
    ["returns", "--set", "{A}", "--poly", "0,1", "--L", "7", "--eps", "1/10"],
    ["weyl", "relations", "--lambda", "4", "--mu", "6", "--q", "2", "--k", "2", "--samples", "8"],
    ["weyl", "scan", "--eta", "1/2", "--mu", "20", "--k", "2", "--samples", "50", "--seed", "3"],
    ["arcs", "member", "--eta", "1/2", "--lambda", "8", "--mu", "8", "--alpha", "1/8"],
    ["arcs", "overlap", "--eta", "9/10", "--windows", "3:3,50:50", "--alpha", "1/8"],
    ["spectral", "identity", "--set", "{B}", "--lambda", "1", "--mu", "2"],
    ["spectral", "mass", "--set", "{B}", "--eta", "9/10", "--lambda", "3", "--mu", "3",
     "--pulled-back", "--riemann", "1/512"],
    ["dichotomy", "--set", "{B}", "--eta", "9/10", "--eps", "1/20", "--lambda", "3", "--mu", "3"],
    ["lift", "--set", "{A}", "--poly", "1", "--eps", "1/10", "--L", "3", "--tile-side", "6"],
    ["counterexample", "verify", "--poly", "1,1", "--L", "3", "--j-max", "2"],
    ["experiment", "khintchine", "--generator", "random:1/2", "--N", "400", "--poly", "0,1",
     "--eps", "1/20", "--trials", "3", "--seed", "5"],
]


@pytest.mark.parametrize("argv", ALL_JSON_COMMANDS, ids=lambda a: " ".join(a[:2]))
def test_json_outputs_validate_and_repeat(argv, files, monkeypatch):
    argv = [a.format(A=files / "A.txt", B=files / "B.txt") for a in argv]
    first = run_json(argv, files)
    code, text = run(argv, files, "again.json")
    monkeypatch.setenv("POLYREC_THREADS", "4")
    code4, text4 = run(argv, files, "threads.json")
    assert code == code4 == 0
    assert text == text4 == json.dumps(first, sort_keys=True, indent=2) + "\n"


def test_svg_outputs(files):
    code, text = run(["returns", "--set", str(files / "A.txt"), "--poly", "0,1", "--L", "5",
                      "--eps", "1/10", "--format", "svg"], files, "r.svg")
    assert code == 0 and text.startswith("<svg")


def test_exit_codes(files, capsys):
    assert main(["profile", "--set", str(files / "A.txt"), "--poly", "0,1"]) == 1  # missing --L
    assert main(["profile", "--set", str(files / "missing.txt"), "--poly", "1", "--L", "1"]) == 1
    assert main(["returns", "--set", str(files / "A.txt"), "--poly", "1", "--L", "1",
                 "--eps", "2"]) == 2
    assert main(["counterexample", "build", "--poly", "0,-1", "--L", "2"]) == 2
    assert main(["arcs", "member", "--eta", "1/200", "--lambda", "9", "--mu", "9",
                 "--alpha", "0,0"]) == 3
    assert main(["weyl", "scan", "--eta", "1/20", "--mu", "20", "--k", "2", "--samples", "5"]) == 2
    assert main(["weyl", "eval", "--mu", "4", "--alpha", "x", "--k", "1"]) == 1
    capsys.readouterr()


def test_bad_thread_env(files, monkeypatch):
    monkeypatch.setenv("POLYREC_THREADS", "zero")
    assert main(["profile", "--set", str(files / "A.txt"), "--poly", "1", "--L", "1"]) == 1
