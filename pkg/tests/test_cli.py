import csv
import json
import re

import pytest

from hamlin import cli
from hamlin.experiments import COMMANDS

# small parameter sets so every command runs in well under a second
FAST = {
    "bound-check": ["--trials", "3"],
    "trotter-sweep": [],
    "gc-sweep": [],
    "multiply-demo": [],
    "qsvt-demo": ["--trials", "2"],
    "poly-verify": ["--target", "x3"],
    "overlap-sim": ["--reps", "3", "--eps", "0.1"],
    "green-demo": [],
    "sos-sim": [],
    "eta-norm": ["--modes", "3"],
}

FLOAT = re.compile(r"^-?\d\.\d+e[-+]\d+$|^-?\d+(\.\d+)?$|^(nan|inf|-inf)$")


def run(tmp_path, name, *extra, sub="out"):
    out = tmp_path / sub
    status = cli.main([name, "--seed", "11", "--out", str(out), "--jobs", "2", *FAST[name], *extra])
    return status, out


def artifacts(out):
    files = {}
    for p in sorted(out.iterdir()):
        data = p.read_bytes()
        if p.name == "manifest.json":
            doc = json.loads(data)
            # wall time and the output path legitimately differ between the two runs
            doc.pop("wall_time_s")
            doc["config"].pop("out_dir")
            data = json.dumps(doc, sort_keys=True).encode()
        files[p.name] = data
    return files


def test_every_command_covered():
    assert set(FAST) == set(COMMANDS)


@pytest.mark.parametrize("name", sorted(COMMANDS))
def test_command_runs_and_is_deterministic(tmp_path, name):
    s1, o1 = run(tmp_path, name, sub="a")
    s2, o2 = run(tmp_path, name, sub="b")
    assert s1 == s2 == 0
    assert artifacts(o1) == artifacts(o2)
    manifest = json.loads((o1 / "manifest.json").read_text())
    assert manifest["status"] == "pass" and manifest["seed"] == 11
    assert {"config", "versions", "wall_time_s", "checks", "artifacts"} <= set(manifest)
    for name_ in manifest["artifacts"]:
        assert (o1 / name_).exists()
        if name_.endswith(".csv"):
            rows = list(csv.reader((o1 / name_).open()))
            assert rows and not any(FLOAT.match(h) for h in rows[0])


def test_floats_have_17_significant_digits(tmp_path):
    status, out = run(tmp_path, "bound-check")
    rows = list(csv.DictReader((out / "bound_check.csv").open()))
    assert set(rows[0]) == {"trial", "tau", "error", "bound", "ratio"}
    for r in rows:
        assert float(r["ratio"]) <= 1
        assert float(r["error"]) == float(format(float(r["error"]), ".17g"))
        assert r["error"] == format(float(r["error"]), ".17g")


def test_overlap_columns(tmp_path):
    _, out = run(tmp_path, "overlap-sim")
    header = (out / "overlap.csv").read_text().splitlines()[0]
    assert header == "rep,est_re,est_im"


def test_poly_verify_json(tmp_path):
    _, out = run(tmp_path, "poly-verify")
    pair = json.loads((out / "pair.json").read_text())
    assert pair["certified"] and max(pair["max_violations"].values()) <= 1e-4


def test_seed_changes_output(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    cli.main(["bound-check", "--trials", "2", "--seed", "1", "--out", str(a)])
    cli.main(["bound-check", "--trials", "2", "--seed", "2", "--out", str(b)])
    assert (a / "bound_check.csv").read_bytes() != (b / "bound_check.csv").read_bytes()


def test_assertion_failure_exit_code(tmp_path):
    status, out = run(tmp_path, "multiply-demo", "--tol", "1e-12")
    assert status == 2
    assert json.loads((out / "manifest.json").read_text())["status"] == "fail"


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["no-such-command"],
        ["bound-check", "--bogus", "1"],
        ["bound-check", "--dim", "four"],
        ["poly-verify", "--target", "nonsense"],
    ],
)
def test_usage_errors_exit_1(tmp_path, argv):
    if argv:
        argv = argv + ["--out", str(tmp_path / "o")] if argv[0] in COMMANDS else argv
    assert cli.main(argv) == 1


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "bound-check", "seed": 5, "params": {"trials": 2, "dim": 3},
                               "out_dir": str(tmp_path / "from_file")}))
    assert cli.main(["bound-check", "--config", str(cfg), "--trials", "1"]) == 0
    manifest = json.loads((tmp_path / "from_file" / "manifest.json").read_text())
    assert manifest["seed"] == 5
    assert manifest["config"]["params"]["trials"] == 1
    assert manifest["config"]["params"]["dim"] == 3


@pytest.mark.parametrize(
    "doc",
    [
        {"command": "bound-check", "extra": 1},
        {"command": "bound-check", "params": {"unknown": 1}},
        {"command": "trotter-sweep"},
    ],
)
def test_config_strict_keys(tmp_path, doc):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(doc))
    assert cli.main(["bound-check", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_env_seed_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("HAMLIN_SEED", "42")
    out = tmp_path / "env"
    assert cli.main(["bound-check", "--trials", "1", "--out", str(out)]) == 0
    assert json.loads((out / "manifest.json").read_text())["seed"] == 42
    monkeypatch.setenv("HAMLIN_SEED", "x")
    assert cli.main(["bound-check", "--trials", "1", "--out", str(out)]) == 1


def test_jobs_do_not_change_output(tmp_path):
    a, b = tmp_path / "j1", tmp_path / "j4"
    cli.main(["overlap-sim", "--reps", "4", "--eps", "0.1", "--seed", "3", "--jobs", "1", "--out", str(a)])
    cli.main(["overlap-sim", "--reps", "4", "--eps", "0.1", "--seed", "3", "--jobs", "4", "--out", str(b)])
    assert (a / "overlap.csv").read_bytes() == (b / "overlap.csv").read_bytes()


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "hamlin", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "hamlin" in proc.stdout
