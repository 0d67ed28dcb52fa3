import hashlib
import json
import subprocess
import sys

import pytest

from urnflow.cli import COMMANDS, EXIT_CHECK, EXIT_CONFIG, EXIT_OK, EXIT_RESOURCE, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def split_stderr(err):
    """Check lines and the manifest that follows them."""
    start = 0 if err.startswith("{") else err.index("\n{") + 1
    return err[:start].splitlines(), json.loads(err[start:])


# -- example invocations -----------------------------------------------------------

def test_urn_pmf_rational(capsys):
    code, out, _ = run(capsys, "urn", "pmf", "--b", "1", "--w", "1", "--l", "1", "--n", "2", "--rational")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["offset"] == 1 and data["mass"] == ["3/8", "3/8", "1/4"]


def test_rate_slope(capsys, tmp_path):
    out = tmp_path / "rate.csv"
    code, _, err = run(capsys, "rate", "--j", "1", "--l", "1", "--nmax", "16384", "--out", str(out), "--check")
    assert code == EXIT_OK, err
    lines = out.read_text().strip().split("\n")
    assert lines[0].startswith("n,mu_n,d_K")
    manifest = json.loads((tmp_path / "rate.csv.manifest.json").read_text())
    slope = next(c for c in manifest["checks"] if c["name"].startswith("slope"))
    assert slope["ok"]
    assert abs(float(slope["detail"].split()[0]) + 0.5) <= 0.15


def test_identity_discrepancy_zero(capsys):
    code, out, _ = run(capsys, "identity", "--name", "lemma4.10", "--j", "1", "--l", "1", "--n", "6")
    assert code == EXIT_OK
    assert json.loads(out)["discrepancy"] == "0"


@pytest.mark.parametrize("name", ["lemma4.2", "lemma4.7", "lemma4.8", "lemma4.9", "lemma4.10"])
def test_identity_names_check(capsys, name):
    code, out, err = run(capsys, "urn", "identity", "--name", name, "--n", "7", "--check")
    assert code == EXIT_OK, err
    assert json.loads(out)["discrepancy"] == "0"
    assert "PASS" in err and "FAIL" not in err


# -- exit codes --------------------------------------------------------------------------

@pytest.mark.parametrize("argv", [
    ["urn", "pmf", "--n", "-1"],
    ["urn", "pmf", "--n", "two"],
    ["gg", "moment", "--format", "csv"],
    ["gg", "pdf", "--k", "0"],
    ["urn", "pmf", "--bogus", "1"],
    ["nonsense"],
    ["urn", "pmf", "--seed", "-5"],
    ["identity", "--name", "lemma9.9"],
])
def test_invalid_config_exit_1(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_CONFIG
    assert "urnflow:" in err


def test_bad_config_file(capsys, tmp_path):
    path = tmp_path / "c.json"
    path.write_text("[1, 2]")
    assert run(capsys, "urn", "pmf", "--config", str(path))[0] == EXIT_CONFIG
    path.write_text("{not json")
    assert run(capsys, "urn", "pmf", "--config", str(path))[0] == EXIT_CONFIG
    path.write_text(json.dumps({"nope": 1}))
    assert run(capsys, "urn", "pmf", "--config", str(path))[0] == EXIT_CONFIG
    assert run(capsys, "urn", "pmf", "--config", str(tmp_path / "missing.json"))[0] == EXIT_CONFIG


def test_resource_limit_exit_2(capsys):
    code, _, err = run(capsys, "urn", "pmf", "--n", "100", "--rational")
    assert code == EXIT_RESOURCE
    assert "resource limit" in err


def test_failed_check_exit_3(capsys):
    # seed 8 is a reproducible 1% chi-square false alarm
    code, _, err = run(capsys, "urn", "sample", "--size", "2000", "--seed", "8", "--check")
    assert code == EXIT_CHECK
    assert "FAIL chi-square" in err


def test_console_script_entry():
    proc = subprocess.run([sys.executable, "-m", "urnflow.cli", "urn", "pmf", "--n", "-3"],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_CONFIG
    assert "Traceback" not in proc.stderr


# -- --check on every subcommand ---------------------------------------------------------

FAST_ARGS = {
    ("urn", "sample"): ["--size", "5000"],
    ("tree", "grow"): ["--size", "20"],
    ("tree", "stat"): ["--size", "2000"],
    ("walk", "map"): ["--tree", "((1 2) 3)"],
    ("stein", "audit"): ["--k", "2", "--r", "2", "--points", "300"],
    ("transform", "couple"): ["--n", "16", "--size", "20000"],
    ("rate",): ["--nmin", "4", "--nmax", "1024"],
    ("soundness",): ["--nmax", "1024", "--size", "20000"],
}


@pytest.mark.parametrize("cmd", COMMANDS, ids=lambda c: "-".join(c.path))
def test_every_subcommand_check_passes(capsys, cmd):
    code, out, err = run(capsys, *cmd.path, *FAST_ARGS.get(cmd.path, []), "--check")
    assert code == EXIT_OK, err
    assert out
    lines, manifest = split_stderr(err)
    assert manifest["checks"] and all(c["ok"] for c in manifest["checks"])
    assert len(lines) == len(manifest["checks"]) and all(line.startswith("PASS ") for line in lines)


@pytest.mark.parametrize("kind,extra", [
    ("bridge", ["--tree", "((1 2) 3)"]),
    ("meander", ["--tree", "((1 2) 3)"]),
    ("walk", ["--tree", "(1 2)", "--tree2", "(0 3)", "--sign", "-1"]),
    ("excursion", ["--inverse", "--path", "UUDD"]),
])
def test_walk_map_kinds(capsys, kind, extra):
    code, _, err = run(capsys, "walk", "map", "--kind", kind, *extra, "--check")
    assert code == EXIT_OK, err


# -- determinism and configuration ------------------------------------------------------------

@pytest.mark.parametrize("argv", [
    ["urn", "sample", "--size", "3000"],
    ["gg", "sample", "--k", "2", "--r", "2", "--size", "500"],
    ["tree", "grow", "--n", "6", "--size", "5"],
    ["transform", "couple", "--n", "32", "--size", "30000"],
])
def test_byte_identical_reruns(capsys, argv):
    first = run(capsys, *argv, "--seed", "77")[1]
    second = run(capsys, *argv, "--seed", "77")[1]
    assert first == second
    assert run(capsys, *argv, "--seed", "78")[1] != first


def test_subprocess_reruns_identical(tmp_path):
    digests = []
    for i in range(2):
        out = tmp_path / f"run{i}.json"
        subprocess.run([sys.executable, "-m", "urnflow.cli", "urn", "sample", "--size", "2000", "--seed", "5",
                        "--out", str(out)], check=True, capture_output=True)
        digests.append(hashlib.sha256(out.read_bytes()).hexdigest())
    assert digests[0] == digests[1]


def test_thread_count_invariance(capsys, monkeypatch):
    argv = ["transform", "couple", "--n", "16", "--size", "450000", "--seed", "3"]
    outputs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("URNFLOW_THREADS", threads)
        outputs.append(run(capsys, *argv)[1])
    assert outputs[0] == outputs[1]


def test_flags_override_config(capsys, tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"n": 3, "rational": True, "b": 0}))
    from_file = json.loads(run(capsys, "urn", "pmf", "--config", str(path))[1])
    assert from_file["n"] == 3 and from_file["b"] == 0
    overridden = json.loads(run(capsys, "urn", "pmf", "--config", str(path), "--n", "4")[1])
    assert overridden["n"] == 4 and overridden["b"] == 0


def test_run_subcommand(capsys, tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"command": "urn pmf", "n": 2, "rational": True}))
    code, out, _ = run(capsys, "run", str(path))
    assert code == EXIT_OK
    assert json.loads(out)["mass"] == ["3/8", "3/8", "1/4"]
    path.write_text(json.dumps({"command": "urn fly"}))
    assert run(capsys, "run", str(path))[0] == EXIT_CONFIG


def test_csv_output(capsys):
    code, out, _ = run(capsys, "urn", "pmf", "--n", "3", "--format", "csv")
    assert code == EXIT_OK
    assert out.split("\n")[0].count(",") >= 1


# -- manifest ---------------------------------------------------------------------------------

def test_manifest_fields(capsys, tmp_path):
    out = tmp_path / "pmf.json"
    code, stdout, _ = run(capsys, "urn", "pmf", "--n", "5", "--out", str(out), "--check")
    assert code == EXIT_OK and stdout == ""
    manifest = json.loads((tmp_path / "pmf.json.manifest.json").read_text())
    assert {"command", "config", "versions", "outputs", "output_sha256", "checks", "durations"} <= set(manifest)
    assert manifest["command"] == "urn pmf"
    assert manifest["config"]["n"] == 5 and manifest["config"]["seed"] >= 0
    assert {"urnflow", "numpy", "scipy", "python"} <= set(manifest["versions"])
    digest = hashlib.sha256(out.read_bytes()).hexdigest()
    assert manifest["outputs"] == {str(out): digest} and manifest["output_sha256"] == digest
    assert manifest["durations"]["run_s"] >= 0


def test_manifest_explicit_path(capsys, tmp_path):
    path = tmp_path / "m.json"
    code, out, err = run(capsys, "gg", "cdf", "--manifest", str(path))
    assert code == EXIT_OK and "{" not in err
    manifest = json.loads(path.read_text())
    assert manifest["output_sha256"] == hashlib.sha256(out.encode()).hexdigest()


def test_manifest_on_stderr_by_default(capsys):
    code, _, err = run(capsys, "gg", "moment", "--k", "2", "--r", "2")
    assert code == EXIT_OK
    assert split_stderr(err)[1]["command"] == "gg moment"
