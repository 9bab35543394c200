import json
import os
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from pseudoscope.cli import main
from pseudoscope.report import read_eigenvalue_csv, verify_manifest

EXPERIMENT_CFG = """\
[experiment]
structure = jordan
d = 20
eps = 2.0
trials = 30
seed = 11
solver = auto
region = auto
"""


def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_experiment_outputs(tmp_path):
    cfg = _write(tmp_path, EXPERIMENT_CFG)
    out = str(tmp_path / "out")
    assert main(["experiment", "--config", cfg, "--out", out]) == 0
    for name in ("eigenvalues.csv", "report.json", "scatter.svg", "run_manifest.json"):
        assert os.path.exists(os.path.join(out, name))

    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["schema_version"] == 1
    assert report["config"]["structure"] == "jordan"
    assert report["config"]["d"] == 20
    assert 0.0 <= report["eigenvalue_containment_fraction"] <= 1.0
    q = report["deviation_quantiles"]
    assert q["q50"] <= q["q90"] <= q["q99"] <= q["max"]

    assert verify_manifest(out)


def test_eigenvalue_csv_roundtrips_exactly(tmp_path):
    cfg = _write(tmp_path, EXPERIMENT_CFG)
    out = str(tmp_path / "out")
    assert main(["experiment", "--config", cfg, "--out", out]) == 0
    from pseudoscope import ExperimentConfig, StructureSpec, run_experiment

    report = run_experiment(
        ExperimentConfig(
            structure=StructureSpec.parse("jordan"), d=20, eps=2.0,
            trials=30, seed=11,
        )
    )
    parsed = read_eigenvalue_csv(os.path.join(out, "eigenvalues.csv"))
    for rec in report.records:
        assert np.array_equal(parsed[rec.index], rec.eigenvalues)


def test_scatter_svg_well_formed_with_counts(tmp_path):
    cfg = _write(tmp_path, EXPERIMENT_CFG)
    out = str(tmp_path / "out")
    assert main(["experiment", "--config", cfg, "--out", out]) == 0
    tree = ET.parse(os.path.join(out, "scatter.svg"))
    ns = "{http://www.w3.org/2000/svg}"
    circles = tree.getroot().findall(f".//{ns}circle")
    paths = tree.getroot().findall(f".//{ns}path")
    assert len(circles) == 30 * 20  # one point element per eigenvalue
    assert len(paths) >= 1


def test_threads_do_not_change_csv_bytes(tmp_path):
    cfg = _write(tmp_path, EXPERIMENT_CFG)
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["experiment", "--config", cfg, "--out", out1, "--threads", "1"]) == 0
    assert main(["experiment", "--config", cfg, "--out", out2, "--threads", "3"]) == 0
    b1 = open(os.path.join(out1, "eigenvalues.csv"), "rb").read()
    b2 = open(os.path.join(out2, "eigenvalues.csv"), "rb").read()
    assert b1 == b2


def test_seed_override_changes_results(tmp_path):
    cfg = _write(tmp_path, EXPERIMENT_CFG)
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["experiment", "--config", cfg, "--out", out1]) == 0
    assert main(["experiment", "--config", cfg, "--out", out2, "--seed", "999"]) == 0
    b1 = open(os.path.join(out1, "eigenvalues.csv"), "rb").read()
    b2 = open(os.path.join(out2, "eigenvalues.csv"), "rb").read()
    assert b1 != b2


def test_malformed_config_exit_2_with_line(tmp_path, capsys):
    bad = "[experiment]\nstructure = jordan\nd = 20\neps = 2.0\nwat = 5\n"
    cfg = _write(tmp_path, bad)
    assert main(["experiment", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "line 5" in err


def test_bad_structure_reports_its_line(tmp_path, capsys):
    bad = "[experiment]\nd = 20\neps = 2.0\nstructure = banana\n"
    cfg = _write(tmp_path, bad)
    assert main(["experiment", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "line 4" in err or "banana" in err


def test_missing_section_rejected(tmp_path):
    cfg = _write(tmp_path, "structure = jordan\n")
    assert main(["experiment", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_scaling_command(tmp_path):
    text = (
        "[experiment]\nstructure = diagonal(2,3)\neps = 2.0\n"
        "dims = 16,32,64\ntrials = 40\nseed = 5\n"
    )
    cfg = _write(tmp_path, text)
    out = str(tmp_path / "out")
    assert main(["scaling", "--config", cfg, "--out", out]) == 0
    fit = json.loads((tmp_path / "out" / "scaling.json").read_text())
    assert fit["slope"] < -0.3
    tree = ET.parse(os.path.join(out, "scaling.svg"))
    assert tree.getroot().tag.endswith("svg")
    rows = open(os.path.join(out, "scaling.csv")).read().splitlines()
    assert rows[0].split(",")[:2] == ["d", "median_deviation"]
    assert len(rows) == 4
    assert verify_manifest(out)


def test_scaling_rejects_empty_and_single_dims(tmp_path):
    for dims in ("", "64"):
        text = f"[experiment]\nstructure = jordan\neps = 2.0\ndims = {dims}\nseed = 1\n"
        cfg = _write(tmp_path, text, name=f"s{len(dims)}.cfg")
        assert main(["scaling", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize(
    "which,extra",
    [
        ("norm", "d = 60\ntrials = 20000\n"),
        ("hw", "d = 40\nk = 0\ntrials = 10000\n"),
        ("cw", "d = 40\ntrials = 10000\n"),
        ("qf-diag", "d = 30\ntrials = 10000\n"),
        ("corner", "d = 50\nC = 3\ntrials = 20000\n"),
    ],
)
def test_tails_commands(tmp_path, which, extra):
    text = f"[experiment]\nwhich = {which}\nseed = 3\n{extra}"
    cfg = _write(tmp_path, text)
    out = str(tmp_path / which)
    assert main(["tails", "--config", cfg, "--out", out]) == 0
    rows = open(os.path.join(out, "tails.csv")).read().splitlines()
    assert rows[0].endswith("verdict")
    assert len(rows) >= 2
    manifest = json.loads((tmp_path / which / "run_manifest.json").read_text())
    assert manifest["verdict"] in ("pass", "fail")
    if which == "norm":
        assert manifest["verdict"] == "pass"


def test_tails_unknown_which(tmp_path):
    cfg = _write(tmp_path, "[experiment]\nwhich = nope\n")
    assert main(["tails", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_oracle_check_passes_and_corrupt_hook_fails(tmp_path, monkeypatch):
    assert main(["oracle-check", "--d-max", "20", "--trials", "4"]) == 0
    monkeypatch.setenv("PSEUDOSCOPE_ORACLE_CORRUPT", "1")
    assert main(["oracle-check", "--d-max", "20", "--trials", "4"]) == 1


def test_threads_env_fallback(tmp_path, monkeypatch):
    cfg = _write(tmp_path, EXPERIMENT_CFG)
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["experiment", "--config", cfg, "--out", out1]) == 0
    monkeypatch.setenv("PSEUDOSCOPE_THREADS", "2")
    assert main(["experiment", "--config", cfg, "--out", out2]) == 0
    b1 = open(os.path.join(out1, "eigenvalues.csv"), "rb").read()
    b2 = open(os.path.join(out2, "eigenvalues.csv"), "rb").read()
    assert b1 == b2


def test_module_entrypoint_subprocess(tmp_path):
    cfg = _write(tmp_path, EXPERIMENT_CFG)
    out = str(tmp_path / "out")
    proc = subprocess.run(
        [sys.executable, "-m", "pseudoscope.cli", "experiment",
         "--config", cfg, "--out", out],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "containment" in proc.stdout
