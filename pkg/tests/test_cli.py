import json
import os
import subprocess
import sys

import pytest

from wavetrace.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, JobConfig, bundled_config_path, git_blob_hash, main
from wavetrace.errors import ConfigError

ELLIPSE_ORBITS = """
[job]
command = orbits
[curve]
shape = ellipse
params = 2.0, 1.0
[orbits]
M = 2, 3
"""


def _write(tmp_path, text, name="job.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _outputs(d):
    return {n: open(os.path.join(d, n), "rb").read() for n in sorted(os.listdir(d)) if not n.startswith(".")}


def test_help_exits_zero(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "usage: wavetrace" in capsys.readouterr().out


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "wavetrace", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "--threads" in out.stdout


def test_unknown_command(capsys):
    assert main(["frobnicate"]) == EXIT_CONFIG
    err = capsys.readouterr().err.strip()
    assert len(err.splitlines()) == 1 and "frobnicate" in err


def test_validate_bundled(tmp_path):
    out = str(tmp_path / "v")
    assert main(["validate", "--out", out]) == EXIT_OK
    report = json.load(open(os.path.join(out, "validate_report.json")))
    assert report["passed"] and len(report["checks"]) >= 8
    assert all(c["passed"] for c in report["checks"])


def test_determinism_and_manifest(tmp_path):
    cfg = _write(tmp_path, ELLIPSE_ORBITS)
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["--config", cfg, "--out", a]) == EXIT_OK
    assert main(["--config", cfg, "--out", b, "--threads", "1"]) == EXIT_OK
    oa, ob = _outputs(a), _outputs(b)
    assert set(oa) == {"orbits.csv", "manifest.json"}
    for name in oa:
        if name != "manifest.json":
            assert oa[name] == ob[name]
    man = json.loads(oa["manifest.json"])
    assert man["status"] == "ok" and man["command"] == "orbits"
    assert man["config"]["hash"] == git_blob_hash(open(cfg, "rb").read())
    assert set(man["outputs"]) == set(oa) - {"manifest.json"}
    for name, entry in man["outputs"].items():
        assert entry["hash"] == git_blob_hash(oa[name])
    assert {"numpy", "scipy", "mpmath", "wavetrace"} <= set(man["versions"])
    rows = oa["orbits.csv"].decode().splitlines()
    assert rows[0].startswith("M,index,length") and b"\r" not in oa["orbits.csv"]
    assert any(r.startswith("2,") and ",4," in r for r in rows[1:])


def test_git_blob_hash_matches_git(tmp_path):
    data = b"k,re\n1,2\n"
    p = tmp_path / "x.csv"
    p.write_bytes(data)
    try:
        ref = subprocess.run(["git", "hash-object", str(p)], capture_output=True, text=True, check=True).stdout.strip()
    except (OSError, subprocess.CalledProcessError):
        pytest.skip("git not available")
    assert git_blob_hash(data) == ref


@pytest.mark.parametrize(
    "text",
    [
        "[job]\ncommand = orbits\n[curve]\nshape = circle\nparams = 1\n[tolerances]\nreparam = -1\n",
        "[job]\ncommand = disc-trace\n[curve]\nshape = circle\nparams = 1\n[disc-trace]\nk_min = 80\nk_max = 60\nk_step = 5\n",
        "[job]\ncommand = orbits\n[curve]\nshape = circle\nspectrum_file = missing.csv\n",
        "[job]\ncommand = teleport\n",
        "this is not an ini file\n",
    ],
)
def test_config_errors_exit_2(tmp_path, text):
    cfg = _write(tmp_path, text)
    with pytest.raises(ConfigError):
        JobConfig.load(cfg)
    assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_missing_config_exit_2(tmp_path):
    assert main(["orbits", "--config", str(tmp_path / "nope.ini")]) == EXIT_CONFIG


def test_numerical_failure_exit_3(tmp_path):
    # every circle orbit is degenerate, so invariants must refuse
    cfg = _write(tmp_path, "[job]\ncommand = invariants\n[curve]\nshape = circle\nparams = 1\n[invariants]\nM = 2\n")
    out = str(tmp_path / "o")
    assert main(["--config", cfg, "--out", out]) == EXIT_NUMERIC
    man = json.load(open(os.path.join(out, "manifest.json")))
    assert man["status"] == "numerical_failure" and man["error"]["name"] == "DegenerateOrbit"


def test_selftest_table(capsys):
    assert main(["selftest"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("kind,index") and len(lines) > 5


def test_bundled_config_parses():
    cfg = JobConfig.load(bundled_config_path())
    assert cfg.command == "validate"
    assert cfg.k_values("disc-trace") == [60.0, 80.0, 100.0]


def test_disc_trace_command(tmp_path):
    cfg = _write(tmp_path, "[job]\ncommand = disc-trace\n[curve]\nshape = circle\nparams = 1\n"
                           "[disc-trace]\nL_center = 4\nepsilon = 0.45\nk_list = 40, 50\nlambda_max = 80\n")
    out = str(tmp_path / "o")
    assert main(["--config", cfg, "--out", out]) == EXIT_OK
    lines = open(os.path.join(out, "disc_trace.csv")).read().splitlines()
    assert lines[0] == "k,re_trace,im_trace,demod_re,demod_im" and len(lines) == 3
