import json
import subprocess
import sys

import numpy as np
import pytest

from higgslab import cli, fieldio
from higgslab.geometry import Domain


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


SMALL_SWEEP = {
    "name": "small",
    "domain": {"kind": "disk", "n": 32, "radius": 1.25},
    "higgs": {"coeffs": [[[0, 1], [0, 0]], [[0, 0], [1, 0]]]},
    "t_list": [1, 2, 4, 8],
    "region": {"kind": "annulus", "inner": 0.5, "outer": 1.0},
    "mode": "trace_free",
    "fits": [{"field": "gap_pPi_c0", "model": "exponential"}],
}


def test_stability_canonical_pair(capsys):
    assert cli.main(["stability", "--m", "0,1;0,0", "--n", "0,0;1,0"]) == 0
    out = capsys.readouterr().out
    assert "det = -1" in out
    assert "common eigenvector: none" in out
    assert "verdict: stable" in out


def test_stability_commuting_pair(capsys):
    assert cli.main(["stability", "--m", "1,2;3,4", "--n", "2,4;6,8"]) == 0
    assert "not stable" in capsys.readouterr().out


def test_parse_matrix():
    M = cli.parse_matrix("1, 2j; -1+1j, 0")
    assert M.shape == (2, 2) and M[1, 0] == -1 + 1j
    for bad in ("1,2;3", "", "a,b;c,d"):
        with pytest.raises(cli.UsageError):
            cli.parse_matrix(bad)


def test_usage_errors_exit_2(tmp_path, capsys):
    assert cli.main(["stability", "--m", "1,2;3,4"]) == 2
    assert cli.main(["solve", "--config", str(tmp_path / "missing.json")]) == 2
    bad = write(tmp_path, "bad.json", {"domain": {"kind": "disk", "n": 16}, "higgs": {}})
    assert cli.main(["solve", "--config", bad]) == 2
    extra = write(tmp_path, "extra.json", dict(SMALL_SWEEP, bogus=1))
    assert cli.main(["sweep", "--config", extra]) == 2
    assert cli.main(["no-such-command"]) == 2
    err = capsys.readouterr().err
    assert "error" in err


def test_matrix_props_replay_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.main(["--outdir", str(d), "matrix-props", "--rank", "3",
                         "--samples", "200", "--seed", "7"]) == 0
    for name in ("matrix_props_r3.csv", "matrix_props_r3.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    text = (a / "matrix_props_r3.csv").read_text()
    assert text.startswith("# higgslab 0.1.0 config_sha256=")
    summary = json.loads((a / "matrix_props_r3.json").read_text())
    assert summary["max_proj_err"] < 1e-8
    assert summary["meta"]["tool"] == "higgslab"


def test_spectral_writes_field(tmp_path):
    cfg = write(tmp_path, "s.json", {
        "name": "s", "domain": {"kind": "disk", "n": 33},
        "higgs": {"coeffs": [[[0, 1], [0, 0]], [[0, 0], [1, 0]]]},
        "loops": [{"center": [0, 0], "radius": 0.5}, {"center": [0.5, 0.0], "radius": 0.2}]})
    out = tmp_path / "out"
    assert cli.main(["--outdir", str(out), "spectral", "--config", cfg]) == 0
    rep = json.loads((out / "s.json").read_text())
    assert rep["monodromy"] == [True, False]
    dom, disc, header = fieldio.read_field(out / "s_disc")
    assert dom == Domain.disk(33)
    assert np.allclose(disc, 4 * dom.z)
    assert header["meta"]["version"] == "0.1.0"


def test_solve_and_require_converged(tmp_path):
    base = {"domain": {"kind": "torus", "n": 16}, "higgs": {"coeffs": [[[1, 0], [0, -1]]]},
            "initial_metric": {"constant": [[2, [0.5, 0.5]], [[0.5, -0.5], 1]]},
            "solver": {"tol": 1e-8, "normalize_det": True}}
    out = tmp_path / "out"
    ok = write(tmp_path, "ok.json", base)
    assert cli.main(["--outdir", str(out), "solve", "--config", ok, "--require-converged"]) == 0
    rep = json.loads((out / "solve_report.json").read_text())
    assert rep["converged"] and rep["residual_history"][-1][1] <= 1e-8
    nil = dict(base, higgs={"coeffs": [[[0, 1], [0, 0]]]},
               solver={"max_steps": 3, "normalize_det": True})
    bad = write(tmp_path, "nil.json", nil)
    assert cli.main(["--outdir", str(out), "solve", "--config", bad]) == 0
    assert cli.main(["--outdir", str(out), "solve", "--config", bad, "--require-converged"]) == 3


def test_monopole_negative_control(tmp_path):
    cfg = write(tmp_path, "m.json", {"domain": {"kind": "disk", "n": 32}, "f": [1.0, [0.5, 0.25]],
                                     "negative_control": True, "solver": {"tol": 1e-9}})
    out = tmp_path / "out"
    assert cli.main(["--outdir", str(out), "monopole", "--config", cfg]) == 0
    rep = json.loads((out / "monopole_report.json").read_text())
    assert rep["converged"]
    assert rep["diagnostics"]["crosscheck"] <= 1e-8
    assert rep["diagnostics"]["negative_control"]["crosscheck"] > 1e-6


def test_sweep_fit_and_plot_replay(tmp_path):
    cfg = write(tmp_path, "sw.json", SMALL_SWEEP)
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.main(["--outdir", str(d), "sweep", "--config", cfg, "--plot"]) == 0
    for name in ("small.csv", "small.json", "small.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert b"\r\n" in (a / "small.csv").read_bytes()
    assert cli.main(["--outdir", str(a), "fit", "--csv", str(a / "small.csv"),
                     "--field", "gap_pPi_c0"]) == 0
    fit = json.loads((a / "fit_gap_pPi_c0_exponential.json").read_text())
    assert fit["rate"] < 0
    assert cli.main(["fit", "--csv", str(a / "small.csv"), "--field", "nope"]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "higgslab", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "0.1.0" in res.stdout
