import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from eventpixel import cli, ou_exit

PAPER_FLAGS = ["--omega", "5", "--rho", "0.002", "--theta-minus", "0.96", "--theta-plus", "0.94"]


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    rc = cli.run([str(a) for a in argv], out=out, err=err)
    return rc, out.getvalue(), err.getvalue()


def snapshot(d):
    return {p.name: p.read_bytes() for p in sorted(Path(d).iterdir())}


def test_component_rng_split():
    a = cli.component_rng(1, "stream").random(3)
    b = cli.component_rng(1, "stream").random(3)
    c = cli.component_rng(1, "mstep").random(3)
    d = cli.component_rng(2, "stream").random(3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)


@pytest.fixture(scope="module")
def stream_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("stream")
    rc, out, _ = run(["stream", *PAPER_FLAGS, "--n", 400, "--seed", 7, "--format", "both",
                      "--cache-spacing", 0.05, "--outdir", d])
    assert rc == 0
    return d, out


def test_stream_outputs(stream_run):
    d, out = stream_run
    names = set(snapshot(d))
    assert {"events.jsonl", "events.csv", "summary.txt", "summary.json", "isi_histograms.csv",
            "manifest.ini"} <= names
    assert "on event probability" in out
    first = json.loads((d / "events.jsonl").read_text().splitlines()[0])
    assert first["header"]["seed"] == 7
    summary = json.loads((d / "summary.json").read_text())
    assert summary["summary"]["n_events"] == 400


def test_stream_twice_and_rerun_identical(stream_run, tmp_path):
    d, _ = stream_run
    rc, _, _ = run(["stream", *PAPER_FLAGS, "--n", 400, "--seed", 7, "--format", "both",
                    "--cache-spacing", 0.05, "--outdir", tmp_path / "again"])
    assert rc == 0
    assert snapshot(tmp_path / "again") == snapshot(d)
    rc, _, _ = run(["rerun", d / "manifest.ini", "--outdir", tmp_path / "re"])
    assert rc == 0
    assert snapshot(tmp_path / "re") == snapshot(d)


def test_stream_seed_changes_output(stream_run, tmp_path):
    d, _ = stream_run
    run(["stream", *PAPER_FLAGS, "--n", 400, "--seed", 8, "--format", "both",
         "--cache-spacing", 0.05, "--outdir", tmp_path])
    assert (tmp_path / "events.jsonl").read_bytes() != (d / "events.jsonl").read_bytes()


def test_config_file_with_override(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[model]\nomega = 5\nrho = 0.002\ntheta_minus = 0.96\ntheta_plus = 0.94\n"
                   "[run]\nz0 = 0.0\niterations = 10\n")
    rc, out, _ = run(["dynamics", "--config", ini, "--iterations", 50, "--outdir", tmp_path / "o"])
    assert rc == 0
    rep = json.loads((tmp_path / "o" / "dynamics.json").read_text())
    assert rep["iterations"] == 50
    assert rep["classification"]["type"] == "limit_cycle"
    a, b = rep["classification"]["points"]
    assert abs(a + 0.624) < 0.005 and abs(b - 0.312) < 0.005
    assert rep["fixed_points"][0]["residual"] < 1e-8


def test_dynamics_long_rho(tmp_path):
    rc, _, _ = run(["dynamics", "--omega", 5, "--rho", 0.39, "--theta-minus", 0.96,
                    "--theta-plus", 0.94, "--z0", 0.2, "--outdir", tmp_path])
    rep = json.loads((tmp_path / "dynamics.json").read_text())
    assert rc == 0 and rep["classification"]["type"] == "fixed_point"
    assert abs(rep["classification"]["z"] - 0.005) < 0.003
    lines = (tmp_path / "cobweb.csv").read_text().splitlines()
    assert lines[1] == "k,x,y,segment_type"
    assert (tmp_path / "trace.csv").read_text().splitlines()[1] == "k,z_k,u_k,v_k,w_k"


@pytest.mark.parametrize("argv", [
    ["dynamics", *PAPER_FLAGS, "--z0", 0.1, "--iterations", 30],
    ["conditionals", *PAPER_FLAGS, "--z-points", 51],
    ["mstep", *PAPER_FLAGS, "--start", -0.5, "--m-list", "0,1,3", "--replicas", 10000],
    ["exit-stats", "--omega", 2, "--n", 2000],
])
def test_rerun_byte_identical(tmp_path, argv):
    rc, _, _ = run([*argv, "--outdir", tmp_path / "a"])
    assert rc == 0
    rc, _, _ = run(["rerun", tmp_path / "a" / "manifest.ini", "--outdir", tmp_path / "b"])
    assert rc == 0
    assert snapshot(tmp_path / "a") == snapshot(tmp_path / "b")


def test_conditionals_reports(tmp_path):
    rc, out, _ = run(["conditionals", *PAPER_FLAGS, "--outdir", tmp_path])
    assert rc == 0
    rep = json.loads((tmp_path / "critical_point.json").read_text())
    assert abs(rep["z_star"] - 0.01) < 0.005 and rep["spread"] < 0.005
    lines = (tmp_path / "conditionals.csv").read_text().splitlines()
    assert lines[0].startswith("#") and lines[1] == "z,p_on,p_off,E_isi_s,E_z_next"
    rc, _, _ = run(["conditionals", "--omega", 5, "--rho", 0.002, "--theta-minus", 0.95,
                    "--theta-plus", 0.95, "--outdir", tmp_path / "sym"])
    assert abs(json.loads((tmp_path / "sym" / "critical_point.json").read_text())["z_star"]) < 1e-9


def test_conditionals_overlay(tmp_path):
    rc, _, _ = run(["conditionals", *PAPER_FLAGS, "--overlay-n", 20000, "--outdir", tmp_path])
    assert rc == 0
    rep = json.loads((tmp_path / "critical_point.json").read_text())
    # 50 bins of ~400 events: about 5% scatter per bin, so the worst bin sits near 3 sigma
    assert rep["overlay_max_rel_isi_error"] < 0.2


def test_mstep_outputs(tmp_path):
    rc, _, _ = run(["mstep", *PAPER_FLAGS, "--start", -0.5, "--m-list", "0,1",
                    "--replicas", 10000, "--outdir", tmp_path])
    assert rc == 0
    lines = (tmp_path / "mstep.csv").read_text().splitlines()
    assert "z* =" in lines[0] and lines[1] == "m,z,density"
    rows = np.array([[float(v) for v in r.split(",")] for r in lines[2:]])
    m0 = rows[rows[:, 0] == 0]
    assert abs(m0[np.argmax(m0[:, 2]), 1] + 0.5) < 1e-3


def test_exit_stats_golden(tmp_path):
    rc, out, _ = run(["exit-stats", "--omega", 2, "--lower", -0.5, "--upper", 1, "--start", 0,
                      "--n", 20000, "--crosscheck", "--outdir", tmp_path])
    assert rc == 0
    rep = json.loads((tmp_path / "exit_stats.json").read_text())
    assert abs(rep["expected_exit_time_s"] - 0.6918) < 5e-4
    assert abs(rep["pathfree"]["mean_s"] - 0.6918) < 0.01
    assert rep["crosscheck"]["passed"] and "KS p" in out
    lines = (tmp_path / "exit_densities.csv").read_text().splitlines()
    assert lines[1] == "t_s,density_lower,density_upper"


def test_exit_stats_boundary_start(tmp_path):
    rc, out, _ = run(["exit-stats", "--omega", 2, "--start", 1, "--outdir", tmp_path])
    assert rc == 0 and "immediate exit" in out
    assert json.loads((tmp_path / "exit_stats.json").read_text())["immediate_exit"] is True


def test_failed_crosscheck_exits_nonzero(tmp_path, monkeypatch):
    real = ou_exit.sample_exit_path_oracle

    def late(*args, **kw):
        s = real(*args, **kw)
        return ou_exit.ExitSamples(s.times * 1.3, s.lower)

    monkeypatch.setattr(ou_exit, "sample_exit_path_oracle", late)
    rc, out, err = run(["exit-stats", "--omega", 2, "--n", 5000, "--crosscheck",
                        "--outdir", tmp_path])
    assert rc == 3 and "cross-check failed" in err and "KS p" in out


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    def boom(*args, **kw):
        raise ou_exit.TailMassError("horizon too short")

    monkeypatch.setattr(ou_exit, "exit_time_table", boom)
    rc, _, err = run(["exit-stats", "--omega", 2, "--outdir", tmp_path])
    assert rc == 3 and "TailMassError" in err


@pytest.mark.parametrize("argv,field", [
    (["dynamics", "--omega", -5, "--rho", 0.002, "--theta-minus", 0.96, "--theta-plus", 0.94],
     "omega"),
    (["dynamics", "--omega", 5, "--rho", -1, "--theta-minus", 0.96, "--theta-plus", 0.94], "rho"),
    (["dynamics", "--omega", 5, "--rho", 0.002, "--theta-minus", 0, "--theta-plus", 0.94],
     "theta_minus"),
    (["dynamics", "--omega", 5, "--rho", 0.002, "--theta-minus", 0.96], "theta_plus"),
    (["stream", *PAPER_FLAGS, "--n", 1], "n"),
    (["stream", *PAPER_FLAGS, "--sampler", "oracle", "--oracle-dt", 0.1], "oracle_dt"),
    (["mstep", *PAPER_FLAGS, "--replicas", 100], "replicas"),
    (["conditionals", *PAPER_FLAGS, "--level", 0.3], "level"),
    (["exit-stats", "--omega", 2, "--lower", 1, "--upper", -1], "lower"),
])
def test_validation_names_field(tmp_path, argv, field):
    rc, _, err = run([*argv, "--outdir", tmp_path])
    assert rc == 2
    assert field in err


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[model]\nomega = 5\nbogus = 1\n")
    rc, _, err = run(["dynamics", "--config", bad, "--outdir", tmp_path])
    assert rc == 2 and "bogus" in err
    rc, _, err = run(["dynamics", "--config", tmp_path / "missing.ini", "--outdir", tmp_path])
    assert rc == 2
    rc, _, err = run(["rerun", tmp_path / "missing.ini", "--outdir", tmp_path])
    assert rc == 2


def test_frontend_route(tmp_path):
    fe = ["--beta1", 0.1, "--beta2", 20, "--beta3", 0.5, "--sigma", 0.002, "--xi1", 1.0,
          "--xi2", 0.5, "--radiance", 1e4, "--theta-minus-v", 0.05, "--theta-plus-v", 0.05]
    rc, _, err = run(["dynamics", "--omega", 5, "--rho", 0.002, *fe, "--outdir", tmp_path])
    assert rc == 0, err
    params = json.loads((tmp_path / "dynamics.json").read_text())["params"]
    assert params["theta_minus_tilde"] == pytest.approx(params["theta_plus_tilde"])
    assert "[frontend]" in (tmp_path / "manifest.ini").read_text()
    rc, _, err = run(["dynamics", *PAPER_FLAGS, *fe, "--outdir", tmp_path])
    assert rc == 2 and "not both" in err


def test_manifest_contents(tmp_path):
    run(["dynamics", *PAPER_FLAGS, "--outdir", tmp_path])
    text = (tmp_path / "manifest.ini").read_text()
    assert "[meta]" in text and "command = dynamics" in text and "version = " in text
    assert "seed = 1" in text


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "eventpixel", "--version"], capture_output=True,
                       text=True)
    assert r.returncode == 0 and r.stdout.strip()
