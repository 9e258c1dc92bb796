import subprocess
import sys

import numpy as np
import pytest

from kp2backlund.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_PRECONDITION, dispatch
from kp2backlund.fileio import read_curve, read_field, read_kv
from kp2backlund.profiles import soliton

SMALL = ["--nx", "128", "--ny", "128"]
MILES = "M=3\nN=1\nlambdas=-1 0 1\ntheta0=0 0 0\nA=1 1 1\n"


def run(argv):
    out, err = [], []
    rc = dispatch([str(a) for a in argv], out.append, err.append)
    return rc, "\n".join(out), "\n".join(err)


def test_gen_multisoliton(tmp_path):
    spec = tmp_path / "y.tau"
    spec.write_text(MILES)
    rc, out, _ = run(["gen-multisoliton", "--spec", spec, "--t", 0, "--out", tmp_path / "y.kpf", *SMALL])
    assert rc == EXIT_OK and "Miles resonance" in out
    f = read_field(tmp_path / "y.kpf")
    assert abs(f.values[f.grid.row_index(0), f.grid.col_index(0)] + 4 / 3) < 1e-12
    man = read_kv(tmp_path / "y.manifest")
    assert man["grid.nx"] == "128" and "version.numpy" in man and "norm.l2" in man


def test_backlund_add_zero(tmp_path):
    rc, _, _ = run(["backlund-add", "--u", "zero", "--gamma0", 0, "--out", tmp_path / "s.kpf", *SMALL])
    assert rc == EXIT_OK
    f = read_field(tmp_path / "s.kpf")
    assert np.abs(f.values - soliton(f.grid.x)[None, :]).max() < 1e-9
    y, a = read_curve(tmp_path / "s_alpha.csv")
    assert np.abs(a).max() < 1e-10
    assert (tmp_path / "s_v.kpf").exists() and (tmp_path / "s.manifest").exists()


def test_reruns_are_bitwise_identical(tmp_path):
    for name in ("a", "b"):
        rc, _, _ = run(["backlund-add", "--u", "dxgauss:0.02,2", "--gamma0", 0.5,
                        "--out", tmp_path / f"{name}.kpf", *SMALL])
        assert rc == EXIT_OK
    for suffix in (".kpf", ".hdr", "_alpha.csv"):
        assert (tmp_path / f"a{suffix}").read_bytes() == (tmp_path / f"b{suffix}").read_bytes()


def test_multisoliton_matches_tau(tmp_path):
    spec = tmp_path / "y.tau"
    spec.write_text(MILES)
    run(["gen-multisoliton", "--spec", spec, "--out", tmp_path / "t.kpf", *SMALL])
    rc, _, _ = run(["multisoliton-add", "--lambdas=-1,0,1", "--cs", "0,0,0", "--out", tmp_path / "m.kpf", *SMALL])
    assert rc == EXIT_OK
    a, b = read_field(tmp_path / "t.kpf").values, read_field(tmp_path / "m.kpf").values
    assert np.abs(a - b).max() < 1e-9
    rc, _, err = run(["multisoliton-add", "--lambdas=-1,1", "--cs", "0", "--out", tmp_path / "m.kpf", *SMALL])
    assert rc == EXIT_PRECONDITION and "same length" in err


def test_evolve_and_export(tmp_path):
    rc, _, _ = run(["backlund-add", "--u", "zero", "--out", tmp_path / "s.kpf", *SMALL])
    rc, out, _ = run(["evolve", "--u", tmp_path / "s.kpf", "--T", 0.05, "--save-every", 25,
                      "--out", tmp_path / "run"])
    assert rc == EXIT_OK and "3 snapshots" in out
    man = (tmp_path / "run" / "manifest.txt").read_text()
    assert "u_00002.kpf" in man
    rc, _, _ = run(["export-csv", "--in", tmp_path / "run" / "u_00002.kpf", "--curve", "argmin",
                    "--out", tmp_path / "pos.csv"])
    assert rc == EXIT_OK
    _, pos = read_curve(tmp_path / "pos.csv")
    assert np.abs(pos - 0.2).max() < 0.02
    rc, _, _ = run(["evolve", "--u", "zero", "--frame", "comoving_c4", "--T", 0.01, "--save-every", 5,
                    "--out", tmp_path / "co", *SMALL])
    assert rc == EXIT_OK


def test_phi_and_seminorm(tmp_path):
    rc, out, _ = run(["phi", "--u", "zero", "--out", tmp_path / "p.txt", *SMALL])
    assert rc == EXIT_OK and float(read_kv(tmp_path / "p.txt")["phi"]) == 0.0
    run(["backlund-add", "--u", "zero", "--gamma0", 1.0, "--out", tmp_path / "s.kpf", *SMALL])
    rc, _, _ = run(["seminorm", "--u", tmp_path / "s.kpf", "--out", tmp_path / "n.txt"])
    assert rc == EXIT_OK
    assert float(read_kv(tmp_path / "n.txt")["value"]) < 1e-8
    _, sigma = read_curve(tmp_path / "n_sigma.csv")
    assert np.abs(sigma - 1.0).max() < 1e-8


def test_commute_check_zero(tmp_path):
    # 256 points resolve the soliton's spectrum inside the 2/3 dealiasing band
    rc, _, _ = run(["commute-check", "--u", "zero", "--T", 0.1, "--save-every", 50, "--out", tmp_path / "c.txt",
                    "--nx", 256, "--ny", 256])
    assert rc == EXIT_OK
    assert float(read_kv(tmp_path / "c.txt")["max_mismatch"]) < 1e-6
    assert (tmp_path / "c_series.csv").read_text().startswith("t,gamma0_fit,c_fit,mismatch,edge_tail")


def test_exit_codes(tmp_path):
    rc, _, err = run(["frobnicate"])
    assert rc == EXIT_PRECONDITION
    rc, _, err = run([])
    assert rc == EXIT_PRECONDITION and "missing command" in err
    rc, _, err = run(["backlund-add", "--u", "zero", "--nx", 500, "--out", tmp_path / "x.kpf"])
    assert rc == EXIT_PRECONDITION and "power of two" in err
    rc, _, err = run(["gen-multisoliton", "--spec", tmp_path / "nope.tau", "--out", tmp_path / "x.kpf"])
    assert rc == EXIT_PRECONDITION
    rc, _, err = run(["backlund-add", "--u", "gauss:3,2", "--out", tmp_path / "x.kpf", *SMALL])
    assert rc == EXIT_NUMERICAL and "smallness guard" in err
    rc, _, err = run(["backlund-add", "--u", "zero", "--out", tmp_path / "missing" / "x.kpf"])
    assert rc == EXIT_PRECONDITION
    rc, _, err = run(["phi", "--u", "zero", "--threads", 0, "--out", tmp_path / "p.txt", *SMALL])
    assert rc == EXIT_PRECONDITION


def test_file_grid_must_match_flags(tmp_path):
    run(["backlund-add", "--u", "zero", "--out", tmp_path / "s.kpf", *SMALL])
    rc, _, err = run(["seminorm", "--u", tmp_path / "s.kpf", "--nx", 256, "--out", tmp_path / "n.txt"])
    assert rc == EXIT_PRECONDITION and "differs" in err


def test_module_entry_point(tmp_path):
    p = subprocess.run([sys.executable, "-m", "kp2backlund", "bogus"], capture_output=True, text=True)
    assert p.returncode == 1 and "kp2: error" in p.stderr


@pytest.mark.slow
def test_verify_quick(tmp_path):
    # the criteria are stated at the default resolution
    rc, out, _ = run(["verify", "--suite", "quick", "--out", tmp_path / "v.txt"])
    assert rc == EXIT_OK
    assert "10/10 checks passed" in out
    assert len(read_kv(tmp_path / "v.txt")) == 10
