import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from qpspec import cli, tqse

HEADER = "method,N,L,e_N,wall_seconds,aliasing_norm"


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def short_cache(tmp_path, monkeypatch):
    """Private cache for short-horizon problems (T=1e-4, tau=1e-5)."""
    monkeypatch.setenv("QPSPEC_CACHE_DIR", str(tmp_path))
    return ["--T", "1e-4", "--tau", "1e-5", "--jobs", "1"]


def test_tqse_pm_row(capsys, reference):
    code, out, _ = run_cli(capsys, "tqse", "--method", "pm", "--N", "8", "--jobs", "1")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == HEADER
    method, N, L, e, wall, alias = lines[1].split(",")
    assert (method, N, L) == ("pm", "8", "")
    assert 2.543e-5 / 2 <= float(e) <= 2.543e-5 * 2
    assert float(wall) > 0 and float(alias) < 1e-11


def test_tqse_pam_row(capsys, reference):
    code, out, _ = run_cli(capsys, "tqse", "--method", "pam", "--L", "17", "--N", "8", "--no-timing", "--jobs", "1")
    assert code == 0
    (row,) = rows(out)
    assert row["L"] == "17" and row["wall_seconds"] == "" and row["aliasing_norm"] == ""
    assert float(row["e_N"]) == pytest.approx(1.899e-2, rel=1e-3)


@pytest.mark.parametrize("argv", [
    ["tqse", "--N", ""],
    ["tqse", "--N", "0"],
    ["tqse", "--method", "pam", "--N", "8"],
    ["tqse", "--method", "fft", "--N", "8"],
    ["tqse", "--N", "4", "--tau", "-1"],
    ["tqse", "--N", "4", "--tau", "3e-4"],
    ["convergence", "--N", "", "--method", "pm"],
    ["diophantine", "--L-range", "10", "5"],
    ["diophantine", "--convergents", "0"],
    ["slice", "--step", "0"],
    ["slice", "--step", "-0.1"],
])
def test_invalid_config_exits_2(capsys, argv):
    code, out, err = run_cli(capsys, *argv)
    assert code == 2 and out == "" and "error" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["tqse", "--format", "xml"])
    assert exc.value.code == 2


def test_blow_up_exits_3(capsys, monkeypatch, short_cache):
    def boom(*args, **kwargs):
        raise tqse.SolverBlowUp("non-finite state")
    monkeypatch.setattr(tqse, "run", boom)
    code, _, err = run_cli(capsys, "tqse", "--N", "4", *short_cache)
    assert code == 3 and "blow-up" in err


def test_convergence_sweep(capsys, short_cache):
    code, out, _ = run_cli(capsys, "convergence", "--method", "pm", "--N", "2,4,8,16", "--no-timing", *short_cache)
    assert code == 0
    assert out.splitlines()[0] == "method,N,e_N,wall_seconds"
    errs = [float(r["e_N"]) for r in rows(out)]
    assert len(errs) == 4 and all(a > b for a, b in zip(errs, errs[1:]))
    code, out, _ = run_cli(capsys, "convergence", "--method", "pm", "--N", "4", *short_cache)
    assert len(rows(out)) == 1


def test_convergence_qsm_tracks_pm(capsys, reference):
    code, out, _ = run_cli(capsys, "convergence", "--method", "pm,qsm", "--N", "2,4,8", "--no-timing", "--jobs", "1")
    assert code == 0
    table = {(r["method"], int(r["N"])): float(r["e_N"]) for r in rows(out)}
    for N in (2, 4, 8):
        ratio = table["qsm", N] / table["pm", N]
        # QSM drops what PM wraps around the box; the gap closes as N grows
        assert 1.0 <= ratio <= 1.2, (N, ratio)
    assert table["qsm", 8] / table["pm", 8] < 1.03


def test_diophantine_convergents(capsys):
    code, out, _ = run_cli(capsys, "diophantine", "--convergents", "6")
    assert code == 0
    assert [int(r["q"]) for r in rows(out)] == [1, 4, 17, 72, 305, 1292]


def test_diophantine_scan(capsys):
    code, out, _ = run_cli(capsys, "diophantine", "--L-range", "1", "1300")
    table = rows(out)
    assert out.splitlines()[0] == "L,diophantine_error"
    assert len(table) == 1300
    err = np.array([float(r["diophantine_error"]) for r in table])
    assert err[16] == pytest.approx(abs(17 * math.sqrt(5) - 38), rel=1e-9)
    code, out, _ = run_cli(capsys, "diophantine", "--record-minima")
    assert [int(r["L"]) for r in rows(out)] == [1, 4, 17, 72, 305, 1292]


def test_slice_output(capsys):
    code, out, _ = run_cli(capsys, "slice", "--x-max", "999.9", "--step", "0.1")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "x,y1,y2" and lines[1] == "0,0,0"
    pts = np.array([[float(v) for v in line.split(",")[1:]] for line in lines[1:]])
    assert len(pts) == 10_000
    assert len({tuple(p) for p in np.round(pts / 1e-9).astype(np.int64)}) == len(pts)
    assert pts[10, 1] == pytest.approx(math.fmod(math.sqrt(3.0), 2 * math.pi), abs=1e-11)


def test_slice_custom_projection(capsys):
    code, out, _ = run_cli(capsys, "slice", "--P", "1", "2.2360679775", "1.5", "--x-max", "1", "--step", "0.5")
    assert out.splitlines()[0] == "x,y1,y2,y3"


def test_deterministic_output_and_parallel_order(capsys, short_cache, tmp_path):
    args = ["tqse", "--method", "pm,qsm,pam", "--N", "2,4", "--L", "17,72", "--no-timing", *short_cache[:4]]
    outputs = []
    for jobs in ("1", "1", "3"):
        path = tmp_path / f"out{len(outputs)}.csv"
        assert cli.main([*args, "--jobs", jobs, "--out", str(path)]) == 0
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
    order = [(r["method"], r["N"], r["L"]) for r in rows(outputs[0].decode())]
    assert order == [("pm", "2", ""), ("pm", "4", ""), ("qsm", "2", ""), ("qsm", "4", ""),
                     ("pam", "2", "17"), ("pam", "2", "72"), ("pam", "4", "17"), ("pam", "4", "72")]


def test_json_format(capsys, short_cache):
    code, out, _ = run_cli(capsys, "tqse", "--N", "2", "--format", "json", "--no-timing", *short_cache)
    data = json.loads(out)
    assert data[0]["method"] == "pm" and data[0]["wall_seconds"] is None and data[0]["L"] is None


def test_selftest(capsys):
    code, out, _ = run_cli(capsys, "selftest", "--seed", "3")
    assert code == 0
    assert all(r["result"] == "pass" for r in rows(out))


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qpspec", "diophantine", "--convergents", "3"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.splitlines() == ["i,p,q", "0,2,1", "1,9,4", "2,38,17"]
