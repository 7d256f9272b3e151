import csv
import json
import subprocess
import sys


from oracles import RIEMANN_ZEROS, xi
from nzlab.cli import main



def test_zeta_rank1_on_critical_line(tmp_path):
    out = tmp_path / "z.csv"
    assert main(["zeta", "--rank", "1", "--s-grid", "0.5,0.5,1,0,30,7", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 7
    for r in rows:
        s = complex(float(r["s_re"]), float(r["s_im"]))
        assert abs(complex(float(r["value_re"]), float(r["value_im"])) - xi(s)) <= max(float(r["err"]), 1e-15)


def test_zeta_empty_range_and_pole(tmp_path):
    out = tmp_path / "e.csv"
    assert main(["zeta", "--s-grid", "0.5,0.5,0,0,1,3", "--out", str(out)]) == 0
    assert out.read_text() == "s_re,s_im,value_re,value_im,err\n"
    assert main(["zeta", "--s-grid", "1,1,1,0,0,1", "--out", str(out)]) == 3


def test_usage_and_io_exit_codes(tmp_path):
    assert main(["zeta", "--s-grid", "1,2"]) == 2
    assert main(["zeta", "--rank", "5", "--s-grid", "0.5,0.5,1,0,1,1"]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["zeta", "--s-grid", "0.5,0.5,1,0,1,1", "--out", str(tmp_path / "no" / "x.csv")]) == 4
    assert main(["langevin", "--paths", "0"]) == 2
    assert main(["langevin", "--model", "levy", "--out", str(tmp_path / "l")]) == 2


def test_zeros_idempotent(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    cache = tmp_path / "zeros.csv"
    args = ["zeros", "--rank", "1", "--gamma-range", "10,30", "--cache", str(cache)]
    assert main(args) == 0
    first = cache.read_bytes()
    rows = list(csv.DictReader(cache.open()))
    assert len(rows) == 3
    for r, g in zip(rows, RIEMANN_ZEROS):
        assert abs(float(r["gamma"]) - g) <= 1e-5
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "100")
    assert main(args) == 0
    assert cache.read_bytes() == first


def test_zeros_report_carries_both_routes(tmp_path):
    cache, rep = tmp_path / "z.csv", tmp_path / "r.csv"
    assert main(["zeros", "--rank", "2", "--gamma-range", "6,12", "--route", "both",
                 "--cache", str(cache), "--out", str(rep)]) == 0
    rows = list(csv.DictReader(rep.open()))
    assert {r["route"] for r in rows} == {"direct", "phi"}
    for r in rows:
        assert abs(float(r["residual_direct"])) <= 1e-5 and abs(float(r["residual_phi"])) <= 1e-5


def test_verify_report_deterministic_and_negative_control(tmp_path, monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["verify", "--suite", "heat", "--suite", "resolvent", "--samples", "10", "--seed", "4"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["pass"] is True
    monkeypatch.setenv("NZL_CORRUPT_SIGN", "1")
    c = tmp_path / "c.json"
    assert main(["verify", "--suite", "resolvent", "--samples", "5", "--out", str(c)]) == 3
    assert json.loads(c.read_text())["suites"]["resolvent"]["pass"] is False


def test_langevin_outputs_deterministic(tmp_path, capsys):
    p1, p2 = tmp_path / "a", tmp_path / "b"
    base = ["langevin", "--model", "ou", "--paths", "3000", "--steps", "300", "--seed", "2"]
    assert main(base + ["--out", str(p1)]) == 0
    out = capsys.readouterr().out
    assert "equipartition" in out
    assert main(base + ["--out", str(p2)]) == 0
    for suffix in ("_moments.csv", "_km.csv", "_fp.csv"):
        assert (tmp_path / ("a" + suffix)).read_bytes() == (tmp_path / ("b" + suffix)).read_bytes()


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "nzlab.cli", "zeta", "--s-grid", "0.5,0.5,1,0,0,1"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.splitlines()[0] == "s_re,s_im,value_re,value_im,err"
