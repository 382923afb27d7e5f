import io
import json
import subprocess
import sys

import pytest

from heightlab.cli import run

NONEXISTENT = "weights: [0, 1, 1]\nN: [[0, 1, 0], [0, 0, 0], [0, 0, 0]]\n"
KUMMER_SHAPE = "weights: [0, -2]\nN: [[0, 0], [3, 0]]\n"
VARIATION = """
weights: [0, -2]
polarizations: {0: [[1]], -2: [[1]]}
points:
  - {label: a, N: [[0, 0], [2, 0]]}
  - {label: b, N: [[0, 0], [-1, 0]]}
"""
NEGATIVE = """
weights: [0, -2]
polarizations: {0: [[1]], -2: [[-1]]}
points:
  - {label: a, N: [[0, 0], [2, 0]]}
"""
MOTIVE = """
weights: [0, -2]
polarizations: {0: [[1]], -2: [[1]]}
finite_places:
  - {label: "2", norm: 2, N: [[0, 0], [2, 0]]}
arch_places:
  - {label: inf, kind: real, F: {0: [[1, "0.2206356001526516i"]]}}
"""


def call(*argv, tmp=None, doc=None):
    args = list(argv)
    if doc is not None:
        p = tmp / "doc.yaml"
        p.write_text(doc)
        args += ["--input", str(p)]
    out = io.StringIO()
    code = run(args, out)
    return code, out.getvalue()


def test_kummer_text():
    code, out = call("kummer", "--a", "4")
    assert code == 0
    assert "2*log(2)" in out and "total" in out


def test_kummer_rows_are_json():
    code, out = call("kummer", "--a", "5/3", "--format", "rows")
    assert code == 0
    rows = [json.loads(line) for line in out.splitlines()]
    places = [r["place"] for r in rows if "place" in r]
    assert places == ["3", "5", "inf", "total"]


def test_kummer_csv_deterministic():
    a = call("kummer", "--a", "36/25", "--format", "csv")
    b = call("kummer", "--a", "36/25", "--format", "csv")
    assert a == b and a[1].splitlines()[0] == "place,w,d,height,exact"


def test_kummer_errors():
    assert call("kummer")[0] == 2
    assert call("kummer", "--a", "0")[0] == 2
    assert call("kummer", "--a", "x")[0] == 2
    assert call("nonsense")[0] == 2


def test_rmf_exit_codes(tmp_path):
    assert call("rmf", tmp=tmp_path, doc=KUMMER_SHAPE)[0] == 0
    assert call("rmf", tmp=tmp_path, doc=NONEXISTENT)[0] == 3
    assert call("rmf")[0] == 2


def test_split(tmp_path):
    code, out = call("split", "--format", "rows", tmp=tmp_path, doc=KUMMER_SHAPE)
    assert code == 0
    rows = [json.loads(line) for line in out.splitlines()]
    assert {"index": -2, "kind": "Nbar_w", "value": "[3]"} in rows


def test_geo_height(tmp_path):
    code, out = call("geo-height", "--format", "rows", tmp=tmp_path, doc=VARIATION)
    assert code == 0
    rows = [json.loads(line) for line in out.splitlines()]
    assert rows[-1]["point"] == "total" and float(rows[-1]["height"]) == 3


def test_geo_height_without_points(tmp_path):
    code, out = call("geo-height", tmp=tmp_path, doc="weights: [0]\npolarizations: {0: [[1]]}\n")
    assert code == 0 and "total" in out


def test_negative_pairing(tmp_path):
    assert call("geo-height", tmp=tmp_path, doc=NEGATIVE)[0] == 4


def test_total_and_arch(tmp_path):
    code, out = call("total", tmp=tmp_path, doc=MOTIVE)
    assert code == 0 and "out of scope" in out
    code, out = call("arch-height", "--format", "csv", tmp=tmp_path, doc=MOTIVE)
    assert code == 0 and out.splitlines()[1].startswith("inf,0,2,")


def test_ga_commands():
    code, out = call("ga1", "--family", "T", "--points", "2,3/7,-10")
    assert code == 0 and "slope" in out
    code, out = call("ga2", "--family", "T", "--x", "0", "--place", "5", "--sweep", "pow:5:1:4",
                     "--format", "rows")
    assert code == 0
    assert all(json.loads(line).get("zero", "yes") == "yes" for line in out.splitlines())


def test_ga_errors():
    assert call("ga1", "--family", "T-1", "--points", "1")[0] == 2
    assert call("ga1", "--family", "T")[0] == 2
    assert call("ga2", "--place", "p", "--points", "2")[0] == 2


def test_precision_env(monkeypatch):
    monkeypatch.setenv("HEIGHTLAB_PRECISION", "bad")
    assert call("kummer", "--a", "2")[0] == 2
    monkeypatch.setenv("HEIGHTLAB_PRECISION", "200")
    code, out = call("kummer", "--a", "2", "--digits", "50", "--place", "inf")
    assert code == 0 and "0.69314718055994530941723212145817656807550013436" in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "heightlab", "kummer", "--a", "7", "--format", "csv"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and res.stdout.startswith("place,w,d,height,exact")


@pytest.mark.parametrize("cmd", ["rmf", "split", "geo-height", "arch-height", "total"])
def test_missing_file(cmd, tmp_path):
    assert call(cmd, "--input", str(tmp_path / "nope.yaml"))[0] == 2
