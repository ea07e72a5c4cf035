import csv
import io
import json
from fractions import Fraction as F

import numpy as np
import pytest

from cutset import cli
from cutset.builder import CONVENTIONS
from cutset.evaluator import evaluate
from cutset.io import (
    DEVIATIONS,
    export_plot_data,
    function_from_json,
    function_to_json,
    load_function,
    load_spec,
    plot_points,
    save_function,
    save_spec,
)
from cutset.sets import SpecError

from conftest import mixed_spec, ternary_spec


@pytest.fixture
def ternary_file(tmp_path):
    path = tmp_path / "ternary.json"
    save_spec(ternary_spec(), path)
    return path


@pytest.mark.parametrize("name", ["prescribed8", "mixed8", "sine8", "bumpsine6"])
def test_round_trip_bit_identical(name, request, tmp_path):
    pf = request.getfixturevalue(name)
    path = tmp_path / "f.json"
    save_function(pf, path)
    back = load_function(path)
    assert back.terms == pf.terms
    xs = np.random.default_rng(0).uniform(0, 1, 1000)
    a, b = evaluate(pf, xs, 3), evaluate(back, xs, 3)
    assert np.array_equal(a, b)


def test_spec_file_round_trip(tmp_path):
    path = tmp_path / "mixed.json"
    save_spec(mixed_spec(), path)
    assert load_spec(path) == mixed_spec()
    doc = json.loads(path.read_text())
    assert {p["type"] for p in doc["parts"]} == {"central_cantor", "geometric", "finite_points"}


def test_malformed_inputs(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SpecError):
        load_spec(bad)
    with pytest.raises(SpecError):
        function_from_json({"format": "other"})
    bad.write_text(json.dumps({"parts": [{"type": "central_cantor", "rule": "ratios", "tail": ["1/2"]}]}))
    with pytest.raises(SpecError):
        load_spec(bad)


def test_function_file_records_deviations(prescribed8):
    doc = function_to_json(prescribed8)
    assert doc["deviations"] == DEVIATIONS
    assert all(c in DEVIATIONS for c in CONVENTIONS)
    assert any("(n+1)^2" in d for d in DEVIATIONS) and any("4c" in d for d in DEVIATIONS)


def test_plot_data(prescribed8):
    buf = io.StringIO()
    rows = export_plot_data(prescribed8, 3, 0, buf)
    lines = list(csv.reader(io.StringIO(buf.getvalue())))
    assert lines[0] == ["x", "f0"] and len(lines) == rows + 1
    xs = [float(r[0]) for r in lines[1:]]
    assert {0.0, 0.5, 1.0} <= set(xs) and xs == sorted(xs) and rows > 3
    vs = prescribed8.validated
    from cutset.sets import Membership, membership

    for r in lines[1:]:
        if membership(vs, F(r[0])) is not Membership.OUTSIDE:
            assert float(r[1]) == 0.0


def test_plot_values_stable_under_grid_doubling(prescribed8):
    a, b = plot_points(prescribed8, 65), plot_points(prescribed8, 129)
    shared = np.intersect1d(a, b)
    assert np.array_equal(evaluate(prescribed8, shared, 2), evaluate(prescribed8, shared, 2))
    va = dict(zip(a, evaluate(prescribed8, a)[0]))
    vb = dict(zip(b, evaluate(prescribed8, b)[0]))
    assert all(va[x] == vb[x] for x in shared)


def test_grid_must_be_two():
    from cutset.builder import PiecewiseFunction

    with pytest.raises(ValueError):
        plot_points(PiecewiseFunction([], ternary_spec(), "prescribed"), 1)


# --------------------------------------------------------------------------
# command line


def run_cli(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_build_verify_happy_path(capsys, tmp_path, ternary_file):
    fn = tmp_path / "f.json"
    code, _, _ = run_cli(capsys, "build", "--spec", ternary_file, "--construction", "prescribed", "--depth", 6, "--out", fn)
    assert code == 0 and fn.exists()
    code, out, _ = run_cli(capsys, "verify", "--fn", fn, "--spec", ternary_file)
    rep = json.loads(out)
    assert code == 0 and rep["stats"]["agreement"] is True
    assert rep["header"]["deviations"] == DEVIATIONS and rep["header"]["seed"] == 0


def test_isolated_endpoint_exit_one(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"parts": [{"type": "finite_points", "points": ["0", "1/2"]}]}))
    code, _, err = run_cli(capsys, "validate", "--spec", bad)
    assert code == 1 and "HypothesisError" in err


def test_missing_file_exit_one(capsys, tmp_path):
    code, _, _ = run_cli(capsys, "eval", "--fn", tmp_path / "nope.json", "--at", "1/2")
    assert code == 1


def test_order_cap_exit_one(capsys, tmp_path, ternary_file):
    code, _, _ = run_cli(capsys, "kernel", "--order", 99)
    assert code == 1


def test_truncated_gaps_exit_two(capsys, tmp_path, ternary_file):
    spec = tmp_path / "mixed.json"
    save_spec(mixed_spec(), spec)
    code, out, _ = run_cli(capsys, "gaps", "--spec", spec, "--depth", 3, "--budget", 8)
    assert code == 2 and "truncated" in out
    code, _, _ = run_cli(capsys, "gaps", "--spec", ternary_file, "--depth", 3)
    assert code == 0


def test_gaps_csv(capsys, tmp_path, ternary_file):
    out_csv = tmp_path / "g.csv"
    code, out, _ = run_cli(capsys, "gaps", "--spec", ternary_file, "--depth", 2, "--csv", out_csv)
    assert code == 0 and "J[] (1/3, 2/3)" in out
    rows = list(csv.reader(out_csv.open()))
    assert rows[0] == ["kind", "index", "left", "right", "length"]
    assert ["gap", "", "1/3", "2/3", "1/3"] in rows


def test_eval_and_sample(capsys, tmp_path, ternary_file):
    fn = tmp_path / "f.json"
    run_cli(capsys, "build", "--spec", ternary_file, "--construction", "prescribed", "--depth", 4, "--out", fn)
    code, out, _ = run_cli(capsys, "eval", "--fn", fn, "--at", "1/2", "--order", 0)
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(0.5 * np.exp(-11), rel=1e-13)
    samples = tmp_path / "s.csv"
    code, _, _ = run_cli(capsys, "sample", "--fn", fn, "--grid", 17, "--orders", 2, "--out", samples)
    rows = list(csv.reader(samples.open()))
    assert code == 0 and rows[0] == ["x", "f0", "f1", "f2"]


def test_kernel_csv(capsys):
    code, out, _ = run_cli(capsys, "kernel", "--order", 1, "--samples", 5)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["x", "h0", "h1"] and len(rows) == 6
    assert float(rows[3][1]) == pytest.approx(np.exp(-8), rel=1e-15) and float(rows[3][2]) == 0.0


def test_report_commands(capsys, tmp_path, ternary_file):
    fn = tmp_path / "f.json"
    run_cli(capsys, "build", "--spec", ternary_file, "--construction", "sine", "--depth", 6, "--out", fn)
    code, out, _ = run_cli(capsys, "variation", "--fn", fn, "--bound", 1000)
    rep = json.loads(out)
    assert code == 0 and rep["status"] == "diverges-past-B" and rep["level"] == 16
    code, out, _ = run_cli(capsys, "conditions", "--fn", fn)
    assert code == 0 and json.loads(out)["cond_i"] is True
    report = tmp_path / "por.json"
    code, _, _ = run_cli(capsys, "porosity", "--fn", "zero", "--eps", "0.25", "--n", 10, "--trials", 50, "--out", report)
    rep = json.loads(report.read_text())
    assert code == 0 and rep["porosity_bound"] == "1/4"


def test_detect_and_zcprobe(capsys, tmp_path, ternary_file):
    fn = tmp_path / "f.json"
    run_cli(capsys, "build", "--spec", ternary_file, "--construction", "prescribed", "--depth", 8, "--out", fn)
    code, out, _ = run_cli(capsys, "detect", "--fn", fn, "--delta", "1e-3", "--zeta", 0)
    rep = json.loads(out)
    assert code == 0 and rep["stats"]["fp"] == 0 and rep["delta"] == 1e-3
    code, out, _ = run_cli(capsys, "zcprobe", "--fn", fn, "--alpha", 0.3)
    assert code == 0 and json.loads(out)["heuristic"] is True


def test_text_format(capsys, tmp_path, ternary_file):
    code, out, _ = run_cli(capsys, "validate", "--spec", ternary_file, "--format", "text")
    assert code == 0 and out.strip() and not out.lstrip().startswith("{")
