import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ultrasphere.catalog import CATALOG, UnknownFunctionError, parse_function
from ultrasphere.cli import main
from ultrasphere.quadrature import CoeffTable, analyze, build_quadrature
from ultrasphere.rotmean import invariance_test, spherical_mean_surface
from ultrasphere.sphharm import build_basis
from ultrasphere.weight_seq import build_gevrey, check_conditions


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, [json.loads(line) for line in buf.getvalue().splitlines() if line.startswith("{")], buf.getvalue()


# weights ---------------------------------------------------------------


def test_weights_assoc():
    code, recs, _ = run("weights", "--gevrey", "1", "--assoc", "1,2")
    assert code == 0
    vals = {r["t"]: r["M"] for r in recs if r["record"] == "assoc"}
    assert vals[1.0] == 0.0
    assert vals[2.0] == pytest.approx(math.log(2), rel=1e-14)


def test_weights_partial_sum():
    code, recs, _ = run("weights", "--gevrey", "2", "--P", "200")
    assert code == 0
    rep = recs[0]
    assert rep["partial_sum"] == check_conditions(build_gevrey(2, 200)).partial_sum
    assert abs(rep["partial_sum"] - math.pi ** 2 / 6) < 1 / 199
    names = [c["name"] for c in rep["conditions"]]
    assert {"M.1", "M.2", "QA"} <= set(names)


def test_weights_derived():
    _, recs, _ = run("weights", "--gevrey", "1", "--derived")
    assert recs[-1]["record"] == "derived_sequence"
    assert recs[-1]["gevrey_order"] == pytest.approx(1.0)


# usage and failure codes -----------------------------------------------


def test_bad_flags_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["weights"], out=io.StringIO())
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_function_exit_2(capsys):
    code, recs, _ = run("transform", "--n", "3", "--f", "not_a_function")
    assert code == 2 and not recs
    assert "unknown function" in capsys.readouterr().err


def test_haar_needs_seed(capsys):
    code, _, _ = run("mean", "--f", "gaussian", "--x", "1,0,0", "--route", "haar")
    assert code == 2
    assert "--seed" in capsys.readouterr().err


def test_module_error_exit_1(capsys):
    # tol below the quadrature error floor is a computational refusal
    code, _, _ = run("invariance", "--f", "gaussian", "--n", "3", "--tol", "1e-20")
    assert code == 1
    assert "InvalidArgumentError" in capsys.readouterr().err


def test_missing_file_exit_1(tmp_path):
    code, _, _ = run("classify", "--table", str(tmp_path / "missing.jsonl"))
    assert code == 1


# transform and classify -------------------------------------------------


def test_transform_matches_module(tmp_path):
    path = tmp_path / "table.jsonl"
    code, recs, _ = run("transform", "--n", "3", "--J", "8", "--f", "gaussian", "--r", "1.0",
                        "--out", str(path))
    assert code == 0 and recs[0]["out"] == str(path)
    table = CoeffTable.from_jsonl(path.read_text())
    basis, quad = build_basis(3, 8), build_quadrature(3, 16)
    ref = analyze(lambda W: np.exp(-np.sum(W * W, axis=1)), basis, quad)
    assert np.array_equal(table.flat(), ref.flat())
    assert table.blocks[0][0] == pytest.approx(math.exp(-1) * math.sqrt(4 * math.pi), rel=1e-13)


def test_transform_csv():
    code, _, text = run("transform", "--n", "2", "--J", "3", "--f", "plane_wave_exp:1.0,1", "--format", "csv")
    assert code == 0
    assert text.splitlines()[0].replace(" ", "").startswith("j,k")


def test_classify_table_roundtrip(tmp_path):
    path = tmp_path / "t.jsonl"
    run("transform", "--n", "3", "--J", "12", "--f", "plane_wave_exp:1.0,3", "--out", str(path))
    _, recs, _ = run("classify", "--table", str(path))
    assert recs[0]["kind"] == "function_like"
    _, recs2, _ = run("classify", "--f", "plane_wave_exp:1.0,3", "--n", "3")
    assert recs2[0]["kind"] == "function_like"
    assert recs2[0]["bound"] == recs[0]["bound"]


def test_classify_decay_examples():
    _, recs, _ = run("classify", "--decay", ",".join(["1"] * 13))
    assert recs[0]["kind"] == "distribution_like"
    code, _, _ = run("classify", "--decay", "1,1", "--f", "gaussian", "--n", "3")
    assert code == 2


# polar, mean, invariance ------------------------------------------------


def test_polar_accepts_and_reconstructs():
    code, recs, _ = run("polar", "--f", "coordinate_monomial:x1x2_gaussian", "--n", "3", "--gevrey", "1")
    assert code == 0
    assert recs[0]["verdict"] == "pass" and recs[0]["relative_to"]
    assert recs[1]["record"] == "reconstruction" and recs[1]["max_error"] <= 1e-8


def test_polar_rejects_abs_r():
    code, recs, _ = run("polar", "--f", "abs_r", "--n", "3")
    assert code == 0 and recs[0]["verdict"] == "fail" and len(recs) == 1
    assert recs[0]["failed_conditions"] == ["smoothness"]


def test_invariance_examples():
    _, recs, _ = run("invariance", "--f", "gaussian", "--n", "3")
    assert recs[0]["verdict"] == "invariant"
    _, recs, _ = run("invariance", "--f", "coordinate_monomial:x1_gaussian", "--n", "3")
    assert recs[0]["verdict"] == "not-invariant" and recs[0]["witness"]["j"] == 1


def test_invariance_numbers_match_module():
    _, recs, _ = run("invariance", "--f", "coordinate_monomial:x1_gaussian", "--n", "3")
    phi = parse_function("coordinate_monomial:x1_gaussian", 3)
    rep = invariance_test(phi, build_basis(3, 8), build_quadrature(3, 16))
    assert recs[0]["witness"] == json.loads(json.dumps(rep.witness))
    assert recs[0]["error_floor"] == rep.error_floor


def test_mean_examples():
    code, recs, _ = run("mean", "--f", "coordinate_monomial:x1_gaussian", "--x", "1,0,0",
                        "--route", "coeffs,surface,haar", "--seed", "3", "--N", "2000")
    assert code == 0
    by = {r["route"]: r for r in recs}
    assert abs(by["coeffs"]["value"]) <= 1e-9 and abs(by["surface"]["value"]) <= 1e-9
    assert abs(by["haar"]["value"]) <= by["haar"]["tolerance"]
    phi = parse_function("gaussian", 3)
    _, recs, _ = run("mean", "--f", "gaussian", "--x", "0.5,0.5,0", "--route", "surface")
    assert recs[0]["value"] == spherical_mean_surface(phi, build_quadrature(3, 16), np.array([0.5, 0.5, 0]))


def test_mean_dimension_mismatch():
    code, _, _ = run("mean", "--f", "gaussian", "--x", "1,0,0", "--n", "4")
    assert code == 2


# determinism and catalog ------------------------------------------------


@pytest.mark.parametrize("argv", [
    ("weights", "--gevrey", "1.5", "--assoc", "0.5,3,100", "--derived"),
    ("mean", "--f", "plane_wave_exp:0.5,2", "--x", "0.1,0.2,0.3", "--route", "coeffs,haar", "--seed", "9", "--N", "500"),
    ("invariance", "--f", "harmonic_times_gaussian:2,1", "--n", "3", "--probes", "5", "--seed", "4"),
])
def test_byte_determinism(argv):
    assert run(*argv)[2] == run(*argv)[2]


_texts = st.one_of(
    st.just("gaussian"),
    st.just("abs_r"),
    st.floats(0, 10, allow_nan=False).map(lambda p: f"radial_power:{p!r}"),
    st.lists(st.integers(0, 4), min_size=3, max_size=3).filter(any).map(
        lambda a: "coordinate_monomial:" + "".join(f"x{i + 1}^{e}" for i, e in enumerate(a) if e)),
    st.tuples(st.integers(0, 4), st.integers(0, 8)).filter(lambda t: t[1] < 2 * t[0] + 1).map(
        lambda t: f"harmonic_times_gaussian:{t[0]},{t[1]}"),
    st.tuples(st.floats(-3, 3, allow_nan=False), st.integers(1, 3)).map(
        lambda t: f"plane_wave_exp:{t[0]!r},{t[1]}"),
)


@settings(max_examples=60, deadline=None)
@given(_texts)
def test_catalog_roundtrip(text):
    spec = parse_function(text, 3)
    again = parse_function(spec.text, 3)
    assert again == spec and again.text == spec.text
    X = np.array([[0.3, -0.2, 0.7], [0.0, 0.5, 0.1]])
    assert np.array_equal(spec(X), again(X))


@pytest.mark.parametrize("bad", ["", "gauss", "radial_power", "radial_power:x",
                                 "coordinate_monomial:x4", "coordinate_monomial:y1",
                                 "harmonic_times_gaussian:1,3", "plane_wave_exp:1,0", "gaussian:1"])
def test_catalog_rejects(bad):
    with pytest.raises(UnknownFunctionError):
        parse_function(bad, 3)


def test_catalog_names():
    assert set(CATALOG) == {"gaussian", "radial_power", "coordinate_monomial",
                            "harmonic_times_gaussian", "plane_wave_exp", "abs_r"}
