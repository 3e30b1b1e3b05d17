import io
import json

import pytest
from gmpy2 import mpq

from approxsat.cli import main
from approxsat.complex import (Carrier, MetricSpec, cube, edge, power_complex, triode, unit_cube_metric)
from approxsat.io import (algebra_from_json, algebra_to_json, complex_from_json, complex_to_json, metric_from_json,
                          metric_to_json, rational_arg)
from approxsat.lam import decide_within
from approxsat.theory import parse_theory

INJ_TEXT = "G:2; F0:1; F1:1;\nF0(G(x0,x1)) = x0;\nF1(G(x0,x1)) = x1;\n"


def run_cli(*argv):
    buf = io.StringIO()
    code = main(list(argv), stream=buf)
    return code, buf.getvalue()


@pytest.fixture
def files(tmp_path):
    (tmp_path / "inj.thy").write_text(INJ_TEXT)
    (tmp_path / "id.thy").write_text("F:1; F(x0)=x0;\n")
    (tmp_path / "empty.thy").write_text("")
    (tmp_path / "edge.json").write_text(json.dumps({"vertices": ["a", "b"], "simplices": [["a", "b"]]}))
    return tmp_path


def test_complex_roundtrip():
    for K in (edge(), triode(), power_complex(edge(), 2)):
        K2, m = complex_from_json(json.loads(json.dumps(complex_to_json(K))))
        assert K2 == K and m is None


def test_metric_roundtrip():
    for m in (MetricSpec(), unit_cube_metric(3, "sup", [1, mpq(1, 5), mpq(1, 5)]),
              MetricSpec.product(unit_cube_metric(1), unit_cube_metric(1), "tau")):
        assert metric_from_json(json.loads(json.dumps(metric_to_json(m)))) == m


def test_complex_with_metric_roundtrip():
    K, m = cube(2), unit_cube_metric(2)
    K2, m2 = complex_from_json(complex_to_json(K, m))
    assert K2 == K and m2 == m


def test_pl_algebra_roundtrip():
    inj = parse_theory("F:1; F(x0)=x0;")
    d = decide_within(Carrier(edge(), name="edge"), inj, 1, 1, mpq(1, 10))
    assert d.verdict == "YES"
    data = algebra_to_json(d.witness_algebra, "edge")
    A = algebra_from_json(json.loads(json.dumps(data)), dict(inj.type.symbols))
    assert A.ops["F"].vertex_map == d.witness_algebra.ops["F"].vertex_map


def test_algebra_errors():
    with pytest.raises(ValueError):
        algebra_from_json({"carrier": "edge", "ops": {"Q": {"kind": "pl"}}}, {"F": 1})
    with pytest.raises(ValueError):
        algebra_from_json({"carrier": "edge", "ops": {}}, {"F": 1})
    with pytest.raises(ValueError):
        algebra_from_json({"carrier": "edge", "ops": {"F": {"kind": "pl", "M": 0, "N": 0,
                                                              "vertex_map": {"zz": "a"}}}}, {"F": 1})


def test_rational_flags():
    assert rational_arg("9/20") == mpq(9, 20)
    for bad in ("0.45", "1e-2"):
        with pytest.raises(ValueError):
            rational_arg(bad)


def test_cli_decide_inj(files):
    code, out = run_cli("decide", "--complex", str(files / "edge.json"), "--theory", str(files / "inj.thy"),
                        "--M", "0", "--N", "1", "--q", "9/20", "--tol", "1/50")
    assert code == 0 and out.startswith("NO")


def test_cli_decide_budget_exit(files):
    code, out = run_cli("decide", "--complex", "edge", "--theory", str(files / "inj.thy"),
                        "--M", "0", "--N", "1", "--q", "9/20", "--budget", "3")
    assert code == 1 and "budget exhausted" in out


def test_cli_power_theory(files):
    code, out = run_cli("theory", "power", "--n", "2", "--in", str(files / "empty.thy"))
    assert code == 0
    assert "g(g(x0)) = x0;" in out and "d(d(x1,x2),d(x3,x4)) = d(x1,x4);" in out


def test_cli_theory_subcommands(files):
    assert run_cli("theory", "parse", "--in", str(files / "inj.thy"))[1] == INJ_TEXT
    assert run_cli("theory", "undemanding", "--in", str(files / "inj.thy"))[1].strip() == "DEMANDING"
    code, out = run_cli("theory", "product", "--left", str(files / "id.thy"), "--right", str(files / "empty.thy"))
    assert code == 0 and "p(x1,x1) = x1;" in out
    (files / "h.thy").write_text("H:1; H(x0)=x0;")
    (files / "a.json").write_text(json.dumps({"H": "F(x1)"}))
    code, out = run_cli("theory", "interpret", "--gamma", str(files / "h.thy"), "--sigma", str(files / "id.thy"),
                        "--assign", str(files / "a.json"))
    assert (code, out.strip()) == (0, "VALID")
    code, out = run_cli("theory", "abelian", "--in", str(files / "id.thy"), "--format", "json-lines")
    assert json.loads(out)["abelian"] is True


def test_cli_complex_subcommands(files):
    code, out = run_cli("complex", "validate", "--in", str(files / "edge.json"))
    assert (code, out.strip()) == (0, "VALID")
    (files / "bad.json").write_text(json.dumps({"vertices": ["a", "b", "c"], "simplices": [["a", "b", "c"]]}))
    assert run_cli("complex", "validate", "--in", str(files / "bad.json"))[1].startswith("INVALID")
    code, out = run_cli("complex", "subdivide", "--in", "edge", "--m", "2", "--format", "json-lines")
    assert len(json.loads(out)["vertices"]) == 5
    code, out = run_cli("complex", "product", "--left", "edge", "--right", "edge", "--format", "json-lines")
    assert len(json.loads(out)["simplices"]) == 2
    code, out = run_cli("complex", "mesh", "--in", "triangle", "--m", "2", "--format", "json-lines")
    assert json.loads(out)["within"] is True
    code, out = run_cli("complex", "diameter", "--in", "cube:2")
    assert code == 0 and "1.414214" in out


def test_cli_lambda_sup(files):
    (files / "sq.json").write_text(json.dumps({"carrier": "cube:2", "ops": {
        "G": {"kind": "closed", "name": "square.G.a0b1"},
        "F0": {"kind": "closed", "name": "square.F0.half"},
        "F1": {"kind": "closed", "name": "square.F1.half"}}}))
    code, out = run_cli("lambda", "sup", "--algebra", str(files / "sq.json"), "--theory", str(files / "inj.thy"),
                        "--format", "json-lines")
    assert code == 0
    last = json.loads(out.splitlines()[-1])
    assert last["lambda"]["lo"] == "1/2" and last["lambda"]["hi"] == "1/2"


def test_cli_usage_errors(files):
    assert run_cli()[0] == 2
    assert run_cli("bogus")[0] == 2
    assert run_cli("decide", "--complex", "edge", "--theory", str(files / "id.thy"), "--M", "0", "--N", "0",
                   "--q", "0.1")[0] == 2
    assert run_cli("repro")[0] == 2
    assert run_cli("repro", "no.such.entry")[0] == 2
    assert run_cli("theory", "parse", "--in", str(files / "missing.thy"))[0] == 2
    (files / "broken.thy").write_text("F:1; F(x0)=x0")
    assert run_cli("theory", "parse", "--in", str(files / "broken.thy"))[0] == 2
    assert run_cli("enumerate", "E", "--budget", "10")[0] == 2


def test_cli_repro_single_and_json(files):
    code, out = run_cli("repro", "square.inj.half", "--format", "json-lines")
    rec = json.loads(out)
    assert code == 0 and rec["pass"] is True and "wall_time" not in rec
    code, out = run_cli("repro", "square.inj.half", "--timing", "--format", "json-lines")
    assert "wall_time" in json.loads(out)


def test_cli_enumerate_streams():
    code, out = run_cli("enumerate", "F", "--budget", "200", "--format", "json-lines")
    assert code == 0
    recs = [json.loads(l) for l in out.splitlines()]
    assert recs and all(r["s"] >= 1 for r in recs)
    code, out = run_cli("enumerate", "E", "--budget", "200", "--alpha", "1")
    assert code == 0


def test_structured_output_is_thread_independent(files):
    args = ["enumerate", "B", "--budget", "400", "--format", "json-lines"]
    assert run_cli(*args, "--threads", "1") == run_cli(*args, "--threads", "4")
