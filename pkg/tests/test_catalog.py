import json

import pytest
from gmpy2 import mpq

from approxsat import catalog
from approxsat import closedform as cf
from approxsat.catalog import INJ, delta_family, exotic_square, lattice_fragment, run, run_all
from approxsat.complex import Carrier, barycenter, cube_point, edge, square, unit_cube_metric, unit_interval_metric
from approxsat.constructions import constant_algebra
from approxsat.plmap import Algebra
from approxsat.theory import is_syntactically_consistent


def test_registry_names():
    names = catalog.names()
    for want in ("inconsistent.zero", "inconsistent.prime", "interval.inj.upper", "interval.inj.lower.evidence",
                 "square.inj.half", "square.inj.exotic", "cube.mn.exotic", "cube.power.exotic",
                 "triode.lattice.exotic", "interval.semilattice.smooth", "hspace.flat.exact", "product.metrics"):
        assert want in names
    assert names == sorted(names)


@pytest.mark.parametrize("name", catalog.names())
def test_entry_passes(name):
    r = run(name)
    assert r.passed, r.line()
    json.dumps(r.to_json())


def test_unknown_entry():
    with pytest.raises(KeyError):
        run("no.such.entry")


def test_run_all_filter_and_order():
    reps = run_all("square.*")
    assert [r.name for r in reps] == ["square.inj.exotic", "square.inj.half"]


def test_stubs_are_listed():
    reps = run_all(include_stubs=True)
    stubs = [r for r in reps if r.notes.startswith("stub")]
    assert len(stubs) == len(catalog.STUBS)
    assert all(r.line().startswith("STUB") for r in stubs)


def test_report_json_has_no_time_by_default():
    r = run("hspace.flat.exact")
    assert "wall_time" not in r.to_json()
    assert r.to_json(timing=True)["wall_time"] is not None


def test_lattice_fragment_is_consistent():
    frag = lattice_fragment()
    assert len(frag) >= 10
    assert is_syntactically_consistent(frag)


def test_delta_family_interval():
    C = Carrier(edge(), unit_interval_metric(), name="I")
    A = constant_algebra(C, INJ, cube_point([mpq(1, 2)]))
    rep = delta_family(INJ, [A])
    assert rep.min_hi == mpq(1, 2) and rep.label == "estimate over finite family"


def test_delta_family_square_has_small_member():
    sq = Carrier(square(), unit_cube_metric(2), name="euclid")
    euclid = Algebra(sq, {"G": cf.build("square.G.a0b1", sq), "F0": cf.build("square.F0.half", sq),
                          "F1": cf.build("square.F1.half", sq)})
    C = exotic_square(mpq(1, 20))
    exotic = Algebra(C, {"G": cf.build("square.G.a0b0", C), "F0": cf.build("square.F0.a0", C),
                         "F1": cf.build("square.F1.a1", C)})
    rep = delta_family(INJ, [euclid, exotic])
    assert rep.min_hi <= mpq(1, 20) + mpq(1, 100)
    assert len(rep.intervals) == 2


def test_delta_family_rejects_mixed_complexes():
    a = constant_algebra(Carrier(edge()), INJ, barycenter(["a", "b"]))
    b = constant_algebra(Carrier(square(), unit_cube_metric(2)), INJ, cube_point([0, 0]))
    with pytest.raises(ValueError):
        delta_family(INJ, [a, b])
    with pytest.raises(ValueError):
        delta_family(INJ, [])
