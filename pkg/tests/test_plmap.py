import random

import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from approxsat import closedform as cf
from approxsat.complex import Carrier, RealizationPoint, cube_point, edge, random_point, triangle, unit_interval_metric
from approxsat.plmap import (Algebra, PLOperation, epsilon_chain, lipschitz_bound_pl, simplicial_approximate,
                             term_evaluate, term_lipschitz)
from approxsat.theory import parse_term, parse_theory


def interval() -> Carrier:
    return Carrier(edge(), unit_interval_metric(), name="interval")


def identity_pl(C: Carrier, level: int) -> PLOperation:
    L = C.tower.level(level)
    _, T = C.power(1)
    dom = T.level(level)
    return PLOperation(C, 1, level, level, {v: v for v in dom.vertices if v in L.vertices})


@pytest.mark.parametrize("level", [0, 1, 2])
def test_identity_pl_is_identity(level):
    C = interval()
    op = identity_pl(C, level)
    rng = random.Random(level)
    for _ in range(20):
        p = random_point(C.K, rng, 1 << 10)
        assert op.evaluate(p) == p


def test_non_simplicial_map_rejected():
    C = Carrier(edge())
    # {0, 1} are the two ends of the subdivided edge, not an edge of level 1
    with pytest.raises(ValueError):
        PLOperation(C, 1, 0, 1, {"a": 0, "b": 1})
    op = PLOperation(C, 1, 0, 1, {"a": 0, "b": 2})
    assert op.evaluate(RealizationPoint.vertex("a")) == RealizationPoint.vertex("a")


def test_pl_to_json_shape():
    C = interval()
    op = identity_pl(C, 1)
    js = op.to_json()
    assert js["kind"] == "pl" and js["M"] == 1 and js["N"] == 1
    assert set(js["vertex_map"]) == {"0", "1", "2"}


def test_closed_form_values():
    C = interval()
    mid, lo, hi = cf.midpoint(C), cf.coord_min(C), cf.coord_max(C)
    a, b = cube_point([mpq(1, 5)]), cube_point([mpq(3, 5)])
    assert C.embed(mid.evaluate(a, b)) == (mpq(2, 5),)
    assert C.embed(lo.evaluate(a, b)) == (mpq(1, 5),)
    assert C.embed(hi.evaluate(a, b)) == (mpq(3, 5),)


def test_registry_unknown_id():
    with pytest.raises(KeyError):
        cf.build("no.such.op", interval())


def test_term_evaluation_and_lipschitz():
    C = interval()
    th = parse_theory("m:2; m(x0,x1)=x0;")
    A = Algebra(C, {"m": cf.midpoint(C)})
    t = parse_term("m(m(x0,x1),x1)", th.type)
    env = {0: cube_point([0]), 1: cube_point([1])}
    assert C.embed(term_evaluate(A, t, env)) == (mpq(3, 4),)
    assert term_lipschitz(A, t) >= mpq(1, 2)


def test_epsilon_chain_halves():
    C = interval()
    A = Algebra(C, {"m": cf.midpoint(C)})
    ch = epsilon_chain(A, 4, mpq(1, 10))
    assert len(ch) == 5 and ch[0] == mpq(1, 10)
    assert all(b <= a / 2 for a, b in zip(ch.values, ch.values[1:]))
    with pytest.raises(ValueError):
        epsilon_chain(A, 2, 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**9))
def test_simplicial_approximation_error_is_sound(seed):
    C = interval()
    f = cf.midpoint(C)
    res = simplicial_approximate(f, mpq(1, 4))
    assert res.ok
    rng = random.Random(seed)
    for _ in range(10):
        a, b = random_point(C.K, rng, 1 << 10), random_point(C.K, rng, 1 << 10)
        x = C.embed(f.evaluate(a, b))[0]
        y = C.embed(res.op.evaluate(a, b))[0]
        assert abs(x - y) <= res.error_bound


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**9))
def test_pl_lipschitz_bound_is_sound(seed):
    C = interval()
    g = simplicial_approximate(cf.midpoint(C), mpq(1, 4)).op
    L = lipschitz_bound_pl(g)
    rng = random.Random(seed)
    p = [random_point(C.K, rng, 1 << 10) for _ in range(4)]
    d_in = max(abs(C.embed(p[0])[0] - C.embed(p[2])[0]), abs(C.embed(p[1])[0] - C.embed(p[3])[0]))
    d_out = abs(C.embed(g.evaluate(p[0], p[1]))[0] - C.embed(g.evaluate(p[2], p[3]))[0])
    assert d_out <= L * d_in
