import random
from math import sqrt

import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from approxsat.complex import (Carrier, Complex, MetricSpec, RealizationPoint, SubdivisionTower, barycenter,
                               cube, cube_point, diameter, distance, edge, eccentricity, measured_mesh,
                               mesh_bound, power_complex, product_complex, random_point, square, triangle,
                               triode, unit_cube_metric, unnest, validate)


def test_seed_complexes_are_closed():
    for K in (edge(), triangle(), square(), triode(), cube(3)):
        assert validate(K) is None


def test_validate_reports_missing_face():
    K = Complex(("a", "b", "c"), frozenset([frozenset("abc"), frozenset("a"), frozenset("b"), frozenset("c")]))
    v = validate(K)
    assert v is not None and v.reason == "face missing"


def test_point_validation():
    with pytest.raises(ValueError):
        RealizationPoint.of({"a": mpq(1, 2)})
    with pytest.raises(ValueError):
        RealizationPoint.of({"a": mpq(3, 2), "b": mpq(-1, 2)})
    p = RealizationPoint.of({"a": mpq(1, 2), "b": mpq(1, 2), "c": 0})
    assert p.carrier == frozenset("ab")


def test_edge_times_edge():
    P, _, _ = product_complex(edge(), edge())
    assert len(P.vertices) == 4
    assert len(P.top_simplices) == 2
    assert sum(1 for s in P.simplices if len(s) == 2) == 5


def test_triangle_times_edge_is_prism():
    P, _, _ = product_complex(triangle(), edge())
    # (2+1 choose 1) = 3 tetrahedra
    assert len(P.top_simplices) == 3 and P.dim == 3


def test_power_is_left_nested():
    P = power_complex(edge(), 3)
    v = P.vertices[0]
    assert len(unnest(v, 3)) == 3
    assert len(P.top_simplices) == 6


@pytest.mark.parametrize("K,counts", [(edge(), [(3, 2), (5, 4)]), (triangle(), [(7, 6), (None, 36)])])
def test_subdivision_counts(K, counts):
    T = SubdivisionTower(K)
    for m, (nv, nt) in enumerate(counts, start=1):
        L = T.level(m)
        if nv is not None:
            assert len(L.vertices) == nv
        assert len(L.top_simplices) == nt
        assert validate(L) is None


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9), st.integers(0, 3))
def test_locate_reproduces_point(seed, m):
    K = triode() if seed % 2 else triangle()
    T = SubdivisionTower(K)
    p = random_point(K, random.Random(seed), denom=1 << 10)
    simplex, coords = T.locate(p, m)
    assert set(coords) <= set(simplex)
    assert T.push_down(m, coords) == p


def test_locate_tie_break_is_deterministic():
    K = edge()
    T = SubdivisionTower(K)
    mid = barycenter(["a", "b"])
    a = T.locate(mid, 2)
    b = T.locate(mid, 2)
    assert a == b


def test_edge_diameter_is_sqrt2():
    lo, hi = diameter(edge())
    assert lo <= sqrt(2) <= hi and hi - lo < mpq(1, 10**9)


def test_coordinate_square_diameter():
    C = Carrier(square(), unit_cube_metric(2))
    lo, hi = diameter(square(), carrier=C)
    assert lo <= sqrt(2) <= hi


def test_sup_norm_cube_diameter():
    m = unit_cube_metric(3, norm="sup")
    lo, hi = diameter(cube(3), m)
    assert lo == hi == 1


def test_product_metric_combines():
    I = unit_cube_metric(1)
    pts = (cube_point([0]), cube_point([1]))
    K, _, _ = product_complex(cube(1), cube(1))
    for combine, want in (("rho", sqrt(2)), ("sigma", 1.0), ("tau", 2.0)):
        C = Carrier(K, MetricSpec.product(I, I, combine))
        lo, hi = diameter(K, carrier=C)
        assert lo - mpq(1, 10**6) <= want <= hi + mpq(1, 10**6), combine
    assert pts[0] != pts[1]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_distance_is_a_metric(seed):
    rng = random.Random(seed)
    K = triode()
    p, r, s = (random_point(K, rng, 1 << 8) for _ in range(3))
    d_pr, d_rp = distance(p, r), distance(r, p)
    assert d_pr == d_rp
    assert distance(p, p).square == 0
    # triangle inequality with the certified brackets
    assert distance(p, s).bounds()[0] <= distance(p, r).bounds()[1] + distance(r, s).bounds()[1]


@pytest.mark.parametrize("K", [edge(), triangle()])
@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_mesh_lemma(K, m):
    assert measured_mesh(K, m) <= mesh_bound(K, m)


def test_eccentricity_of_edge_midpoint():
    lo, hi = eccentricity(barycenter(["a", "b"]), Carrier(edge()))
    assert lo <= sqrt(2) / 2 <= hi


def test_carrier_point_roundtrip():
    C = Carrier(square(), unit_cube_metric(2))
    p = cube_point([mpq(1, 3), mpq(3, 4)])
    assert C.point_of(C.embed(p)) == p
    assert C.embed(p) == (mpq(1, 3), mpq(3, 4))


def test_metric_validation():
    with pytest.raises(ValueError):
        MetricSpec("coordinate", norm="l7")
    with pytest.raises(ValueError):
        MetricSpec.coordinate({"a": [0], "b": [1]}, weights=[0])
