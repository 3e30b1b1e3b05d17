"""Small algebras shared by several test modules."""
from __future__ import annotations

from gmpy2 import mpq

from approxsat.complex import Carrier, edge, unit_interval_metric
from approxsat.plmap import Algebra, ClosedFormOperation
from approxsat.theory import Interpretation, SimilarityType, parse_term

ONE, ZERO = mpq(1), mpq(0)


def interval(name: str = "interval") -> Carrier:
    return Carrier(edge(), unit_interval_metric(), name=name)


def _binary(C, name, f, lip):
    return ClosedFormOperation(name, 2, C, lambda vs: (f(vs[0][0], vs[1][0]),), lip)


def lattice_group_algebra() -> Algebra:
    """[0,1] with min, max and truncated + and -; the truncation keeps it closed."""
    C = interval()
    return Algebra(C, {
        "meet": _binary(C, "meet", min, ONE),
        "join": _binary(C, "join", max, ONE),
        "add": _binary(C, "add", lambda a, b: min(a + b, ONE), mpq(2)),
        "sub": _binary(C, "sub", lambda a, b: max(a - b, ZERO), mpq(2)),
    })


LG_TYPE = SimilarityType((("meet", 2), ("join", 2), ("add", 2), ("sub", 2)))
G_TYPE = SimilarityType((("G", 4),))


def lo_group_interpretation() -> Interpretation:
    """G(u,v,x,y) = x meet ((u - v) + (x meet y))."""
    t = parse_term("meet(x3,add(sub(x1,x2),meet(x3,x4)))", LG_TYPE)
    return Interpretation.from_dict(G_TYPE, LG_TYPE, {"G": t})
