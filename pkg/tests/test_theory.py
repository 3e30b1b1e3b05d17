import random

import pytest
from hypothesis import given, settings, strategies as st

from approxsat.theory import (Apply, Equation, Interpretation, SimilarityType, Theory, TheoryParseError,
                              Variable, app, check_interpretation, format_theory, is_abelian_bounded,
                              is_syntactically_consistent, is_undemanding, parse_term, parse_theory,
                              power_theory, product_theory, star_transform, var)

from oracles import random_term, trite_model_exists


def test_parse_and_format_roundtrip():
    text = "F:2; e:0;\n# comment\nF(e,x1) = x1;\nF(x1,e) = x1;\n"
    th = parse_theory(text)
    assert th.type.arity("F") == 2 and th.type.arity("e") == 0
    assert len(th) == 2
    assert th.equations[0] == Equation(app("F", app("e"), var(1)), var(1))
    assert parse_theory(format_theory(th)) == th


@pytest.mark.parametrize("text,where", [
    ("F:1; F(x0,x1)=x0;", "arity mismatch"),
    ("F:1; F(x0)=x0", "expected ';'"),
    ("F(x0)=x0;", "undeclared"),
    ("F:1; F:2;", "duplicate"),
])
def test_parse_errors(text, where):
    with pytest.raises(TheoryParseError) as info:
        parse_theory(text)
    assert where in str(info.value)


def test_empty_theory():
    th = parse_theory("")
    assert len(th) == 0 and th.type.symbols == ()


def test_syntactic_consistency():
    assert not is_syntactically_consistent(parse_theory("x0 = x1;"))
    assert is_syntactically_consistent(parse_theory("x0 = x0;"))
    assert is_syntactically_consistent(parse_theory("m:2; e:0; m(e,x0)=x0; m(x0,e)=x0;"))


def test_product_theory_basics():
    a = parse_theory("F:1; F(x1)=x1;")
    b = parse_theory("G:1; G(x1)=x1;")
    pr = product_theory(a, b)
    p, x1, x2, x3, x4 = "p", var(1), var(2), var(3), var(4)
    assert Equation(app(p, x1, x1), x1) in pr.equations
    assert Equation(app(p, app(p, x1, x2), app(p, x3, x4)), app(p, x1, x4)) in pr.equations
    # the projected Γ equation and the augmentation G(x1)=x1 inside Γ
    assert Equation(app(p, app("F", x1), var(2)), app(p, x1, var(2))) in pr.equations
    # regression count: 2 + 2*(1+2) + 2 distinct sides + 2 + 2
    assert len(pr) == 14
    with pytest.raises(ValueError):
        product_theory(a, a)
    with pytest.raises(ValueError):
        product_theory(parse_theory("p:2;"), b)


def test_product_of_empty_theories():
    pr = product_theory(Theory(), Theory())
    assert len(pr) == 4
    assert Equation(app("p", var(1), var(0)), app("p", var(1), var(0))) in pr.equations


def test_power_theory_sets2():
    th = power_theory(Theory(), 2)
    shown = [str(e) for e in th.equations]
    assert shown == ["g(g(x0)) = x0", "d(x0,x0) = x0", "d(g(x1),g(x2)) = g(d(x2,x1))",
                     "d(d(x1,x2),d(x3,x4)) = d(x1,x4)"]


def test_power_theory_keeps_sigma_and_adds_schemes():
    sigma = parse_theory("F:2; F(x0,x0)=x0;")
    th = power_theory(sigma, 2)
    assert th.equations[:1] == sigma.equations
    assert any(str(e) == "F(g(x1),g(x2)) = g(F(x1,x2))" for e in th.equations)
    with pytest.raises(ValueError):
        power_theory(parse_theory("g:1;"), 2)
    one = power_theory(Theory(), 1)
    assert str(one.equations[0]) == "g(x0) = x0"


def test_interpretation_check():
    sigma = parse_theory("F:1; F(F(x0))=F(x0);")
    gamma = parse_theory("H:1; H(H(x0))=H(x0);")
    good = Interpretation.from_dict(gamma.type, sigma.type, {"H": parse_term("F(x1)", sigma.type)})
    assert check_interpretation(gamma, good, sigma)
    bad = Interpretation.from_dict(gamma.type, sigma.type, {"H": parse_term("F(F(x1))", sigma.type)})
    assert not check_interpretation(gamma, bad, sigma)
    assert str(star_transform(parse_term("H(H(x1))", gamma.type), bad)) == "F(F(F(F(x1))))"
    with pytest.raises(ValueError):
        Interpretation.from_dict(gamma.type, sigma.type, {"H": parse_term("F(x2)", sigma.type)})


def test_undemanding_examples():
    assert is_undemanding(parse_theory("m:2; e:0; m(e,x0)=x0;"))
    inj = parse_theory("G:2; F0:1; F1:1; F0(G(x0,x1)) = x0; F1(G(x0,x1)) = x1;")
    assert not is_undemanding(inj)
    assert not is_undemanding(parse_theory("m:2; e:0; m(e,x0)=x0; m(x0,e)=x0;"))


def test_abelian_bounded():
    hs = parse_theory("m:2; e:0; m(e,x0)=x0; m(x0,e)=x0;")
    res = is_abelian_bounded(hs, 1)
    assert res.found and dict(res.witness)["m"] == (1, 1)
    assert not is_abelian_bounded(parse_theory("F:1; F(F(x0))=x1;"), 2)


SYMS = [("F", 2), ("G", 2)]


def _theory_from_seed(seed: int, neq: int) -> Theory:
    rng = random.Random(seed)
    eqs = tuple(Equation(random_term(rng, SYMS, 3, 2), random_term(rng, SYMS, 3, 2)) for _ in range(neq))
    return Theory(SimilarityType(tuple(SYMS)), eqs)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 3))
def test_undemanding_matches_brute_force(seed, neq):
    th = _theory_from_seed(seed, neq)
    assert is_undemanding(th) == trite_model_exists(th, size=2)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 3), st.integers(1, 2))
def test_undemanding_monotone_under_inclusion(seed, neq, extra):
    small = _theory_from_seed(seed, neq)
    big = Theory(small.type, small.equations + _theory_from_seed(seed + 1, extra).equations)
    if is_undemanding(big):
        assert is_undemanding(small)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_format_parse_roundtrip_random(seed):
    th = _theory_from_seed(seed, 3)
    assert parse_theory(format_theory(th)) == th


def test_terms_are_values():
    assert Apply("F", (Variable(1),)) == app("F", var(1))
    assert hash(app("F", var(1))) == hash(app("F", var(1)))
