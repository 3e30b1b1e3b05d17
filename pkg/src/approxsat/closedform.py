"""Registry of closed-form operations.

Every entry declares its Lipschitz constant (tuple sup-metric) and,
where it holds, whether it is affine.  Builders take the carrier
because the constants depend on the metric weights.
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

from gmpy2 import mpq

from .complex import Carrier, RealizationPoint
from .plmap import ClosedFormOperation, PointOperation, Vec
from .rational import ONE, ZERO, q, sqrt_bounds

Source = tuple  # ("arg", k, i) or ("const", value)


def _weights(C: Carrier) -> list[mpq]:
    out: list[mpq] = []
    for s, e, _norm, w in C._segments:
        out += list(w)
    return out


def select(C: Carrier, spec: Sequence[Source], arity: int, name: str) -> ClosedFormOperation:
    """Output coordinate j copies coordinate i of argument k, or a constant.

    Lipschitz: |w_i Δx_i| <= d for every axis of every supported metric,
    so |Δout_j| <= d_k / w_i; the output norm is then bounded through the
    weighted l2 (single l2 segment) or weighted l1 norm (everything else).
    """
    if len(spec) != C.dim:
        raise ValueError(f"{name}: need {C.dim} output coordinates")
    w = _weights(C)
    ratios = [[ZERO] * C.dim for _ in range(arity)]
    for j, src in enumerate(spec):
        if src[0] == "arg":
            _, k, i = src
            ratios[k][j] = w[j] / w[i]
    single_l2 = len(C._segments) == 1 and C._segments[0][2] == "l2"
    per_arg = []
    for k in range(arity):
        if single_l2:
            per_arg.append(sqrt_bounds(sum((r * r for r in ratios[k]), ZERO))[1])
        else:
            per_arg.append(sum(ratios[k], ZERO))
    if single_l2:
        lip = sqrt_bounds(sum((r * r for row in ratios for r in row), ZERO))[1]
    else:
        lip = sum(per_arg, ZERO)
    consts = [mpq(s[1]) if s[0] == "const" else None for s in spec]

    def fn(vs: Sequence[Vec]) -> Vec:
        return tuple(consts[j] if src[0] == "const" else vs[src[1]][src[2]] for j, src in enumerate(spec))

    return ClosedFormOperation(name, arity, C, fn, lip, affine=True, arg_lipschitz=per_arg)


def projection(C: Carrier, arity: int, k: int, name: str = "") -> ClosedFormOperation:
    return ClosedFormOperation(name or f"proj.{k}.{arity}", arity, C, lambda vs: vs[k], ONE, affine=True,
                               arg_lipschitz=[ONE if i == k else ZERO for i in range(arity)])


def constant(C: Carrier, point: RealizationPoint, arity: int = 0, name: str = "const") -> ClosedFormOperation:
    vec = C.embed(point)
    return ClosedFormOperation(name, arity, C, lambda vs: vec, ZERO, affine=True, arg_lipschitz=[ZERO] * arity)


def midpoint(C: Carrier, name: str = "interval.midpoint") -> ClosedFormOperation:
    half = mpq(1, 2)
    return ClosedFormOperation(name, 2, C, lambda vs: tuple((a + b) * half for a, b in zip(*vs)),
                               ONE, affine=True, arg_lipschitz=[half, half])


def _ordered(tuples: Sequence[Sequence[Vec]]) -> bool:
    """Every coordinate compares the same way across all argument pairs."""
    for j in range(len(tuples[0][0])):
        signs = set()
        for a, b in tuples:
            if a[j] < b[j]:
                signs.add(-1)
            elif a[j] > b[j]:
                signs.add(1)
        if len(signs) > 1:
            return False
    return True


def _minmax_lip(C: Carrier) -> mpq:
    if C.dim == 1 or (len(C._segments) == 1 and C._segments[0][2] == "sup"):
        return ONE
    return sqrt_bounds(mpq(2))[1]


def coord_min(C: Carrier, name: str = "interval.min") -> ClosedFormOperation:
    return ClosedFormOperation(name, 2, C, lambda vs: tuple(min(a, b) for a, b in zip(*vs)),
                               _minmax_lip(C), affine=_ordered)


def coord_max(C: Carrier, name: str = "interval.max") -> ClosedFormOperation:
    return ClosedFormOperation(name, 2, C, lambda vs: tuple(max(a, b) for a, b in zip(*vs)),
                               _minmax_lip(C), affine=_ordered)


def interpolation(C: Carrier, a_bar, b_bar, name: str = "interval.interp") -> ClosedFormOperation:
    """F(t, x0, x1) on a one-dimensional carrier: x0 for t <= ā, x1 for t >= b̄, linear between."""
    if C.dim != 1:
        raise ValueError("interpolation needs a one-dimensional coordinate carrier")
    a_bar, b_bar = mpq(a_bar), mpq(b_bar)
    if b_bar <= a_bar:
        raise ValueError("need ā < b̄")
    width = b_bar - a_bar
    lo_d, hi_d = _coord_range(C)

    def fn(vs):
        (t,), (x0,), (x1,) = vs
        s = min(max((t - a_bar) / width, ZERO), ONE)
        return ((1 - s) * x0 + s * x1,)

    def affine(tuples):
        ts = [tp[0][0] for tp in tuples]
        return all(t <= a_bar for t in ts) or all(t >= b_bar for t in ts)

    # |x1-x0| <= diam, and the weight cancels between input and output
    slope = (hi_d - lo_d) / width
    return ClosedFormOperation(name, 3, C, fn, slope + 1, affine=affine,
                               arg_lipschitz=[slope, ONE, ONE])


def _coord_range(C: Carrier) -> tuple[mpq, mpq]:
    xs = [C.vertex_vec(v)[0] for v in C.K.vertices]
    return min(xs), max(xs)


def clamp_shift(C: Carrier, base: ClosedFormOperation, delta, name: str = "") -> ClosedFormOperation:
    """base shifted by delta on a 1-D carrier, clamped to the carrier range."""
    lo, hi = _coord_range(C)
    delta = mpq(delta)

    def fn(vs):
        (z,) = base.fn(vs)
        return (min(max(z + delta, lo), hi),)

    def affine(tuples):
        if not base.affine_on_vecs(tuples):
            return False
        outs = [base.fn(t)[0] + delta for t in tuples]
        inside = all(lo <= o <= hi for o in outs)
        return inside or all(o >= hi for o in outs) or all(o <= lo for o in outs)

    return ClosedFormOperation(name or f"{base.name}+{delta}", base.arity, C, fn, base.lipschitz,
                               affine=affine, arg_lipschitz=base.arg_lipschitz)


def leg_retraction(C: Carrier, centre, target, name: str = "leg.retract") -> PointOperation:
    """Send a point of any leg at parameter s (coordinate of the far vertex)
    to the point of leg centre-target with the same parameter.

    1-Lipschitz whenever the legs have unit length and the centre is the
    origin of the embedding (|X| = s, and | |X| - |Y| | <= d(X, Y))."""

    def fn(ps):
        (p,) = ps
        s = ONE - p.get(centre)
        return RealizationPoint.of({centre: ONE - s, target: s})

    def same_leg(tuples):
        legs = {frozenset(t[0].carrier) - {centre} for t in tuples}
        legs.discard(frozenset())
        return len(legs) <= 1

    return PointOperation(name, 1, C, fn, ONE, affine_pts=same_leg, arg_lipschitz=[ONE])


def smoothmax(C: Carrier, p: int, name: str = "") -> ClosedFormOperation:
    """(a^p + b^p)^(1/p) on a positive 1-D carrier, rounded to 2^-40.

    The rounding is declared through ``abs_error``; the Lipschitz
    constant in the sup tuple metric is 2^(1/p) (rounded up).
    """
    if C.dim != 1:
        raise ValueError("smoothmax needs a one-dimensional carrier")
    scale = 2 ** 40

    def fn(vs):
        (a,), (b,) = vs
        fa, fb = float(a), float(b)
        m = max(fa, fb)
        val = m * (1.0 + (min(fa, fb) / m) ** p) ** (1.0 / p) if m > 0 else 0.0
        return (mpq(round(val * scale), scale),)

    lip = mpq(math.ceil(2 ** (1 / p) * 10 ** 6) + 1, 10 ** 6)
    return ClosedFormOperation(name or f"smoothmax.{p}", 2, C, fn, lip, affine=False,
                               abs_error=mpq(1, 2 ** 30))


def smoothmax_gap_grid(p: float, lo: float, hi: float, n: int = 200) -> float:
    """Sampled sup of |(a^p+b^p)^(1/p) - max(a,b)| over an n×n grid of [lo,hi]²."""
    best = 0.0
    step = (hi - lo) / (n - 1)
    pts = [lo + i * step for i in range(n)]
    for a in pts:
        for b in pts:
            m = max(a, b)
            v = m * (1.0 + (min(a, b) / m) ** p) ** (1.0 / p)
            best = max(best, abs(v - m))
    return best


# ---------------------------------------------------------------- registry by id

Builder = Callable[..., ClosedFormOperation]


def _square_G_a0b1(C):
    return select(C, [("arg", 0, 0), ("arg", 1, 1)], 2, "square.G.a0b1")


def _square_F0_half(C):
    return select(C, [("arg", 0, 0), ("const", mpq(1, 2))], 1, "square.F0.half")


def _square_F1_half(C):
    return select(C, [("const", mpq(1, 2)), ("arg", 0, 1)], 1, "square.F1.half")


def _square_G_a0b0(C):
    return select(C, [("arg", 0, 0), ("arg", 1, 0)], 2, "square.G.a0b0")


def _square_F0_a0(C):
    return select(C, [("arg", 0, 0), ("const", 0)], 1, "square.F0.a0")


def _square_F1_a1(C):
    return select(C, [("arg", 0, 1), ("const", 0)], 1, "square.F1.a1")


REGISTRY: dict[str, Builder] = {
    "square.G.a0b1": _square_G_a0b1,
    "square.F0.half": _square_F0_half,
    "square.F1.half": _square_F1_half,
    "square.G.a0b0": _square_G_a0b0,
    "square.F0.a0": _square_F0_a0,
    "square.F1.a1": _square_F1_a1,
    "interval.midpoint": midpoint,
    "interval.min": coord_min,
    "interval.max": coord_max,
}


def build(name: str, C: Carrier, **params) -> ClosedFormOperation:
    """Instantiate a registry id on a carrier.

    Parametrized ids: ``smoothmax.<p>``, ``proj.<k>.<n>``, ``const``
    (needs ``point``), ``interval.interp`` (needs ``a``, ``b``).
    """
    if name in REGISTRY:
        return REGISTRY[name](C)
    if name.startswith("smoothmax."):
        return smoothmax(C, int(name.split(".")[1]))
    if name.startswith("proj."):
        _, k, n = name.split(".")
        return projection(C, int(n), int(k))
    if name == "const":
        return constant(C, params["point"], int(params.get("arity", 0)))
    if name == "interval.interp":
        return interpolation(C, q(params["a"]), q(params["b"]))
    raise KeyError(f"unknown closed-form operation {name!r}")
