"""Operations on a carrier, algebras, and term evaluation.

Values flow through term evaluation as :class:`Value` objects, which
hold a point of |K|, its embedded coordinate vector, or both.  PL
operations consume points; closed-form operations consume vectors.
Conversions happen lazily and exactly.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

from gmpy2 import mpq

from .complex import (Carrier, Complex, RealizationPoint, SubdivisionTower, Vertex,
                      gram_inverse, measured_mesh, project_point, tuple_to_product_point)
from .rational import ONE, ZERO, sqrt_bounds
from .theory import Apply, Equation, SimilarityType, Term, Theory, Variable, symbols_of, term_depth, variables

Vec = tuple


class Value:
    __slots__ = ("carrier", "_vec", "_pt")

    def __init__(self, carrier: Carrier, vec: Vec | None = None, point: RealizationPoint | None = None):
        self.carrier = carrier
        self._vec = vec
        self._pt = point

    @classmethod
    def of(cls, carrier: Carrier, point: RealizationPoint) -> "Value":
        return cls(carrier, None, point)

    @property
    def vec(self) -> Vec:
        if self._vec is None:
            self._vec = self.carrier.embed(self._pt)
        return self._vec

    @property
    def point(self) -> RealizationPoint:
        if self._pt is None:
            self._pt = self.carrier.point_of(self._vec)
        return self._pt

    def __repr__(self) -> str:
        return f"Value({self.point})"


# ---------------------------------------------------------------- operations


class Operation:
    """Base class.  ``lipschitz`` is w.r.t. the coordinatewise-sup tuple metric."""

    kind = "abstract"
    arity: int
    carrier: Carrier
    name: str
    abs_error: mpq = ZERO

    @property
    def lipschitz(self) -> mpq:
        raise NotImplementedError

    @property
    def arg_lipschitz(self) -> tuple[mpq, ...] | None:
        """Optional constants L_i with d(F x, F y) <= Σ L_i d(x_i, y_i)."""
        return None

    def apply(self, args: Sequence[Value]) -> Value:
        raise NotImplementedError

    def affine_on(self, tuples: Sequence[Sequence[Value]]) -> bool:
        """True if the operation is affine on the convex hull of these argument tuples."""
        return False

    @property
    def globally_affine(self) -> bool:
        """Affine on the whole ambient coordinate space."""
        return False

    def evaluate(self, *points: RealizationPoint) -> RealizationPoint:
        if len(points) != self.arity:
            raise ValueError(f"{self.name}: expected {self.arity} arguments, got {len(points)}")
        return self.apply([Value.of(self.carrier, p) for p in points]).point

    def __repr__(self) -> str:
        return f"<{self.kind} op {self.name}/{self.arity}>"


def evaluate_op(op: Operation, args: Sequence[RealizationPoint]) -> RealizationPoint:
    return op.evaluate(*args)


AffinePredicate = Callable[[Sequence[Sequence[Vec]]], bool]


class ClosedFormOperation(Operation):
    """A registry-style operation given by a formula on embedded vectors."""

    kind = "closed"

    def __init__(self, name: str, arity: int, carrier: Carrier, fn: Callable[[Sequence[Vec]], Vec],
                 lipschitz: mpq, *, affine: bool | AffinePredicate = False,
                 arg_lipschitz: Sequence[mpq] | None = None, abs_error: mpq = ZERO) -> None:
        self.name = name
        self.arity = arity
        self.carrier = carrier
        self.fn = fn
        self._lip = mpq(lipschitz)
        self._affine = affine
        self._arg_lip = tuple(mpq(x) for x in arg_lipschitz) if arg_lipschitz is not None else None
        self.abs_error = mpq(abs_error)

    @property
    def lipschitz(self) -> mpq:
        return self._lip

    @property
    def arg_lipschitz(self):
        return self._arg_lip

    @property
    def globally_affine(self) -> bool:
        return self._affine is True

    def apply(self, args: Sequence[Value]) -> Value:
        return Value(self.carrier, tuple(self.fn([a.vec for a in args])))

    def affine_on_vecs(self, tuples: Sequence[Sequence[Vec]]) -> bool:
        if self._affine is True or self._affine is False:
            return self._affine
        return self._affine(tuples)

    def affine_on(self, tuples):
        if self._affine is True or self._affine is False:
            return self._affine
        return self._affine([[a.vec for a in t] for t in tuples])


class PointOperation(ClosedFormOperation):
    """Closed-form operation whose formula needs barycentric points."""

    def __init__(self, name, arity, carrier, fn_pts: Callable[[Sequence[RealizationPoint]], RealizationPoint],
                 lipschitz, *, affine_pts: Callable[[Sequence[Sequence[RealizationPoint]]], bool] | bool = False,
                 arg_lipschitz=None) -> None:
        super().__init__(name, arity, carrier, lambda vs: (), lipschitz, arg_lipschitz=arg_lipschitz)
        self.fn_pts = fn_pts
        self.affine_pts = affine_pts

    def apply(self, args):
        return Value.of(self.carrier, self.fn_pts([a.point for a in args]))

    @property
    def globally_affine(self) -> bool:
        return False

    def affine_on(self, tuples):
        if self.affine_pts is True or self.affine_pts is False:
            return self.affine_pts
        return self.affine_pts([[a.point for a in t] for t in tuples])


@dataclass(frozen=True)
class SimplicialMap:
    domain: Complex
    codomain: Complex
    vertex_map: Mapping[Vertex, Vertex]


def check_simplicial(phi: SimplicialMap) -> frozenset | None:
    """None when every simplex maps to a simplex, else the first offender."""
    for s in sorted(phi.domain.simplices, key=lambda s: (len(s), sorted(map(repr, s)))):
        img = frozenset(phi.vertex_map[v] for v in s)
        if img not in phi.codomain.simplices:
            return s
    return None


class PLOperation(Operation):
    """An (M,N)-simplicial operation realized on the ground level.

    Domain: level M of the power complex K^n.  Codomain: level N of K.
    """

    kind = "pl"

    def __init__(self, carrier: Carrier, arity: int, M: int, N: int,
                 vertex_map: Mapping[Vertex, Vertex], name: str = "pl", check: bool = True) -> None:
        self.carrier = carrier
        self.arity = arity
        self.M, self.N = M, N
        self.name = name
        P, T = carrier.power(arity)
        self.domain_tower: SubdivisionTower = T
        self.domain = T.level(M)
        self.codomain = carrier.tower.level(N)
        self.vertex_map = dict(vertex_map)
        if check:
            missing = [v for v in self.domain.vertices if v not in self.vertex_map]
            if missing:
                raise ValueError(f"vertex map undefined on {missing[:3]}")
            bad = check_simplicial(SimplicialMap(self.domain, self.codomain, self.vertex_map))
            if bad is not None:
                raise ValueError(f"vertex map is not simplicial at {sorted(bad)}")
        self._img_cache: dict[Vertex, RealizationPoint] = {}

    def image_point(self, v: Vertex) -> RealizationPoint:
        p = self._img_cache.get(v)
        if p is None:
            p = self.carrier.tower.base_point(self.N, self.vertex_map[v])
            self._img_cache[v] = p
        return p

    def ground(self, p: RealizationPoint) -> RealizationPoint:
        _, coords = self.domain_tower.locate(p, self.M)
        acc: dict[Vertex, mpq] = {}
        for v, c in coords.items():
            w = self.vertex_map[v]
            acc[w] = acc.get(w, ZERO) + c
        return self.carrier.tower.push_down(self.N, acc)

    def apply(self, args):
        p = tuple_to_product_point([a.point for a in args])
        return Value.of(self.carrier, self.ground(p))

    def affine_on(self, tuples):
        support: set = set()
        for t in tuples:
            p = tuple_to_product_point([a.point for a in t])
            s, _ = self.domain_tower.locate(p, self.M)
            support |= s
        return frozenset(support) in self.domain.simplices

    @cached_property
    def _lip(self) -> mpq:
        return lipschitz_bound_pl(self)

    @property
    def lipschitz(self) -> mpq:
        return self._lip

    def to_json(self) -> dict:
        return {"kind": "pl", "M": self.M, "N": self.N,
                "vertex_map": {_vkey(v): _vkey(w) for v, w in sorted(self.vertex_map.items(), key=lambda kv: repr(kv[0]))}}


def _vkey(v) -> str:
    return v if isinstance(v, str) else repr(v)


def evaluate_ground(op: PLOperation, p: RealizationPoint) -> RealizationPoint:
    if op.arity != 1:
        raise ValueError("evaluate_ground takes a unary PL operation")
    return op.ground(p)


def lipschitz_bound_pl(op: PLOperation) -> mpq:
    """Certified Lipschitz constant of a PL operation in the tuple sup-metric."""
    C = op.carrier
    n = op.arity
    if n == 0:
        return ZERO
    T = op.domain_tower
    dom_vec: dict[Vertex, Vec] = {}
    img_vec: dict[Vertex, Vec] = {}
    for v in op.domain.vertices:
        parts = project_point(T.base_point(op.M, v), n)
        dom_vec[v] = tuple(itertools.chain.from_iterable(C.embed(q) for q in parts))
        img_vec[v] = C.embed(op.image_point(v))
    best = ZERO
    for S in op.domain.top_simplices:
        v0 = S[0]
        cols = [tuple(a - b for a, b in zip(dom_vec[v], dom_vec[v0])) for v in S[1:]]
        if not cols:
            continue
        try:
            ginv = gram_inverse(cols)
        except ValueError as exc:
            raise ValueError("degenerate domain simplex; complex or embedding malformed") from exc
        total = ZERO
        for i, v in enumerate(S[1:]):
            dg = sum(((a - b) ** 2 for a, b in zip(img_vec[v], img_vec[v0])), ZERO)
            if dg == 0:
                continue
            total += sqrt_bounds(dg)[1] * sqrt_bounds(ginv[i][i])[1]
        best = max(best, total)
    c_lo, c_hi = C.l2_comparison
    return best * (c_hi / c_lo) * sqrt_bounds(mpq(n))[1]


class TermOperation(Operation):
    """The term operation of ``term`` (variables x1..xn) over a symbol table."""

    kind = "derived"

    def __init__(self, ops: Mapping[str, Operation], term: Term, arity: int, name: str = "") -> None:
        self.ops = dict(ops)
        self.term = term
        self.arity = arity
        self.name = name or str(term)
        first = next(iter(self.ops.values()), None)
        if first is None:
            raise ValueError("empty symbol table")
        self.carrier = first.carrier
        bad = [v for v in variables(term) if not 1 <= v <= arity]
        if bad:
            raise ValueError(f"term uses variables {bad} outside x1..x{arity}")

    @property
    def lipschitz(self) -> mpq:
        return _term_lip(self.ops, self.term)

    @property
    def arg_lipschitz(self):
        lv = _term_lipv(self.ops, self.term)
        return tuple(lv.get(i, ZERO) for i in range(1, self.arity + 1))

    @property
    def abs_error(self) -> mpq:  # type: ignore[override]
        return _term_err(self.ops, self.term)

    def apply(self, args):
        env = {i + 1: a for i, a in enumerate(args)}
        return _eval(self.ops, self.term, env)

    @property
    def globally_affine(self) -> bool:
        return all(self.ops[s].globally_affine for s in symbols_of(self.term))

    def affine_on(self, tuples):
        envs = [{i + 1: a for i, a in enumerate(t)} for t in tuples]
        ok, _ = _affine_values(self.ops, self.term, envs)
        return ok


# ---------------------------------------------------------------- algebras


@dataclass
class Algebra:
    carrier: Carrier
    ops: dict[str, Operation] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self) -> None:
        for s, op in self.ops.items():
            if op.carrier is not self.carrier:
                raise ValueError(f"operation {s} lives on a different carrier")

    def op(self, symbol: str) -> Operation:
        try:
            return self.ops[symbol]
        except KeyError:
            raise KeyError(f"symbol {symbol!r} is not assigned in the algebra") from None

    def covers(self, stype: SimilarityType) -> bool:
        return all(n in self.ops and self.ops[n].arity == a for n, a in stype.symbols)

    def with_ops(self, extra: Mapping[str, Operation], name: str = "") -> "Algebra":
        return Algebra(self.carrier, {**self.ops, **extra}, name or self.name)


def _eval(ops: Mapping[str, Operation], t: Term, env: Mapping[int, Value]) -> Value:
    if isinstance(t, Variable):
        try:
            return env[t.index]
        except KeyError:
            raise KeyError(f"unbound variable x{t.index}") from None
    op = ops.get(t.symbol)
    if op is None:
        raise KeyError(f"symbol {t.symbol!r} is not assigned in the algebra")
    return op.apply([_eval(ops, a, env) for a in t.args])


def term_evaluate(A: Algebra, t: Term, env: Mapping[int, RealizationPoint]) -> RealizationPoint:
    return _eval(A.ops, t, {i: Value.of(A.carrier, p) for i, p in env.items()}).point


def term_value(A: Algebra, t: Term, env: Mapping[int, Value]) -> Value:
    return _eval(A.ops, t, env)


def _term_lip(ops: Mapping[str, Operation], t: Term) -> mpq:
    if isinstance(t, Variable):
        return ONE
    op = ops.get(t.symbol)
    if op is None:
        raise KeyError(f"symbol {t.symbol!r} is not assigned in the algebra")
    return op.lipschitz * max((_term_lip(ops, a) for a in t.args), default=ZERO)


def term_lipschitz(A: Algebra, t: Term) -> mpq:
    return _term_lip(A.ops, t)


def _term_lipv(ops: Mapping[str, Operation], t: Term) -> dict[int, mpq]:
    """Per-variable constants c_v with d(t(a), t(b)) <= Σ_v c_v d(a_v, b_v)."""
    if isinstance(t, Variable):
        return {t.index: ONE}
    op = ops[t.symbol]
    kids = [_term_lipv(ops, a) for a in t.args]
    vs = set().union(*kids) if kids else set()
    out: dict[int, mpq] = {}
    L, Ls = op.lipschitz, op.arg_lipschitz
    for v in vs:
        sup_form = L * max(k.get(v, ZERO) for k in kids)
        if Ls is not None:
            sum_form = sum((li * k.get(v, ZERO) for li, k in zip(Ls, kids)), ZERO)
            sup_form = min(sup_form, sum_form)
        out[v] = sup_form
    return out


def term_lipschitz_by_variable(A: Algebra, t: Term) -> dict[int, mpq]:
    return _term_lipv(A.ops, t)


def _term_err(ops: Mapping[str, Operation], t: Term) -> mpq:
    if isinstance(t, Variable):
        return ZERO
    op = ops[t.symbol]
    inner = max((_term_err(ops, a) for a in t.args), default=ZERO)
    return op.abs_error + op.lipschitz * inner


def term_error(A: Algebra, t: Term) -> mpq:
    """Accumulated evaluation error of inexact (rounded) closed-form operations."""
    return _term_err(A.ops, t)


def _affine_values(ops, t: Term, envs: Sequence[Mapping[int, Value]]) -> tuple[bool, list[Value]]:
    if isinstance(t, Variable):
        return True, [env[t.index] for env in envs]
    kids = [_affine_values(ops, a, envs) for a in t.args]
    op = ops[t.symbol]
    tuples = list(zip(*(k[1] for k in kids))) if kids else [() for _ in envs]
    vals = [op.apply(tp) for tp in tuples]
    if not all(k[0] for k in kids):
        return False, vals
    if not kids:
        return op.affine_on([()]), vals
    return op.affine_on(tuples), vals


def term_affine_values(A: Algebra, t: Term, envs: Sequence[Mapping[int, Value]]) -> tuple[bool, list[Value]]:
    """Evaluate t on every env; report whether t is affine on their convex hull."""
    return _affine_values(A.ops, t, envs)


# ---------------------------------------------------------------- ε-chains


@dataclass(frozen=True)
class EpsilonChain:
    values: tuple[mpq, ...]

    def __post_init__(self) -> None:
        for a, b in zip(self.values, self.values[1:]):
            if b > a / 2:
                raise ValueError("chain must at least halve at every step")

    def __getitem__(self, k: int) -> mpq:
        return self.values[k]

    def __len__(self) -> int:
        return len(self.values)


def epsilon_chain(A: Algebra, M: int, eps, comparison: mpq = ONE) -> EpsilonChain:
    eps = mpq(eps)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    if M < 0:
        raise ValueError("M must be >= 0")
    L = max([ONE] + [op.lipschitz for op in A.ops.values()])
    vals = [eps]
    for _ in range(M):
        e = vals[-1]
        star = e / (2 * L * comparison)
        vals.append(min(star, e / 2))
    return EpsilonChain(tuple(vals))


# ---------------------------------------------------------------- simplicial approximation


@dataclass(frozen=True)
class ApproximationResult:
    op: PLOperation | None
    M: int
    N: int
    error_bound: mpq
    slack: mpq

    @property
    def ok(self) -> bool:
        return self.op is not None


def _argmax_vertex(coords: Mapping[Vertex, mpq], level: Complex) -> Vertex:
    return min(coords, key=lambda v: (-coords[v], level.index[v]))


def simplicial_approximate(f: Operation, eps, max_M: int = 2, max_N: int = 4) -> ApproximationResult:
    """Search (M, N) for a PL operation certified within eps of f.

    N ranges up to the first level whose measured mesh is <= eps/2
    (or max_N); each candidate is certified cell by cell.
    """
    eps = mpq(eps)
    C = f.carrier
    n = f.arity
    n_star = 0
    while n_star < max_N and measured_mesh(C.K, n_star, C).square > (eps / 2) ** 2:
        n_star += 1
    best: ApproximationResult | None = None
    L = f.lipschitz
    for M in range(max_M + 1):
        _, T = C.power(n)
        dom = T.level(M)
        args = {v: [Value.of(C, q) for q in project_point(T.base_point(M, v), n)] for v in dom.vertices}
        fvals = {v: f.apply(args[v]) for v in dom.vertices}
        for N in range(n_star + 1):
            cod = C.tower.level(N)
            phi = {}
            for v in dom.vertices:
                _, coords = C.tower.locate(fvals[v].point, N)
                phi[v] = _argmax_vertex(coords, cod)
            if check_simplicial(SimplicialMap(dom, cod, phi)) is not None:
                continue
            gvec = {v: C.embed(C.tower.base_point(N, phi[v])) for v in dom.vertices}
            err = ZERO
            for S in dom.top_simplices:
                if f.affine_on([args[v] for v in S]):
                    e = max(C.dist_bounds(fvals[v].vec, gvec[v])[1] for v in S)
                else:
                    f0 = fvals[S[0]].vec
                    e = max(C.dist_bounds(f0, gvec[v])[1] for v in S)
                    diam = ZERO
                    for u, w in itertools.combinations(S, 2):
                        for a, b in zip(args[u], args[w]):
                            diam = max(diam, C.dist_bounds(a.vec, b.vec)[1])
                    e += L * diam
                err = max(err, e)
            res = ApproximationResult(None, M, N, err, err - eps)
            if err <= eps:
                g = PLOperation(C, n, M, N, phi, name=f"approx({f.name})", check=False)
                return ApproximationResult(g, M, N, err, err - eps)
            if best is None or res.slack < best.slack:
                best = res
    if best is None:
        return ApproximationResult(None, max_M, n_star, mpq(-1), mpq(-1))
    return best
