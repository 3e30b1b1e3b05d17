"""Certified sup-distance bounds, λ over a theory, and the decision procedure.

``sup_equation`` is a best-first branch and bound over products of
geometric simplices.  A cell's upper bound comes from one of two
certificates:

* both sides are affine on the cell (checked through the operations'
  ``affine_on``), so the distance is convex and its max sits at a vertex
  tuple; the cell's value is then exact up to square-root rounding;
* otherwise, the centre value plus per-variable Lipschitz constants times
  the cell radii.
"""
from __future__ import annotations

import heapq
import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from gmpy2 import mpq

from .complex import Carrier, Complex, RealizationPoint, combine, unnest
from .plmap import (Algebra, Operation, PLOperation, PointOperation, ClosedFormOperation, TermOperation,
                    Value, _affine_values, _eval, _term_err, _term_lipv)
from .rational import ZERO, fmt
from .theory import Apply, Equation, Term, Theory, Variable, equation_variables, symbols_of

HALF = mpq(1, 2)
DEFAULT_MAX_CELLS = 200_000
MAX_AFFINE_COMBOS = 4096


@dataclass(frozen=True)
class SupInterval:
    lo: mpq
    hi: mpq
    cells: int = 0
    capped: bool = False

    def __post_init__(self) -> None:
        if self.lo < 0 or self.hi < self.lo:
            raise ValueError(f"bad interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> mpq:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def to_json(self) -> dict:
        return {"lo": fmt(self.lo), "hi": fmt(self.hi), "cells": self.cells, "capped": self.capped}

    def __str__(self) -> str:
        return f"[{float(self.lo):.6f}, {float(self.hi):.6f}]"


def _may_be_affine(op: Operation) -> bool:
    if isinstance(op, PointOperation):
        return op.affine_pts is not False
    if isinstance(op, ClosedFormOperation):
        return op._affine is not False
    if isinstance(op, PLOperation):
        return True
    if isinstance(op, TermOperation):
        return all(_may_be_affine(op.ops[s]) for s in symbols_of(op.term))
    return getattr(op, "may_be_affine", True)


def _simplex_points(K: Complex, T: Sequence) -> tuple[RealizationPoint, ...]:
    return tuple(RealizationPoint.vertex(v) for v in T)


class _Cell:
    """Either a product of simplices, one per variable (``simplices``), or a
    simplex of the product space given by its vertex tuples (``tuples``)."""

    __slots__ = ("simplices", "tuples", "ub", "lo", "exact", "radii")

    def __init__(self, simplices=None, tuples=None):
        self.simplices = simplices
        self.tuples = tuples

    def vertex_tuples(self):
        if self.tuples is not None:
            return self.tuples
        return list(itertools.product(*self.simplices))

    def components(self, k: int) -> list[RealizationPoint]:
        if self.simplices is not None:
            return list(self.simplices[k])
        out: list[RealizationPoint] = []
        for t in self.tuples:
            if t[k] not in out:
                out.append(t[k])
        return out

    def n_vertices(self) -> int:
        if self.tuples is not None:
            return len(self.tuples)
        n = 1
        for s in self.simplices:
            n *= len(s)
        return n


MAX_SIMPLICIAL_TOPS = 4096


def _power_top_count(K: Complex, v: int) -> int:
    d = K.dim
    return len(K.top_simplices) ** v * math.factorial(v * d) // math.factorial(d) ** v


class _BranchAndBound:
    def __init__(self, A: Algebra, e: Equation, tol: mpq, max_cells: int) -> None:
        self.A = A
        self.C = A.carrier
        self.e = e
        self.tol = tol
        self.max_cells = max_cells
        self.vars = sorted(equation_variables(e))
        ls = _term_lipv(A.ops, e.lhs) if isinstance(e.lhs, Apply) else {e.lhs.index: mpq(1)}
        lt = _term_lipv(A.ops, e.rhs) if isinstance(e.rhs, Apply) else {e.rhs.index: mpq(1)}
        self.lip = {v: ls.get(v, ZERO) + lt.get(v, ZERO) for v in self.vars}
        self.err = _term_err(A.ops, e.lhs) + _term_err(A.ops, e.rhs)
        syms = symbols_of(e.lhs) | symbols_of(e.rhs)
        self.try_affine = all(_may_be_affine(A.op(s)) for s in syms)
        self.cells = 0
        self._vcache: dict[RealizationPoint, Value] = {}

    def value(self, p: RealizationPoint) -> Value:
        v = self._vcache.get(p)
        if v is None:
            v = Value.of(self.C, p)
            if len(self._vcache) < 100_000:
                self._vcache[p] = v
        return v

    def dist(self, env) -> tuple[mpq, mpq]:
        a = _eval(self.A.ops, self.e.lhs, env)
        b = _eval(self.A.ops, self.e.rhs, env)
        return self.C.dist_bounds(a.vec, b.vec)

    def evaluate(self, cell: _Cell) -> None:
        self.cells += 1
        cell.exact = False
        if self.try_affine and cell.n_vertices() <= MAX_AFFINE_COMBOS:
            envs = [dict(zip(self.vars, (self.value(p) for p in tup))) for tup in cell.vertex_tuples()]
            ok1, v1 = _affine_values(self.A.ops, self.e.lhs, envs)
            if ok1:
                ok2, v2 = _affine_values(self.A.ops, self.e.rhs, envs)
                if ok2:
                    lo = hi = ZERO
                    for a, b in zip(v1, v2):
                        l, h = self.C.dist_bounds(a.vec, b.vec)
                        lo, hi = max(lo, l), max(hi, h)
                    cell.lo = max(lo - self.err, ZERO)
                    cell.ub = hi + self.err
                    cell.exact = True
                    cell.radii = [ZERO] * len(self.vars)
                    return
        comps = [cell.components(k) for k in range(len(self.vars))]
        centres = [combine((mpq(1, len(c)), p) for p in c) for c in comps]
        env = dict(zip(self.vars, (self.value(c) for c in centres)))
        lo, hi = self.dist(env)
        radii = []
        slack = ZERO
        for v, comp in zip(self.vars, comps):
            cv = env[v].vec
            r = max(self.C.dist_bounds(cv, self.value(p).vec)[1] for p in comp) if len(comp) > 1 else ZERO
            radii.append(r)
            slack += self.lip[v] * r
        cell.radii = radii
        cell.lo = max(lo - self.err, ZERO)
        cell.ub = hi + self.err + slack
        if slack == 0:
            cell.exact = True

    def split(self, cell: _Cell) -> list[_Cell]:
        if cell.tuples is not None:
            return self._split_simplex(cell)
        scores = [self.lip[v] * r for v, r in zip(self.vars, cell.radii)]
        k = max(range(len(scores)), key=lambda i: (scores[i], -i))
        simplex = cell.simplices[k]
        vecs = [self.value(p).vec for p in simplex]
        best, pair = None, (0, 1)
        for i, j in itertools.combinations(range(len(simplex)), 2):
            d = self.C.dist_bounds(vecs[i], vecs[j])[1]
            if best is None or d > best:
                best, pair = d, (i, j)
        i, j = pair
        mid = combine([(HALF, simplex[i]), (HALF, simplex[j])])
        kids = []
        for drop in (i, j):
            new = tuple(mid if t == drop else p for t, p in enumerate(simplex))
            sims = cell.simplices[:k] + (new,) + cell.simplices[k + 1:]
            kids.append(_Cell(simplices=sims))
        return kids

    def _split_simplex(self, cell: _Cell) -> list[_Cell]:
        ts = cell.tuples
        best, pair = None, (0, 1)
        for i, j in itertools.combinations(range(len(ts)), 2):
            d = sum((self.lip[v] * self.C.dist_bounds(self.value(a).vec, self.value(b).vec)[1]
                     for v, a, b in zip(self.vars, ts[i], ts[j])), ZERO)
            if best is None or d > best:
                best, pair = d, (i, j)
        i, j = pair
        mid = tuple(a if a == b else combine([(HALF, a), (HALF, b)]) for a, b in zip(ts[i], ts[j]))
        return [_Cell(tuples=ts[:drop] + [mid] + ts[drop + 1:]) for drop in (i, j)]

    def initial_cells(self) -> list[_Cell]:
        v = len(self.vars)
        K = self.C.K
        if v > 1 and _power_top_count(K, v) <= MAX_SIMPLICIAL_TOPS:
            P, _ = self.C.power(v)
            cells = []
            for T in P.top_simplices:
                tuples = [tuple(RealizationPoint.vertex(x) for x in unnest(w, v)) for w in T]
                cells.append(_Cell(tuples=tuples))
            return cells
        tops = [_simplex_points(K, T) for T in K.top_simplices]
        return [_Cell(simplices=tuple(c)) for c in itertools.product(tops, repeat=v)]

    def vertex_max(self) -> SupInterval:
        """Globally affine sides: the distance is convex on every cell, so the
        sup is attained at a tuple of carrier vertices."""
        pts = [self.value(RealizationPoint.vertex(v)) for v in self.C.K.vertices]
        lo = hi = ZERO
        for tup in itertools.product(pts, repeat=len(self.vars)):
            self.cells += 1
            l, h = self.dist(dict(zip(self.vars, tup)))
            lo, hi = max(lo, l), max(hi, h)
        return SupInterval(max(lo - self.err, ZERO), hi + self.err, self.cells)

    def globally_affine(self) -> bool:
        syms = symbols_of(self.e.lhs) | symbols_of(self.e.rhs)
        return all(self.A.op(s).globally_affine for s in syms)

    def run(self, stop_above: mpq | None = None, stop_below: mpq | None = None) -> SupInterval:
        n_vert = len(self.C.K.vertices) ** len(self.vars)
        if n_vert <= 200_000 and self.globally_affine():
            return self.vertex_max()
        heap: list = []
        counter = itertools.count()
        lo = ZERO
        closed_hi = ZERO
        for cell in self.initial_cells():
            self.evaluate(cell)
            lo = max(lo, cell.lo)
            if cell.exact:
                closed_hi = max(closed_hi, cell.ub)
            else:
                heapq.heappush(heap, (-cell.ub, next(counter), cell))
        capped = False
        while True:
            hi = max(closed_hi, -heap[0][0]) if heap else closed_hi
            hi = max(hi, lo)
            if hi - lo <= self.tol:
                break
            if stop_above is not None and lo > stop_above:
                break
            if stop_below is not None and hi < stop_below:
                break
            if self.cells >= self.max_cells:
                capped = True
                break
            _, _, cell = heapq.heappop(heap)
            for kid in self.split(cell):
                self.evaluate(kid)
                lo = max(lo, kid.lo)
                if kid.exact:
                    closed_hi = max(closed_hi, kid.ub)
                else:
                    heapq.heappush(heap, (-kid.ub, next(counter), kid))
        return SupInterval(lo, hi, self.cells, capped)


def sup_equation(A: Algebra, e: Equation, tol=mpq(1, 100), *, max_cells: int = DEFAULT_MAX_CELLS,
                 stop_above=None, stop_below=None) -> SupInterval:
    """Certified enclosure of sup_a d(σ(a), τ(a)) over the occurring variables."""
    tol = mpq(tol)
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    for side in (e.lhs, e.rhs):
        for s in symbols_of(side):
            A.op(s)
    if e.lhs == e.rhs:
        return SupInterval(ZERO, ZERO, 0)
    bb = _BranchAndBound(A, e, tol, max_cells)
    if not bb.vars:
        lo, hi = bb.dist({})
        return SupInterval(max(lo - bb.err, ZERO), hi + bb.err, 1)
    return bb.run(None if stop_above is None else mpq(stop_above),
                  None if stop_below is None else mpq(stop_below))


def lambda_algebra(A: Algebra, sigma: Theory, tol=mpq(1, 100), **kw) -> SupInterval:
    lo = hi = ZERO
    cells = 0
    capped = False
    for e in sigma.equations:
        r = sup_equation(A, e, tol, **kw)
        lo, hi = max(lo, r.lo), max(hi, r.hi)
        cells += r.cells
        capped = capped or r.capped
    return SupInterval(lo, hi, cells, capped)


def sample_sup(A: Algebra, e: Equation, points: Sequence[Mapping[int, RealizationPoint]]) -> mpq:
    """Largest lower distance bound among explicit sample environments."""
    best = ZERO
    for env in points:
        a = _eval(A.ops, e.lhs, {i: Value.of(A.carrier, p) for i, p in env.items()})
        b = _eval(A.ops, e.rhs, {i: Value.of(A.carrier, p) for i, p in env.items()})
        best = max(best, A.carrier.dist_bounds(a.vec, b.vec)[0])
    return best


# ---------------------------------------------------------------- decision


@dataclass
class Decision:
    verdict: str  # YES | NO | UNDECIDED
    q: mpq
    M: int
    N: int
    witness: dict | None = None
    interval: SupInterval | None = None
    cells_explored: int = 0
    candidates_examined: int = 0
    candidates_raw: int = 0
    straddling: int = 0
    budget_exhausted: bool = False
    min_lo: mpq | None = None
    wall_time: float | None = None
    witness_algebra: Algebra | None = field(default=None, repr=False, compare=False)

    def to_json(self, timing: bool = False) -> dict:
        out = {
            "verdict": self.verdict,
            "q": fmt(self.q),
            "M": self.M,
            "N": self.N,
            "witness": self.witness,
            "interval": self.interval.to_json() if self.interval else None,
            "cells_explored": self.cells_explored,
            "candidates_examined": self.candidates_examined,
            "candidates_raw": self.candidates_raw,
            "straddling": self.straddling,
            "budget_exhausted": self.budget_exhausted,
            "min_lo": None if self.min_lo is None else fmt(self.min_lo),
        }
        if timing:
            out["wall_time"] = self.wall_time
        return out


def _simplicial_maps(dom: Complex, cod: Complex) -> Iterator[dict]:
    """All simplicial vertex maps dom -> cod, by backtracking in vertex order."""
    order = list(dom.vertices)
    pos = {v: i for i, v in enumerate(order)}
    checks: list[list[tuple]] = [[] for _ in order]
    for s in dom.simplices:
        if len(s) > 1:
            checks[max(pos[v] for v in s)].append(tuple(s))
    targets = list(cod.vertices)
    cod_s = cod.simplices
    assign: dict = {}

    def rec(i: int):
        if i == len(order):
            yield dict(assign)
            return
        v = order[i]
        for w in targets:
            assign[v] = w
            if all(frozenset(assign[u] for u in s) in cod_s for s in checks[i]):
                yield from rec(i + 1)
        del assign[v]

    yield from rec(0)


def _tuples(per_symbol: Sequence[tuple[str, Complex, Complex]]) -> Iterator[tuple[dict, ...]]:
    if not per_symbol:
        yield ()
        return
    (name, dom, cod), rest = per_symbol[0], per_symbol[1:]
    for m in _simplicial_maps(dom, cod):
        for tail in _tuples(rest):
            yield (m,) + tail


def _grid_envs(C: Carrier, nvars: int, level: int = 1, cap: int = 400) -> list[list[RealizationPoint]]:
    pts = [C.tower.base_point(level, v) for v in C.tower.level(level).vertices]
    while len(pts) ** nvars > cap and level > 0:
        level -= 1
        pts = [C.tower.base_point(level, v) for v in C.tower.level(level).vertices]
    return [list(c) for c in itertools.product(pts, repeat=nvars)]


@dataclass
class _Outcome:
    status: str  # yes | no | straddle
    interval: SupInterval
    cells: int


def _judge(A: Algebra, sigma: Theory, q: mpq, tol: mpq, grids) -> _Outcome:
    cells = 0
    # coarse grid: a single certified value above q settles the tuple
    for e, (vs, envs) in zip(sigma.equations, grids):
        best = ZERO
        for pts in envs:
            env = {v: Value.of(A.carrier, p) for v, p in zip(vs, pts)}
            a = _eval(A.ops, e.lhs, env)
            b = _eval(A.ops, e.rhs, env)
            best = max(best, A.carrier.dist_bounds(a.vec, b.vec)[0])
            if best > q:
                return _Outcome("no", SupInterval(best, best, 0), len(envs))
    lo = hi = ZERO
    for e in sigma.equations:
        r = sup_equation(A, e, tol, stop_above=q, stop_below=q)
        cells += r.cells
        lo, hi = max(lo, r.lo), max(hi, r.hi)
        if r.lo > q:
            return _Outcome("no", SupInterval(lo, max(hi, lo), 0), cells)
        if r.hi >= q:
            return _Outcome("straddle", SupInterval(lo, hi, 0), cells)
    return _Outcome("yes", SupInterval(lo, hi, 0), cells)


def _witness_json(sigma: Theory, maps: Sequence[dict], M: int, N: int) -> dict:
    out = {}
    for (name, _), m in zip(sigma.type.symbols, maps):
        out[name] = {"kind": "pl", "M": M, "N": N,
                     "vertex_map": {_vname(v): _vname(w) for v, w in m.items()}}
    return out


def _vname(v) -> str:
    return v if isinstance(v, str) else repr(v)


def build_pl_algebra(C: Carrier, sigma: Theory, maps: Sequence[dict], M: int, N: int) -> Algebra:
    ops = {name: PLOperation(C, arity, M, N, m, name=name, check=False)
           for (name, arity), m in zip(sigma.type.symbols, maps)}
    return Algebra(C, ops, "pl")


def decide_within(C: Carrier, sigma: Theory, M: int, N: int, q, tol=mpq(1, 50), *,
                  threads: int = 1, max_candidates: int | None = None, chunk: int = 64) -> Decision:
    """Search (M,N)-simplicial algebras on C satisfying sigma within < q."""
    t0 = time.perf_counter()
    q, tol = mpq(q), mpq(tol)
    per_symbol = []
    raw = 1
    for name, arity in sigma.type.symbols:
        _, T = C.power(arity)
        dom = T.level(M)
        cod = C.tower.level(N)
        per_symbol.append((name, dom, cod))
        raw *= len(cod.vertices) ** len(dom.vertices)
    grids = []
    for e in sigma.equations:
        vs = sorted(equation_variables(e))
        grids.append((vs, _grid_envs(C, len(vs))))

    def work(maps):
        A = build_pl_algebra(C, sigma, maps, M, N)
        return _judge(A, sigma, q, tol, grids)

    examined = cells = straddling = 0
    min_lo: mpq | None = None
    exhausted = False
    gen = _tuples(per_symbol)
    # batches grow from 1 to chunk so an early witness costs little; the pool
    # is only started once a batch is wide enough to share out
    pool = None
    size = 1
    try:
        while True:
            batch = list(itertools.islice(gen, size))
            size = min(2 * size, chunk)
            if max_candidates is not None:
                room = max_candidates - examined
                if room <= 0 and batch:
                    exhausted = True
                    break
                if len(batch) > room:
                    batch = batch[:room]
                    exhausted = True
            if not batch:
                break
            results = None
            if threads > 1 and len(batch) >= 2 * threads:
                pool = pool or ThreadPoolExecutor(max_workers=threads)
                results = list(pool.map(work, batch))
            for i, maps in enumerate(batch):
                out = results[i] if results is not None else work(maps)
                examined += 1
                cells += out.cells
                if out.status == "yes":
                    A = build_pl_algebra(C, sigma, maps, M, N)
                    return Decision("YES", q, M, N, _witness_json(sigma, maps, M, N), out.interval, cells,
                                    examined, raw, straddling, False, None,
                                    time.perf_counter() - t0, A)
                if out.status == "straddle":
                    straddling += 1
                else:
                    min_lo = out.interval.lo if min_lo is None else min(min_lo, out.interval.lo)
            if exhausted:
                break
    finally:
        if pool:
            pool.shutdown()
    wall = time.perf_counter() - t0
    if exhausted or straddling:
        return Decision("UNDECIDED", q, M, N, None, None, cells, examined, raw, straddling, exhausted,
                        min_lo, wall)
    return Decision("NO", q, M, N, None, None, cells, examined, raw, 0, False, min_lo, wall)


# ---------------------------------------------------------------- enumeration


ALPHABET: tuple[tuple[str, int], ...] = (("c", 0), ("f", 1), ("g", 2))
STREAM_VARS = 2


def _terms_by_size(symbols: Sequence[tuple[str, int]], max_depth: int = 2) -> dict[int, list[Term]]:
    by_depth: dict[int, list[Term]] = {0: [Variable(i) for i in range(STREAM_VARS)]}
    upto: list[Term] = list(by_depth[0])
    for d in range(1, max_depth + 1):
        new: list[Term] = []
        for name, a in symbols:
            for args in itertools.product(upto, repeat=a):
                t = Apply(name, tuple(args))
                if t not in upto and t not in new:
                    new.append(t)
        upto += new
    from .theory import term_size
    out: dict[int, list[Term]] = {}
    for t in upto:
        out.setdefault(term_size(t), []).append(t)
    for k in out:
        out[k].sort(key=str)
    return out


def _type_of(eqs: Sequence[Equation]):
    from .theory import SimilarityType
    used = set()
    for e in eqs:
        used |= symbols_of(e.lhs) | symbols_of(e.rhs)
    return SimilarityType(tuple(s for s in ALPHABET if s[0] in used))


def theory_stream() -> Iterator[Theory]:
    """Theories over <= 2 alphabet symbols, <= 2 equations, depth <= 2, by size then spelling."""
    from .theory import term_size
    yield Theory()
    pairs = []
    for k in range(0, 3):
        pairs += list(itertools.combinations(ALPHABET, k))
    terms_all = _terms_by_size(ALPHABET)
    max_size = max(terms_all)
    all_terms = [t for k in sorted(terms_all) for t in terms_all[k]]
    size_of = {t: term_size(t) for t in all_terms}
    eqs_by_size: dict[int, list[Equation]] = {}
    for a, b in itertools.combinations(all_terms, 2):
        lhs, rhs = (a, b) if str(a) <= str(b) else (b, a)
        e = Equation(lhs, rhs)
        if len(_type_of([e]).symbols) <= 2:
            eqs_by_size.setdefault(size_of[a] + size_of[b], []).append(e)
    for k in eqs_by_size:
        eqs_by_size[k].sort(key=str)
    sizes = sorted(eqs_by_size)
    top = 2 * max(sizes)
    for total in range(2, top + 1):
        batch: list[Theory] = []
        for e in eqs_by_size.get(total, []):
            batch.append(Theory(_type_of([e]), (e,)))
        for s1 in sizes:
            s2 = total - s1
            if s2 < s1 or s2 not in eqs_by_size:
                continue
            for e1 in eqs_by_size[s1]:
                for e2 in eqs_by_size[s2]:
                    if s1 == s2 and str(e2) <= str(e1):
                        continue
                    ty = _type_of([e1, e2])
                    if len(ty.symbols) <= 2:
                        batch.append(Theory(ty, (e1, e2)))
        batch.sort(key=str)
        yield from batch


@dataclass(frozen=True)
class Sextuple:
    complex_name: str
    M: int
    N: int
    r: int
    s: int
    theory: Theory

    @property
    def q(self) -> mpq:
        return mpq(self.r, self.s)

    def to_json(self) -> dict:
        from .theory import format_theory
        return {"complex": self.complex_name, "M": self.M, "N": self.N, "r": self.r, "s": self.s,
                "theory": format_theory(self.theory).strip()}


def seed_carriers() -> list[Carrier]:
    from .complex import edge, square, triangle, triode
    return [Carrier(edge(), name="edge"), Carrier(triangle(), name="triangle"),
            Carrier(square(), name="square"), Carrier(triode(), name="triode")]


def sextuple_order(n_complexes: int = 4) -> Iterator[tuple[int, int, int, int, int, int]]:
    """(theory index, complex index, M, N, r, s) with r,s >= 1, by increasing weight."""
    w = 0
    while True:
        for ti in range(w + 1):
            rest = w - ti
            for ci in range(min(n_complexes - 1, rest) + 1):
                r2 = rest - ci
                for M in range(r2 + 1):
                    for N in range(r2 - M + 1):
                        for r in range(1, r2 - M - N + 2):
                            s = r2 - M - N - (r - 1) + 1
                            yield ti, ci, M, N, r, s
        w += 1


@dataclass
class StreamRecord:
    sextuple: Sextuple
    decision: Decision

    def to_json(self, timing: bool = False) -> dict:
        out = self.sextuple.to_json()
        out["decision"] = self.decision.to_json(timing)
        return out


def stream_B(budget: int, *, threads: int = 1, per_call: int = 64, tol=mpq(1, 50),
             carriers: Sequence[Carrier] | None = None, max_M: int = 1, max_N: int = 1) -> Iterator[StreamRecord]:
    """Emit YES sextuples; ``budget`` caps the candidate tuples examined in total.

    Levels above ``max_M``/``max_N`` are skipped to keep the walk inside
    tractable power complexes; skipped sextuples cost nothing.
    """
    carriers = list(carriers) if carriers is not None else seed_carriers()
    theories: list[Theory] = []
    tgen = theory_stream()
    used = 0
    for ti, ci, M, N, r, s in sextuple_order(len(carriers)):
        if used >= budget:
            return
        while len(theories) <= ti:
            try:
                theories.append(next(tgen))
            except StopIteration:
                break
        if ti >= len(theories) or M > max_M or N > max_N:
            continue
        th = theories[ti]
        C = carriers[ci]
        cap = min(per_call, budget - used)
        d = decide_within(C, th, M, N, mpq(r, s), tol, threads=threads, max_candidates=cap)
        used += max(d.candidates_examined, 1)
        if d.verdict == "YES":
            yield StreamRecord(Sextuple(C.name, M, N, r, s, th), d)


def stream_E(K_name: str, alpha, budget: int, **kw) -> Iterator[Theory]:
    alpha = mpq(alpha)
    seen: set[str] = set()
    for rec in stream_B(budget, **kw):
        sx = rec.sextuple
        if sx.complex_name == K_name and sx.s * alpha > sx.r:
            key = str(sx.theory)
            if key not in seen:
                seen.add(key)
                yield sx.theory


def stream_F(K_name: str, budget: int, **kw) -> Iterator[tuple[Theory, int]]:
    for rec in stream_B(budget, **kw):
        sx = rec.sextuple
        if sx.complex_name == K_name and sx.r == 1:
            yield sx.theory, sx.s
