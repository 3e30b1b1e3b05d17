"""Finite simplicial complexes and their exact-rational realizations.

Vertices are hashable and, within one complex, mutually comparable
(strings for hand-made complexes, tuples for products, ints for
subdivision levels).  A simplex is a ``frozenset`` of vertices.
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Hashable, Iterable, Mapping, Sequence

from gmpy2 import mpq

from .rational import ONE, ZERO, fmt, sqrt_bounds

Vertex = Hashable
Simplex = frozenset


# ---------------------------------------------------------------- complexes


def close_faces(tops: Iterable[Iterable[Vertex]]) -> frozenset:
    out: set[frozenset] = set()
    for t in tops:
        t = tuple(t)
        for k in range(1, len(t) + 1):
            for f in itertools.combinations(t, k):
                out.add(frozenset(f))
    return frozenset(out)


@dataclass(frozen=True, eq=False)
class Complex:
    vertices: tuple[Vertex, ...]
    simplices: frozenset

    @classmethod
    def from_top(cls, vertices: Sequence[Vertex], tops: Iterable[Iterable[Vertex]]) -> "Complex":
        tops = [tuple(t) for t in tops]
        verts = list(vertices)
        for t in tops:
            for v in t:
                if v not in verts:
                    verts.append(v)
        return cls(tuple(verts), close_faces(tops + [(v,) for v in verts]))

    @cached_property
    def index(self) -> dict[Vertex, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def dim(self) -> int:
        return max((len(s) for s in self.simplices), default=0) - 1

    @cached_property
    def top_simplices(self) -> tuple[tuple[Vertex, ...], ...]:
        """Maximal simplices, each as a vertex tuple in complex order."""
        by_size = sorted(self.simplices, key=len, reverse=True)
        tops: list[frozenset] = []
        for s in by_size:
            if not any(s < t for t in tops):
                tops.append(s)
        return tuple(sorted((self.sort(s) for s in tops), key=lambda t: [self.index[v] for v in t]))

    def sort(self, s: Iterable[Vertex]) -> tuple[Vertex, ...]:
        return tuple(sorted(s, key=self.index.__getitem__))

    def __contains__(self, s: object) -> bool:
        return s in self.simplices

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Complex):
            return NotImplemented
        return set(self.vertices) == set(other.vertices) and self.simplices == other.simplices

    def __hash__(self) -> int:
        return hash((frozenset(self.vertices), self.simplices))

    def __repr__(self) -> str:
        return f"Complex({len(self.vertices)} vertices, {len(self.simplices)} simplices, dim {self.dim})"


@dataclass(frozen=True)
class Violation:
    missing: frozenset
    reason: str

    def __str__(self) -> str:
        return f"{self.reason}: {sorted(self.missing, key=repr)}"


def validate(K: Complex) -> Violation | None:
    """None when both closure conditions hold, else the first missing face."""
    verts = set(K.vertices)
    for v in K.vertices:
        if frozenset([v]) not in K.simplices:
            return Violation(frozenset([v]), "vertex singleton missing")
    for s in sorted(K.simplices, key=lambda s: (len(s), sorted(map(repr, s)))):
        if not s:
            return Violation(s, "empty simplex")
        for v in s:
            if v not in verts:
                return Violation(frozenset([v]), "vertex singleton missing")
        for k in range(1, len(s)):
            for f in itertools.combinations(sorted(s, key=repr), k):
                if frozenset(f) not in K.simplices:
                    return Violation(frozenset(f), "face missing")
    return None


# ---------------------------------------------------------------- points


@dataclass(frozen=True)
class RealizationPoint:
    """Sparse barycentric coordinates; zero entries are dropped."""

    coords: tuple[tuple[Vertex, mpq], ...]

    @classmethod
    def of(cls, coords: Mapping[Vertex, Any]) -> "RealizationPoint":
        items = [(v, mpq(c)) for v, c in coords.items() if c != 0]
        for _, c in items:
            if c < 0:
                raise ValueError("negative barycentric coordinate")
        if sum((c for _, c in items), ZERO) != 1:
            raise ValueError("coordinates must sum to 1")
        try:
            items.sort()
        except TypeError:
            items.sort(key=lambda kv: repr(kv[0]))
        return cls(tuple(items))

    @classmethod
    def vertex(cls, v: Vertex) -> "RealizationPoint":
        return cls(((v, ONE),))

    def as_dict(self) -> dict[Vertex, mpq]:
        return dict(self.coords)

    def get(self, v: Vertex) -> mpq:
        for w, c in self.coords:
            if w == v:
                return c
        return ZERO

    @property
    def carrier(self) -> frozenset:
        return frozenset(v for v, _ in self.coords)

    def __str__(self) -> str:
        return "{" + ", ".join(f"{v}: {fmt(c)}" for v, c in self.coords) + "}"


def combine(weighted: Iterable[tuple[mpq, RealizationPoint]]) -> RealizationPoint:
    """Convex combination of points of one complex (caller checks the carrier)."""
    acc: dict[Vertex, mpq] = {}
    for w, p in weighted:
        if w == 0:
            continue
        for v, c in p.coords:
            acc[v] = acc.get(v, ZERO) + w * c
    return RealizationPoint.of(acc)


def in_complex(p: RealizationPoint, K: Complex) -> bool:
    return p.carrier in K.simplices


def barycenter(s: Iterable[Vertex]) -> RealizationPoint:
    s = list(s)
    w = mpq(1, len(s))
    return RealizationPoint.of({v: w for v in s})


# ---------------------------------------------------------------- products


def product_complex(K1: Complex, K2: Complex) -> tuple[Complex, dict, dict]:
    """Staircase triangulation of |K1|×|K2|; returns (K, π1, π2).

    Factor vertex orders are the sorted vertex names.
    """
    o1 = {v: i for i, v in enumerate(sorted(K1.vertices))}
    o2 = {v: i for i, v in enumerate(sorted(K2.vertices))}
    tops = []
    for s in K1.top_simplices:
        s = sorted(s, key=o1.__getitem__)
        for t in K2.top_simplices:
            t = sorted(t, key=o2.__getitem__)
            m, n = len(s) - 1, len(t) - 1
            for ups in itertools.combinations(range(m + n), n):
                i = j = 0
                path = [(s[0], t[0])]
                upset = set(ups)
                for step in range(m + n):
                    if step in upset:
                        j += 1
                    else:
                        i += 1
                    path.append((s[i], t[j]))
                tops.append(path)
    verts = [(u, w) for u in sorted(K1.vertices) for w in sorted(K2.vertices)]
    K = Complex.from_top(verts, tops)
    pi1 = {v: v[0] for v in verts}
    pi2 = {v: v[1] for v in verts}
    return K, pi1, pi2


def power_complex(K: Complex, n: int) -> Complex:
    """K^n associating to the left; K^1 = K, K^0 = a one-point complex."""
    if n == 0:
        return Complex.from_top([()], [[()]])
    P = K
    for _ in range(n - 1):
        P = product_complex(P, K)[0]
    return P


def _merge_two(a: RealizationPoint, b: RealizationPoint) -> RealizationPoint:
    av = sorted(a.coords)
    bv = sorted(b.coords)
    out: dict[Vertex, mpq] = {}
    i = j = 0
    ca, cb = av[0][1], bv[0][1]
    prev = ZERO
    # walk the merged breakpoints of both cumulative distributions
    while True:
        t = min(ca, cb)
        key = (av[i][0], bv[j][0])
        out[key] = out.get(key, ZERO) + (t - prev)
        prev = t
        if t == 1:
            break
        if ca == t:
            i += 1
            ca += av[i][1]
        if cb == t:
            j += 1
            cb += bv[j][1]
    return RealizationPoint.of(out)


def tuple_to_product_point(points: Sequence[RealizationPoint]) -> RealizationPoint:
    if not points:
        return RealizationPoint.vertex(())
    acc = points[0]
    for p in points[1:]:
        acc = _merge_two(acc, p)
    return acc


def project_point(p: RealizationPoint, n: int) -> list[RealizationPoint]:
    """Inverse of :func:`tuple_to_product_point` for a left-associated K^n point."""
    if n == 0:
        return []
    if n == 1:
        return [p]
    left: dict[Vertex, mpq] = {}
    right: dict[Vertex, mpq] = {}
    for (u, w), c in p.coords:
        left[u] = left.get(u, ZERO) + c
        right[w] = right.get(w, ZERO) + c
    return project_point(RealizationPoint.of(left), n - 1) + [RealizationPoint.of(right)]


# ---------------------------------------------------------------- subdivision


class SubdivisionTower:
    """Barycentric subdivisions K = K^(0), K^(1), ... built on demand.

    Level m >= 1 uses integer vertex ids.  ``base_point(m, v)`` is the
    exact point of |K| realizing vertex v of level m.
    """

    def __init__(self, base: Complex) -> None:
        self.base = base
        self._levels: list[Complex] = [base]
        self._children: list[dict[int, frozenset]] = [{}]
        self._vid: list[dict[frozenset, int]] = [{}]
        self._points: list[dict[Vertex, RealizationPoint]] = [
            {v: RealizationPoint.vertex(v) for v in base.vertices}]
        self._lock = threading.Lock()

    @property
    def depth(self) -> int:
        return len(self._levels) - 1

    def level(self, m: int) -> Complex:
        if m > self.depth:
            with self._lock:
                while self.depth < m:
                    self._extend()
        return self._levels[m]

    def _extend(self) -> None:
        prev = self._levels[-1]
        prev_pts = self._points[-1]
        order = sorted(prev.simplices, key=lambda s: (len(s), sorted(prev.index[v] for v in s)))
        vid = {s: i for i, s in enumerate(order)}
        children = {i: s for s, i in vid.items()}
        pts = {}
        for s, i in vid.items():
            w = mpq(1, len(s))
            pts[i] = combine((w, prev_pts[v]) for v in s)
        tops = []
        for T in prev.top_simplices:
            for perm in itertools.permutations(T):
                tops.append([vid[frozenset(perm[:k])] for k in range(1, len(perm) + 1)])
        new = Complex.from_top(list(range(len(order))), tops)
        self._levels.append(new)
        self._children.append(children)
        self._vid.append(vid)
        self._points.append(pts)

    def children(self, m: int, v: int) -> frozenset:
        self.level(m)
        return self._children[m][v]

    def base_point(self, m: int, v: Vertex) -> RealizationPoint:
        self.level(m)
        return self._points[m][v]

    def refine_coords(self, m: int, coords: Mapping[Vertex, mpq]) -> dict[int, mpq]:
        """Coordinates of one point at level m from those at level m-1."""
        self.level(m)
        prev = self._levels[m - 1]
        vid = self._vid[m]
        items = sorted(((c, v) for v, c in coords.items() if c != 0),
                       key=lambda cv: (-cv[0], prev.index[cv[1]]))
        out: dict[int, mpq] = {}
        chain: list[Vertex] = []
        for j, (c, v) in enumerate(items):
            chain.append(v)
            nxt = items[j + 1][0] if j + 1 < len(items) else ZERO
            w = (j + 1) * (c - nxt)
            if w:
                out[vid[frozenset(chain)]] = w
        return out

    def locate(self, p: RealizationPoint, m: int) -> tuple[frozenset, dict[Vertex, mpq]]:
        coords: dict[Vertex, mpq] = p.as_dict()
        for lvl in range(1, m + 1):
            coords = self.refine_coords(lvl, coords)
        return frozenset(coords), coords

    def push_down(self, m: int, coords: Mapping[Vertex, mpq]) -> RealizationPoint:
        return combine((c, self.base_point(m, v)) for v, c in coords.items())


def barycentric_subdivide(tower: SubdivisionTower) -> SubdivisionTower:
    tower.level(tower.depth + 1)
    return tower


def locate(p: RealizationPoint, tower: SubdivisionTower, m: int) -> tuple[frozenset, dict]:
    return tower.locate(p, m)


# ---------------------------------------------------------------- metrics


@dataclass(frozen=True)
class SqrtValue:
    """A nonnegative real given exactly by its rational square."""

    square: mpq

    def bounds(self) -> tuple[mpq, mpq]:
        return sqrt_bounds(self.square)

    def __float__(self) -> float:
        return float(self.square) ** 0.5

    def __le__(self, other: "SqrtValue") -> bool:
        return self.square <= other.square

    def __lt__(self, other: "SqrtValue") -> bool:
        return self.square < other.square

    def __str__(self) -> str:
        lo, hi = self.bounds()
        if lo == hi:
            return fmt(lo)
        return f"sqrt({fmt(self.square)})"


NORMS = ("l2", "sup", "l1")
COMBINES = ("rho", "sigma", "tau")


@dataclass(frozen=True)
class MetricSpec:
    """How |K| is measured.

    ``barycentric``: Euclidean distance of barycentric vectors.
    ``coordinate``: affine embedding vertex -> Q^d, then a weighted norm.
    ``product``: concatenated factor embeddings; factor distances are
    combined by rho (Euclidean), sigma (max) or tau (sum).
    """

    kind: str = "barycentric"
    embedding: tuple[tuple[Vertex, tuple[mpq, ...]], ...] = ()
    norm: str = "l2"
    weights: tuple[mpq, ...] = ()
    factors: tuple["MetricSpec", ...] = ()
    combine: str = "rho"

    def __post_init__(self) -> None:
        if self.kind not in ("barycentric", "coordinate", "product"):
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if self.norm not in NORMS:
            raise ValueError(f"unknown norm {self.norm!r}")
        if self.combine not in COMBINES:
            raise ValueError(f"unknown combination {self.combine!r}")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")
        if self.kind == "coordinate":
            dims = {len(x) for _, x in self.embedding}
            if len(dims) != 1:
                raise ValueError("embedding vectors must share one dimension")
            if self.weights and len(self.weights) != dims.pop():
                raise ValueError("one weight per embedding axis")

    @classmethod
    def coordinate(cls, embedding: Mapping[Vertex, Sequence], norm: str = "l2",
                   weights: Sequence | None = None) -> "MetricSpec":
        emb = tuple((v, tuple(mpq(c) for c in x)) for v, x in embedding.items())
        d = len(emb[0][1])
        w = tuple(mpq(c) for c in weights) if weights is not None else tuple([ONE] * d)
        return cls("coordinate", emb, norm, w)

    @classmethod
    def product(cls, a: "MetricSpec", b: "MetricSpec", combine: str = "rho") -> "MetricSpec":
        return cls("product", factors=(a, b), combine=combine)

    @classmethod
    def power(cls, m: "MetricSpec", n: int, combine: str = "sigma") -> "MetricSpec":
        """Metric on K^n (left-nested vertices) combining n copies of m."""
        if n < 1:
            raise ValueError("power metric needs n >= 1")
        if n == 1:
            return m
        return cls("product", factors=(m,) * n, combine=combine)

    def scaled(self, c: mpq) -> "MetricSpec":
        c = mpq(c)
        if self.kind == "coordinate":
            return MetricSpec("coordinate", self.embedding, self.norm, tuple(w * c for w in self.weights))
        if self.kind == "product":
            return MetricSpec("product", factors=tuple(f.scaled(c) for f in self.factors),
                              combine=self.combine)
        raise ValueError("barycentric metrics cannot be rescaled by weights")


def _norm_bounds(diff: Sequence[mpq], norm: str, weights: Sequence[mpq]) -> tuple[mpq, mpq, mpq | None]:
    """(lo, hi, exact square or None) of a weighted norm."""
    if norm == "l2":
        sq = sum(((w * x) ** 2 for w, x in zip(weights, diff)), ZERO)
        lo, hi = sqrt_bounds(sq)
        return lo, hi, sq
    if norm == "sup":
        v = max((abs(w * x) for w, x in zip(weights, diff)), default=ZERO)
    else:
        v = sum((abs(w * x) for w, x in zip(weights, diff)), ZERO)
    return v, v, v * v


class Carrier:
    """A complex together with its metric: the space |K| an algebra lives on."""

    def __init__(self, K: Complex, metric: MetricSpec | None = None, name: str = "") -> None:
        self.K = K
        self.metric = metric or MetricSpec()
        self.name = name
        self.tower = SubdivisionTower(K)
        self._powers: dict[int, tuple[Complex, SubdivisionTower]] = {}
        self._lock = threading.Lock()
        self._vec_cache: dict[tuple, RealizationPoint] = {}
        self._build_embedding()

    # -- embedding

    def _build_embedding(self) -> None:
        m = self.metric
        if m.kind == "barycentric":
            n = len(self.K.vertices)
            self.dim = n
            self._emb = {v: tuple(ONE if j == i else ZERO for j in range(n))
                         for i, v in enumerate(self.K.vertices)}
            self._segments = [(0, n, "l2", tuple([ONE] * n))]
        else:
            self._emb = {v: self._embed_vertex(m, v) for v in self.K.vertices}
            self.dim = len(next(iter(self._emb.values())))
            self._segments = _segments(m, 0)
        self._combine = m.combine if m.kind == "product" else None
        self._tree = _metric_tree(m, 0) if m.kind == "product" else None

    @staticmethod
    def _embed_vertex(m: MetricSpec, v: Vertex) -> tuple[mpq, ...]:
        if m.kind == "coordinate":
            return dict(m.embedding)[v]
        if m.kind == "product":
            out: tuple = ()
            for f, part in zip(m.factors, unnest(v, len(m.factors))):
                out += Carrier._embed_vertex(f, part)
            return out
        raise ValueError("barycentric factors are not supported inside product metrics")

    def vertex_vec(self, v: Vertex) -> tuple[mpq, ...]:
        return self._emb[v]

    def embed(self, p: RealizationPoint) -> tuple[mpq, ...]:
        if self.metric.kind == "barycentric":
            idx = self.K.index
            out = [ZERO] * self.dim
            for v, c in p.coords:
                out[idx[v]] = c
            return tuple(out)
        acc = [ZERO] * self.dim
        for v, c in p.coords:
            for i, x in enumerate(self._emb[v]):
                if x:
                    acc[i] += c * x
        return tuple(acc)

    @cached_property
    def _simplex_solvers(self):
        out = []
        for T in self.K.top_simplices:
            v0 = self._emb[T[0]]
            cols = [tuple(a - b for a, b in zip(self._emb[v], v0)) for v in T[1:]]
            out.append((T, v0, cols, _left_inverse(cols)))
        return out

    def point_of(self, vec: Sequence[mpq]) -> RealizationPoint:
        """Inverse of :meth:`embed`; raises if vec is outside |K|."""
        key = tuple(vec)
        hit = self._vec_cache.get(key)
        if hit is not None:
            return hit
        if self.metric.kind == "barycentric":
            p = RealizationPoint.of({v: c for v, c in zip(self.K.vertices, key) if c})
            if p.carrier not in self.K.simplices:
                raise ValueError("vector is not a point of the complex")
        else:
            p = self._solve(key)
        if len(self._vec_cache) < 200_000:
            self._vec_cache[key] = p
        return p

    def _solve(self, x: tuple[mpq, ...]) -> RealizationPoint:
        for T, v0, cols, linv in self._simplex_solvers:
            rhs = [a - b for a, b in zip(x, v0)]
            lam = [sum((r * c for r, c in zip(row, rhs)), ZERO) for row in linv] if cols else []
            if any(l < 0 for l in lam) or sum(lam, ZERO) > 1:
                continue
            back = list(v0)
            for l, col in zip(lam, cols):
                for i, c in enumerate(col):
                    back[i] += l * c
            if tuple(back) != x:
                continue
            coords = {T[0]: 1 - sum(lam, ZERO)}
            for v, l in zip(T[1:], lam):
                coords[v] = l
            return RealizationPoint.of(coords)
        raise ValueError(f"point {[fmt(c) for c in x]} lies outside the carrier")

    # -- distances

    def dist_bounds(self, a: Sequence[mpq], b: Sequence[mpq]) -> tuple[mpq, mpq]:
        diff = [x - y for x, y in zip(a, b)]
        if self._combine is None:
            lo, hi, _ = _norm_bounds(diff, self._segments[0][2], self._segments[0][3])
            return lo, hi
        lo, hi, _ = _tree_bounds(self._tree, diff)
        return lo, hi

    def dist_square(self, a: Sequence[mpq], b: Sequence[mpq]) -> mpq | None:
        """Exact squared distance when available (plain l2, sup, l1 norms)."""
        diff = [x - y for x, y in zip(a, b)]
        if self._combine is None:
            return _norm_bounds(diff, self._segments[0][2], self._segments[0][3])[2]
        return _tree_bounds(self._tree, diff)[2]

    def distance(self, p: RealizationPoint, r: RealizationPoint) -> tuple[mpq, mpq]:
        return self.dist_bounds(self.embed(p), self.embed(r))

    @cached_property
    def l2_comparison(self) -> tuple[mpq, mpq]:
        """Constants (c_lo, c_hi) with c_lo·|x|_2 <= d <= c_hi·|x|_2 on embedded differences."""
        lo, hi = ONE, ZERO
        first = True
        for s, e, norm, w in self._segments:
            d = e - s
            wmin, wmax = min(w), max(w)
            if norm == "l2":
                a, b = wmin, wmax
            elif norm == "sup":
                a, b = wmin / sqrt_bounds(mpq(d))[1], wmax
            else:
                a, b = wmin, wmax * sqrt_bounds(mpq(d))[1]
            lo = a if first else min(lo, a)
            hi = b if first else max(hi, b)
            first = False
        n_seg = len(self._segments)
        if n_seg > 1:
            # any max-combination loses at most sqrt(#segments) downwards,
            # any sum-combination at most sqrt(#segments) upwards
            kinds = _tree_combines(self._tree)
            if "sigma" in kinds:
                lo = lo / sqrt_bounds(mpq(n_seg))[1]
            if "tau" in kinds:
                hi = hi * sqrt_bounds(mpq(n_seg))[1]
        return lo, hi

    # -- powers

    def power(self, n: int) -> tuple[Complex, SubdivisionTower]:
        with self._lock:
            if n not in self._powers:
                P = power_complex(self.K, n)
                self._powers[n] = (P, SubdivisionTower(P))
            return self._powers[n]

    def subspace(self, vertices: Iterable[Vertex], name: str = "") -> "Carrier":
        vs = set(vertices)
        simplices = frozenset(s for s in self.K.simplices if s <= vs)
        sub = Complex(tuple(v for v in self.K.vertices if v in vs), simplices)
        metric = self.metric
        if metric.kind == "barycentric":
            # keep the ambient coordinates so distances agree
            emb = {v: self._emb[v] for v in sub.vertices}
            metric = MetricSpec.coordinate(emb)
        return Carrier(sub, metric, name or f"{self.name}|sub")

    def __repr__(self) -> str:
        return f"Carrier({self.name or '?'}, {self.K!r}, {self.metric.kind})"


def unnest(v: Vertex, k: int) -> list:
    """Factor vertices of a left-nested K1×...×Kk vertex."""
    if k == 1:
        return [v]
    if k == 2:
        return [v[0], v[1]]
    return unnest(v[0], k - 1) + [v[1]]


def _segments(m: MetricSpec, start: int) -> list[tuple[int, int, str, tuple[mpq, ...]]]:
    if m.kind == "coordinate":
        d = len(m.embedding[0][1])
        return [(start, start + d, m.norm, m.weights)]
    if m.kind == "product":
        out = []
        for f in m.factors:
            segs = _segments(f, start)
            out += segs
            start = segs[-1][1]
        return out
    raise ValueError("barycentric factor inside product metric")


def _metric_tree(m: MetricSpec, start: int):
    """Leaves (start, end, norm, weights); nodes (combine, children, end)."""
    if m.kind == "coordinate":
        d = len(m.embedding[0][1])
        return ("leaf", start, start + d, m.norm, m.weights)
    if m.kind == "product":
        kids = []
        for f in m.factors:
            t = _metric_tree(f, start)
            kids.append(t)
            start = t[2] if t[0] == "leaf" else t[3]
        return ("node", m.combine, tuple(kids), start)
    raise ValueError("barycentric factor inside product metric")


def _tree_bounds(t, diff) -> tuple[mpq, mpq, mpq | None]:
    if t[0] == "leaf":
        _, s, e, norm, w = t
        return _norm_bounds(diff[s:e], norm, w)
    parts = [_tree_bounds(k, diff) for k in t[2]]
    how = t[1]
    lo, hi = _combine_parts(parts, how)
    sqs = [p[2] for p in parts]
    sq = None
    if all(x is not None for x in sqs):
        if how == "rho":
            sq = sum(sqs, ZERO)
        elif how == "sigma":
            sq = max(sqs)
    return lo, hi, sq


def _tree_combines(t) -> set:
    if t[0] == "leaf":
        return set()
    out = {t[1]}
    for k in t[2]:
        out |= _tree_combines(k)
    return out


def _combine_parts(parts, how: str) -> tuple[mpq, mpq]:
    if how == "sigma":
        return max(p[0] for p in parts), max(p[1] for p in parts)
    if how == "tau":
        return sum((p[0] for p in parts), ZERO), sum((p[1] for p in parts), ZERO)
    sqs = [p[2] for p in parts]
    lo = sqrt_bounds(sum((p[0] ** 2 for p in parts), ZERO))[0]
    hi = sqrt_bounds(sum((p[1] ** 2 for p in parts), ZERO))[1]
    if all(s is not None for s in sqs):
        return sqrt_bounds(sum(sqs, ZERO))
    return lo, hi


def _solve_linear(A: list[list[mpq]], B: list[list[mpq]]) -> list[list[mpq]]:
    """Solve A X = B exactly (A square, nonsingular)."""
    n = len(A)
    M = [list(A[i]) + list(B[i]) for i in range(n)]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            raise ValueError("degenerate simplex")
        M[c], M[piv] = M[piv], M[c]
        inv = 1 / M[c][c]
        M[c] = [x * inv for x in M[c]]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    return [row[n:] for row in M]


def _left_inverse(cols: list[tuple[mpq, ...]]) -> list[list[mpq]]:
    """(DᵀD)⁻¹Dᵀ for the matrix D whose columns are ``cols``."""
    if not cols:
        return []
    k = len(cols)
    gram = [[sum((a * b for a, b in zip(cols[i], cols[j])), ZERO) for j in range(k)] for i in range(k)]
    DT = [list(c) for c in cols]
    return _solve_linear(gram, DT)


def gram_inverse(cols: list[tuple[mpq, ...]]) -> list[list[mpq]]:
    k = len(cols)
    gram = [[sum((a * b for a, b in zip(cols[i], cols[j])), ZERO) for j in range(k)] for i in range(k)]
    eye = [[ONE if i == j else ZERO for j in range(k)] for i in range(k)]
    return _solve_linear(gram, eye)


# ---------------------------------------------------------------- metric queries


def distance(p: RealizationPoint, r: RealizationPoint, metric: MetricSpec | None = None,
             K: Complex | None = None) -> SqrtValue:
    """Exact distance as a square (barycentric or l2/sup/l1 coordinate metrics)."""
    if metric is None or metric.kind == "barycentric":
        keys = set(p.carrier) | set(r.carrier)
        a, b = p.as_dict(), r.as_dict()
        return SqrtValue(sum(((a.get(v, ZERO) - b.get(v, ZERO)) ** 2 for v in keys), ZERO))
    if K is None:
        raise ValueError("coordinate metrics need the complex")
    C = Carrier(K, metric)
    sq = C.dist_square(C.embed(p), C.embed(r))
    if sq is None:
        raise ValueError("distance is not an exact square root for this metric")
    return SqrtValue(sq)


def mesh_bound(K: Complex, m: int) -> SqrtValue:
    n = max(K.dim, 1)
    return SqrtValue(2 * mpq(n, n + 1) ** (2 * m))


def measured_mesh(K: Complex, m: int, carrier: Carrier | None = None) -> SqrtValue:
    """Largest vertex-pair distance inside a level-m cell, as an exact square."""
    C = carrier or Carrier(K)
    tower = C.tower if carrier is not None else SubdivisionTower(K)
    L = tower.level(m)
    vecs = {v: C.embed(tower.base_point(m, v)) for v in L.vertices}
    best = ZERO
    for T in L.top_simplices:
        for u, w in itertools.combinations(T, 2):
            sq = C.dist_square(vecs[u], vecs[w])
            if sq is None:
                sq = C.dist_bounds(vecs[u], vecs[w])[1] ** 2
            best = max(best, sq)
    return SqrtValue(best)


def diameter(K: Complex, metric: MetricSpec | None = None, carrier: Carrier | None = None) -> tuple[mpq, mpq]:
    """Certified [lo, hi] for the diameter; exact when lo == hi."""
    C = carrier or Carrier(K, metric)
    lo = hi = ZERO
    vs = [C.vertex_vec(v) for v in K.vertices]
    for a, b in itertools.combinations(vs, 2):
        l, h = C.dist_bounds(a, b)
        lo, hi = max(lo, l), max(hi, h)
    return lo, hi


def diameter_square(K: Complex, metric: MetricSpec | None = None) -> SqrtValue:
    C = Carrier(K, metric)
    best = ZERO
    for a, b in itertools.combinations(K.vertices, 2):
        sq = C.dist_square(C.vertex_vec(a), C.vertex_vec(b))
        if sq is None:
            raise ValueError("no exact square for this metric")
        best = max(best, sq)
    return SqrtValue(best)


def eccentricity(p: RealizationPoint, carrier: Carrier) -> tuple[mpq, mpq]:
    v = carrier.embed(p)
    lo = hi = ZERO
    for w in carrier.K.vertices:
        l, h = carrier.dist_bounds(v, carrier.vertex_vec(w))
        lo, hi = max(lo, l), max(hi, h)
    return lo, hi


@dataclass(frozen=True)
class RadiusBound:
    lo: mpq
    hi: mpq
    center: RealizationPoint


def radius_bound(K: Complex, metric: MetricSpec | None = None, level: int = 1,
                 carrier: Carrier | None = None) -> RadiusBound:
    C = carrier or Carrier(K, metric)
    L = C.tower.level(level)
    best: tuple[mpq, mpq] | None = None
    center = None
    for v in L.vertices:
        p = C.tower.base_point(level, v)
        e = eccentricity(p, C)
        if best is None or e[1] < best[1]:
            best, center = e, p
    assert best is not None and center is not None
    mesh_hi = measured_mesh(K, level, C).bounds()[1]
    lo = max(best[0] - mesh_hi, best[0] / 2, ZERO)
    return RadiusBound(lo, best[1], center)


# ---------------------------------------------------------------- seeds


def edge() -> Complex:
    return Complex.from_top(["a", "b"], [["a", "b"]])


def triangle() -> Complex:
    return Complex.from_top(["a", "b", "c"], [["a", "b", "c"]])


def square() -> Complex:
    """[0,1]² as edge × edge: vertices ('a','a'), ('a','b'), ... two triangles."""
    return product_complex(edge(), edge())[0]


def triode() -> Complex:
    """The letter Y: centre E with legs to B, C, D."""
    return Complex.from_top(["E", "B", "C", "D"], [["E", "B"], ["E", "C"], ["E", "D"]])


def cube(k: int) -> Complex:
    return power_complex(edge(), k)


def unit_interval_metric() -> MetricSpec:
    return MetricSpec.coordinate({"a": [0], "b": [1]})


def _flatten(v) -> list:
    if isinstance(v, tuple):
        out = []
        for x in v:
            out += _flatten(x)
        return out
    return [v]


def unit_cube_metric(k: int, norm: str = "l2", weights: Sequence | None = None) -> MetricSpec:
    """Coordinate metric on edge^k with 'a' -> 0 and 'b' -> 1 on every axis."""
    K = cube(k)
    emb = {v: [0 if x == "a" else 1 for x in _flatten(v)] for v in K.vertices}
    return MetricSpec.coordinate(emb, norm, weights)


def cube_point(coords: Sequence) -> RealizationPoint:
    """The point of edge^k with the given coordinates in [0,1]."""
    pts = [RealizationPoint.of({"a": 1 - mpq(c), "b": mpq(c)}) for c in coords]
    return tuple_to_product_point(pts)


def random_point(K: Complex, rng, denom: int = 1 << 16) -> RealizationPoint:
    """A random point of |K| with coordinates in (1/denom)Z, from a seeded ``random.Random``.

    Picks a top simplex uniformly, then cuts [0, denom] at sorted random
    integers so the barycentric coordinates are uniform on that simplex.
    """
    T = K.top_simplices[rng.randrange(len(K.top_simplices))]
    cuts = sorted(rng.randint(0, denom) for _ in range(len(T) - 1))
    bounds = [0] + cuts + [denom]
    return RealizationPoint.of({v: mpq(bounds[i + 1] - bounds[i], denom) for i, v in enumerate(T)})
