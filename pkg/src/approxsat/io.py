"""JSON formats for complexes, metrics and algebras.

Rationals are written as "r/s" strings.  Vertex names are strings; product
vertices are nested JSON lists.  Inside PL vertex maps, keys are the
vertex names, or ``repr`` of non-string vertices (subdivision ids, tuples).
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from gmpy2 import mpq

from . import closedform as cf
from .complex import (Carrier, Complex, MetricSpec, RealizationPoint, cube, edge, square, triangle, triode,
                      unit_cube_metric, unit_interval_metric)
from .plmap import Algebra, Operation, PLOperation, _vkey
from .rational import fmt, q

SEEDS = {"edge": edge, "triangle": triangle, "square": square, "triode": triode}


def _enc_vertex(v) -> Any:
    if isinstance(v, tuple):
        return [_enc_vertex(x) for x in v]
    return v


def _dec_vertex(v) -> Any:
    if isinstance(v, list):
        return tuple(_dec_vertex(x) for x in v)
    return v


def complex_to_json(K: Complex, metric: MetricSpec | None = None) -> dict:
    out: dict = {"vertices": [_enc_vertex(v) for v in K.vertices],
                 "simplices": [[_enc_vertex(v) for v in K.sort(T)] for T in K.top_simplices]}
    if metric is not None and metric.kind != "barycentric":
        out["metric"] = metric_to_json(metric)
    return out


def complex_from_json(data: dict, close: bool = True) -> tuple[Complex, MetricSpec | None]:
    """``close=False`` keeps the simplex list as written, for validation."""
    try:
        verts = [_dec_vertex(v) for v in data["vertices"]]
        tops = [[_dec_vertex(v) for v in s] for s in data["simplices"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed complex: {exc}") from None
    known = set(verts)
    for s in tops:
        for v in s:
            if v not in known:
                raise ValueError(f"simplex uses unknown vertex {v!r}")
    if close:
        K = Complex.from_top(verts, tops)
    else:
        K = Complex(tuple(verts), frozenset([frozenset(t) for t in tops] + [frozenset([v]) for v in verts]))
    metric = metric_from_json(data["metric"]) if "metric" in data else None
    return K, metric


def metric_to_json(m: MetricSpec) -> dict:
    if m.kind == "barycentric":
        return {"kind": "barycentric"}
    if m.kind == "coordinate":
        if all(isinstance(v, str) for v, _ in m.embedding):
            emb: Any = {v: [fmt(x) for x in vec] for v, vec in m.embedding}
        else:
            emb = [[_enc_vertex(v), [fmt(x) for x in vec]] for v, vec in m.embedding]
        return {"kind": "coordinate", "embedding": emb, "norm": m.norm, "weights": [fmt(w) for w in m.weights]}
    return {"kind": "product", "factors": [metric_to_json(f) for f in m.factors], "combine": m.combine}


def metric_from_json(data: dict) -> MetricSpec:
    kind = data.get("kind", "barycentric")
    if kind == "barycentric":
        return MetricSpec()
    if kind == "coordinate":
        raw = data["embedding"]
        pairs = raw.items() if isinstance(raw, dict) else [(_dec_vertex(v), x) for v, x in raw]
        emb = {v: [q(x) for x in vec] for v, vec in pairs}
        weights = [q(w) for w in data["weights"]] if "weights" in data else None
        return MetricSpec.coordinate(emb, data.get("norm", "l2"), weights)
    if kind == "product":
        factors = tuple(metric_from_json(f) for f in data["factors"])
        return MetricSpec("product", factors=factors, combine=data.get("combine", "rho"))
    raise ValueError(f"unknown metric kind {kind!r}")


def resolve_complex(ref: Any, base: Path | None = None) -> tuple[Complex, MetricSpec | None, str]:
    """A complex reference: inline object, seed name (edge, square, cube:k, ...) or file path."""
    if isinstance(ref, dict):
        K, m = complex_from_json(ref)
        return K, m, "inline"
    if not isinstance(ref, str):
        raise ValueError("complex reference must be an object or a string")
    if ref in SEEDS:
        return SEEDS[ref](), None, ref
    if ref == "interval":
        return edge(), unit_interval_metric(), ref
    if ref.startswith("cube:"):
        k = int(ref.split(":", 1)[1])
        return cube(k), unit_cube_metric(k), ref
    path = Path(ref) if base is None or Path(ref).is_absolute() else base / ref
    K, m = complex_from_json(json.loads(path.read_text()))
    return K, m, path.stem


def load_carrier(ref: Any, metric: dict | None = None, base: Path | None = None) -> Carrier:
    K, m, name = resolve_complex(ref, base)
    if metric is not None:
        m = metric_from_json(metric)
    return Carrier(K, m, name)


def _decode_map(op_domain: Complex, codomain: Complex, raw: dict) -> dict:
    dk = {_vkey(v): v for v in op_domain.vertices}
    ck = {_vkey(v): v for v in codomain.vertices}
    out = {}
    for k, w in raw.items():
        if k not in dk:
            raise ValueError(f"vertex map key {k!r} is not a domain vertex")
        if w not in ck:
            raise ValueError(f"vertex map value {w!r} is not a codomain vertex")
        out[dk[k]] = ck[w]
    return out


def _dec_key(K: Complex, k: str):
    for v in K.vertices:
        if _vkey(v) == k:
            return v
    raise ValueError(f"unknown vertex {k!r}")


def op_from_json(C: Carrier, symbol: str, arity: int, data: dict) -> Operation:
    kind = data.get("kind")
    if kind == "pl":
        M, N = int(data["M"]), int(data["N"])
        _, T = C.power(arity)
        vm = _decode_map(T.level(M), C.tower.level(N), data["vertex_map"])
        return PLOperation(C, arity, M, N, vm, name=symbol)
    if kind == "closed":
        params = dict(data.get("params", {}))
        if isinstance(params.get("point"), dict):
            params["point"] = RealizationPoint.of({_dec_key(C.K, k): q(x) for k, x in params["point"].items()})
        op = cf.build(data["name"], C, **params)
        if op.arity != arity:
            raise ValueError(f"{symbol}: registry op {data['name']} has arity {op.arity}, expected {arity}")
        op.name = symbol
        return op
    raise ValueError(f"{symbol}: unknown operation kind {kind!r}")


def algebra_from_json(data: dict, arities: dict[str, int], base: Path | None = None) -> Algebra:
    """Build an algebra; ``arities`` comes from the theory it will be checked against."""
    C = load_carrier(data["carrier"], data.get("metric"), base)
    ops = {}
    for sym, spec in data["ops"].items():
        if sym not in arities:
            raise ValueError(f"operation {sym!r} is not in the similarity type")
        ops[sym] = op_from_json(C, sym, arities[sym], spec)
    missing = [s for s in arities if s not in ops]
    if missing:
        raise ValueError(f"symbols without operations: {missing}")
    return Algebra(C, ops, data.get("name", ""))


def algebra_to_json(A: Algebra, carrier_ref: Any) -> dict:
    ops = {}
    for s, op in A.ops.items():
        if isinstance(op, PLOperation):
            ops[s] = op.to_json()
        else:
            raise ValueError(f"{s}: only PL operations serialize without a registry id")
    return {"carrier": carrier_ref, "metric": metric_to_json(A.carrier.metric), "ops": ops}


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text())


def rational_arg(text: str) -> mpq:
    """Parse an r/s flag value; floats are rejected."""
    if "." in text or "e" in text.lower():
        raise ValueError(f"rational expected as r/s, got {text!r}")
    return q(text)
