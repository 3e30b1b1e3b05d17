"""Algebras built from other algebras: constants, retractions, conjugates,
products, shuffle powers and derived (interpreted) algebras."""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping, Sequence

from gmpy2 import mpq

from .complex import (Carrier, MetricSpec, RealizationPoint, power_complex, product_complex,
                      random_point)
from .lam import SupInterval, sup_equation
from .plmap import Algebra, ClosedFormOperation, Operation, TermOperation, Value, _eval
from .rational import ONE, ZERO
from .theory import (Apply, Equation, Interpretation, SimilarityType, Theory, Variable,
                     is_syntactically_consistent)


def coordinate_metric(C: Carrier) -> MetricSpec:
    """The carrier's metric as a coordinate/product spec (barycentric -> unit vectors)."""
    if C.metric.kind != "barycentric":
        return C.metric
    return MetricSpec.coordinate({v: C.vertex_vec(v) for v in C.K.vertices})


# ---------------------------------------------------------------- constants


def constant_algebra(C: Carrier, sigma: Theory, center: RealizationPoint) -> Algebra:
    """Every symbol of sigma becomes the constant operation with value ``center``."""
    if not is_syntactically_consistent(sigma):
        raise ValueError("theory contains an equation x_i = x_j with i != j")
    vec = C.embed(center)
    ops = {}
    for name, k in sigma.type.symbols:
        ops[name] = ClosedFormOperation(name, k, C, lambda vs, v=vec: v, ZERO, affine=True,
                                        arg_lipschitz=[ZERO] * k)
    return Algebra(C, ops, "constant")


# ---------------------------------------------------------------- retractions


class TransferOperation(Operation):
    """F^A(a1, ...) = F^B(ψ a1, ...), with B living on a subspace carrier of A."""

    kind = "transfer"

    def __init__(self, inner: Operation, psi: Operation, carrier: Carrier) -> None:
        self.inner = inner
        self.psi = psi
        self.carrier = carrier
        self.arity = inner.arity
        self.name = f"{inner.name}∘ψ"
        self.abs_error = inner.abs_error + inner.lipschitz * psi.abs_error

    @property
    def lipschitz(self) -> mpq:
        return self.inner.lipschitz * self.psi.lipschitz

    @property
    def arg_lipschitz(self):
        a = self.inner.arg_lipschitz
        return None if a is None else tuple(x * self.psi.lipschitz for x in a)

    @property
    def globally_affine(self) -> bool:
        return self.inner.globally_affine and self.psi.globally_affine

    def _to_b(self, v: Value) -> Value:
        return Value(self.inner.carrier, self.psi.apply([v]).vec)

    def apply(self, args):
        out = self.inner.apply([self._to_b(a) for a in args])
        return Value(self.carrier, out.vec)

    def affine_on(self, tuples):
        for i in range(self.arity):
            if not self.psi.affine_on([[t[i]] for t in tuples]):
                return False
        mapped = [[self._to_b(a) for a in t] for t in tuples]
        return self.inner.affine_on(mapped) if mapped and mapped[0] else self.inner.affine_on([()])


@dataclass
class Transfer:
    algebra: Algebra
    K_disp: SupInterval

    def bound(self, source_hi: mpq) -> mpq:
        """hi(transferred) <= hi(source) + K."""
        return source_hi + self.K_disp.hi


def displacement(psi: Operation, tol=mpq(1, 1000)) -> SupInterval:
    """Certified sup of d(a, ψ(a)) over the carrier of ψ."""
    A = Algebra(psi.carrier, {"psi": psi})
    return sup_equation(A, Equation(Apply("psi", (Variable(0),)), Variable(0)), tol)


def check_idempotent(psi: Operation, image: Carrier, samples: int = 200, seed: int = 0,
                     tol=ZERO) -> mpq:
    """Sampled max of d(ψψa, ψa); also checks ψa lies in the image carrier."""
    rng = random.Random(seed)
    C = psi.carrier
    worst = ZERO
    for _ in range(samples):
        a = Value.of(C, random_point(C.K, rng))
        b = psi.apply([a])
        image.point_of(b.vec)  # raises when ψa leaves the subspace
        c = psi.apply([b])
        worst = max(worst, C.dist_bounds(b.vec, c.vec)[1])
    if worst > tol:
        raise ValueError(f"ψ is not idempotent: sampled defect {float(worst):.3g}")
    return worst


def retraction_transfer(B_alg: Algebra, psi: Operation, K_disp: SupInterval | None = None, *,
                        tol=mpq(1, 1000), samples: int = 200, seed: int = 0) -> Transfer:
    """Extend the algebra on the retract to the whole carrier of ψ."""
    C = psi.carrier
    if psi.arity != 1:
        raise ValueError("ψ must be unary")
    check_idempotent(psi, B_alg.carrier, samples, seed)
    if K_disp is None:
        K_disp = displacement(psi, tol)
    ops = {s: TransferOperation(op, psi, C) for s, op in B_alg.ops.items()}
    return Transfer(Algebra(C, ops, f"transfer({B_alg.name})"), K_disp)


# ---------------------------------------------------------------- conjugation


@dataclass(frozen=True)
class PLFunction:
    """Monotone piecewise-linear φ: [0,∞) -> [0,∞) through breakpoints; linear past the last one."""

    points: tuple[tuple[mpq, mpq], ...]

    @classmethod
    def of(cls, pts: Sequence[tuple]) -> "PLFunction":
        ps = tuple((mpq(x), mpq(y)) for x, y in pts)
        if len(ps) < 2 or ps[0][0] != 0:
            raise ValueError("need at least two breakpoints starting at 0")
        for (x0, y0), (x1, y1) in zip(ps, ps[1:]):
            if x1 <= x0 or y1 < y0:
                raise ValueError("breakpoints must be increasing and monotone")
        return cls(ps)

    def __call__(self, x) -> mpq:
        x = mpq(x)
        ps = self.points
        for (x0, y0), (x1, y1) in zip(ps, ps[1:]):
            if x <= x1:
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        (x0, y0), (x1, y1) = ps[-2], ps[-1]
        return y1 + (y1 - y0) * (x - x1) / (x1 - x0)


IDENTITY_MODULUS = PLFunction.of([(0, 0), (1, 1)])


@dataclass
class Conjugated:
    algebra: Algebra
    phi: PLFunction

    def bound(self, source_hi: mpq) -> mpq:
        """Valid for theories whose equations have no variable side."""
        return self.phi(source_hi)


def conjugate(A: Algebra, gamma: Operation, gamma_inv: Operation, phi: PLFunction = IDENTITY_MODULUS,
              *, samples: int = 200, seed: int = 0) -> Conjugated:
    """F'(a1, ...) = γ(F(γ⁻¹ a1, ...)).

    Composites collapse because γ⁻¹∘γ = id, which is checked on samples.
    """
    C = A.carrier
    rng = random.Random(seed)
    for _ in range(samples):
        a = Value.of(C, random_point(C.K, rng))
        back = gamma_inv.apply([gamma.apply([a])])
        if back.vec != a.vec:
            raise ValueError("γ⁻¹∘γ differs from the identity on a sample")
    g, gi = "\x00gamma", "\x00gamma_inv"
    ops = {}
    for s, op in A.ops.items():
        table = {s: op, g: gamma, gi: gamma_inv}
        inner = Apply(s, tuple(Apply(gi, (Variable(i + 1),)) for i in range(op.arity)))
        ops[s] = TermOperation(table, Apply(g, (inner,)), op.arity, name=f"γ{s}γ⁻¹")
    return Conjugated(Algebra(C, ops, f"conj({A.name})"), phi)


# ---------------------------------------------------------------- products


def product_carrier(X: Carrier, Y: Carrier, combine: str = "rho") -> Carrier:
    K, _, _ = product_complex(X.K, Y.K)
    m = MetricSpec.product(coordinate_metric(X), coordinate_metric(Y), combine)
    return Carrier(K, m, f"{X.name}×{Y.name}")


class _FactorOp(Operation):
    """A factor operation acting on one side; the other side is first projection."""

    kind = "product"

    def __init__(self, op: Operation, side: int, carrier: Carrier, split: int, other: Carrier,
                 fill: tuple) -> None:
        self.op = op
        self.side = side
        self.carrier = carrier
        self.split = split
        self.other = other
        self.fill = fill
        self.arity = op.arity
        self.name = op.name
        self.abs_error = op.abs_error

    @property
    def globally_affine(self) -> bool:
        return self.op.globally_affine

    def _part(self, vec, side):
        return vec[:self.split] if side == 0 else vec[self.split:]

    @property
    def lipschitz(self) -> mpq:
        return max(self.op.lipschitz, ONE if self.arity else ZERO)

    @property
    def arg_lipschitz(self):
        a = self.op.arg_lipschitz
        if a is None:
            a = (self.op.lipschitz,) * self.arity
        return tuple(x + (ONE if i == 0 else ZERO) for i, x in enumerate(a))

    def apply(self, args):
        own = self.op.apply([Value(self.op.carrier, self._part(a.vec, self.side)) for a in args]).vec
        rest = self._part(args[0].vec, 1 - self.side) if args else self.fill
        vec = own + rest if self.side == 0 else rest + own
        return Value(self.carrier, tuple(vec))

    def affine_on(self, tuples):
        if not tuples or not tuples[0]:
            return self.op.affine_on([()])
        return self.op.affine_on([[Value(self.op.carrier, self._part(a.vec, self.side)) for a in t]
                                  for t in tuples])


def _pairing(C: Carrier, split: int, p: str) -> ClosedFormOperation:
    return ClosedFormOperation(p, 2, C, lambda vs: tuple(vs[0][:split]) + tuple(vs[1][split:]), ONE,
                               affine=True, arg_lipschitz=[ONE, ONE])


def product_algebra(A: Algebra, B: Algebra, combine: str = "rho", p: str = "p") -> Algebra:
    """Componentwise algebra on |K_A|×|K_B| for the product theory Γ×Δ.

    Γ symbols (those of A) act on the first factor and as first projection
    on the second; Δ symbols the other way round; p̄((a,b),(a',b')) = (a,b').
    Constants fill the foreign factor with its first vertex.
    """
    clash = set(A.ops) & set(B.ops)
    if clash or p in A.ops or p in B.ops:
        raise ValueError(f"symbol clash: {sorted(clash | ({p} & (set(A.ops) | set(B.ops))))}")
    X, Y = A.carrier, B.carrier
    C = product_carrier(X, Y, combine)
    split = X.dim
    fx = X.vertex_vec(X.K.vertices[0])
    fy = Y.vertex_vec(Y.K.vertices[0])
    ops: dict[str, Operation] = {}
    for s, op in A.ops.items():
        ops[s] = _FactorOp(op, 0, C, split, Y, fy)
    for s, op in B.ops.items():
        ops[s] = _FactorOp(op, 1, C, split, X, fx)
    ops[p] = _pairing(C, split, p)
    return Algebra(C, ops, f"{A.name}×{B.name}")


def first_projection_extension(A: Algebra, delta: SimilarityType, p: str = "p") -> Algebra:
    """Δ symbols and p̄ act as first projection (constants go to a vertex)."""
    C = A.carrier
    ops = dict(A.ops)
    v0 = C.vertex_vec(C.K.vertices[0])
    for s, k in list(delta.symbols) + [(p, 2)]:
        if s in ops:
            raise ValueError(f"symbol clash: {s}")
        if k == 0:
            ops[s] = ClosedFormOperation(s, 0, C, lambda vs, v=v0: v, ZERO, affine=True, arg_lipschitz=[])
        else:
            ops[s] = ClosedFormOperation(s, k, C, lambda vs: vs[0], ONE, affine=True,
                                         arg_lipschitz=[ONE] + [ZERO] * (k - 1))
    return Algebra(C, ops, f"{A.name}+π1")


@dataclass
class RaReport:
    max_violation: mpq
    samples: int
    side: str

    def __str__(self) -> str:
        return f"R_a ({self.side}): max violation {float(self.max_violation):.6f} over {self.samples} samples"


def restrict_Ra(A: Algebra, gamma: Theory, a: RealizationPoint, side: str = "left", samples: int = 1000,
                seed: int = 0, p: str = "p") -> RaReport:
    """Sampled satisfaction of Γ on R_a with Ḡ^a(x…) = p̄(Ḡ(x…), a) (left) or p̄(a, Ḡ(x…)) (right)."""
    if side not in ("left", "right"):
        raise ValueError("side must be left or right")
    C = A.carrier
    pbar = A.op(p)
    av = Value.of(C, a)

    def onto(v: Value) -> Value:
        return pbar.apply([v, av] if side == "left" else [av, v])

    ops = {s: _RestrictedOp(A.op(s), onto) for s, _ in gamma.type.symbols}
    rng = random.Random(seed)
    worst = ZERO
    for _ in range(samples):
        for e in gamma.equations:
            env = {v: onto(Value.of(C, random_point(C.K, rng))) for v in _vars(e)}
            x = _eval(ops, e.lhs, env)
            y = _eval(ops, e.rhs, env)
            worst = max(worst, C.dist_bounds(x.vec, y.vec)[1])
    return RaReport(worst, samples, side)


def _vars(e: Equation) -> list[int]:
    from .theory import equation_variables
    return sorted(equation_variables(e))


class _RestrictedOp:
    def __init__(self, op: Operation, onto) -> None:
        self.op = op
        self.onto = onto

    def apply(self, args):
        return self.onto(self.op.apply(args))


# ---------------------------------------------------------------- shuffle powers


class _LiftedOp(Operation):
    """F applied factorwise on K^n."""

    kind = "lifted"

    def __init__(self, op: Operation, carrier: Carrier, n: int, block: int) -> None:
        self.op = op
        self.carrier = carrier
        self.n = n
        self.block = block
        self.arity = op.arity
        self.name = op.name
        self.abs_error = op.abs_error

    @property
    def lipschitz(self) -> mpq:
        return self.op.lipschitz

    @property
    def arg_lipschitz(self):
        return self.op.arg_lipschitz

    @property
    def globally_affine(self) -> bool:
        return self.op.globally_affine

    def _blocks(self, v: Value, j: int) -> Value:
        b = self.block
        return Value(self.op.carrier, tuple(v.vec[j * b:(j + 1) * b]))

    def apply(self, args):
        out: tuple = ()
        for j in range(self.n):
            out += tuple(self.op.apply([self._blocks(a, j) for a in args]).vec)
        return Value(self.carrier, out)

    def affine_on(self, tuples):
        if not tuples or not tuples[0]:
            return self.op.affine_on([()])
        return all(self.op.affine_on([[self._blocks(a, j) for a in t] for t in tuples])
                   for j in range(self.n))


def power_carrier(C: Carrier, n: int, combine: str = "sigma") -> Carrier:
    if n == 1:
        return C
    return Carrier(power_complex(C.K, n), MetricSpec.power(coordinate_metric(C), n, combine),
                   f"{C.name}^{n}")


def shuffle_power_algebra(A: Algebra, n: int) -> Algebra:
    """The Σ^[n] algebra on K^n: d̄ takes the diagonal, ḡ shifts the factors cyclically."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if "d" in A.ops or "g" in A.ops:
        raise ValueError("reserved symbol d or g already assigned")
    C = power_carrier(A.carrier, n)
    b = A.carrier.dim

    def dbar(vs):
        return tuple(x for i in range(n) for x in vs[i][i * b:(i + 1) * b])

    def gbar(vs):
        (v,) = vs
        return tuple(v[b:]) + tuple(v[:b])

    ops: dict[str, Operation] = {s: _LiftedOp(op, C, n, b) for s, op in A.ops.items()} if n > 1 else dict(A.ops)
    ops["d"] = ClosedFormOperation("d", n, C, dbar, ONE, affine=True, arg_lipschitz=[ONE] * n)
    ops["g"] = ClosedFormOperation("g", 1, C, gbar, ONE, affine=True, arg_lipschitz=[ONE])
    return Algebra(C, ops, f"{A.name}^[{n}]")


# ---------------------------------------------------------------- interpretations


def derived_algebra(A: Algebra, interp: Interpretation) -> Algebra:
    """A′ with F_t^{A′} = α_t^A for every source symbol t."""
    ops = {}
    for name, k in interp.source.symbols:
        t = interp.term_for(name)
        if k == 0 and isinstance(t, Variable):
            raise ValueError(f"constant {name} interpreted by a variable")
        if isinstance(t, Variable):
            i = t.index - 1
            ops[name] = ClosedFormOperation(name, k, A.carrier, lambda vs, i=i: vs[i], ONE, affine=True,
                                            arg_lipschitz=[ONE if j == i else ZERO for j in range(k)])
        else:
            ops[name] = TermOperation(A.ops, t, k, name=name)
    return Algebra(A.carrier, ops, f"{A.name}′")


def perturbed(A: Algebra, changes: Mapping[str, Operation]) -> Algebra:
    return A.with_ops(changes, f"{A.name}~")
