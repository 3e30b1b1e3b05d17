"""Terms, equations and finite equational theories.

The DSL looks like::

    # H-space
    F:2; e:0;
    F(e,x1) = x1;
    F(x1,e) = x1;

Variables are spelled ``x<NAT>``; constants may be written bare.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, Union


# ---------------------------------------------------------------- terms


@dataclass(frozen=True, order=True)
class Variable:
    index: int

    def __str__(self) -> str:
        return f"x{self.index}"


@dataclass(frozen=True, order=True)
class Apply:
    symbol: str
    args: tuple["Term", ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.symbol
        return f"{self.symbol}({','.join(str(a) for a in self.args)})"


Term = Union[Variable, Apply]


def var(i: int) -> Variable:
    return Variable(i)


def app(symbol: str, *args: Term) -> Apply:
    return Apply(symbol, tuple(args))


@dataclass(frozen=True)
class Equation:
    lhs: Term
    rhs: Term

    def __str__(self) -> str:
        return f"{self.lhs} = {self.rhs}"

    def swapped(self) -> "Equation":
        return Equation(self.rhs, self.lhs)


@dataclass(frozen=True)
class SimilarityType:
    symbols: tuple[tuple[str, int], ...] = ()

    def __post_init__(self) -> None:
        names = [n for n, _ in self.symbols]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate symbol names in {names}")
        for n, a in self.symbols:
            if a < 0:
                raise ValueError(f"negative arity for {n}")

    def arity(self, name: str) -> int:
        for n, a in self.symbols:
            if n == name:
                return a
        raise KeyError(name)

    def __contains__(self, name: object) -> bool:
        return any(n == name for n, _ in self.symbols)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.symbols)

    def extend(self, extra: Iterable[tuple[str, int]]) -> "SimilarityType":
        return SimilarityType(self.symbols + tuple(extra))


@dataclass(frozen=True)
class Theory:
    type: SimilarityType = field(default_factory=SimilarityType)
    equations: tuple[Equation, ...] = ()

    def __post_init__(self) -> None:
        for eq in self.equations:
            for side in (eq.lhs, eq.rhs):
                check_term(side, self.type)

    def __len__(self) -> int:
        return len(self.equations)

    def __str__(self) -> str:
        return format_theory(self)


@dataclass(frozen=True)
class Interpretation:
    """Assignment of a target-type term to every source symbol.

    The term assigned to an n-ary symbol uses only x1..xn.
    """

    source: SimilarityType
    target: SimilarityType
    assignment: tuple[tuple[str, Term], ...]

    def __post_init__(self) -> None:
        for name, t in self.assignment:
            n = self.source.arity(name)
            check_term(t, self.target)
            bad = [v for v in variables(t) if not 1 <= v <= n]
            if bad:
                raise ValueError(
                    f"term for {name} (arity {n}) uses variables {bad}; only x1..x{n} allowed")

    @classmethod
    def from_dict(cls, source: SimilarityType, target: SimilarityType,
                  assignment: Mapping[str, Term]) -> "Interpretation":
        return cls(source, target, tuple(assignment.items()))

    def term_for(self, name: str) -> Term:
        for n, t in self.assignment:
            if n == name:
                return t
        raise KeyError(f"symbol {name!r} has no interpreting term")


# ---------------------------------------------------------------- basics


def check_term(t: Term, stype: SimilarityType) -> None:
    if isinstance(t, Variable):
        if t.index < 0:
            raise ValueError("negative variable index")
        return
    if t.symbol not in stype:
        raise ValueError(f"undeclared symbol {t.symbol!r}")
    if stype.arity(t.symbol) != len(t.args):
        raise ValueError(
            f"arity mismatch: {t.symbol} declared {stype.arity(t.symbol)}, used with {len(t.args)}")
    for a in t.args:
        check_term(a, stype)


def term_depth(t: Term) -> int:
    if isinstance(t, Variable):
        return 0
    return 1 + max((term_depth(a) for a in t.args), default=0)


def term_size(t: Term) -> int:
    if isinstance(t, Variable):
        return 1
    return 1 + sum(term_size(a) for a in t.args)


def variables(t: Term) -> list[int]:
    """Distinct variable indices in order of first occurrence."""
    seen: dict[int, None] = {}

    def walk(u: Term) -> None:
        if isinstance(u, Variable):
            seen.setdefault(u.index, None)
        else:
            for a in u.args:
                walk(a)

    walk(t)
    return list(seen)


def equation_variables(e: Equation) -> list[int]:
    out = variables(e.lhs)
    out += [v for v in variables(e.rhs) if v not in out]
    return out


def symbols_of(t: Term) -> set[str]:
    if isinstance(t, Variable):
        return set()
    out = {t.symbol}
    for a in t.args:
        out |= symbols_of(a)
    return out


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, Apply):
        for a in t.args:
            yield from subterms(a)


def substitute(t: Term, mapping: Mapping[int, Term]) -> Term:
    """Simultaneous substitution of variables; unmapped variables stay."""
    if isinstance(t, Variable):
        return mapping.get(t.index, t)
    return Apply(t.symbol, tuple(substitute(a, mapping) for a in t.args))


def rename_canonical(e: Equation) -> Equation:
    order = equation_variables(e)
    m = {v: Variable(i) for i, v in enumerate(order)}
    return Equation(substitute(e.lhs, m), substitute(e.rhs, m))


# ---------------------------------------------------------------- DSL


class TheoryParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int) -> None:
        super().__init__(f"{msg} at line {line}, column {col}")
        self.line = line
        self.col = col


_TOKEN = re.compile(r"\s+|#[^\n]*|(?P<nat>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_.]*)|(?P<punct>[:;(),=])")
_VAR = re.compile(r"x(\d+)$")


def _tokenize(text: str) -> list[tuple[str, str, int, int]]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise TheoryParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind is not None:
            toks.append((kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    toks.append(("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str) -> None:
        self.toks = _tokenize(text)
        self.i = 0
        self.decls: list[tuple[str, int]] = []
        self.eqs: list[Equation] = []

    def peek(self, k: int = 0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def take(self, kind: str, value: str | None = None):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value or kind
            raise TheoryParseError(f"expected {want!r}, found {tok[1] or 'end of input'!r}", tok[2], tok[3])
        self.i += 1
        return tok

    def arity(self, name: str, tok) -> int:
        for n, a in self.decls:
            if n == name:
                return a
        raise TheoryParseError(f"undeclared symbol {name!r}", tok[2], tok[3])

    def parse(self) -> Theory:
        # declarations come first: IDENT ':' NAT ';'
        while self.peek()[0] == "ident" and self.peek(1)[1] == ":":
            name_tok = self.take("ident")
            self.take("punct", ":")
            nat = self.take("nat")
            self.take("punct", ";")
            name = name_tok[1]
            if _VAR.match(name):
                raise TheoryParseError(f"symbol name {name!r} clashes with variable syntax", name_tok[2], name_tok[3])
            if any(n == name for n, _ in self.decls):
                raise TheoryParseError(f"duplicate declaration of {name!r}", name_tok[2], name_tok[3])
            self.decls.append((name, int(nat[1])))
        while self.peek()[0] != "eof":
            lhs = self.term()
            self.take("punct", "=")
            rhs = self.term()
            self.take("punct", ";")
            self.eqs.append(Equation(lhs, rhs))
        return Theory(SimilarityType(tuple(self.decls)), tuple(self.eqs))

    def term(self) -> Term:
        tok = self.take("ident")
        name = tok[1]
        vm = _VAR.match(name)
        if vm and self.peek()[1] != "(":
            return Variable(int(vm.group(1)))
        n = self.arity(name, tok)
        args: list[Term] = []
        if self.peek()[1] == "(":
            self.take("punct", "(")
            if self.peek()[1] != ")":
                args.append(self.term())
                while self.peek()[1] == ",":
                    self.take("punct", ",")
                    args.append(self.term())
            self.take("punct", ")")
        if len(args) != n:
            raise TheoryParseError(f"arity mismatch: {name} declared {n}, used with {len(args)}", tok[2], tok[3])
        return Apply(name, tuple(args))


def parse_theory(text: str) -> Theory:
    return _Parser(text).parse()


def parse_term(text: str, stype: SimilarityType) -> Term:
    p = _Parser(text)
    p.decls = list(stype.symbols)
    t = p.term()
    p.take("eof")
    return t


def format_theory(th: Theory) -> str:
    lines = []
    if th.type.symbols:
        lines.append(" ".join(f"{n}:{a};" for n, a in th.type.symbols))
    lines += [f"{eq};" for eq in th.equations]
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------- interpretation


def star_transform(t: Term, interp: Interpretation) -> Term:
    if isinstance(t, Variable):
        return t
    alpha = interp.term_for(t.symbol)
    args = [star_transform(a, interp) for a in t.args]
    return substitute(alpha, {i + 1: a for i, a in enumerate(args)})


def identity_interpretation(stype: SimilarityType) -> Interpretation:
    return Interpretation(
        stype, stype,
        tuple((n, Apply(n, tuple(Variable(i + 1) for i in range(a)))) for n, a in stype.symbols))


def _member(e: Equation, canon: set[Equation]) -> bool:
    return rename_canonical(e) in canon or rename_canonical(e.swapped()) in canon


def check_interpretation(gamma: Theory, interp: Interpretation, sigma: Theory) -> bool:
    """True iff every translated equation of ``gamma`` occurs in ``sigma``.

    Occurrence is syntactic, up to a consistent renaming of variables and
    up to the orientation of the equation.
    """
    canon = {rename_canonical(e) for e in sigma.equations}
    for e in gamma.equations:
        translated = Equation(star_transform(e.lhs, interp), star_transform(e.rhs, interp))
        if not _member(translated, canon):
            return False
    return True


# ---------------------------------------------------------------- products and powers


def _generic(name: str, n: int, offset: int = 1) -> Apply:
    return Apply(name, tuple(Variable(offset + i) for i in range(n)))


def _tau_r(t: Term, p: str, y: Term) -> Term:
    if isinstance(t, Variable):
        return Apply(p, (t, y))
    return Apply(p, (Apply(t.symbol, tuple(_tau_r(a, p, y) for a in t.args)), y))


def _tau_l(t: Term, p: str, y: Term) -> Term:
    if isinstance(t, Variable):
        return Apply(p, (y, t))
    return Apply(p, (y, Apply(t.symbol, tuple(_tau_l(a, p, y) for a in t.args))))


def product_theory(gamma: Theory, delta: Theory, p: str = "p") -> Theory:
    """The augmented product Γ×Δ with pairing symbol ``p``.

    Schemes ranging over all terms are instantiated only at the
    non-variable sides that actually occur in the augmented Γ ∪ Δ.
    """
    g_names, d_names = set(gamma.type.names), set(delta.type.names)
    clash = g_names & d_names
    if clash:
        raise ValueError(f"symbol-name collision: {sorted(clash)}")
    if p in g_names or p in d_names:
        raise ValueError(f"pairing symbol {p!r} already used")

    joint = SimilarityType(gamma.type.symbols + delta.type.symbols + ((p, 2),))
    # augmentation: foreign symbols act as first projection
    aug_gamma = list(gamma.equations) + [
        Equation(_generic(n, a), Variable(1)) for n, a in delta.type.symbols if a >= 1]
    aug_delta = list(delta.equations) + [
        Equation(_generic(n, a), Variable(1)) for n, a in gamma.type.symbols if a >= 1]

    y = Variable(0)
    x1, x2, x3, x4 = (Variable(i) for i in range(1, 5))
    out: list[Equation] = [
        Equation(Apply(p, (x1, x1)), x1),
        Equation(Apply(p, (Apply(p, (x1, x2)), Apply(p, (x3, x4)))), Apply(p, (x1, x4))),
    ]
    # τ^R / τ^L: one variable instance, then one generic instance per symbol
    for tau in [x1] + [_generic(n, a) for n, a in gamma.type.symbols + delta.type.symbols]:
        out.append(Equation(_tau_r(tau, p, y), Apply(p, (tau, y))))
        out.append(Equation(_tau_l(tau, p, y), Apply(p, (y, tau))))
    # distribution over occurring non-variable sides
    seen: list[Term] = []
    for e in aug_gamma + aug_delta:
        for side in (e.lhs, e.rhs):
            if isinstance(side, Apply) and side not in seen:
                seen.append(side)
    for tau in seen:
        vs = sorted(variables(tau))
        shift = (max(vs) + 1) if vs else 1
        ys = {v: Variable(v + shift) for v in vs}
        lhs = substitute(tau, {v: Apply(p, (Variable(v), ys[v])) for v in vs})
        out.append(Equation(lhs, Apply(p, (tau, substitute(tau, ys)))))
    for e in aug_gamma:
        fresh = Variable(max(equation_variables(e), default=-1) + 1)
        out.append(Equation(Apply(p, (e.lhs, fresh)), Apply(p, (e.rhs, fresh))))
    for e in aug_delta:
        fresh = Variable(max(equation_variables(e), default=-1) + 1)
        out.append(Equation(Apply(p, (fresh, e.lhs)), Apply(p, (fresh, e.rhs))))
    return Theory(joint, tuple(out))


def power_theory(sigma: Theory, n: int) -> Theory:
    """Σ^[n] with the shuffle symbols d (arity n) and g (unary)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if "d" in sigma.type or "g" in sigma.type:
        raise ValueError("reserved symbol: the input theory may not use d or g")
    stype = sigma.type.extend([("d", n), ("g", 1)])
    x = Variable(0)

    def g(t: Term) -> Term:
        return Apply("g", (t,))

    def d(ts: Sequence[Term]) -> Term:
        return Apply("d", tuple(ts))

    def xij(i: int, j: int) -> Variable:
        return Variable((i - 1) * n + j)

    gn: Term = x
    for _ in range(n):
        gn = g(gn)
    xs = [Variable(i) for i in range(1, n + 1)]
    out = list(sigma.equations)
    out.append(Equation(gn, x))
    out.append(Equation(d([x] * n), x))
    out.append(Equation(d([g(v) for v in xs]), g(d(xs[1:] + xs[:1]))))
    out.append(Equation(d([d([xij(i, j) for j in range(1, n + 1)]) for i in range(1, n + 1)]),
                        d([xij(i, i) for i in range(1, n + 1)])))
    for name, k in sigma.type.symbols:
        ys = [Variable(i) for i in range(1, k + 1)]
        out.append(Equation(Apply(name, tuple(g(v) for v in ys)), g(Apply(name, tuple(ys)))))
        kx = lambda i, j: Variable((i - 1) * n + j)  # noqa: E731  x_{ij} for i<=k, j<=n
        lhs = Apply(name, tuple(d([kx(i, j) for j in range(1, n + 1)]) for i in range(1, k + 1)))
        rhs = d([Apply(name, tuple(kx(i, j) for i in range(1, k + 1))) for j in range(1, n + 1)])
        out.append(Equation(lhs, rhs))
    return Theory(stype, tuple(out))


# ---------------------------------------------------------------- syntactic checks


def is_syntactically_consistent(sigma: Theory) -> bool:
    for e in sigma.equations:
        if isinstance(e.lhs, Variable) and isinstance(e.rhs, Variable) and e.lhs != e.rhs:
            return False
    return True


def _reduce_trite(t: Term, choice: Mapping[str, int]):
    # choice[F] = i >= 0 selects projection onto argument i, -1 means constant tag
    while isinstance(t, Apply):
        c = choice[t.symbol]
        if c < 0:
            return ("tag", t.symbol)
        t = t.args[c]
    return ("var", t.index)


def _trite_choices(stype: SimilarityType) -> Iterator[dict[str, int]]:
    names = [n for n, _ in stype.symbols]
    ranges = [list(range(a)) + [-1] for _, a in stype.symbols]
    for combo in itertools.product(*ranges):
        yield dict(zip(names, combo))


def is_undemanding(sigma: Theory) -> bool:
    """Exact test for a trite model with more than one element."""
    for choice in _trite_choices(sigma.type):
        parent: dict[str, str] = {}

        def find(a: str) -> str:
            while parent.get(a, a) != a:
                a = parent[a]
            return a

        ok = True
        for e in sigma.equations:
            left, right = _reduce_trite(e.lhs, choice), _reduce_trite(e.rhs, choice)
            if left[0] == "var" and right[0] == "var":
                ok = left[1] == right[1]
            elif left[0] == "tag" and right[0] == "tag":
                a, b = find(left[1]), find(right[1])
                if a != b:
                    parent[a] = b
            else:
                ok = False
            if not ok:
                break
        if ok:
            return True
    return False


@dataclass(frozen=True)
class AbelianResult:
    found: bool
    witness: tuple[tuple[str, tuple[int, ...]], ...] = ()

    def __bool__(self) -> bool:
        return self.found

    def __str__(self) -> str:
        if not self.found:
            return "NO_WITHIN_BOUND"
        parts = [f"{n}={list(c)}" for n, c in self.witness]
        return "YES " + " ".join(parts)


def _coefficient_order(bound: int) -> list[int]:
    # 1 first so that witnesses read naturally, then 0, then the rest by size
    vals = [1, 0, -1]
    for k in range(2, bound + 1):
        vals += [k, -k]
    return [v for v in vals if abs(v) <= bound]


def _linear_form(t: Term, coeffs: Mapping[str, tuple[int, ...]]) -> tuple[dict[int, int], int]:
    if isinstance(t, Variable):
        return {t.index: 1}, 0
    c = coeffs[t.symbol]
    if not t.args:
        return {}, c[0]
    form: dict[int, int] = {}
    const = 0
    for m, a in zip(c, t.args):
        f, k = _linear_form(a, coeffs)
        for v, w in f.items():
            form[v] = form.get(v, 0) + m * w
        const += m * k
    return {v: w for v, w in form.items() if w}, const


def is_abelian_bounded(sigma: Theory, bound: int) -> AbelianResult:
    """Search integer linear models F(x..) = Σ m_i x_i with |m_i| <= bound.

    Constant symbols get an integer value in the same range.
    """
    order = _coefficient_order(bound)
    names = [n for n, _ in sigma.type.symbols]
    per_symbol = [list(itertools.product(order, repeat=max(a, 1))) for _, a in sigma.type.symbols]
    for combo in itertools.product(*per_symbol):
        coeffs = dict(zip(names, combo))
        if all(_linear_form(e.lhs, coeffs) == _linear_form(e.rhs, coeffs) for e in sigma.equations):
            return AbelianResult(True, tuple(zip(names, combo)))
    return AbelianResult(False)


def theory_union(a: Theory, b: Theory) -> Theory:
    """Concatenate two theories over compatible types."""
    symbols = list(a.type.symbols)
    for n, k in b.type.symbols:
        if n in a.type:
            if a.type.arity(n) != k:
                raise ValueError(f"arity conflict for {n}")
        else:
            symbols.append((n, k))
    return Theory(SimilarityType(tuple(symbols)), a.equations + b.equations)


def dual(t: Term, swap: Mapping[str, str]) -> Term:
    if isinstance(t, Variable):
        return t
    return Apply(swap.get(t.symbol, t.symbol), tuple(dual(a, swap) for a in t.args))


def commutative_variants(t: Term, symbols: set[str]) -> list[Term]:
    """All terms obtained by flipping arguments of the given binary symbols."""
    if isinstance(t, Variable):
        return [t]
    arg_variants = [commutative_variants(a, symbols) for a in t.args]
    out = []
    for combo in itertools.product(*arg_variants):
        out.append(Apply(t.symbol, combo))
        if t.symbol in symbols and len(combo) == 2:
            out.append(Apply(t.symbol, (combo[1], combo[0])))
    uniq: list[Term] = []
    for u in out:
        if u not in uniq:
            uniq.append(u)
    return uniq
