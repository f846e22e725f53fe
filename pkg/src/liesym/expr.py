"""Exact symbolic kernel: canonical normal forms over jet variables.

The expression domain is deliberately small.  An expression is a finite sum of
monomials; a monomial is a product of generator powers and the coefficient is
a reduced rational function in the declared parameter symbols, with exact
rational constants throughout (no floating point anywhere).  Generators are

  * symbols (independent, dependent, group-parameter, reduction-variable),
  * jet variables u_{x^i t^j} of a dependent symbol,
  * exponential atoms exp(q*s) of a group parameter, with the defining
    rewrite exp(q1*s)*exp(q2*s) = exp((q1+q2)*s) built into the monomial,
  * unknown-function atoms f(args) carrying a formal partial-derivative
    multi-index (used by the nonclassical determining systems).

Fractional powers are admitted only on independent/reduction symbols and on
exponential atoms.  Parameter symbols never enter monomials: they live in the
coefficient field, so that exact division by polynomials in the parameters is
total.  Normal forms are canonical: equal expressions have identical term
maps, zero is the empty sum, and printing then reparsing is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

__all__ = [
    "ExprError",
    "EvalError",
    "Symbol",
    "JetVar",
    "ExpAtom",
    "FuncAtom",
    "Monomial",
    "PPoly",
    "PFrac",
    "Expr",
    "jet",
    "normalize",
    "to_rational",
]

KINDS = ("independent", "dependent", "parameter", "group", "reduction")


class ExprError(ValueError):
    """Raised when an operation would leave the expression domain."""


class EvalError(ValueError):
    """Raised when exact evaluation at a point is impossible."""


def to_rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise ExprError(f"not an exact rational: {x!r}")


@dataclass(frozen=True)
class Symbol:
    """A named symbol.  `pos` fixes the ordering among symbols of one kind.

    Dependent symbols carry the tuple of variables they depend on in `deps`;
    jet variables of that symbol may only use those directions.
    """

    name: str
    kind: str = "independent"
    nonzero: bool = False
    pos: int = 0
    deps: tuple["Symbol", ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ExprError(f"unknown symbol kind {self.kind!r}")

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class JetVar:
    """A derivative coordinate u_{d1^k1 d2^k2 ...} of a dependent symbol."""

    dep: Symbol
    orders: tuple[tuple[Symbol, int], ...]

    def __post_init__(self):
        if self.dep.kind != "dependent":
            raise ExprError(f"jet of non-dependent symbol {self.dep}")
        if not self.orders:
            raise ExprError("jet variable needs at least one derivative")
        for d, k in self.orders:
            if d not in self.dep.deps:
                raise ExprError(f"{self.dep} does not depend on {d}")
            if k < 1:
                raise ExprError("jet orders must be positive")

    @property
    def total_order(self) -> int:
        return sum(k for _, k in self.orders)

    def order_in(self, d: Symbol) -> int:
        for s, k in self.orders:
            if s == d:
                return k
        return 0

    def bump(self, d: Symbol) -> "JetVar":
        return jet(self.dep, {**dict(self.orders), d: self.order_in(d) + 1})

    def __repr__(self):
        return _gen_str(self)


def jet(dep: Symbol, orders) -> JetVar | Symbol:
    """Build the jet variable of `dep` with the given {direction: count} map.

    An all-zero map yields the dependent symbol itself.
    """
    if not isinstance(orders, dict):
        counts: dict[Symbol, int] = {}
        for d in orders:
            counts[d] = counts.get(d, 0) + 1
        orders = counts
    items = tuple(
        (d, k)
        for d, k in sorted(orders.items(), key=lambda dk: (dk[0].pos, dk[0].name))
        if k != 0
    )
    if not items:
        return dep
    return JetVar(dep, items)


@dataclass(frozen=True)
class ExpAtom:
    """The atom exp(s) of a group parameter; powers carry the rational q."""

    arg: Symbol

    def __post_init__(self):
        if self.arg.kind != "group":
            raise ExprError(f"exp atom argument must be a group parameter, got {self.arg}")

    def __repr__(self):
        return f"exp({self.arg.name})"


@dataclass(frozen=True)
class FuncAtom:
    """An unknown function of symbol arguments with formal partial derivatives."""

    name: str
    args: tuple[Symbol, ...]
    derivs: tuple[int, ...]

    def __post_init__(self):
        if len(self.args) != len(self.derivs):
            raise ExprError("derivative multi-index does not match argument list")
        if any(k < 0 for k in self.derivs):
            raise ExprError("negative derivative order")

    @property
    def base(self) -> "FuncAtom":
        return FuncAtom(self.name, self.args, (0,) * len(self.args))

    def bump(self, arg: Symbol) -> "FuncAtom":
        i = self.args.index(arg)
        d = list(self.derivs)
        d[i] += 1
        return FuncAtom(self.name, self.args, tuple(d))

    def __repr__(self):
        return _gen_str(self)


Gen = object  # Symbol | JetVar | ExpAtom | FuncAtom


def gen_key(g) -> tuple:
    """Deterministic sort key; smaller key = higher priority in the term order."""
    if isinstance(g, JetVar):
        dirs = g.dep.deps
        counts = tuple(-g.order_in(d) for d in dirs)
        return (0, -g.total_order, counts, g.dep.pos, g.dep.name)
    if isinstance(g, FuncAtom):
        return (1, g.name, tuple(-k for k in g.derivs))
    if isinstance(g, Symbol):
        if g.kind == "dependent":
            return (2, g.pos, g.name)
        if g.kind in ("independent", "reduction"):
            return (3, g.pos, g.name)
        if g.kind == "group":
            return (4, g.pos, g.name)
        raise ExprError(f"parameter symbol {g} cannot enter a monomial")
    if isinstance(g, ExpAtom):
        return (5, g.arg.pos, g.arg.name)
    raise ExprError(f"not a generator: {g!r}")


def _validate_power(g, q: Fraction) -> None:
    if q == 0:
        raise ExprError("zero exponent should have been dropped")
    integral = q.denominator == 1
    if isinstance(g, JetVar):
        if not integral or q < 0:
            raise ExprError(f"jet variable power {g}^{q} not representable")
    elif isinstance(g, FuncAtom):
        if not integral or q < 0:
            raise ExprError(f"function atom power {g}^{q} not representable")
    elif isinstance(g, Symbol):
        if g.kind == "dependent" and (not integral or q < 0):
            raise ExprError(f"dependent symbol power {g}^{q} not representable")
        if g.kind == "group" and (not integral or q < 0):
            raise ExprError(f"group parameter power {g}^{q} not representable")
        # independent/reduction symbols admit arbitrary rational powers
    elif isinstance(g, ExpAtom):
        pass
    else:
        raise ExprError(f"not a generator: {g!r}")


class Monomial:
    """An ordered product of generator powers.  Immutable and hashable."""

    __slots__ = ("gens", "_hash")

    def __init__(self, gens: tuple):
        self.gens = gens
        self._hash = hash(gens)

    @staticmethod
    def make(powers: Mapping) -> "Monomial":
        items = []
        for g, q in powers.items():
            q = to_rational(q)
            if q == 0:
                continue
            _validate_power(g, q)
            items.append((g, q))
        items.sort(key=lambda gq: gen_key(gq[0]))
        return Monomial(tuple(items))

    @staticmethod
    def one() -> "Monomial":
        return _MONO_ONE

    def degree(self) -> Fraction:
        return sum((q for _, q in self.gens), start=Fraction(0))

    def powers(self) -> dict:
        return dict(self.gens)

    def exponent(self, g) -> Fraction:
        for h, q in self.gens:
            if h == g:
                return q
        return Fraction(0)

    def mul(self, other: "Monomial") -> "Monomial":
        merged = dict(self.gens)
        for g, q in other.gens:
            nq = merged.get(g, Fraction(0)) + q
            if nq == 0:
                merged.pop(g, None)
            else:
                merged[g] = nq
        return Monomial.make(merged)

    def div(self, other: "Monomial") -> "Monomial":
        merged = dict(self.gens)
        for g, q in other.gens:
            nq = merged.get(g, Fraction(0)) - q
            if nq == 0:
                merged.pop(g, None)
            else:
                merged[g] = nq
        return Monomial.make(merged)

    def pow(self, q: Fraction) -> "Monomial":
        q = to_rational(q)
        if q == 0:
            return _MONO_ONE
        return Monomial.make({g: e * q for g, e in self.gens})

    def divides(self, other: "Monomial") -> bool:
        mine = dict(self.gens)
        for g, q in mine.items():
            if other.exponent(g) < q:
                return False
        return True

    def __eq__(self, other):
        return isinstance(other, Monomial) and self.gens == other.gens

    def __hash__(self):
        return self._hash

    def __lt__(self, other: "Monomial"):
        # graded lexicographic: total degree first, then the exponent of the
        # highest-priority generator where the monomials differ.
        da, db = self.degree(), other.degree()
        if da != db:
            return da < db
        i = j = 0
        a, b = self.gens, other.gens
        while i < len(a) or j < len(b):
            ka = gen_key(a[i][0]) if i < len(a) else None
            kb = gen_key(b[j][0]) if j < len(b) else None
            if kb is None or (ka is not None and ka < kb):
                ea, eb = a[i][1], Fraction(0)
                i += 1
            elif ka is None or kb < ka:
                ea, eb = Fraction(0), b[j][1]
                j += 1
            else:
                ea, eb = a[i][1], b[j][1]
                i += 1
                j += 1
            if ea != eb:
                return ea < eb
        return False

    def __le__(self, other):
        return self == other or self < other

    def __gt__(self, other):
        return other < self

    def __ge__(self, other):
        return self == other or other < self

    def __repr__(self):
        if not self.gens:
            return "1"
        return "*".join(_power_str(g, q) for g, q in self.gens)


_MONO_ONE = Monomial(())


# --------------------------------------------------------------------------
# Parameter polynomials and the coefficient field of rational functions.


def _psort_key(s: Symbol):
    return (s.pos, s.name)


def _pmono_cmp_key(m: tuple) -> tuple:
    # graded, then exponents along the symbol order; big first when reversed.
    return (sum(k for _, k in m), tuple((-_cmp_rank(s), k) for s, k in m))


_PRANK: dict[Symbol, int] = {}


def _cmp_rank(s: Symbol) -> int:
    # Dense integer rank for parameter symbols, assigned on first use; makes
    # pmono keys totally ordered without comparing Symbol objects directly.
    r = _PRANK.get(s)
    if r is None:
        r = len(_PRANK)
        _PRANK[s] = r
    return r


def _pmono_lt(a: tuple, b: tuple) -> bool:
    da, db = sum(k for _, k in a), sum(k for _, k in b)
    if da != db:
        return da < db
    i = j = 0
    while i < len(a) or j < len(b):
        ka = _psort_key(a[i][0]) if i < len(a) else None
        kb = _psort_key(b[j][0]) if j < len(b) else None
        if kb is None or (ka is not None and ka < kb):
            ea, eb = a[i][1], 0
            i += 1
        elif ka is None or kb < ka:
            ea, eb = 0, b[j][1]
            j += 1
        else:
            ea, eb = a[i][1], b[j][1]
            i += 1
            j += 1
        if ea != eb:
            return ea < eb
    return False


class PPoly:
    """Polynomial in parameter symbols over the rationals."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict):
        self.terms = {m: c for m, c in terms.items() if c != 0}

    @staticmethod
    def const(c) -> "PPoly":
        c = to_rational(c)
        return PPoly({(): c} if c else {})

    @staticmethod
    def sym(s: Symbol) -> "PPoly":
        if s.kind != "parameter":
            raise ExprError(f"{s} is not a parameter symbol")
        return PPoly({((s, 1),): Fraction(1)})

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return all(m == () for m in self.terms)

    def const_value(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        if not self.is_const():
            raise ExprError("not a constant")
        return self.terms[()]

    def symbols(self) -> set:
        out = set()
        for m in self.terms:
            for s, _ in m:
                out.add(s)
        return out

    def add(self, other: "PPoly") -> "PPoly":
        out = dict(self.terms)
        for m, c in other.terms.items():
            nc = out.get(m, Fraction(0)) + c
            if nc == 0:
                out.pop(m, None)
            else:
                out[m] = nc
        return PPoly(out)

    def neg(self) -> "PPoly":
        return PPoly({m: -c for m, c in self.terms.items()})

    def sub(self, other: "PPoly") -> "PPoly":
        return self.add(other.neg())

    def mul(self, other: "PPoly") -> "PPoly":
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _pmono_mul(m1, m2)
                nc = out.get(m, Fraction(0)) + c1 * c2
                if nc == 0:
                    out.pop(m, None)
                else:
                    out[m] = nc
        return PPoly(out)

    def scale(self, c: Fraction) -> "PPoly":
        if c == 0:
            return PPoly({})
        return PPoly({m: v * c for m, v in self.terms.items()})

    def leading(self) -> tuple:
        m = max(self.terms, key=lambda mm: _PmonoKey(mm))
        return m, self.terms[m]

    def eval(self, point: Mapping[Symbol, Fraction]) -> Fraction:
        total = Fraction(0)
        for m, c in self.terms.items():
            v = c
            for s, k in m:
                if s not in point:
                    raise EvalError(f"no value supplied for parameter {s}")
                v *= Fraction(point[s]) ** k
            total += v
        return total

    def deriv(self, s: Symbol) -> "PPoly":
        out: dict = {}
        for m, c in self.terms.items():
            d = dict(m)
            k = d.get(s, 0)
            if not k:
                continue
            if k == 1:
                d.pop(s)
            else:
                d[s] = k - 1
            mm = tuple(sorted(d.items(), key=lambda sk: _psort_key(sk[0])))
            out[mm] = out.get(mm, Fraction(0)) + c * k
        return PPoly(out)

    def subst(self, s: Symbol, val: "PPoly") -> "PPoly":
        out = PPoly({})
        for m, c in self.terms.items():
            term = PPoly.const(c)
            for sym, k in m:
                base = val if sym == s else PPoly.sym(sym)
                for _ in range(k):
                    term = term.mul(base)
            out = out.add(term)
        return out

    def __eq__(self, other):
        return isinstance(other, PPoly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        return _ppoly_str(self)


class _PmonoKey:
    __slots__ = ("m",)

    def __init__(self, m):
        self.m = m

    def __lt__(self, other):
        return _pmono_lt(self.m, other.m)

    def __eq__(self, other):
        return self.m == other.m


def _pmono_mul(a: tuple, b: tuple) -> tuple:
    d = dict(a)
    for s, k in b:
        d[s] = d.get(s, 0) + k
    return tuple(sorted(((s, k) for s, k in d.items() if k), key=lambda sk: _psort_key(sk[0])))


def _ppoly_divmod_exact(f: PPoly, g: PPoly) -> PPoly | None:
    """Exact quotient f/g in the polynomial ring, or None."""
    if g.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    q: dict = {}
    rem = f
    gm, gc = g.leading()
    gmd = dict(gm)
    while not rem.is_zero():
        rm, rc = rem.leading()
        rd = dict(rm)
        # divide leading monomials
        qd = dict(rd)
        ok = True
        for s, k in gmd.items():
            nk = qd.get(s, 0) - k
            if nk < 0:
                ok = False
                break
            if nk == 0:
                qd.pop(s, None)
            else:
                qd[s] = nk
        if not ok:
            return None
        qm = tuple(sorted(qd.items(), key=lambda sk: _psort_key(sk[0])))
        qc = rc / gc
        q[qm] = q.get(qm, Fraction(0)) + qc
        rem = rem.sub(PPoly({qm: qc}).mul(g))
    return PPoly(q)


def _ppoly_as_univar(f: PPoly, v: Symbol) -> list[PPoly]:
    """Coefficients of f as a polynomial in v, index = degree."""
    deg = 0
    for m in f.terms:
        deg = max(deg, dict(m).get(v, 0))
    coeffs = [PPoly({}) for _ in range(deg + 1)]
    for m, c in f.terms.items():
        d = dict(m)
        k = d.pop(v, 0)
        mm = tuple(sorted(d.items(), key=lambda sk: _psort_key(sk[0])))
        coeffs[k] = coeffs[k].add(PPoly({mm: c}))
    return coeffs


def _ppoly_from_univar(coeffs: list[PPoly], v: Symbol) -> PPoly:
    out = PPoly({})
    for k, c in enumerate(coeffs):
        if c.is_zero():
            continue
        vm = PPoly({((v, k),): Fraction(1)}) if k else PPoly.const(1)
        out = out.add(c.mul(vm))
    return out


def _gcd_list(polys: list[PPoly]) -> PPoly:
    g = PPoly({})
    for p in polys:
        g = ppoly_gcd(g, p)
        if g.is_const() and not g.is_zero():
            return PPoly.const(1)
    return g


def _normalize_gcd(g: PPoly) -> PPoly:
    if g.is_zero():
        return g
    _, lc = g.leading()
    return g.scale(1 / lc)


def ppoly_gcd(f: PPoly, g: PPoly) -> PPoly:
    """GCD in Q[parameters], normalized with monic leading coefficient."""
    if f.is_zero():
        return _normalize_gcd(g)
    if g.is_zero():
        return _normalize_gcd(f)
    syms = sorted(f.symbols() | g.symbols(), key=_psort_key)
    if not syms:
        return PPoly.const(1)
    v = syms[0]
    F = _ppoly_as_univar(f, v)
    G = _ppoly_as_univar(g, v)
    if len(F) == 1 and len(G) == 1:
        return _normalize_gcd(ppoly_gcd(F[0], G[0]))
    cf = _gcd_list(F)
    cg = _gcd_list(G)
    cont = ppoly_gcd(cf, cg)
    Fp = [_ppoly_divmod_exact(c, cf) for c in F]
    Gp = [_ppoly_divmod_exact(c, cg) for c in G]
    A = _ppoly_from_univar(Fp, v)
    B = _ppoly_from_univar(Gp, v)
    # primitive pseudo-remainder sequence in v
    while not B.is_zero():
        R = _pseudo_rem(A, B, v)
        if R.is_zero():
            A = B
            B = PPoly({})
            break
        Rc = _gcd_list(_ppoly_as_univar(R, v))
        Rp = [_ppoly_divmod_exact(c, Rc) for c in _ppoly_as_univar(R, v)]
        A, B = B, _ppoly_from_univar(Rp, v)
    Ac = _gcd_list(_ppoly_as_univar(A, v))
    Ap = [_ppoly_divmod_exact(c, Ac) for c in _ppoly_as_univar(A, v)]
    return _normalize_gcd(cont.mul(_ppoly_from_univar(Ap, v)))


def _pseudo_rem(f: PPoly, g: PPoly, v: Symbol) -> PPoly:
    F = _ppoly_as_univar(f, v)
    G = _ppoly_as_univar(g, v)
    dg = len(G) - 1
    if len(F) - 1 < dg:
        return f
    lcg = G[dg]
    R = F[:]
    while len(R) - 1 >= dg:
        dr = len(R) - 1
        lead = R[dr]
        R = [lcg.mul(c) for c in R]
        for i in range(dg + 1):
            R[dr - dg + i] = R[dr - dg + i].sub(lead.mul(G[i]))
        R.pop()  # top coefficient eliminated by construction
        while R and R[-1].is_zero():
            R.pop()
        if not R:
            return PPoly({})
    return _ppoly_from_univar(R, v)


class PFrac:
    """Reduced rational function in the parameter symbols (monic denominator)."""

    __slots__ = ("num", "den")

    def __init__(self, num: PPoly, den: PPoly, _reduced: bool = False):
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if num.is_zero():
            self.num = PPoly({})
            self.den = PPoly.const(1)
            return
        if not _reduced:
            g = ppoly_gcd(num, den)
            if not (g.is_const() and g.const_value() == 1):
                num = _ppoly_divmod_exact(num, g)
                den = _ppoly_divmod_exact(den, g)
            _, lc = den.leading()
            if lc != 1:
                num = num.scale(1 / lc)
                den = den.scale(1 / lc)
        self.num = num
        self.den = den

    @staticmethod
    def const(c) -> "PFrac":
        return PFrac(PPoly.const(c), PPoly.const(1), _reduced=True)

    @staticmethod
    def sym(s: Symbol) -> "PFrac":
        return PFrac(PPoly.sym(s), PPoly.const(1), _reduced=True)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_one(self) -> bool:
        return self.den.is_const() and self.num.is_const() and self.num.const_value() == 1

    def is_const(self) -> bool:
        return self.num.is_const() and self.den.is_const()

    def const_value(self) -> Fraction:
        return self.num.const_value() / self.den.const_value()

    def add(self, other: "PFrac") -> "PFrac":
        return PFrac(self.num.mul(other.den).add(other.num.mul(self.den)), self.den.mul(other.den))

    def neg(self) -> "PFrac":
        return PFrac(self.num.neg(), self.den, _reduced=True)

    def sub(self, other: "PFrac") -> "PFrac":
        return self.add(other.neg())

    def mul(self, other: "PFrac") -> "PFrac":
        return PFrac(self.num.mul(other.num), self.den.mul(other.den))

    def div(self, other: "PFrac") -> "PFrac":
        if other.is_zero():
            raise ZeroDivisionError("division by zero coefficient")
        return PFrac(self.num.mul(other.den), self.den.mul(other.num))

    def eval(self, point: Mapping[Symbol, Fraction]) -> Fraction:
        d = self.den.eval(point)
        if d == 0:
            raise EvalError("parameter sampled at an excluded value (denominator vanishes)")
        return self.num.eval(point) / d

    def deriv(self, s: Symbol) -> "PFrac":
        return PFrac(
            self.num.deriv(s).mul(self.den).sub(self.num.mul(self.den.deriv(s))),
            self.den.mul(self.den),
        )

    def sign_key(self) -> Fraction:
        if self.is_zero():
            return Fraction(0)
        _, lc = self.num.leading()
        return lc

    def __eq__(self, other):
        return isinstance(other, PFrac) and self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self):
        return _pfrac_str(self)


# --------------------------------------------------------------------------
# Expressions.


class Expr:
    """A canonical normal form: map from monomials to field coefficients."""

    __slots__ = ("t",)

    def __init__(self, terms: dict):
        self.t = {m: c for m, c in terms.items() if not c.is_zero()}

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero() -> "Expr":
        return Expr({})

    @staticmethod
    def number(c) -> "Expr":
        c = to_rational(c)
        if c == 0:
            return Expr({})
        return Expr({_MONO_ONE: PFrac.const(c)})

    @staticmethod
    def coeff(c: PFrac) -> "Expr":
        return Expr({_MONO_ONE: c})

    @staticmethod
    def sym(s: Symbol) -> "Expr":
        if s.kind == "parameter":
            return Expr({_MONO_ONE: PFrac.sym(s)})
        return Expr({Monomial.make({s: 1}): PFrac.const(1)})

    @staticmethod
    def gen(g, q=1) -> "Expr":
        if isinstance(g, Symbol):
            if g.kind == "parameter":
                if to_rational(q) != 1:
                    raise ExprError("parameter powers belong in the coefficient field")
                return Expr.sym(g)
        return Expr({Monomial.make({g: to_rational(q)}): PFrac.const(1)})

    # -- predicates / views -------------------------------------------------

    def is_zero(self) -> bool:
        return not self.t

    def is_const(self) -> bool:
        return all(m == _MONO_ONE for m in self.t)

    def const_coeff(self) -> PFrac:
        if self.is_zero():
            return PFrac.const(0)
        if not self.is_const():
            raise ExprError("not a constant expression")
        return self.t[_MONO_ONE]

    def terms(self) -> list[tuple[Monomial, PFrac]]:
        return sorted(self.t.items(), key=lambda mc: mc[0], reverse=True)

    def leading(self) -> tuple[Monomial, PFrac]:
        if self.is_zero():
            raise ExprError("zero expression has no leading term")
        m = max(self.t)
        return m, self.t[m]

    def generators(self) -> set:
        out = set()
        for m in self.t:
            for g, _ in m.gens:
                out.add(g)
        return out

    def param_symbols(self) -> set:
        out = set()
        for c in self.t.values():
            out |= c.num.symbols() | c.den.symbols()
        return out

    def jets(self) -> set:
        return {g for g in self.generators() if isinstance(g, JetVar)}

    def func_atoms(self) -> set:
        return {g for g in self.generators() if isinstance(g, FuncAtom)}

    def coefficient(self, m: Monomial) -> PFrac:
        return self.t.get(m, PFrac.const(0))

    def depends_on(self, g) -> bool:
        return any(m.exponent(g) != 0 for m in self.t)

    # -- arithmetic ----------------------------------------------------------

    def add(self, other: "Expr") -> "Expr":
        out = dict(self.t)
        for m, c in other.t.items():
            prev = out.get(m)
            nc = c if prev is None else prev.add(c)
            if nc.is_zero():
                out.pop(m, None)
            else:
                out[m] = nc
        return Expr(out)

    def neg(self) -> "Expr":
        return Expr({m: c.neg() for m, c in self.t.items()})

    def sub(self, other: "Expr") -> "Expr":
        return self.add(other.neg())

    def mul(self, other: "Expr") -> "Expr":
        out: dict = {}
        for m1, c1 in self.t.items():
            for m2, c2 in other.t.items():
                m = m1.mul(m2)
                c = c1.mul(c2)
                prev = out.get(m)
                nc = c if prev is None else prev.add(c)
                if nc.is_zero():
                    out.pop(m, None)
                else:
                    out[m] = nc
        return Expr(out)

    def scale(self, c) -> "Expr":
        if isinstance(c, PFrac):
            if c.is_zero():
                return Expr({})
            return Expr({m: v.mul(c) for m, v in self.t.items()})
        return self.scale(PFrac.const(to_rational(c)))

    def pow_int(self, n: int) -> "Expr":
        if n < 0:
            return Expr.number(1).div(self.pow_int(-n))
        out = Expr.number(1)
        base = self
        while n:
            if n & 1:
                out = out.mul(base)
            base = base.mul(base) if n > 1 else base
            n >>= 1
        return out

    def pow_rational(self, q) -> "Expr":
        q = to_rational(q)
        if q.denominator == 1:
            return self.pow_int(int(q))
        if len(self.t) != 1:
            raise ExprError("fractional power of a non-monomial expression")
        m, c = next(iter(self.t.items()))
        if not c.is_const():
            raise ExprError("fractional power of a parameter-dependent coefficient")
        cv = c.const_value()
        if cv == 1:
            ncv = Fraction(1)
        else:
            r = _exact_root(cv, q.denominator)
            if r is None:
                raise ExprError(f"no exact rational root of {cv} of order {q.denominator}")
            ncv = r ** q.numerator
        return Expr({m.pow(q): PFrac.const(ncv)})

    def div(self, other: "Expr") -> "Expr":
        """Exact division; raises ExprError if the quotient leaves the domain."""
        if other.is_zero():
            raise ZeroDivisionError("division by zero expression")
        if len(other.t) == 1:
            m, c = next(iter(other.t.items()))
            out: dict = {}
            for m1, c1 in self.t.items():
                out[m1.div(m)] = c1.div(c)
            return Expr(out)
        q = _expr_div_exact(self, other)
        if q is None:
            raise ExprError("inexact polynomial division")
        return q

    # -- python operator sugar ----------------------------------------------

    def __add__(self, other):
        return self.add(_as_expr(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.sub(_as_expr(other))

    def __rsub__(self, other):
        return _as_expr(other).sub(self)

    def __mul__(self, other):
        return self.mul(_as_expr(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.div(_as_expr(other))

    def __rtruediv__(self, other):
        return _as_expr(other).div(self)

    def __neg__(self):
        return self.neg()

    def __pow__(self, q):
        return self.pow_rational(to_rational(q))

    def __eq__(self, other):
        if not isinstance(other, Expr):
            if isinstance(other, (int, Fraction)):
                other = Expr.number(other)
            else:
                return NotImplemented
        return self.t == other.t

    def __hash__(self):
        return hash(frozenset(self.t.items()))

    def __repr__(self):
        return expr_str(self)

    # -- calculus -------------------------------------------------------------

    def derive(self, rule: Callable) -> "Expr":
        """Generic derivation: extend `rule` (generator -> Expr) by the
        Leibniz and power rules; coefficients are treated as constants."""
        out = Expr.zero()
        for m, c in self.t.items():
            for g, q in m.gens:
                dg = rule(g)
                if dg is None or dg.is_zero():
                    continue
                rest = dict(m.gens)
                if q == 1:
                    rest.pop(g)
                else:
                    rest[g] = q - 1
                factor = Expr({Monomial.make(rest): c.mul(PFrac.const(q))})
                out = out.add(factor.mul(dg))
        return out

    def partial(self, v) -> "Expr":
        """Formal partial derivative with respect to a generator or parameter."""
        if isinstance(v, Symbol) and v.kind == "parameter":
            return Expr({m: c.deriv(v) for m, c in self.t.items()})

        def rule(g):
            if g == v:
                return Expr.number(1)
            if isinstance(g, ExpAtom) and g.arg == v:
                return Expr.gen(g)
            if isinstance(g, FuncAtom) and isinstance(v, Symbol) and v in g.args:
                return Expr.gen(g.bump(v))
            return None

        return self.derive(rule)

    def substitute(self, bindings: Mapping) -> "Expr":
        """Simultaneous substitution of generators by expressions.

        Keys may be symbols, jet variables, exp atoms, or function atoms; a
        binding for a base function atom (zero derivative index) covers its
        derivative atoms via formal partials of the bound expression.
        """
        cache: dict = {}

        def resolve(g):
            if g in bindings:
                return _as_expr(bindings[g])
            if isinstance(g, FuncAtom):
                base = g.base
                if base in bindings:
                    if g in cache:
                        return cache[g]
                    val = _as_expr(bindings[base])
                    for arg, k in zip(g.args, g.derivs):
                        for _ in range(k):
                            val = val.partial(arg)
                    cache[g] = val
                    return val
            return None

        out = Expr.zero()
        for m, c in self.t.items():
            term = Expr({_MONO_ONE: c})
            for g, q in m.gens:
                val = resolve(g)
                if val is None:
                    term = term.mul(Expr({Monomial.make({g: q}): PFrac.const(1)}))
                else:
                    term = term.mul(val.pow_rational(q))
            out = out.add(term)
        return out

    def eval_at(self, point: Mapping) -> Fraction:
        """Exact evaluation; `point` binds generators and parameter symbols."""
        params = {s: Fraction(v) for s, v in point.items() if isinstance(s, Symbol) and s.kind == "parameter"}
        total = Fraction(0)
        for m, c in self.t.items():
            v = c.eval(params)
            for g, q in m.gens:
                if g not in point:
                    raise EvalError(f"no value supplied for {g}")
                base = Fraction(point[g])
                if q.denominator == 1:
                    if base == 0 and q < 0:
                        raise EvalError(f"zero raised to negative power at {g}")
                    v *= base ** int(q)
                else:
                    r = _exact_root(base, q.denominator)
                    if r is None:
                        raise EvalError(f"value {base} for {g} has no exact root of order {q.denominator}")
                    v *= r ** q.numerator
            total += v
        return total

    def collect(self, keep: Callable) -> dict[Monomial, "Expr"]:
        """Split each monomial by the predicate `keep` on generators; returns
        {kept-part-monomial: expression-in-the-rest}."""
        out: dict[Monomial, dict] = {}
        for m, c in self.t.items():
            kept = {}
            rest = {}
            for g, q in m.gens:
                (kept if keep(g) else rest)[g] = q
            km = Monomial.make(kept)
            rm = Monomial.make(rest)
            bucket = out.setdefault(km, {})
            prev = bucket.get(rm)
            nc = c if prev is None else prev.add(c)
            if nc.is_zero():
                bucket.pop(rm, None)
            else:
                bucket[rm] = nc
        return {km: Expr(d) for km, d in out.items() if d}

    def map_coeff(self, fn: Callable[[PFrac], PFrac]) -> "Expr":
        return Expr({m: fn(c) for m, c in self.t.items()})


def _as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Expr.number(x)
    if isinstance(x, Symbol):
        return Expr.sym(x)
    if isinstance(x, (JetVar, ExpAtom, FuncAtom)):
        return Expr.gen(x)
    raise ExprError(f"cannot coerce {x!r} to an expression")


def normalize(e: Expr) -> Expr:
    """Identity on the canonical domain; exists so callers can assert it."""
    return Expr(dict(e.t))


def _expr_div_exact(f: Expr, g: Expr) -> Expr | None:
    """Exact multivariate division of normal forms (leading-term algorithm)."""
    q = Expr.zero()
    rem = f
    gm, gc = g.leading()
    guard = 0
    while not rem.is_zero():
        guard += 1
        if guard > 10000:
            return None
        rm, rc = rem.leading()
        if not gm.divides(rm):
            return None
        try:
            qm = rm.div(gm)
        except ExprError:
            return None
        qt = Expr({qm: rc.div(gc)})
        q = q.add(qt)
        rem = rem.sub(qt.mul(g))
    return q


def _inth_root(n: int, r: int) -> int | None:
    if n < 0:
        if r % 2 == 0:
            return None
        m = _inth_root(-n, r)
        return None if m is None else -m
    if n in (0, 1):
        return n
    lo, hi = 1, 1
    while hi ** r < n:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if mid ** r < n:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo ** r == n else None


def _exact_root(fr: Fraction, r: int) -> Fraction | None:
    num = _inth_root(fr.numerator, r)
    den = _inth_root(fr.denominator, r)
    if num is None or den is None:
        return None
    return Fraction(num, den)


# --------------------------------------------------------------------------
# Printing.  The canonical string reparses to the identical normal form.


def _frac_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _pmono_str(m: tuple) -> str:
    return "*".join(s.name if k == 1 else f"{s.name}^{k}" for s, k in m)


def _ppoly_str(p: PPoly) -> str:
    if p.is_zero():
        return "0"
    monos = sorted(p.terms, key=_PmonoKey, reverse=True)
    parts = []
    for m in monos:
        c = p.terms[m]
        ms = _pmono_str(m)
        if not ms:
            body = _frac_str(abs(c))
        elif abs(c) == 1:
            body = ms
        else:
            body = f"{_frac_str(abs(c))}*{ms}"
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(f" + {body}" if c > 0 else f" - {body}")
    return "".join(parts)


def _pfrac_str(c: PFrac) -> str:
    num = _ppoly_str(c.num)
    if c.den.is_const() and c.den.const_value() == 1:
        return num
    den = _ppoly_str(c.den)
    ns = num if (len(c.num.terms) == 1 and not num.startswith("-")) else f"({num})"
    ds = den if len(c.den.terms) == 1 and not den.startswith("-") and "*" not in den and "^" not in den else f"({den})"
    return f"{ns}/{ds}"


def _exp_str(q: Fraction, s: Symbol) -> str:
    if q == 1:
        return f"exp({s.name})"
    if q == -1:
        return f"exp(-{s.name})"
    return f"exp({_frac_str(q)}*{s.name})"


def _gen_str(g) -> str:
    if isinstance(g, Symbol):
        return g.name
    if isinstance(g, JetVar):
        dirs = []
        for d, k in g.orders:
            dirs.extend([d.name] * k)
        if all(len(d) == 1 for d in dirs):
            return f"{g.dep.name}_{''.join(dirs)}"
        return f"{g.dep.name}_{{{','.join(dirs)}}}"
    if isinstance(g, FuncAtom):
        dirs = []
        for a, k in zip(g.args, g.derivs):
            dirs.extend([a.name] * k)
        if not dirs:
            return g.name
        if all(len(d) == 1 for d in dirs):
            return f"{g.name}_{''.join(dirs)}"
        return f"{g.name}_{{{','.join(dirs)}}}"
    raise ExprError(f"unprintable generator {g!r}")


def _power_str(g, q: Fraction) -> str:
    if isinstance(g, ExpAtom):
        return _exp_str(q, g.arg)
    base = _gen_str(g)
    if q == 1:
        return base
    if q.denominator == 1 and q > 0:
        return f"{base}^{q.numerator}"
    return f"{base}^({_frac_str(q)})"


def expr_str(e: Expr) -> str:
    if e.is_zero():
        return "0"
    parts = []
    for m, c in e.terms():
        mono = "*".join(_power_str(g, q) for g, q in m.gens)
        sign = c.sign_key()
        mag = c if sign > 0 else c.neg()
        if mag.is_one():
            body = mono if mono else "1"
        else:
            cs = _pfrac_str(mag)
            if len(mag.num.terms) > 1:
                cs = f"({cs})" if "/" not in cs else cs
            body = f"{cs}*{mono}" if mono else cs
        if not parts:
            parts.append(body if sign > 0 else f"-{body}")
        else:
            parts.append(f" + {body}" if sign > 0 else f" - {body}")
    return "".join(parts)
