"""Expression parser and symbol namespace.

The concrete syntax is the same one the printer emits, so `parse(print(e))`
returns the identical normal form.  Highlights:

    2/3*a*u_x^2 - x^(-1/3)      rationals are exact, powers take ( ) for
                                negative or fractional exponents
    u_xxt  or  u_{x,x,t}        jet variables as subscripts on a dependent
    D[u,x,x,t]                  the same jet in operator form
    exp(-2*s)                   exponential atom of a group parameter
    xi_u, psi_{u,v}             formal partials of declared unknown functions

Names are resolved against a Namespace, which owns every declared symbol and
unknown function.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .expr import (
    Expr,
    ExprError,
    ExpAtom,
    FuncAtom,
    JetVar,
    Monomial,
    PFrac,
    Symbol,
    jet,
)

__all__ = ["ParseError", "Namespace", "parse"]


class ParseError(ValueError):
    def __init__(self, msg: str, text: str = "", pos: int = 0):
        if text:
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            msg = f"{msg} (line {line}, column {col})"
        super().__init__(msg)


class Namespace:
    """Registry of declared symbols and unknown functions."""

    def __init__(self):
        self.symbols: dict[str, Symbol] = {}
        self.functions: dict[str, FuncAtom] = {}
        self._count: dict[str, int] = {}

    def clone(self) -> "Namespace":
        """Independent copy sharing the declared symbols; later declarations
        in the copy do not leak back."""
        ns = Namespace()
        ns.symbols = dict(self.symbols)
        ns.functions = dict(self.functions)
        ns._count = dict(self._count)
        return ns

    def _register(self, sym: Symbol) -> Symbol:
        if sym.name in self.symbols or sym.name in self.functions:
            raise ParseError(f"name {sym.name!r} already declared")
        self.symbols[sym.name] = sym
        return sym

    def _next_pos(self, kind: str) -> int:
        n = self._count.get(kind, 0)
        self._count[kind] = n + 1
        return n

    def independent(self, name: str) -> Symbol:
        return self._register(Symbol(name, "independent", pos=self._next_pos("independent")))

    def dependent(self, name: str, args: tuple[str, ...]) -> Symbol:
        deps = tuple(self.resolve(a) for a in args)
        for d in deps:
            if d.kind not in ("independent", "reduction"):
                raise ParseError(f"{name} cannot depend on {d.name} (kind {d.kind})")
        return self._register(
            Symbol(name, "dependent", pos=self._next_pos("dependent"), deps=deps)
        )

    def parameter(self, name: str, nonzero: bool = False) -> Symbol:
        return self._register(
            Symbol(name, "parameter", nonzero=nonzero, pos=self._next_pos("parameter"))
        )

    def group(self, name: str) -> Symbol:
        return self._register(Symbol(name, "group", pos=self._next_pos("group")))

    def reduction(self, name: str) -> Symbol:
        return self._register(Symbol(name, "reduction", pos=self._next_pos("reduction")))

    def function(self, name: str, args: tuple[str, ...]) -> FuncAtom:
        if name in self.symbols or name in self.functions:
            raise ParseError(f"name {name!r} already declared")
        atoms = tuple(self.resolve(a) for a in args)
        f = FuncAtom(name, atoms, (0,) * len(atoms))
        self.functions[name] = f
        return f

    def resolve(self, name: str) -> Symbol:
        s = self.symbols.get(name)
        if s is None:
            raise ParseError(f"undeclared symbol {name!r}")
        return s

    def lookup(self, name: str):
        return self.symbols.get(name) or self.functions.get(name)


_TOKEN_RE = re.compile(
    r"(?P<ws>\s+|#[^\n]*)"
    r"|(?P<num>\d+)"
    r"|(?P<name>[A-Za-z][A-Za-z0-9]*)"
    r"|(?P<punct>[-+*/^()\[\]{},_;:=])"
)


def tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, ns: Namespace):
        self.text = text
        self.ns = ns
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers ------------------------------------------------------

    def peek(self) -> tuple[str, str, int]:
        return self.toks[self.i]

    def next(self) -> tuple[str, str, int]:
        t = self.toks[self.i]
        self.i += 1
        return t

    def accept(self, value: str) -> bool:
        kind, val, _ = self.peek()
        if kind == "punct" and val == value:
            self.i += 1
            return True
        return False

    def expect(self, value: str) -> None:
        if not self.accept(value):
            kind, val, pos = self.peek()
            raise ParseError(f"expected {value!r}, found {val or 'end of input'!r}", self.text, pos)

    def fail(self, msg: str):
        _, _, pos = self.peek()
        raise ParseError(msg, self.text, pos)

    # -- grammar -------------------------------------------------------------

    def expr(self) -> Expr:
        if self.accept("-"):
            out = self.term().neg()
        else:
            self.accept("+")
            out = self.term()
        while True:
            if self.accept("+"):
                out = out.add(self.term())
            elif self.accept("-"):
                out = out.sub(self.term())
            else:
                return out

    def term(self) -> Expr:
        out = self.factor()
        while True:
            if self.accept("*"):
                out = out.mul(self.factor())
            elif self.accept("/"):
                rhs = self.factor()
                try:
                    out = out.div(rhs)
                except (ExprError, ZeroDivisionError) as e:
                    self.fail(str(e))
            else:
                return out

    def factor(self) -> Expr:
        if self.accept("-"):
            return self.factor().neg()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.accept("^"):
            q = self.exponent()
            try:
                return base.pow_rational(q)
            except (ExprError, ZeroDivisionError) as e:
                self.fail(str(e))
        return base

    def exponent(self) -> Fraction:
        if self.accept("("):
            q = self.signed_rational()
            self.expect(")")
            return q
        return self.signed_rational()

    def signed_rational(self) -> Fraction:
        sign = 1
        if self.accept("-"):
            sign = -1
        kind, val, pos = self.next()
        if kind != "num":
            raise ParseError("expected a number in exponent", self.text, pos)
        num = int(val)
        if self.accept("/"):
            kind, val, pos = self.next()
            if kind != "num":
                raise ParseError("expected a denominator in exponent", self.text, pos)
            return Fraction(sign * num, int(val))
        return Fraction(sign * num)

    def atom(self) -> Expr:
        kind, val, pos = self.peek()
        if kind == "num":
            self.next()
            return Expr.number(int(val))
        if self.accept("("):
            out = self.expr()
            self.expect(")")
            return out
        if kind == "name":
            if val == "exp" and self.toks[self.i + 1][:2] == ("punct", "("):
                self.next()
                self.next()
                inner = self.expr()
                self.expect(")")
                return self.exp_atom(inner, pos)
            if val == "D" and self.toks[self.i + 1][:2] == ("punct", "["):
                self.next()
                self.next()
                return self.jet_operator(pos)
            self.next()
            return self.named(val, pos)
        self.fail(f"unexpected token {val or 'end of input'!r}")

    def exp_atom(self, inner: Expr, pos: int) -> Expr:
        if inner.is_zero():
            return Expr.number(1)
        if len(inner.t) == 1:
            m, c = next(iter(inner.t.items()))
            if c.is_const() and len(m.gens) == 1:
                g, q = m.gens[0]
                if isinstance(g, Symbol) and g.kind == "group" and q == 1:
                    coef = c.const_value()
                    return Expr({Monomial.make({ExpAtom(g): coef}): PFrac.const(1)})
        raise ParseError("exp( ) takes a rational multiple of one group parameter", self.text, pos)

    def jet_operator(self, pos: int) -> Expr:
        names = [self.ident()]
        while self.accept(","):
            names.append(self.ident())
        self.expect("]")
        if len(names) < 2:
            raise ParseError("D[ ] needs a dependent symbol and directions", self.text, pos)
        dep = self.ns.resolve(names[0])
        if dep.kind != "dependent":
            raise ParseError(f"D[ ] applies to a dependent symbol, got {names[0]!r}", self.text, pos)
        dirs = [self.ns.resolve(n) for n in names[1:]]
        return Expr.gen(jet(dep, dirs))

    def ident(self) -> str:
        kind, val, pos = self.next()
        if kind != "name":
            raise ParseError(f"expected a name, found {val!r}", self.text, pos)
        return val

    def named(self, name: str, pos: int) -> Expr:
        target = self.ns.lookup(name)
        if target is None:
            raise ParseError(f"undeclared symbol {name!r}", self.text, pos)
        if self.accept("_"):
            subs = self.subscript()
            if isinstance(target, Symbol):
                if target.kind != "dependent":
                    raise ParseError(f"{name!r} takes no subscripts", self.text, pos)
                dirs = [self.ns.resolve(n) for n in subs]
                return Expr.gen(jet(target, dirs))
            atom = target
            for n in subs:
                arg = self.ns.resolve(n)
                if arg not in atom.args:
                    raise ParseError(f"{name!r} has no argument {n!r}", self.text, pos)
                atom = atom.bump(arg)
            return Expr.gen(atom)
        if isinstance(target, Symbol):
            return Expr.sym(target)
        return Expr.gen(target)

    def subscript(self) -> list[str]:
        if self.accept("{"):
            names = [self.ident()]
            while self.accept(","):
                names.append(self.ident())
            self.expect("}")
            return names
        kind, val, pos = self.next()
        if kind != "name":
            raise ParseError("expected subscript letters", self.text, pos)
        if all(ch in self.ns.symbols for ch in val):
            return list(val)
        raise ParseError(f"cannot read subscript {val!r} as declared single-letter names", self.text, pos)


def parse(text: str, ns: Namespace) -> Expr:
    p = _Parser(text, ns)
    out = p.expr()
    kind, val, pos = p.peek()
    if kind != "end":
        raise ParseError(f"trailing input {val!r}", p.text, pos)
    return out
