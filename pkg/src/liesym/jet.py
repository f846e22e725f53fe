"""Total derivatives, evolution-problem descriptions, on-shell reduction.

A problem is a single polynomial equation eq = 0 on a jet space, together
with a distinguished leading jet that the equation can be solved for.  The
solved form induces a rewriting system (the leading jet and all its formal
derivatives are replaced by lower expressions), and `ProblemSpec.reduce`
applies it to a fixpoint.  This is what "modulo the equation" means
everywhere downstream.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .expr import (
    Expr,
    ExprError,
    FuncAtom,
    JetVar,
    Monomial,
    PFrac,
    Symbol,
    jet,
)
from .parse import Namespace, ParseError, parse

__all__ = ["total_derivative", "ProblemSpec", "load_problem", "solve_leading", "max_jet_order"]


def total_derivative(e: Expr, d: Symbol) -> Expr:
    """Total derivative D_d treating dependent symbols as functions of d."""
    if d.kind not in ("independent", "reduction"):
        raise ExprError(f"total derivative direction must be a base variable, got {d}")

    def rule(g):
        if isinstance(g, Symbol):
            if g == d:
                return Expr.number(1)
            if g.kind == "dependent" and d in g.deps:
                return Expr.gen(jet(g, [d]))
            return None
        if isinstance(g, JetVar):
            if d in g.dep.deps:
                return Expr.gen(g.bump(d))
            return None
        if isinstance(g, FuncAtom):
            total = Expr.zero()
            for arg in g.args:
                if arg == d:
                    total = total.add(Expr.gen(g.bump(arg)))
                elif arg.kind == "dependent" and d in arg.deps:
                    total = total.add(Expr.gen(g.bump(arg)).mul(Expr.gen(jet(arg, [d]))))
            return None if total.is_zero() else total
        return None

    return e.derive(rule)


def max_jet_order(e: Expr, dep: Symbol | None = None) -> int:
    orders = [
        g.total_order
        for g in e.generators()
        if isinstance(g, JetVar) and (dep is None or g.dep == dep)
    ]
    return max(orders, default=0)


def solve_leading(eq: Expr, lead: JetVar) -> Expr:
    """Solve eq = 0 for the leading jet; the jet must occur affinely with a
    coefficient that is constant in the base variables and invertible."""
    coeff = Expr.zero()
    rest = Expr.zero()
    for m, c in eq.t.items():
        q = m.exponent(lead)
        if q == 0:
            rest = rest.add(Expr({m: c}))
        elif q == 1:
            coeff = coeff.add(Expr({m.div(Monomial.make({lead: 1})): c}))
        else:
            raise ExprError(f"equation is not affine in {lead}")
    if coeff.is_zero():
        raise ExprError(f"{lead} does not occur in the equation")
    if not coeff.is_const():
        raise ExprError(f"coefficient of {lead} is not invertible: {coeff}")
    if coeff.depends_on(lead):
        raise ExprError(f"equation is not affine in {lead}")
    return rest.neg().div(coeff)


class ProblemSpec:
    """A declared evolution-type problem: variables, one equation, solved form."""

    def __init__(self, ns: Namespace, eq: Expr, lead: JetVar | None = None):
        self.ns = ns
        self.indep = tuple(
            sorted(
                (s for s in ns.symbols.values() if s.kind == "independent"),
                key=lambda s: s.pos,
            )
        )
        self.deps = tuple(
            sorted(
                (s for s in ns.symbols.values() if s.kind == "dependent"),
                key=lambda s: s.pos,
            )
        )
        self.params = tuple(
            sorted(
                (s for s in ns.symbols.values() if s.kind == "parameter"),
                key=lambda s: s.pos,
            )
        )
        self.eq = eq
        self.lead = lead if lead is not None else self._pick_lead(eq)
        self.solved = solve_leading(eq, self.lead)
        self._rw: dict[JetVar, Expr] = {}

    @staticmethod
    def _pick_lead(eq: Expr) -> JetVar:
        jets = [g for g in eq.generators() if isinstance(g, JetVar)]
        if not jets:
            raise ExprError("equation contains no jet variables")
        top = max(j.total_order for j in jets)
        candidates = [j for j in jets if j.total_order == top]
        from .expr import gen_key

        candidates.sort(key=gen_key)
        return candidates[0]

    # -- on-shell rewriting ---------------------------------------------------

    def _derived_from_lead(self, j: JetVar) -> bool:
        if j.dep != self.lead.dep:
            return False
        return all(j.order_in(d) >= self.lead.order_in(d) for d, _ in self.lead.orders)

    def _rewrite_jet(self, j: JetVar) -> Expr:
        got = self._rw.get(j)
        if got is not None:
            return got
        if j == self.lead:
            out = self.reduce_off_lead(self.solved)
        else:
            d = next(
                dd
                for dd in self.lead.dep.deps
                if j.order_in(dd) > self.lead.order_in(dd)
            )
            lower = jet(j.dep, {**dict(j.orders), d: j.order_in(d) - 1})
            base = self._rewrite_jet(lower)
            out = self.reduce(total_derivative(base, d))
        self._rw[j] = out
        return out

    def reduce_off_lead(self, e: Expr) -> Expr:
        targets = {g for g in e.jets() if g != self.lead and self._derived_from_lead(g)}
        if not targets:
            return e
        return e.substitute({g: self._rewrite_jet(g) for g in targets})

    def reduce(self, e: Expr) -> Expr:
        """Substitute the solved form (and its differential consequences) to a
        fixpoint; the result contains no derivative of the leading jet."""
        for _ in range(64):
            targets = {g for g in e.jets() if self._derived_from_lead(g)}
            if not targets:
                return e
            e = e.substitute({g: self._rewrite_jet(g) for g in targets})
        raise ExprError("on-shell reduction did not terminate")

    def residual_of(self, candidate: Expr) -> Expr:
        """Residual of the equation on an explicit candidate solution.

        Every jet of the dependent variable is replaced by the corresponding
        iterated partial derivative of the candidate expression.
        """
        if len(self.deps) != 1:
            raise ExprError("explicit residuals need a single dependent variable")
        dep = self.deps[0]
        bindings: dict = {dep: candidate}
        for j in self.eq.jets():
            if j.dep != dep:
                raise ExprError(f"unexpected jet of {j.dep.name}")
            val = candidate
            for d, k in j.orders:
                for _ in range(k):
                    val = val.partial(d)
            bindings[j] = val
        return self.eq.substitute(bindings)

    def parse(self, text: str) -> Expr:
        return parse(text, self.ns)


_DEP_RE = re.compile(r"^(\w+)\s*\(\s*(\w+(?:\s*,\s*\w+)*)\s*\)$")


def load_problem(text: str) -> ProblemSpec:
    """Read a problem description.

    Statements end with ';'.  '#' starts a comment.  Recognized forms:

        indep x t;
        dep u(x,t);
        param a nonzero;
        eq: u_t - u_xxt + a*u_x*(1 - u_t) = 0;
        lead: u_xxt;            # optional; defaults to the top-order jet
    """
    ns = Namespace()
    eq = None
    lead = None
    src = re.sub(r"#[^\n]*", "", text)
    for raw in src.split(";"):
        stmt = raw.strip()
        if not stmt:
            continue
        head, _, rest = stmt.partition(" ")
        if head == "indep":
            for name in rest.split():
                ns.independent(name)
        elif head == "dep":
            m = _DEP_RE.match(rest.strip())
            if m is None:
                raise ParseError(f"cannot read dependent declaration {stmt!r}")
            args = tuple(a.strip() for a in m.group(2).split(","))
            ns.dependent(m.group(1), args)
        elif head == "param":
            parts = rest.split()
            if not parts or len(parts) > 2 or (len(parts) == 2 and parts[1] != "nonzero"):
                raise ParseError(f"cannot read parameter declaration {stmt!r}")
            ns.parameter(parts[0], nonzero=len(parts) == 2)
        elif head.startswith("eq"):
            _, _, body = stmt.partition(":")
            lhs, sep, rhs = body.partition("=")
            if not sep:
                raise ParseError(f"equation statement needs '=': {stmt!r}")
            if eq is not None:
                raise ParseError("only one equation statement is supported")
            eq = parse(lhs, ns).sub(parse(rhs, ns))
        elif head.startswith("lead"):
            _, _, body = stmt.partition(":")
            le = parse(body, ns)
            gens = list(le.generators())
            if len(le.t) != 1 or len(gens) != 1 or not isinstance(gens[0], JetVar):
                raise ParseError(f"leading statement must name a single jet: {stmt!r}")
            lead = gens[0]
        else:
            raise ParseError(f"unknown statement {stmt!r}")
    if eq is None:
        raise ParseError("problem description has no equation")
    return ProblemSpec(ns, eq, lead)
