"""Vector fields on the base space and their prolongations to jet space."""

from __future__ import annotations

from .expr import Expr, ExprError, JetVar, Monomial, PFrac, Symbol, jet
from .jet import ProblemSpec, total_derivative

__all__ = ["VectorField", "invariance_residual"]


class VectorField:
    """First-order operator sum(xi_i d/dx_i) + sum(phi_u d/du).

    Component functions live on the base space (independents, dependents and
    parameters); prolongation extends the operator to any jet variable.
    """

    def __init__(self, xis: dict[Symbol, Expr], phis: dict[Symbol, Expr]):
        self.xis = {s: e for s, e in xis.items() if not e.is_zero()}
        self.phis = {s: e for s, e in phis.items() if not e.is_zero()}
        for s in self.xis:
            if s.kind not in ("independent", "reduction"):
                raise ExprError(f"{s} is not a base variable")
        for s in self.phis:
            if s.kind != "dependent":
                raise ExprError(f"{s} is not a dependent symbol")

    def xi(self, s: Symbol) -> Expr:
        return self.xis.get(s, Expr.zero())

    def phi(self, s: Symbol) -> Expr:
        return self.phis.get(s, Expr.zero())

    def is_zero(self) -> bool:
        return not self.xis and not self.phis

    def add(self, other: "VectorField") -> "VectorField":
        xs = {s: self.xi(s).add(other.xi(s)) for s in {*self.xis, *other.xis}}
        ps = {s: self.phi(s).add(other.phi(s)) for s in {*self.phis, *other.phis}}
        return VectorField(xs, ps)

    def scale(self, c) -> "VectorField":
        if not isinstance(c, Expr):
            c = Expr.number(c)
        return VectorField(
            {s: e.mul(c) for s, e in self.xis.items()},
            {s: e.mul(c) for s, e in self.phis.items()},
        )

    def sub(self, other: "VectorField") -> "VectorField":
        return self.add(other.scale(-1))

    def __eq__(self, other):
        return (
            isinstance(other, VectorField)
            and self.xis == other.xis
            and self.phis == other.phis
        )

    def __hash__(self):
        return hash(
            (frozenset(self.xis.items()), frozenset(self.phis.items()))
        )

    # -- action ----------------------------------------------------------------

    def base_apply(self, e: Expr) -> Expr:
        """Apply the first-order part (no prolongation) to a base-space function."""
        out = Expr.zero()
        for s, c in self.xis.items():
            out = out.add(c.mul(e.partial(s)))
        for s, c in self.phis.items():
            out = out.add(c.mul(e.partial(s)))
        return out

    def prolong(self, needed) -> dict[JetVar, Expr]:
        """Coefficients of d/du_J for every jet J in `needed` (and all the
        intermediate jets on the canonical derivation path)."""
        memo: dict[JetVar, Expr] = {}
        for j in needed:
            self._pro(j, memo)
        return memo

    def _pro(self, j: JetVar, memo: dict[JetVar, Expr]) -> Expr:
        got = memo.get(j)
        if got is not None:
            return got
        d = next(dd for dd in j.dep.deps if j.order_in(dd) > 0)
        below = jet(j.dep, {**dict(j.orders), d: j.order_in(d) - 1})
        if isinstance(below, Symbol):
            prev = self.phi(below)
        else:
            prev = self._pro(below, memo)
        out = total_derivative(prev, d)
        for k in j.dep.deps:
            dxi = total_derivative(self.xi(k), d)
            if dxi.is_zero():
                continue
            if isinstance(below, Symbol):
                bumped = jet(j.dep, [k])
            else:
                bumped = below.bump(k)
            out = out.sub(dxi.mul(Expr.gen(bumped)))
        memo[j] = out
        return out

    def apply(self, e: Expr) -> Expr:
        """Apply the prolonged operator to a jet-space expression."""
        out = self.base_apply(e)
        jets = sorted(e.jets(), key=lambda g: g.total_order)
        coeffs = self.prolong(jets)
        for j in jets:
            out = out.add(coeffs[j].mul(e.partial(j)))
        return out

    def __repr__(self):
        parts = []
        for s, c in sorted(self.xis.items(), key=lambda sc: (sc[0].pos, sc[0].name)):
            parts.append(f"({c})*d/d{s.name}")
        for s, c in sorted(self.phis.items(), key=lambda sc: (sc[0].pos, sc[0].name)):
            parts.append(f"({c})*d/d{s.name}")
        return " + ".join(parts) if parts else "0"


def invariance_residual(problem: ProblemSpec, vf: VectorField) -> Expr:
    """Prolonged action of vf on the equation, reduced on solutions."""
    return problem.reduce(vf.apply(problem.eq))
