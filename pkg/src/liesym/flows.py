"""One-parameter groups of affine point transformations.

A vector field whose components are affine in the base coordinates
exponentiates exactly: the flow is the matrix exponential of the homogeneous
affine system, computed by the same Putzer recurrence used for adjoint
representations.  Flows are verified against their defining equations, and
explicit solutions can be transported along a flow.
"""

from __future__ import annotations

from fractions import Fraction

from .expr import ExpAtom, Expr, ExprError, Monomial, PFrac, Symbol
from .jet import ProblemSpec
from .liealg import putzer_exponential
from .vfield import VectorField

__all__ = [
    "OneParameterGroup",
    "exponentiate",
    "transform_solution",
    "verify_flow",
]


class OneParameterGroup:
    """Exact flow maps for each base coordinate, as expressions in the base
    coordinates and the group parameter."""

    def __init__(self, field: VectorField, param: Symbol,
                 coords: list[Symbol], maps: dict[Symbol, Expr],
                 eigenvalues: list[Fraction]):
        self.field = field
        self.param = param
        self.coords = coords
        self.maps = maps
        self.eigenvalues = eigenvalues

    def at_zero(self, e: Expr) -> Expr:
        return e.substitute({self.param: Expr.number(0),
                             ExpAtom(self.param): Expr.number(1)})

    def __repr__(self):
        inner = ", ".join(f"{c.name} -> {self.maps[c]}" for c in self.coords)
        return f"OneParameterGroup({inner})"


def _affine_rows(field: VectorField, coords: list[Symbol]):
    """Homogeneous affine matrix of the field's components; errors when a
    component is not affine in the base coordinates."""
    n = len(coords)
    zero = PFrac.const(0)
    rows = [[zero] * (n + 1) for _ in range(n + 1)]
    for i, c in enumerate(coords):
        comp = field.xi(c) if c.kind == "independent" else field.phi(c)
        for mono, coeff in comp.terms():
            if mono == Monomial.one():
                rows[i][n] = coeff
                continue
            if len(mono.gens) == 1:
                g, q = mono.gens[0]
                if q == 1 and g in coords:
                    rows[i][coords.index(g)] = coeff
                    continue
            raise ExprError(
                f"component for {c.name} is not affine in the base "
                f"coordinates: {comp}"
            )
    return rows


def exponentiate(field: VectorField, coords: list[Symbol],
                 param: Symbol) -> OneParameterGroup:
    """Exact one-parameter group generated by an affine vector field."""
    rows = _affine_rows(field, coords)
    entries, lams = putzer_exponential(rows, param)
    n = len(coords)
    maps: dict[Symbol, Expr] = {}
    for i, c in enumerate(coords):
        acc = entries[i][n]
        for j, z in enumerate(coords):
            acc = acc.add(entries[i][j].mul(Expr.sym(z)))
        maps[c] = acc
    return OneParameterGroup(field, param, coords, maps, lams)


def verify_flow(group: OneParameterGroup) -> bool:
    """d(map)/ds equals the field component evaluated along the map, and the
    map restricts to the identity at s = 0."""
    field = group.field
    binding = {c: group.maps[c] for c in group.coords}
    for c in group.coords:
        comp = field.xi(c) if c.kind == "independent" else field.phi(c)
        lhs = group.maps[c].partial(group.param)
        rhs = comp.substitute(binding)
        if not lhs.sub(rhs).is_zero():
            return False
        if not group.at_zero(group.maps[c]).sub(Expr.sym(c)).is_zero():
            return False
    return True


def _invert_spatial(group: OneParameterGroup, indep: list[Symbol]):
    """Invert the flow's action on the independent variables.

    The spatial block must not involve dependent variables, and its
    determinant must be a single invertible term.
    """
    n = len(indep)
    mat = [[Expr.zero()] * n for _ in range(n)]
    shift = [Expr.zero()] * n
    for i, c in enumerate(indep):
        e = group.maps[c]
        for mono, coeff in e.terms():
            hit = [(g, q) for g, q in mono.gens if isinstance(g, Symbol)
                   and g in group.coords]
            bad = [g for g, _ in hit if g not in indep]
            if bad:
                raise ExprError("spatial flow involves dependent variables")
            if not hit:
                shift[i] = shift[i].add(Expr({mono: coeff}))
            elif len(hit) == 1 and hit[0][1] == 1:
                j = indep.index(hit[0][0])
                rest = Monomial(tuple(gq for gq in mono.gens if gq[0] != hit[0][0]))
                mat[i][j] = mat[i][j].add(Expr({rest: coeff}))
            else:
                raise ExprError(f"spatial flow is not affine: {e}")
    if n != 2:
        raise ExprError("spatial inversion implemented for two variables")
    det = mat[0][0].mul(mat[1][1]).sub(mat[0][1].mul(mat[1][0]))
    x_new = [Expr.sym(indep[0]).sub(shift[0]), Expr.sym(indep[1]).sub(shift[1])]
    inv0 = mat[1][1].mul(x_new[0]).sub(mat[0][1].mul(x_new[1])).div(det)
    inv1 = mat[0][0].mul(x_new[1]).sub(mat[1][0].mul(x_new[0])).div(det)
    return {indep[0]: inv0, indep[1]: inv1}


def transform_solution(group: OneParameterGroup, problem: ProblemSpec,
                       f: Expr) -> Expr:
    """Transport an explicit solution u = f(x, t) along the flow.

    The graph of f is mapped pointwise; the result is the transported
    solution expressed in the original coordinate names.
    """
    dep = problem.deps[0]
    indep = list(problem.indep)
    inverse = _invert_spatial(group, indep)
    f_back = f.substitute(inverse)
    bindings = dict(inverse)
    bindings[dep] = f_back
    return group.maps[dep].substitute(bindings)
