"""Determining systems for point symmetries and their exact solution.

The ansatz is polynomial: every component of the unknown vector field is a
linear combination of base-variable monomials up to a chosen total degree,
with undetermined constant coefficients.  The invariance residual is split by
its full monomial support into rows that are linear in those coefficients,
and the nullspace over the parameter field gives the symmetry algebra.
"""

from __future__ import annotations

from fractions import Fraction

from .expr import Expr, ExprError, Monomial, PFrac, Symbol
from .jet import ProblemSpec
from .linalg import extract_rows, nullspace, rref_canonical_rows, solve_expansion
from .vfield import VectorField, invariance_residual

__all__ = [
    "PolynomialAnsatz",
    "solve_point_symmetries",
    "coordinates_of",
    "span_contains",
]


def _base_monomials(variables: list[Symbol], degree: int) -> list[Monomial]:
    """All monomials in the given variables of total degree <= degree, ordered
    by degree then by exponent tuple."""
    out = [Monomial.one()]
    seen = {Monomial.one()}
    frontier = [Monomial.one()]
    for _ in range(degree):
        nxt = []
        for m in frontier:
            for v in variables:
                mv = m.mul(Monomial.make({v: 1}))
                if mv not in seen:
                    seen.add(mv)
                    nxt.append(mv)
        nxt.sort(key=lambda m: tuple(-m.exponent(v) for v in variables))
        out.extend(nxt)
        frontier = nxt
    return out


class PolynomialAnsatz:
    """Undetermined vector field with polynomial components.

    Slots are ordered: one block per independent variable, then one per
    dependent variable, each running over the monomial list.
    """

    def __init__(self, problem: ProblemSpec, degree: int):
        self.problem = problem
        self.degree = degree
        variables = list(problem.indep) + list(problem.deps)
        self.monomials = _base_monomials(variables, degree)
        self.slots = [(v, m) for v in variables for m in self.monomials]
        self.unknowns = [
            Symbol(f"_c{i + 1}", "parameter", False, 10_000 + i)
            for i in range(len(self.slots))
        ]

    def field(self) -> VectorField:
        comps: dict[Symbol, Expr] = {}
        for (v, m), c in zip(self.slots, self.unknowns):
            term = Expr({m: PFrac.sym(c)})
            comps[v] = comps.get(v, Expr.zero()).add(term)
        xis = {v: comps[v] for v in self.problem.indep}
        phis = {v: comps[v] for v in self.problem.deps}
        return VectorField(xis, phis)

    def instantiate(self, vector: list[PFrac]) -> VectorField:
        xis: dict[Symbol, Expr] = {}
        phis: dict[Symbol, Expr] = {}
        for (v, m), c in zip(self.slots, vector):
            if c.is_zero():
                continue
            target = xis if v.kind == "independent" else phis
            target[v] = target.get(v, Expr.zero()).add(Expr({m: c}))
        return VectorField(xis, phis)


def solve_point_symmetries(problem: ProblemSpec, degree: int = 2):
    """Classical point symmetries with polynomial components.

    Returns (basis fields, diagnostics).  The basis is canonicalized to
    reduced echelon form over the ansatz coordinates, so repeated runs give
    identical output.
    """
    ansatz = PolynomialAnsatz(problem, degree)
    residual = invariance_residual(problem, ansatz.field())
    system = extract_rows(residual, ansatz.unknowns)
    vectors, diagnostics = nullspace(system.matrix(), len(ansatz.unknowns))
    vectors = rref_canonical_rows(vectors)
    fields = [ansatz.instantiate(v) for v in vectors]
    for f in fields:
        check = invariance_residual(problem, f)
        if not check.is_zero():
            raise ExprError(f"solver produced a non-symmetry: residual {check}")
    return fields, diagnostics


def coordinates_of(vf: VectorField, ansatz: PolynomialAnsatz) -> list[PFrac]:
    """Coordinates of a field in the ansatz slot basis; errors when a
    component lies outside the monomial support."""
    coords = []
    for v, m in ansatz.slots:
        comp = vf.xi(v) if v.kind == "independent" else vf.phi(v)
        coords.append(comp.coefficient(m))
    # completeness check
    for v in list(ansatz.problem.indep) + list(ansatz.problem.deps):
        comp = vf.xi(v) if v.kind == "independent" else vf.phi(v)
        for m, _ in comp.terms():
            if m not in ansatz.monomials:
                raise ExprError(f"component monomial {m} outside ansatz support")
    return coords


def span_contains(fields: list[VectorField], candidate: VectorField,
                  ansatz: PolynomialAnsatz) -> bool:
    """Exact span-membership test in ansatz coordinates."""
    cols = [coordinates_of(f, ansatz) for f in fields]
    target = coordinates_of(candidate, ansatz)
    return solve_expansion(cols, target) is not None
