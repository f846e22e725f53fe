"""Symmetry reduction: invariant charts, reduced equations, back-substitution.

A chart is built by exponentiating the generator, picking a pivot coordinate
whose flow can be inverted exactly (translation or pure scaling), and
evaluating the remaining flow maps on the slice.  The dependent invariant is
normalized by dropping additive terms that are functions of the similarity
variable alone.  Reduction itself is a raw chain-rule substitution: the only
rewriting applied afterwards is expressing base-variable cofactors as powers
of the similarity variable, plus an optional overall monomial factor that is
stripped and reported.
"""

from __future__ import annotations

from fractions import Fraction

from .expr import (
    ExpAtom,
    Expr,
    ExprError,
    JetVar,
    Monomial,
    PFrac,
    Symbol,
    expr_str,
    gen_key,
    jet,
)
from .flows import exponentiate
from .jet import ProblemSpec
from .vfield import VectorField

__all__ = [
    "InvariantChart",
    "ReducedEquation",
    "back_substitute",
    "build_chart",
    "reduce_pde",
    "verify_differential_invariant",
]

_FLOW_PARAM = Symbol("_s", "group", False, 4_000)


class InvariantChart:
    """Similarity variable y, dependent invariant w, and the reconstruction
    of the original dependent variable, for one symmetry generator."""

    def __init__(self, problem: ProblemSpec, field: VectorField,
                 y_sym: Symbol, w_sym: Symbol,
                 y_expr: Expr, w_expr: Expr, reconstruction: Expr, ns):
        self.problem = problem
        self.field = field
        self.y = y_sym
        self.w = w_sym
        self.y_expr = y_expr
        self.w_expr = w_expr
        self.reconstruction = reconstruction
        self.ns = ns

    def __repr__(self):
        return (f"InvariantChart({self.y.name} = {expr_str(self.y_expr)}, "
                f"{self.w.name} = {expr_str(self.w_expr)})")


def _pivot_binding(group, pivot: Symbol):
    """Invert the pivot's flow map: returns the substitution binding for the
    group parameter, or None when the map cannot be inverted exactly."""
    s = group.param
    m = group.maps[pivot]
    # translation: pivot + beta*s, slice at 0
    beta = m.coefficient(Monomial.make({s: 1}))
    rebuilt = Expr.sym(pivot).add(Expr({Monomial.make({s: 1}): beta}))
    if not beta.is_zero() and m.sub(rebuilt).is_zero():
        value = Expr.sym(pivot).scale(PFrac.const(-1).div(beta))
        return {s: value}
    # pure scaling: pivot * exp(q s), slice at 1
    terms = m.terms()
    if len(terms) == 1:
        mono, coeff = terms[0]
        powers = mono.powers()
        q = powers.get(ExpAtom(s))
        if (coeff.is_one() and q is not None
                and powers.get(pivot) == 1 and len(powers) == 2):
            star = Expr.sym(pivot).pow_rational(Fraction(-1, 1) / q)
            return {ExpAtom(s): star}
    return None


def _is_power_of(mono: Monomial, base: Monomial):
    """Exponent k with mono == base^k, or None."""
    if not base.gens:
        return None
    g0, e0 = base.gens[0]
    k = mono.exponent(g0) / e0
    if k == 0:
        return None
    for g, e in base.gens:
        if mono.exponent(g) != k * e:
            return None
    if len(mono.gens) != len(base.gens):
        return None
    return k


def build_chart(problem: ProblemSpec, field: VectorField,
                y_name: str = "y", w_name: str = "w") -> InvariantChart:
    """Invariant chart for a generator, from its exact flow."""
    coords = list(problem.indep) + list(problem.deps)
    dep = problem.deps[0]
    group = exponentiate(field, coords, _FLOW_PARAM)
    binding = None
    other = None
    for pivot in [problem.indep[1], problem.indep[0]]:
        binding = _pivot_binding(group, pivot)
        if binding is not None:
            other = problem.indep[0] if pivot == problem.indep[1] else problem.indep[1]
            break
    if binding is None:
        raise ExprError("no independent coordinate has an invertible flow map")
    y_expr = group.maps[other].substitute(binding)
    w_expr = group.maps[dep].substitute(binding)
    for e in (y_expr, w_expr):
        for g in e.generators():
            if g == _FLOW_PARAM or g == ExpAtom(_FLOW_PARAM):
                raise ExprError("slice substitution left the group parameter")
    # the invariants must annihilate under the generator
    for e in (y_expr, w_expr):
        r = field.base_apply(e)
        if not r.is_zero():
            raise ExprError(f"chart expression is not invariant: {expr_str(r)}")
    w_expr = _normalize_dependent(w_expr, y_expr, dep)
    ns = problem.ns.clone()
    y_sym = ns.reduction(y_name)
    w_sym = ns.dependent(w_name, (y_name,))
    reconstruction = _solve_reconstruction(w_expr, dep, w_sym)
    return InvariantChart(problem, field, y_sym, w_sym, y_expr, w_expr,
                          reconstruction, ns)


def _normalize_dependent(w_expr: Expr, y_expr: Expr, dep: Symbol) -> Expr:
    """Drop additive constants and pure powers of the similarity variable."""
    y_terms = y_expr.terms()
    y_mono = y_terms[0][0] if len(y_terms) == 1 and y_terms[0][1].is_one() else None
    out = Expr.zero()
    for mono, coeff in w_expr.terms():
        keep = Expr({mono: coeff})
        if mono.exponent(dep) == 0:
            if mono == Monomial.one():
                continue
            if y_mono is not None and _is_power_of(mono, y_mono) is not None:
                continue
        out = out.add(keep)
    if not out.depends_on(dep):
        raise ExprError("normalization removed the dependent variable")
    return out


def _solve_reconstruction(w_expr: Expr, dep: Symbol, w_sym: Symbol) -> Expr:
    """Solve w = w_expr(x, t, u) for u; the u-coefficient must be a single
    invertible term."""
    lead = Expr.zero()
    rest = Expr.zero()
    for mono, coeff in w_expr.terms():
        q = mono.exponent(dep)
        if q == 0:
            rest = rest.add(Expr({mono: coeff}))
        elif q == 1:
            stripped = Monomial(tuple(gq for gq in mono.gens if gq[0] != dep))
            lead = lead.add(Expr({stripped: coeff}))
        else:
            raise ExprError("dependent invariant is not affine in the "
                            "dependent variable")
    if len(lead.terms()) != 1:
        raise ExprError("dependent coefficient is not a single term")
    return Expr.sym(w_sym).sub(rest).div(lead)


def chart_derivative(chart: InvariantChart, e: Expr, d: Symbol) -> Expr:
    """Total derivative in a base direction of an expression in the base
    variables and the chart's dependent invariant."""
    dy = chart.y_expr.partial(d)

    def rule(g):
        if isinstance(g, Symbol):
            if g == d:
                return Expr.number(1)
            if g == chart.w:
                return Expr.gen(jet(chart.w, {chart.y: 1})).mul(dy)
        if isinstance(g, JetVar) and g.dep == chart.w:
            return Expr.gen(g.bump(chart.y)).mul(dy)
        return None

    return e.derive(rule)


class ReducedEquation:
    def __init__(self, chart: InvariantChart, expr: Expr, stripped: Monomial):
        self.chart = chart
        self.expr = expr
        self.stripped = stripped

    def __repr__(self):
        s = expr_str(self.expr)
        if self.stripped != Monomial.one():
            s += f"  [overall factor removed: {self.stripped}]"
        return f"ReducedEquation({s})"


def reduce_pde(chart: InvariantChart) -> ReducedEquation:
    """Chain-rule substitution of the reconstruction into the equation.

    The result is the raw residual with base-variable cofactors rewritten as
    powers of the similarity variable; no further normalization is applied.
    An overall base-variable monomial factor, if one is needed to finish the
    rewriting, is stripped and reported.
    """
    problem = chart.problem
    dep = problem.deps[0]
    bindings: dict = {dep: chart.reconstruction}
    cache: dict[tuple, Expr] = {(): chart.reconstruction}

    def derived(orders: tuple) -> Expr:
        if orders in cache:
            return cache[orders]
        prev = derived(orders[:-1])
        val = chart_derivative(chart, prev, orders[-1])
        cache[orders] = val
        return val

    for j in sorted(problem.eq.jets(), key=gen_key):
        path = []
        for dsym, k in j.orders:
            path.extend([dsym] * k)
        bindings[j] = derived(tuple(path))
    raw = problem.eq.substitute(bindings)
    expr, stripped = _rewrite_in_similarity(raw, chart)
    return ReducedEquation(chart, expr, stripped)


def _rewrite_in_similarity(raw: Expr, chart: InvariantChart):
    base = set(chart.problem.indep)
    try:
        return _rewrite_terms(raw, chart, base), Monomial.one()
    except ExprError:
        pass
    # strip the common base-variable content and retry
    seen = set()
    for mono, _ in raw.terms():
        seen.update(g for g, _q in mono.gens if g in base)
    content: dict = {}
    for g in sorted(seen, key=lambda s: (s.pos, s.name)):
        low = min(mono.exponent(g) for mono, _ in raw.terms())
        if low != 0:
            content[g] = low
    factor = Monomial.make(content)
    if factor == Monomial.one():
        raise ExprError("reduction left explicit base variables")
    inv = Monomial.make({g: -q for g, q in factor.gens})
    shifted = Expr({m.mul(inv): c for m, c in raw.terms()})
    return _rewrite_terms(shifted, chart, base), factor


def _rewrite_terms(raw: Expr, chart: InvariantChart, base: set) -> Expr:
    y_terms = chart.y_expr.terms()
    y_mono = (y_terms[0][0]
              if len(y_terms) == 1 and y_terms[0][1].is_one() else None)
    out = Expr.zero()
    for mono, coeff in raw.terms():
        xt = Monomial.make({g: q for g, q in mono.gens if g in base})
        rest = Monomial.make({g: q for g, q in mono.gens if g not in base})
        if xt == Monomial.one():
            out = out.add(Expr({mono: coeff}))
            continue
        if y_mono is None:
            raise ExprError(
                f"reduction left explicit base variables in {expr_str(Expr({mono: coeff}))}"
            )
        k = _is_power_of(xt, y_mono)
        if k is None:
            raise ExprError(
                f"base cofactor {xt} is not a power of the similarity variable"
            )
        out = out.add(Expr({rest.mul(Monomial.make({chart.y: k})): coeff}))
    return out


def back_substitute(chart: InvariantChart, reduced: ReducedEquation,
                    solution: Expr) -> Expr:
    """Lift a solution of the reduced equation back to the base variables.

    The candidate is checked against the reduced equation first, then the
    reconstructed expression is verified against the original equation; both
    residuals must vanish identically.
    """
    bindings: dict = {chart.w: solution}
    for j in reduced.expr.jets():
        if j.dep != chart.w:
            continue
        val = solution
        for dsym, k in j.orders:
            for _ in range(k):
                val = val.partial(dsym)
        bindings[j] = val
    ode_residual = reduced.expr.substitute(bindings)
    if not ode_residual.is_zero():
        raise ExprError(
            "candidate fails the reduced equation; residual = "
            f"{expr_str(ode_residual)}"
        )
    lifted = chart.reconstruction.substitute(
        {chart.w: solution.substitute({chart.y: chart.y_expr})}
    )
    full_residual = chart.problem.residual_of(lifted)
    if not full_residual.is_zero():
        raise ExprError(
            "reconstructed expression fails the equation; residual = "
            f"{expr_str(full_residual)}"
        )
    return lifted


def verify_differential_invariant(field: VectorField, expr: Expr):
    """Residual of the prolonged action on a candidate invariant (off-shell);
    zero means the candidate is a differential invariant."""
    residual = field.apply(expr)
    return residual.is_zero(), residual
