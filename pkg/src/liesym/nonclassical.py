"""Nonclassical symmetry machinery on a second-order companion pair.

The evolution equation is rewritten as a first-order-in-time pair by naming
v = u_xx; a vector field with coefficients depending on (x, t, u, v) is then
required to be tangent to the intersection of the pair with its own invariant
surface conditions.  The residuals of that tangency requirement are the
nonclassical determining equations.  They are nonlinear in the unknown
coefficient functions, so this module generates them and checks candidates;
a restricted staged solve is available for polynomial coefficients.

Candidate checking reduces the residuals to a normal form using, in order,
the solved surface conditions (with their differential consequences), the
companion equations, and the v = u_xx dictionary.  Candidates whose
coefficients involve jet variables fall outside the declared coefficient
class; their residuals are still reported, but never certified.
"""

from __future__ import annotations

from dataclasses import dataclass, field as _dfield
from fractions import Fraction

from .expr import (
    Expr,
    ExprError,
    FuncAtom,
    JetVar,
    Monomial,
    PFrac,
    PPoly,
    Symbol,
    gen_key,
    jet,
)
from .jet import ProblemSpec, solve_leading, total_derivative
from .linalg import nullspace, rref_canonical_rows
from .vfield import VectorField

__all__ = [
    "AugmentedSystem",
    "SurfaceCondition",
    "CandidateReport",
    "RestrictedSolution",
    "surface_conditions",
    "nonclassical_determining",
    "check_candidate",
    "lift_classical",
    "solve_restricted",
]


def _single_term_inverse(e: Expr) -> Expr:
    """Reciprocal of a one-term expression; None when not one-term."""
    if len(e.t) != 1:
        return None
    (m, c), = e.t.items()
    return Expr({m.pow(-1): PFrac.const(1).div(c)})


class AugmentedSystem:
    """First-order-in-time companion pair obtained by naming v = u_xx.

    Every u-jet carrying two or more x-differentiations is renamed through
    the new dependent: delta1 = eq with u_{x^(k+2) t^m} -> v_{x^k t^m}, and
    delta2 = u_xx - v.  delta1 must be solvable for v_t.
    """

    def __init__(self, problem: ProblemSpec):
        if len(problem.indep) != 2 or len(problem.deps) != 1:
            raise ExprError("augmentation needs two base variables and one dependent")
        self.problem = problem
        self.x, self.t = problem.indep
        self.u = problem.deps[0]
        self.ns = problem.ns.clone()
        name = "v"
        k = 2
        while self.ns.lookup(name) is not None:
            name = f"v{k}"
            k += 1
        self.v = self.ns.dependent(name, (self.x.name, self.t.name))

        renames: dict = {}
        for j in problem.eq.jets():
            kx = j.order_in(self.x)
            if kx >= 2:
                target = jet(self.v, {self.x: kx - 2, self.t: j.order_in(self.t)})
                renames[j] = Expr.gen(target) if isinstance(target, JetVar) else Expr.sym(target)
        if not renames:
            raise ExprError("equation has no second x-derivative to rename")
        self.delta1 = problem.eq.substitute(renames)
        self.delta2 = Expr.gen(jet(self.u, {self.x: 2})).sub(Expr.sym(self.v))
        self.vt = jet(self.v, {self.t: 1})
        if self.vt not in set(self.delta1.jets()):
            raise ExprError("renamed equation does not involve v_t")
        self.vt_solved = solve_leading(self.delta1, self.vt)

        args = (self.x.name, self.t.name, self.u.name, self.v.name)
        self.xi_atom = self.ns.function("xi", args)
        self.phi_atom = self.ns.function("phi", args)
        self.psi_atom = self.ns.function("psi", args)

    def generic_field(self, mode: int) -> VectorField:
        """The unknown-coefficient field in the given normalization."""
        phis = {self.u: Expr.gen(self.phi_atom), self.v: Expr.gen(self.psi_atom)}
        if mode == 1:
            xis = {self.x: Expr.gen(self.xi_atom), self.t: Expr.number(1)}
        elif mode == 0:
            xis = {self.x: Expr.number(1)}
        else:
            raise ExprError(f"mode must be 0 or 1, got {mode!r}")
        return VectorField(xis, phis)

    def parse(self, text: str) -> Expr:
        from .parse import parse

        return parse(text, self.ns)


@dataclass
class SurfaceCondition:
    """Solved invariant surface conditions of a normalized field.

    `solved` sends a first-order jet to its on-surface value; the
    characteristics are the defining expressions Q = phi - sum(xi_i u_i).
    Prolongations are total derivatives of the solved relations, produced
    on demand.
    """

    mode: int
    solved: dict
    characteristics: list
    indep: tuple

    def prolonged(self, order: int) -> dict:
        out = dict(self.solved)
        frontier = dict(self.solved)
        while frontier:
            grown: dict = {}
            for j, rhs in frontier.items():
                if j.total_order >= order:
                    continue
                for d in self.indep:
                    jj = j.bump(d)
                    if jj in out or jj in grown:
                        continue
                    grown[jj] = total_derivative(rhs, d)
            out.update(grown)
            frontier = grown
        for _ in range(order + 2):
            changed = {}
            for j, rhs in out.items():
                hits = {g: out[g] for g in rhs.jets() if g in out}
                if hits:
                    changed[j] = rhs.substitute(hits)
            if not changed:
                break
            out.update(changed)
        return out


def _normalized_components(sys: AugmentedSystem, vf: VectorField, mode: int):
    """(xi, phi, psi) of the field scaled into the mode's normal form."""
    eta = vf.xi(sys.t)
    xi = vf.xi(sys.x)
    if mode == 1:
        if eta.is_zero():
            raise ExprError("the d/dt coefficient vanishes identically; use mode 0")
        inv = _single_term_inverse(eta)
        if inv is None:
            raise ExprError(f"cannot normalize the d/dt coefficient {eta}")
        return xi.mul(inv), vf.phi(sys.u).mul(inv), vf.phi(sys.v).mul(inv)
    if mode == 0:
        if not eta.is_zero():
            raise ExprError("mode 0 requires a vanishing d/dt coefficient")
        if xi.is_zero():
            raise ExprError("mode 0 requires a nonvanishing d/dx coefficient")
        inv = _single_term_inverse(xi)
        if inv is None:
            raise ExprError(f"cannot normalize the d/dx coefficient {xi}")
        return None, vf.phi(sys.u).mul(inv), vf.phi(sys.v).mul(inv)
    raise ExprError(f"mode must be 0 or 1, got {mode!r}")


def surface_conditions(sys: AugmentedSystem, vf: VectorField, mode: int) -> SurfaceCondition:
    """Invariant surface conditions of the field, solved for the jets the
    normalization distinguishes: u_t, v_t in mode 1 and u_x, v_x in mode 0."""
    xi, phi, psi = _normalized_components(sys, vf, mode)
    u_x = Expr.gen(jet(sys.u, {sys.x: 1}))
    v_x = Expr.gen(jet(sys.v, {sys.x: 1}))
    u_t = Expr.gen(jet(sys.u, {sys.t: 1}))
    v_t = Expr.gen(jet(sys.v, {sys.t: 1}))
    if mode == 1:
        solved = {
            jet(sys.u, {sys.t: 1}): phi.sub(xi.mul(u_x)),
            jet(sys.v, {sys.t: 1}): psi.sub(xi.mul(v_x)),
        }
        characteristics = [phi.sub(xi.mul(u_x)).sub(u_t), psi.sub(xi.mul(v_x)).sub(v_t)]
    else:
        solved = {jet(sys.u, {sys.x: 1}): phi, jet(sys.v, {sys.x: 1}): psi}
        characteristics = [phi.sub(u_x), psi.sub(v_x)]
    return SurfaceCondition(mode, solved, characteristics, (sys.x, sys.t))


def nonclassical_determining(sys: AugmentedSystem, mode: int) -> list:
    """Tangency residuals of the generic field on the companion pair.

    The prolonged field is applied to each equation and v_t is then removed
    through the solved first equation; nothing else is substituted, so the
    results are the raw determining expressions in the unknown functions."""
    vf = sys.generic_field(mode)
    out = []
    for delta in (sys.delta1, sys.delta2):
        r = vf.apply(delta)
        out.append(r.substitute({sys.vt: sys.vt_solved}))
    return out


# -- candidate reduction -------------------------------------------------------


class _Rewriter:
    """Normal form modulo the pair, the candidate's surface conditions, and
    their differential consequences.

    Mode 1 removes every t-differentiated jet through the surface conditions
    and renames v-jets through the dictionary; x-jets of order >= 3 are then
    removed through the compatibility relation between the two available
    eliminations of v_t, whenever its leading coefficient is a single
    invertible term.  Mode 0 removes every x-differentiated jet, takes v_t
    through the solved first equation, and resolves a leftover bare v through
    the reduced form of u_xx when that form is v-free.
    """

    LIMIT = 64

    def __init__(self, sys: AugmentedSystem, mode: int, xi, phi, psi):
        self.sys = sys
        self.mode = mode
        self.xi = xi if xi is not None else Expr.zero()
        self.phi = phi
        self.psi = psi
        self.memo: dict[JetVar, Expr] = {}
        self.notes: list[str] = []
        self.chain_ok = self._coefficients_admit_chain()
        if not self.chain_ok:
            self.notes.append(
                "surface-condition chain skipped: coefficients contain jets the"
                " chain would have to rewrite"
            )

    def _coefficients_admit_chain(self) -> bool:
        blocked = self.sys.t if self.mode == 1 else self.sys.x
        for c in (self.xi, self.phi, self.psi):
            for j in c.jets():
                if j.order_in(blocked) >= 1:
                    return False
        return True

    # each jet reduces by induction on its total order
    def _value(self, j: JetVar):
        got = self.memo.get(j)
        if got is not None:
            return got
        out = self._value_uncached(j)
        if out is not None:
            self.memo[j] = out
        return out

    def _value_uncached(self, j: JetVar):
        sx, st, u, v = self.sys.x, self.sys.t, self.sys.u, self.sys.v
        kx, kt = j.order_in(sx), j.order_in(st)
        if self.mode == 1:
            if kt >= 1 and self.chain_ok:
                if kx == 0 and kt == 1:
                    other = Expr.gen(jet(j.dep, {sx: 1}))
                    head = self.phi if j.dep == u else self.psi
                    return self.normal(head.sub(self.xi.mul(other)))
                d, parent = (sx, jet(j.dep, {sx: kx - 1, st: kt})) if kx >= 1 else (
                    st, jet(j.dep, {sx: kx, st: kt - 1}))
                base = self._value(parent)
                return self.normal(total_derivative(base, d))
            if j.dep == v and kt == 0 and kx >= 1:
                return Expr.gen(jet(u, {sx: kx + 2}))
            return None
        # mode 0
        if j.dep == u and kx >= 1 and self.chain_ok:
            if kx == 1 and kt == 0:
                return self.phi
            d, parent = (st, jet(u, {sx: kx, st: kt - 1})) if kt >= 1 else (
                sx, jet(u, {sx: kx - 1, st: 0}))
            return self.normal(total_derivative(self._value(parent), d))
        if j.dep == v and kx >= 1 and self.chain_ok:
            if kx == 1 and kt == 0:
                return self.psi
            d, parent = (st, jet(v, {sx: kx, st: kt - 1})) if kt >= 1 else (
                sx, jet(v, {sx: kx - 1, st: 0}))
            return self.normal(total_derivative(self._value(parent), d))
        if j.dep == v and kx == 0 and kt >= 1:
            if kt == 1:
                return self.normal(self.sys.vt_solved)
            return self.normal(total_derivative(self._value(jet(v, {st: kt - 1})), st))
        return None

    def normal(self, e: Expr) -> Expr:
        for _ in range(self.LIMIT):
            hits = {}
            for j in e.jets():
                val = self._value(j)
                if val is not None:
                    hits[j] = val
            if not hits:
                return e
            e = e.substitute(hits)
        raise ExprError("candidate reduction did not terminate")

    def _clear_bare_v(self, e: Expr) -> Expr:
        if not e.depends_on(self.sys.v):
            return e
        if self.mode == 1:
            return e.substitute({self.sys.v: Expr.gen(jet(self.sys.u, {self.sys.x: 2}))})
        if not self.chain_ok:
            return e
        uxx = self._value(jet(self.sys.u, {self.sys.x: 2}))
        uxx = self._clear_bare_v_value(uxx)
        if uxx is None:
            self.notes.append(
                "bare v kept: the reduced form of u_xx still involves v"
            )
            return e
        return self.normal(e.substitute({self.sys.v: uxx}))

    def _clear_bare_v_value(self, uxx: Expr):
        return None if uxx.depends_on(self.sys.v) else uxx

    def _compatibility(self) -> Expr:
        """The two eliminations of v_t must agree; mode 1 reduces the first
        companion equation to this relation among pure x-jets."""
        k = self.normal(self.sys.delta1)
        return self._clear_bare_v(k)

    def _solve_for(self, rel: Expr, target: JetVar):
        coeff = Expr.zero()
        rest = Expr.zero()
        tm = Monomial.make({target: 1})
        for m, c in rel.t.items():
            q = m.exponent(target)
            if q == 0:
                rest = rest.add(Expr({m: c}))
            elif q == 1:
                coeff = coeff.add(Expr({m.div(tm): c}))
            else:
                return None
        if coeff.is_zero() or coeff.depends_on(target):
            return None
        inv = _single_term_inverse(coeff)
        if inv is None:
            return None
        return rest.neg().mul(inv)

    def _top_x_jet(self, e: Expr, floor: int):
        best = None
        for j in e.jets():
            if j.dep == self.sys.u and j.order_in(self.sys.t) == 0 and j.order_in(self.sys.x) >= floor:
                if best is None or j.order_in(self.sys.x) > best.order_in(self.sys.x):
                    best = j
        return best

    def _eliminate_compat(self, e: Expr) -> Expr:
        if self.mode != 1 or not self.chain_ok:
            return e
        k = self._compatibility()
        if k.is_zero():
            return e
        lead = self._top_x_jet(k, 0)
        if lead is None:
            self.notes.append("compatibility relation is jet-free; left unused")
            return e
        base_order = lead.order_in(self.sys.x)
        rules: dict[JetVar, Expr] = {}
        rel_chain = {base_order: k}
        for _ in range(self.LIMIT):
            target = self._top_x_jet(e, base_order)
            if target is None:
                return e
            n = target.order_in(self.sys.x)
            rhs = rules.get(target)
            if rhs is None:
                top = max(rel_chain)
                rel = rel_chain[top]
                while top < n:
                    rel = total_derivative(rel, self.sys.x).substitute(rules)
                    top += 1
                    rel_chain[top] = rel
                rel = rel_chain[n].substitute(rules)
                rhs = self._solve_for(rel, target)
                if rhs is None:
                    self.notes.append(
                        f"compatibility elimination stopped at {target}:"
                        " leading coefficient is not a single invertible term"
                    )
                    return e
                rules[target] = rhs
            e = e.substitute({target: rhs})
        raise ExprError("compatibility elimination did not terminate")

    def reduce(self, e: Expr) -> Expr:
        out = self.normal(e)
        out = self._clear_bare_v(out)
        out = self._eliminate_compat(out)
        return out


@dataclass
class CandidateReport:
    """Outcome of a candidate check: the raw residuals, their normal forms,
    and whether the reduction semantics were exact for this candidate."""

    mode: int
    raw: list
    reduced: list
    passed: bool
    certified: bool
    jet_dependent: bool
    notes: list


def _is_jet_dependent(*components) -> bool:
    return any(c is not None and any(True for _ in c.jets()) for c in components)


def check_candidate(sys: AugmentedSystem, vf: VectorField, mode: int) -> CandidateReport:
    """Substitute a concrete candidate into the determining residuals and
    reduce to normal form.

    Coefficients are normalized into the mode's form first.  Candidates whose
    coefficients involve jet variables are handled by freezing those jets
    during the formal partials; the resulting residuals are reported but the
    check is flagged as not certified, since such candidates fall outside the
    declared coefficient class."""
    xi, phi, psi = _normalized_components(sys, vf, mode)
    bindings = {sys.phi_atom: phi, sys.psi_atom: psi}
    if mode == 1:
        bindings[sys.xi_atom] = xi
    raw = [r.substitute(bindings) for r in nonclassical_determining(sys, mode)]
    rw = _Rewriter(sys, mode, xi, phi, psi)
    reduced = [rw.reduce(r) for r in raw]
    jet_dep = _is_jet_dependent(xi, phi, psi)
    passed = all(r.is_zero() for r in reduced)
    notes = list(rw.notes)
    if jet_dep:
        notes.append(
            "coefficients involve jet variables; formal partials froze them,"
            " so this check reports residuals without certifying the candidate"
        )
    certified = passed and not jet_dep and rw.chain_ok
    return CandidateReport(mode, raw, reduced, passed, certified, jet_dep, notes)


def lift_classical(sys: AugmentedSystem, vf: VectorField) -> VectorField:
    """Extend a point symmetry of the original equation to the companion
    pair: v = u_xx transforms by the second prolongation, so the v-component
    is the prolonged u_xx coefficient with u_xx renamed to v."""
    uxx = jet(sys.u, {sys.x: 2})
    coeff = vf.prolong([uxx])[uxx]
    psi = coeff.substitute({uxx: Expr.sym(sys.v)})
    for j in psi.jets():
        raise ExprError(f"lifted v-component keeps the jet {j}; not a point field on (x,t,u,v)")
    xis = {s: vf.xi(s) for s in (sys.x, sys.t) if not vf.xi(s).is_zero()}
    phis = {sys.u: vf.phi(sys.u), sys.v: psi}
    return VectorField(xis, phis)


# -- restricted polynomial solve -----------------------------------------------


def _poly_monomials(variables, degree: int) -> list:
    out = [Monomial.one()]
    seen = {Monomial.one()}
    frontier = [Monomial.one()]
    for _ in range(degree):
        grown = []
        for m in frontier:
            for s in variables:
                ms = m.mul(Monomial.make({s: 1}))
                if ms not in seen:
                    seen.add(ms)
                    grown.append(ms)
        grown.sort(key=lambda m: tuple(-m.exponent(s) for s in variables))
        out.extend(grown)
        frontier = grown
    return out


def _pfrac_substitute(c: PFrac, values: dict) -> PFrac:
    def on_poly(p: PPoly) -> PFrac:
        acc = PFrac.const(0)
        for pm, val in p.terms.items():
            term = PFrac.const(val)
            for s, k in pm:
                base = values.get(s)
                if base is None:
                    base = PFrac.sym(s)
                for _ in range(k):
                    term = term.mul(base)
            acc = acc.add(term)
        return acc

    return on_poly(c.num).div(on_poly(c.den))


def _rows_of(residuals, unknowns) -> tuple[list, list]:
    """(linear rows, nonlinear rows) of the coefficient system; a linear row
    is ({unknown: PFrac}, const PFrac), a nonlinear row is a plain PFrac."""
    unk = set(unknowns)
    linear = []
    nonlinear = []
    for res in residuals:
        for _, coeff in res.terms():
            if coeff.den.symbols() & unk:
                raise ExprError(f"unknowns in a denominator: {coeff}")
            by_unknown: dict = {}
            const: dict = {}
            bad = False
            for pm, val in coeff.num.terms.items():
                hit = [(s, k) for s, k in pm if s in unk]
                if not hit:
                    const[pm] = val
                elif len(hit) == 1 and hit[0][1] == 1:
                    s = hit[0][0]
                    rest = tuple(sk for sk in pm if sk[0] != s)
                    bucket = by_unknown.setdefault(s, {})
                    bucket[rest] = bucket.get(rest, Fraction(0)) + val
                else:
                    bad = True
                    break
            if bad:
                nonlinear.append(coeff)
            else:
                row = {s: PFrac(PPoly(p), coeff.den) for s, p in by_unknown.items()}
                row = {s: c for s, c in row.items() if not c.is_zero()}
                k = PFrac(PPoly(const), coeff.den)
                if row or not k.is_zero():
                    linear.append((row, k))
    return linear, nonlinear


@dataclass
class RestrictedSolution:
    """Solution family of the restricted polynomial solve: one field per
    basis direction of the solved coefficient space, plus diagnostics."""

    mode: int
    degree: int
    fields: list
    components: list
    diagnostics: list


def solve_restricted(sys: AugmentedSystem, mode: int = 1, degree: int = 1,
                     rounds: int = 4) -> RestrictedSolution:
    """Solve the determining system over polynomial coefficients by stages.

    The coefficients of xi (mode 1 only), phi and psi are polynomials in
    (x, t, u, v) of bounded total degree.  The reduced residuals split into
    rows polynomial in the unknown constants; rows that are linear are solved
    exactly, the solution is substituted back, and the process repeats until
    every row vanishes.  Rows that stay nonlinear after the given number of
    rounds are reported as an error, since certifying them is out of scope."""
    variables = [sys.x, sys.t, sys.u, sys.v]
    monos = _poly_monomials(variables, degree)
    heads = ["xi", "phi", "psi"] if mode == 1 else ["phi", "psi"]
    slots = [(h, m) for h in heads for m in monos]
    unknowns = [Symbol(f"_n{i + 1}", "parameter", False, 20_000 + i) for i in range(len(slots))]

    def components(vector):
        comp = {h: Expr.zero() for h in heads}
        for (h, m), c in zip(slots, vector):
            if not (c.is_zero() if isinstance(c, PFrac) else False):
                comp[h] = comp[h].add(Expr({m: c}))
        return comp

    generic = components([PFrac.sym(c) for c in unknowns])
    xi = generic.get("xi")
    phi, psi = generic["phi"], generic["psi"]

    residuals = nonclassical_determining(sys, mode)
    bindings = {sys.phi_atom: phi, sys.psi_atom: psi}
    if mode == 1:
        bindings[sys.xi_atom] = xi
    raw = [r.substitute(bindings) for r in residuals]
    rw = _Rewriter(sys, mode, xi, phi, psi)
    reduced = [rw.reduce(r) for r in raw]

    diagnostics = list(rw.notes)
    current = list(unknowns)  # unknowns still free, as PFrac images below
    images = {c: PFrac.sym(c) for c in unknowns}

    for round_no in range(rounds):
        subbed = [r.map_coeff(lambda c: _pfrac_substitute(c, images)) for r in reduced]
        linear, nonlinear = _rows_of(subbed, current)
        if not linear and not nonlinear:
            break
        if not linear:
            raise ExprError(
                "restricted solve stalled on nonlinear rows: "
                + "; ".join(str(c) for c in nonlinear[:4])
            )
        for _, k in linear:
            if not k.is_zero():
                raise ExprError("determining rows are not homogeneous")
        matrix = [[row.get(c, PFrac.const(0)) for c in current] for row, _ in linear]
        basis, diags = nullspace(matrix, len(current))
        diagnostics.extend(diags)
        fresh = [
            Symbol(f"_n{len(unknowns) + round_no * 100 + j + 1}", "parameter", False,
                   21_000 + round_no * 100 + j)
            for j in range(len(basis))
        ]
        new_images = {}
        for i, c in enumerate(current):
            acc = PFrac.const(0)
            for j, vec in enumerate(basis):
                acc = acc.add(vec[i].mul(PFrac.sym(fresh[j])))
            new_images[c] = acc
        images = {c: _pfrac_substitute(img, new_images) for c, img in images.items()}
        current = fresh
        if not nonlinear:
            leftover = [
                r.map_coeff(lambda c: _pfrac_substitute(c, images)) for r in reduced
            ]
            if all(r.is_zero() for r in leftover):
                break
    else:
        raise ExprError("restricted solve did not stabilize")

    final = [r.map_coeff(lambda c: _pfrac_substitute(c, images)) for r in reduced]
    if any(not r.is_zero() for r in final):
        raise ExprError("restricted solve left a nonzero residual")

    # one field per remaining free constant, canonicalized
    vectors = []
    for j, c in enumerate(current):
        unit = {cc: PFrac.const(1 if cc == c else 0) for cc in current}
        vectors.append([_pfrac_substitute(images[orig], unit) for orig in unknowns])
    vectors = rref_canonical_rows(vectors)

    fields = []
    comps = []
    for vec in vectors:
        comp = components(vec)
        comps.append(comp)
        if mode == 1:
            xis = {sys.x: comp["xi"], sys.t: Expr.number(1)}
        else:
            xis = {sys.x: Expr.number(1)}
        phis = {sys.u: comp["phi"], sys.v: comp["psi"]}
        fields.append(VectorField(xis, phis))
    return RestrictedSolution(mode, degree, fields, comps, diagnostics)
