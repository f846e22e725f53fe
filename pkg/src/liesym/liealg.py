"""Finite-dimensional Lie algebras of vector fields.

Commutator tables, derived series, exact adjoint exponentials, and the greedy
orbit reduction used to classify one-dimensional subalgebras.  The adjoint
convention is

    adjoint_exp(i, eps) = Ad(exp(eps * v_i)) = exp(-eps * ad_i),

so first-order entries read v_j - eps*[v_i, v_j].  Matrix exponentials are
exact: Putzer's recurrence over the rational eigenvalues, with polynomial
entries exactly when the adjoint map is nilpotent.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm

from .expr import (
    ExpAtom,
    Expr,
    ExprError,
    Monomial,
    PFrac,
    Symbol,
    expr_str,
    gen_key,
)
from .linalg import rref, solve_expansion
from .vfield import VectorField

__all__ = [
    "AdjointMatrix",
    "LieAlgebra",
    "OrbitResult",
    "bracket",
]


def bracket(v: VectorField, w: VectorField) -> VectorField:
    """Lie bracket [v, w] of two vector fields on the base space."""
    coords = sorted(
        set(v.xis) | set(w.xis) | set(v.phis) | set(w.phis),
        key=lambda s: (s.kind != "independent", s.pos, s.name),
    )
    xis: dict[Symbol, Expr] = {}
    phis: dict[Symbol, Expr] = {}
    for c in coords:
        if c.kind == "independent":
            comp = v.base_apply(w.xi(c)).sub(w.base_apply(v.xi(c)))
            if not comp.is_zero():
                xis[c] = comp
        else:
            comp = v.base_apply(w.phi(c)).sub(w.base_apply(v.phi(c)))
            if not comp.is_zero():
                phis[c] = comp
    return VectorField(xis, phis)


def _field_slots(fields) -> list[tuple[Symbol, Monomial]]:
    slots = set()
    for f in fields:
        for coord, comp in list(f.xis.items()) + list(f.phis.items()):
            for m, _ in comp.terms():
                slots.add((coord, m))
    def slot_key(slot):
        coord, m = slot
        mkey = tuple((gen_key(g), q) for g, q in m.gens)
        return (coord.kind != "independent", coord.pos, coord.name, mkey)
    return sorted(slots, key=slot_key)


def _coords_in_slots(f: VectorField, slots) -> list[PFrac]:
    out = []
    for coord, m in slots:
        comp = f.xi(coord) if coord.kind == "independent" else f.phi(coord)
        out.append(comp.coefficient(m))
    return out


class AdjointMatrix:
    """Exact matrix of Ad(exp(eps*v_i)) in the algebra basis (column action)."""

    def __init__(self, index: int, eps: Symbol, entries: list[list[Expr]],
                 eigenvalues: list[Fraction]):
        self.index = index
        self.eps = eps
        self.entries = entries
        self.eigenvalues = eigenvalues

    @property
    def polynomial(self) -> bool:
        """True when the exponential series terminates (nilpotent adjoint)."""
        return all(v == 0 for v in self.eigenvalues)

    def at(self, value) -> list[list[PFrac]]:
        """Entries with eps bound to an exact rational value.

        Only polynomial entries can be evaluated at a nonzero rational; a
        genuine exponential has no exact rational value there.
        """
        v = value if isinstance(value, PFrac) else PFrac.const(Fraction(value))
        has_exp = any(
            isinstance(g, ExpAtom)
            for row in self.entries
            for e in row
            for m, _ in e.terms()
            for g, _q in m.gens
        )
        if has_exp and not v.is_zero():
            raise ExprError("cannot bind a nonzero value into an exponential entry")
        bind = {self.eps: Expr({Monomial.one(): v}) if not v.is_zero() else Expr.zero()}
        if has_exp:
            bind[ExpAtom(self.eps)] = Expr.number(1)
        out = []
        for row in self.entries:
            new = []
            for e in row:
                ev = e.substitute(bind)
                if not ev.is_const():
                    raise ExprError(f"entry did not evaluate to a constant: {ev}")
                new.append(ev.const_coeff())
            out.append(new)
        return out

    def apply(self, value, vec: list[PFrac]) -> list[PFrac]:
        m = self.at(value)
        n = len(vec)
        out = []
        for i in range(n):
            acc = PFrac.const(0)
            for j in range(n):
                acc = acc.add(m[i][j].mul(vec[j]))
            out.append(acc)
        return out

    def first_order(self) -> list[list[Expr]]:
        """Entries truncated after the linear term in eps."""
        zero_bind = {self.eps: Expr.number(0), ExpAtom(self.eps): Expr.number(1)}
        out = []
        for row in self.entries:
            new = []
            for e in row:
                c0 = e.substitute(zero_bind)
                c1 = e.partial(self.eps).substitute(zero_bind)
                new.append(c0.add(c1.mul(Expr.sym(self.eps))))
            out.append(new)
        return out


def _trace(m: list[list[PFrac]]) -> PFrac:
    t = PFrac.const(0)
    for i in range(len(m)):
        t = t.add(m[i][i])
    return t


def _mat_mul(a, b):
    n = len(a)
    return [
        [
            _sum_pfrac(a[i][k].mul(b[k][j]) for k in range(n))
            for j in range(n)
        ]
        for i in range(n)
    ]


def _sum_pfrac(items) -> PFrac:
    acc = PFrac.const(0)
    for it in items:
        acc = acc.add(it)
    return acc


def _char_poly(m: list[list[PFrac]]) -> list[Fraction]:
    """Monic characteristic polynomial coefficients [c1..cn] with
    p(z) = z^n + c1 z^(n-1) + ... + cn, via the trace recurrence."""
    n = len(m)
    coeffs: list[PFrac] = []
    mk = [row[:] for row in m]
    for k in range(1, n + 1):
        ck = _trace(mk).mul(PFrac.const(Fraction(-1, k)))
        coeffs.append(ck)
        if k == n:
            break
        shifted = [
            [mk[i][j].add(ck) if i == j else mk[i][j] for j in range(n)]
            for i in range(n)
        ]
        mk = _mat_mul(m, shifted)
    out = []
    for c in coeffs:
        if not c.is_const():
            raise ExprError(
                "matrix exponential needs a parameter-free characteristic "
                f"polynomial; found coefficient {c}"
            )
        out.append(c.const_value())
    return out


def _rational_eigenvalues(m: list[list[PFrac]]) -> list[Fraction]:
    """All eigenvalues with multiplicity; fails if any root is irrational."""
    n = len(m)
    coeffs = _char_poly(m)
    poly = [Fraction(1)] + coeffs  # descending powers
    roots: list[Fraction] = []
    for _ in range(n):
        root = _find_rational_root(poly)
        if root is None:
            raise ExprError(
                "characteristic polynomial has a non-rational root; "
                "no exact closed form"
            )
        roots.append(root)
        poly = _deflate(poly, root)
    return sorted(roots)


def _find_rational_root(poly: list[Fraction]):
    # monic rational polynomial: substitute z = w/D to get a monic integer
    # polynomial whose rational roots are integers
    deg = len(poly) - 1
    if deg == 0:
        return None
    d = lcm(*[c.denominator for c in poly]) if len(poly) > 1 else 1
    ipoly = [int(poly[k] * d ** k) for k in range(len(poly))]
    const = ipoly[-1]
    if const == 0:
        return Fraction(0)
    cands = set()
    for k in range(1, abs(const) + 1):
        if k * k > abs(const):
            break
        if const % k == 0:
            cands.update({k, -k, abs(const) // k, -(abs(const) // k)})
    for w in sorted(cands, key=lambda v: (abs(v), v)):
        val = 0
        for c in ipoly:
            val = val * w + c
        if val == 0:
            return Fraction(w, d)
    return None


def _deflate(poly: list[Fraction], root: Fraction) -> list[Fraction]:
    out = [poly[0]]
    for c in poly[1:-1]:
        out.append(c + out[-1] * root)
    return out


def _exp_term(eps: Symbol, lam: Fraction) -> Expr:
    if lam == 0:
        return Expr.number(1)
    return Expr.gen(ExpAtom(eps)).pow_rational(lam)


def _integrate_exp_poly(f: Expr, eps: Symbol) -> Expr:
    """Definite integral from 0 to eps of a polynomial-exponential expression
    in eps.  Terms are c * eps^m * exp(q*eps) with m >= 0 and rational q."""
    total = Expr.zero()
    for mono, coeff in f.terms():
        m = 0
        q = Fraction(0)
        for g, p in mono.gens:
            if isinstance(g, Symbol) and g == eps:
                m = int(p)
            elif isinstance(g, ExpAtom) and g.arg == eps:
                q = Fraction(p)
            else:
                raise ExprError(f"unexpected generator under the integral: {g}")
        total = total.add(_int_term(eps, m, q).scale(coeff))
    return total


def _int_term(eps: Symbol, m: int, q: Fraction) -> Expr:
    e = Expr.sym(eps)
    if q == 0:
        return e.pow_int(m + 1).scale(Fraction(1, m + 1))
    E = _exp_term(eps, q)
    # antiderivative recursion, then subtract the value at zero
    def antider(k: int) -> tuple[Expr, Fraction]:
        if k == 0:
            return E.scale(Fraction(1) / q), Fraction(1) / q
        prev, prev0 = antider(k - 1)
        cur = e.pow_int(k).mul(E).scale(Fraction(1) / q).sub(prev.scale(Fraction(k) / q))
        return cur, -Fraction(k) / q * prev0
    expr, at0 = antider(m)
    return expr.sub(Expr.number(at0))


def putzer_exponential(m: list[list[PFrac]], eps: Symbol):
    """Exact exp(eps*M) for a matrix with rational eigenvalues.

    Returns (entries, eigenvalues); entries are expressions in eps and
    exp-atoms of eps with coefficients in the parameter field.
    """
    n = len(m)
    lams = _rational_eigenvalues(m)
    r: list[Expr] = [_exp_term(eps, lams[0])]
    for k in range(1, n):
        decay = _exp_term(eps, -lams[k])
        integrand = decay.mul(r[k - 1])
        r.append(_exp_term(eps, lams[k]).mul(_integrate_exp_poly(integrand, eps)))
    zero = PFrac.const(0)
    one = PFrac.const(1)
    p = [[one if i == j else zero for j in range(n)] for i in range(n)]
    entries = [[Expr.zero() for _ in range(n)] for _ in range(n)]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if not p[i][j].is_zero():
                    entries[i][j] = entries[i][j].add(r[k].scale(p[i][j]))
        if k < n - 1:
            shifted = [
                [m[i][j].sub(PFrac.const(lams[k])) if i == j else m[i][j]
                 for j in range(n)]
                for i in range(n)
            ]
            p = _mat_mul(p, shifted)
    _check_exponential(m, entries, eps)
    return entries, lams


def _check_exponential(m, entries, eps):
    n = len(m)
    for i in range(n):
        for j in range(n):
            lhs = entries[i][j].partial(eps)
            rhs = Expr.zero()
            for k in range(n):
                rhs = rhs.add(entries[k][j].scale(m[i][k]))
            if not lhs.sub(rhs).is_zero():
                raise ExprError("matrix exponential failed its defining equation")


class OrbitResult:
    def __init__(self, representative, word, start):
        self.representative = representative
        self.word = word          # [("adjoint", i, eps_value), ..., ("scale", c)]
        self.start = start

    def word_str(self) -> str:
        parts = []
        for step in self.word:
            if step[0] == "adjoint":
                _, i, value = step
                parts.append(f"Ad(exp(({_pf(value)})*v{i + 1}))")
            else:
                parts.append(f"scale({_pf(step[1])})")
        return " ; ".join(parts) if parts else "identity"

    def __repr__(self):
        return f"OrbitResult({self.word_str()})"


def _pf(c) -> str:
    if isinstance(c, PFrac):
        return expr_str(Expr({Monomial.one(): c}))
    return str(c)


class LieAlgebra:
    """A basis of vector fields closed under the Lie bracket."""

    def __init__(self, fields: list[VectorField], names: list[str] | None = None):
        self.fields = list(fields)
        self.n = len(fields)
        self.names = names or [f"v{i + 1}" for i in range(self.n)]
        self.slots = _field_slots(self.fields)
        self._columns = [_coords_in_slots(f, self.slots) for f in self.fields]
        self._structure: dict[tuple[int, int], list[PFrac]] = {}
        self._adjoint_cache: dict[tuple[int, str], AdjointMatrix] = {}
        for i in range(self.n):
            for j in range(self.n):
                br = bracket(self.fields[i], self.fields[j])
                target = _coords_in_slots(br, _field_slots(self.fields + [br]))
                if len(target) != len(self.slots):
                    raise ExprError(
                        f"[{self.names[i]}, {self.names[j]}] leaves the basis span"
                    )
                lam = solve_expansion(self._columns, _coords_in_slots(br, self.slots))
                if lam is None:
                    raise ExprError(
                        f"[{self.names[i]}, {self.names[j]}] is not in the span "
                        "of the basis: the algebra is not closed"
                    )
                self._structure[(i, j)] = lam

    # -- presentation ------------------------------------------------------

    def structure_constants(self, i: int, j: int) -> list[PFrac]:
        return self._structure[(i, j)]

    def combo_str(self, coeffs: list[PFrac]) -> str:
        parts = []
        for c, name in zip(coeffs, self.names):
            if c.is_zero():
                continue
            s = expr_str(Expr({Monomial.one(): c}))
            neg = s.startswith("-")
            if neg:
                s = s[1:]
            if s == "1":
                body = name
            elif any(ch in s for ch in " +-("):
                body = f"({s})*{name}"
            else:
                body = f"{s}*{name}"
            if not parts:
                parts.append(("-" if neg else "") + body)
            else:
                parts.append(("- " if neg else "+ ") + body)
        return " ".join(parts) if parts else "0"

    def commutator_table(self) -> list[list[str]]:
        return [
            [self.combo_str(self._structure[(i, j)]) for j in range(self.n)]
            for i in range(self.n)
        ]

    # -- derived series ----------------------------------------------------

    def derived_series(self):
        """Dimensions [dim g, dim [g,g], ...] down to stabilization, with the
        coordinate bases of each term."""
        current = [list(c) for c in self._columns]
        dims = [self._rank(current)]
        bases = [current]
        while True:
            members = []
            fields = [self._field_from_coords(v) for v in current]
            for i in range(len(fields)):
                for j in range(i + 1, len(fields)):
                    br = bracket(fields[i], fields[j])
                    if not br.is_zero():
                        members.append(_coords_in_slots(br, self.slots))
            rank = self._rank(members)
            dims.append(rank)
            current = self._row_basis(members)
            bases.append(current)
            if rank == 0 or rank == dims[-2]:
                break
        return dims, bases

    def is_solvable(self) -> bool:
        dims, _ = self.derived_series()
        return dims[-1] == 0

    def _rank(self, rows: list[list[PFrac]]) -> int:
        if not rows:
            return 0
        _, pivots, _ = rref(rows)
        return len(pivots)

    def _row_basis(self, rows):
        if not rows:
            return []
        red, pivots, _ = rref(rows)
        return [red[r] for r in range(len(pivots))]

    def _field_from_coords(self, coords: list[PFrac]) -> VectorField:
        xis: dict[Symbol, Expr] = {}
        phis: dict[Symbol, Expr] = {}
        for (sym, mono), c in zip(self.slots, coords):
            if c.is_zero():
                continue
            tgt = xis if sym.kind == "independent" else phis
            tgt[sym] = tgt.get(sym, Expr.zero()).add(Expr({mono: c}))
        return VectorField(xis, phis)

    def field_from_basis_coords(self, coeffs) -> VectorField:
        out = VectorField({}, {})
        for c, f in zip(coeffs, self.fields):
            if isinstance(c, PFrac):
                term = f.scale(Expr({Monomial.one(): c}))
            else:
                term = f.scale(c)
            out = out.add(term)
        return out

    def expand_in_basis(self, f: VectorField):
        lam = solve_expansion(self._columns, _coords_in_slots(f, self.slots))
        return lam

    # -- adjoint action ----------------------------------------------------

    def ad_matrix(self, i: int) -> list[list[PFrac]]:
        """Matrix of ad(v_i) acting on column coordinate vectors."""
        zero = PFrac.const(0)
        m = [[zero] * self.n for _ in range(self.n)]
        for j in range(self.n):
            col = self._structure[(i, j)]
            for k in range(self.n):
                m[k][j] = col[k]
        return m

    def adjoint_exp(self, i: int, eps: Symbol) -> AdjointMatrix:
        key = (i, eps.name, eps.pos)
        if key not in self._adjoint_cache:
            neg = [[c.neg() for c in row] for row in self.ad_matrix(i)]
            entries, lams = putzer_exponential(neg, eps)
            self._adjoint_cache[key] = AdjointMatrix(i, eps, entries, lams)
        return self._adjoint_cache[key]

    # -- orbit reduction ---------------------------------------------------

    def orbit_reduce(self, coords: list[PFrac], eps: Symbol) -> OrbitResult:
        """Greedy reduction of a coordinate vector under the adjoint action.

        Only steps that act affinely in the group parameter are taken; the
        parameter is solved exactly to zero one coordinate at a time, lowest
        index first, never disturbing coordinates already cleared.  A final
        scaling divides by the highest-index nonzero coordinate.
        """
        vec = list(coords)
        if all(c.is_zero() for c in vec):
            raise ExprError("orbit reduction needs a nonzero vector")
        word: list[tuple] = []
        cleared: set[int] = set()
        affine = [i for i in range(self.n)
                  if self.adjoint_exp(i, eps).polynomial]
        while True:
            move = self._sweep(vec, cleared, affine, eps, strict=True)
            if move is None:
                move = self._sweep(vec, cleared, affine, eps, strict=False)
            if move is None:
                break
            j, i, value, image = move
            word.append(("adjoint", i, value))
            vec = image
            cleared.add(j)
        top = max(k for k in range(self.n) if not vec[k].is_zero())
        factor = vec[top]
        if not factor.is_one():
            inv = PFrac.const(1).div(factor)
            vec = [c.mul(inv) for c in vec]
            word.append(("scale", inv))
        return OrbitResult(vec, word, list(coords))

    def _sweep(self, vec, cleared, affine, eps, strict):
        """First acceptable move (j, i, eps value, image): zero coordinate j
        using generator i.  Strict sweeps also refuse to disturb coordinates
        that happen to be zero already; the weak fallback protects only the
        coordinates cleared by earlier steps."""
        for j in range(self.n):
            if j in cleared or vec[j].is_zero():
                continue
            if strict:
                protected = cleared | {
                    k for k in range(self.n) if k != j and vec[k].is_zero()
                }
            else:
                protected = cleared
            for i in affine:
                mat = self.adjoint_exp(i, eps)
                entry = self._symbolic_image(mat, vec)[j]
                slope = entry.coefficient(Monomial.make({eps: 1}))
                const = entry.coefficient(Monomial.one())
                rebuilt = Expr({Monomial.one(): const}).add(
                    Expr({Monomial.make({eps: 1}): slope}))
                if not entry.sub(rebuilt).is_zero() or slope.is_zero():
                    continue
                value = const.neg().div(slope)
                candidate = mat.apply(value, vec)
                if not candidate[j].is_zero():
                    continue
                if any(not candidate[k].is_zero() for k in protected):
                    continue
                return j, i, value, candidate
        return None

    def _symbolic_image(self, mat: AdjointMatrix, vec: list[PFrac]) -> list[Expr]:
        out = []
        for i in range(self.n):
            acc = Expr.zero()
            for j in range(self.n):
                acc = acc.add(mat.entries[i][j].scale(vec[j]))
            out.append(acc)
        return out

    def replay(self, word, coords: list[PFrac], eps: Symbol) -> list[PFrac]:
        vec = list(coords)
        for step in word:
            if step[0] == "adjoint":
                _, i, value = step
                vec = self.adjoint_exp(i, eps).apply(value, vec)
            else:
                _, factor = step
                vec = [c.mul(factor) for c in vec]
        return vec
