"""Exact linear algebra over the field of rational functions in parameters.

Everything a determining-system solve needs: linear-row extraction from
residual normal forms, Gaussian elimination with assumption-aware pivot
selection, nullspace bases, and reduced-echelon canonicalization.  A pivot
whose nonvanishing is not implied by the recorded nonzero assumptions is
allowed, but the condition is reported as a case-split diagnostic instead of
being silently assumed.
"""

from __future__ import annotations

from fractions import Fraction

from .expr import Expr, ExprError, Monomial, PFrac, PPoly, Symbol

__all__ = [
    "LinearSystem",
    "extract_rows",
    "nullspace",
    "rref",
    "solve_expansion",
]


class LinearSystem:
    """rows: list of ({unknown: PFrac}, PFrac constant); unknowns ordered."""

    def __init__(self, unknowns: list[Symbol], rows: list[tuple[dict, PFrac]], tags=None):
        self.unknowns = list(unknowns)
        self.rows = rows
        self.tags = tags if tags is not None else [None] * len(rows)

    def matrix(self) -> list[list[PFrac]]:
        zero = PFrac.const(0)
        return [[row.get(c, zero) for c in self.unknowns] for row, _ in self.rows]

    def constants(self) -> list[PFrac]:
        return [k for _, k in self.rows]

    def __len__(self):
        return len(self.rows)


def _is_provably_nonzero(c: PFrac) -> bool:
    """True when the recorded assumptions guarantee c != 0: a nonzero rational
    times a monomial in parameters flagged nonzero."""
    if c.is_zero():
        return False
    if len(c.num.terms) != 1:
        return False
    (mono, _coef), = c.num.terms.items()
    return all(s.nonzero for s, _ in mono)


def extract_rows(residual: Expr, unknowns: list[Symbol]) -> LinearSystem:
    """Split a residual by its full monomial support into linear rows over the
    unknown coefficient symbols.  Each coefficient must be affine in the
    unknowns with an unknown-free denominator."""
    unk = set(unknowns)
    rows: list[tuple[dict, PFrac]] = []
    tags = []
    for mono, coeff in residual.terms():
        if coeff.den.symbols() & unk:
            raise ExprError(f"coefficient denominator involves unknowns: {coeff}")
        lin: dict[Symbol, dict] = {c: {} for c in unknowns}
        const: dict = {}
        for pm, val in coeff.num.terms.items():
            hit = [(s, k) for s, k in pm if s in unk]
            if not hit:
                const[pm] = val
            elif len(hit) == 1 and hit[0][1] == 1:
                c = hit[0][0]
                rest = tuple(sk for sk in pm if sk[0] != c)
                lin[c][rest] = lin[c].get(rest, Fraction(0)) + val
            else:
                raise ExprError(
                    f"residual is not affine in the unknowns at monomial {mono}: {coeff}"
                )
        den = coeff.den
        row = {
            c: PFrac(PPoly(poly), den)
            for c, poly in lin.items()
            if poly
        }
        k = PFrac(PPoly(const), den)
        if row or not k.is_zero():
            rows.append((row, k))
            tags.append(mono)
    return LinearSystem(list(unknowns), rows, tags)


def rref(mat: list[list[PFrac]]) -> tuple[list[list[PFrac]], list[int], list[str]]:
    """Reduced row echelon form; returns (matrix, pivot columns, diagnostics).

    Pivot choice prefers entries that are provably nonzero under the recorded
    assumptions; otherwise the generic-nonvanishing condition is reported.
    """
    m = [row[:] for row in mat]
    nrows = len(m)
    ncols = len(m[0]) if m else 0
    pivots: list[int] = []
    diagnostics: list[str] = []
    r = 0
    for col in range(ncols):
        if r >= nrows:
            break
        best = None
        for i in range(r, nrows):
            c = m[i][col]
            if c.is_zero():
                continue
            key = (0 if _is_provably_nonzero(c) else 1, i)
            if best is None or key < best[0]:
                best = (key, i)
        if best is None:
            continue
        _, i = best
        if not _is_provably_nonzero(m[i][col]):
            diagnostics.append(
                f"case split: elimination assumes {m[i][col]} != 0 (pivot column {col})"
            )
        m[r], m[i] = m[i], m[r]
        piv = m[r][col]
        m[r] = [c.div(piv) for c in m[r]]
        for j in range(nrows):
            if j != r and not m[j][col].is_zero():
                f = m[j][col]
                m[j] = [cj.sub(f.mul(ci)) for cj, ci in zip(m[j], m[r])]
        pivots.append(col)
        r += 1
    return m, pivots, diagnostics


def nullspace(mat: list[list[PFrac]], ncols: int) -> tuple[list[list[PFrac]], list[str]]:
    """Basis of {v : mat v = 0}; one vector per free column, canonical order."""
    if not mat:
        mat = []
    red, pivots, diagnostics = rref(mat) if mat else ([], [], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    zero = PFrac.const(0)
    one = PFrac.const(1)
    for f in free:
        v = [zero] * ncols
        v[f] = one
        for r, p in enumerate(pivots):
            v[p] = red[r][f].neg()
        basis.append(v)
    return basis, diagnostics


def solve_expansion(columns: list[list[PFrac]], target: list[PFrac]):
    """Solve sum(lambda_j * columns[j]) = target exactly.

    Returns the coefficient list, or None when the target is outside the span.
    """
    n = len(columns)
    rows = len(target)
    aug = [[columns[j][i] for j in range(n)] + [target[i]] for i in range(rows)]
    red, pivots, _ = rref(aug)
    lam = [PFrac.const(0)] * n
    for r, p in enumerate(pivots):
        if p == n:
            return None  # inconsistent
        lam[p] = red[r][n]
    # verify (guards against underdetermined junk and free columns)
    for i in range(rows):
        acc = PFrac.const(0)
        for j in range(n):
            acc = acc.add(columns[j][i].mul(lam[j]))
        if not acc.sub(target[i]).is_zero():
            return None
    return lam


def rref_canonical_rows(vectors: list[list[PFrac]]) -> list[list[PFrac]]:
    """Reduced echelon canonical form of the row span (basis canonicalization)."""
    if not vectors:
        return []
    red, pivots, _ = rref(vectors)
    return [red[r] for r in range(len(pivots))]
