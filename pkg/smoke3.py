import sys, time
sys.path.insert(0, "src")

from liesym import Expr, parse
from liesym.jet import load_problem
from liesym.vfield import VectorField
from liesym.detsolve import PolynomialAnsatz, solve_point_symmetries, span_contains
from liesym.expr import expr_str

prob = load_problem(
    "indep x t; dep u(x,t); param a nonzero;"
    " eq: D[u,t] - D[u,x,x,t] + a*D[u,x]*(1 - D[u,t]) = 0;"
)
ns = prob.ns
x, t, u = ns.resolve("x"), ns.resolve("t"), ns.resolve("u")

for deg in (1, 2):
    t0 = time.time()
    fields, diags = solve_point_symmetries(prob, degree=deg)
    dt = time.time() - t0
    print(f"degree {deg}: dim = {len(fields)}  ({dt:.2f}s)  diags={diags}")
    for f in fields:
        print("   ", f)

fields, _ = solve_point_symmetries(prob, degree=2)
ansatz = PolynomialAnsatz(prob, 2)
v1 = VectorField({x: Expr.number(1)}, {})
v2 = VectorField({t: Expr.number(1)}, {})
v3 = VectorField({}, {u: parse("1/a", ns)})
v4 = VectorField({x: parse("-x", ns), t: parse("3*t", ns)}, {u: parse("2*t + u - 2*x/a", ns)})
for name, v in [("v1", v1), ("v2", v2), ("v3", v3), ("v4", v4)]:
    print(name, "in span:", span_contains(fields, v, ansatz))
bad = VectorField({}, {u: Expr.sym(u)})
print("u*du in span:", span_contains(fields, bad, ansatz))
