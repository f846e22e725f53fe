import sys
sys.path.insert(0, "src")

from liesym import Expr, parse
from liesym.expr import ExpAtom, expr_str
from liesym.jet import load_problem
from liesym.vfield import VectorField
from liesym.flows import exponentiate, transform_solution, verify_flow

prob = load_problem(
    "indep x t; dep u(x,t); param a nonzero;"
    " eq: D[u,t] - D[u,x,x,t] + a*D[u,x]*(1 - D[u,t]) = 0;"
)
ns = prob.ns
x, t, u = ns.resolve("x"), ns.resolve("t"), ns.resolve("u")
coords = [x, t, u]
s = ns.group("s")

v1 = VectorField({x: Expr.number(1)}, {})
v2 = VectorField({t: Expr.number(1)}, {})
v3 = VectorField({}, {u: parse("1/a", ns)})
v4 = VectorField({x: parse("-x", ns), t: parse("3*t", ns)}, {u: parse("2*t + u - 2*x/a", ns)})

groups = {}
for name, v in [("G1", v1), ("G2", v2), ("G3", v3), ("G4", v4)]:
    g = exponentiate(v, coords, s)
    groups[name] = g
    print(name, {c.name: expr_str(g.maps[c]) for c in coords})
    assert verify_flow(g), name

# reference flow maps
assert groups["G1"].maps[x] == parse("x + s", ns)
assert groups["G1"].maps[t] == parse("t", ns)
assert groups["G1"].maps[u] == parse("u", ns)
assert groups["G2"].maps[t] == parse("t + s", ns)
assert groups["G3"].maps[u] == parse("u + s/a", ns)
assert groups["G4"].maps[x] == parse("x*exp(-s)", ns)
assert groups["G4"].maps[t] == parse("t*exp(3*s)", ns)
assert groups["G4"].maps[u] == parse("t*exp(3*s) + (x/a)*exp(-s) + (u - t - x/a)*exp(s)", ns)

# the closed-form solution transported by each flow stays a solution
c = ns.parameter("c")
sol = parse("x/(a*(1 - a)) + t/a + c", ns)
assert prob.residual_of(sol).is_zero()
for name, g in groups.items():
    moved = transform_solution(g, prob, sol)
    res = prob.residual_of(moved)
    print(name, "transports solution ->", expr_str(moved), "| residual:", expr_str(res))
    assert res.is_zero(), name

# transported-solution formula for the scaling flow on a concrete solution:
# e^s f(x e^s, t e^-3s) + (x/a)(1 - e^2s) + t(1 - e^-2s)
g4 = groups["G4"]
f_scaled = sol.substitute({x: parse("x*exp(s)", ns), t: parse("t*exp(-3*s)", ns)})
formula = parse("exp(s)", ns).mul(f_scaled) \
    .add(parse("(x/a)*(1 - exp(2*s))", ns)) \
    .add(parse("t*(1 - exp(-2*s))", ns))
moved = transform_solution(g4, prob, sol)
print("formula diff:", expr_str(moved.sub(formula)))
assert moved.sub(formula).is_zero()
print("smoke5 OK")
