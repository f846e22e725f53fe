import sys
sys.path.insert(0, "src")

from liesym import Expr, Namespace, parse, jet
from liesym.jet import load_problem, total_derivative, max_jet_order
from liesym.vfield import VectorField, invariance_residual
from liesym.expr import expr_str

prob = load_problem(
    "indep x t; dep u(x,t); param a nonzero;"
    " eq: D[u,t] - D[u,x,x,t] + a*D[u,x]*(1 - D[u,t]) = 0;"
    " lead: D[u,x,x,t];"
)
ns = prob.ns
x, t, u, a = ns.resolve("x"), ns.resolve("t"), ns.resolve("u"), ns.resolve("a")
print("eq:", expr_str(prob.eq))
print("lead:", prob.lead)
print("solved:", expr_str(prob.solved))
assert expr_str(prob.solved) == expr_str(parse("u_t + a*u_x - a*u_x*u_t", ns)), expr_str(prob.solved)

# total derivative sanity
e = parse("x*u_t", ns)
print("D_x(x*u_t) =", expr_str(total_derivative(e, x)))
assert total_derivative(e, x) == parse("u_t + x*u_{x,t}", ns)
print("max order:", max_jet_order(prob.eq))

# reduce: rewrite u_xxt and all higher lead-derived jets
r = prob.reduce(parse("u_{x,x,t}", ns))
print("reduce(u_xxt) =", expr_str(r))
assert r == parse("u_t + a*u_x - a*u_x*u_t", ns)
r2 = prob.reduce(parse("u_{x,x,x,t}", ns))
print("reduce(u_xxxt) =", expr_str(r2))
assert r2 == prob.reduce(total_derivative(parse("u_t + a*u_x - a*u_x*u_t", ns), x))

# vector fields: the four reference generators
v1 = VectorField({x: Expr.number(1)}, {})
v2 = VectorField({t: Expr.number(1)}, {})
v3 = VectorField({}, {u: parse("1/a", ns)})
v4 = VectorField({x: parse("-x", ns), t: parse("3*t", ns)}, {u: parse("2*t + u - 2*x/a", ns)})

needed = [jet(u, {x: 1}), jet(u, {t: 1}), jet(u, {t: 2}), jet(u, {x: 1, t: 1}), jet(u, {x: 2}), jet(u, {x: 2, t: 1})]
pro = v4.prolong(needed)
expect = {
    "u_x": "2*u_x - 2/a",
    "u_t": "2 - 2*u_t",
    "u_tt": "-5*u_tt",
    "u_xt": "-u_xt",
    "u_xx": "3*u_xx",
}
for j in needed:
    got = expr_str(pro[j])
    print(f"phi^{j} = {got}")
for key, want in expect.items():
    j = parse(key, ns).leading()[0].gens[0][0]
    assert pro[j] == parse(want, ns), (key, expr_str(pro[j]))

for name, v in [("v1", v1), ("v2", v2), ("v3", v3), ("v4", v4)]:
    res = invariance_residual(prob, v)
    print(f"residual({name}) =", expr_str(res))
    assert res.is_zero(), name

bad = VectorField({}, {u: Expr.sym(u)})
res = invariance_residual(prob, bad)
print("residual(u du) =", expr_str(res))
assert res == parse("-a*u_x*u_t", ns), expr_str(res)
print("smoke2 OK")
