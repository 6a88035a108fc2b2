"""Quick end-to-end check of the compiled extension."""
import math

import conformable as cf


def close(a, b, tol):
    assert abs(a - b) <= tol * max(1.0, abs(b)), (a, b)


e = cf.Expr("exp(2*sqrt(t))")
close(e.eval(1.0), math.e**2, 1e-12)
close(cf.t_alpha("t^2", 0.5, 4.0), 16.0, 1e-6)
close(cf.t_alpha(lambda t: t**3, 0.5, 2.0, method="reduction"), 3 * 2.0**2.5, 1e-6)
close(cf.i_alpha("1", 0.5, 0.0, 4.0), 4.0, 1e-9)
ok, worst = cf.verify_identity("product", "sin(t)", 0.6, [1.0, 2.0], g="exp(t)")
assert ok, worst

osc = cf.SequentialFde(0.5, ["1", "0"], "0", (0.1, 20.0))
y = cf.solve_ivp(osc, 1.0, [1.0, 0.0], 9.0)
for t in (1.0, 4.0, 9.0):
    close(y(t), math.cos(2 * math.sqrt(t) - 2), 1e-6)

fs = cf.build_fundamental_set(osc, 1.0, (1.0, 9.0))
for t, measured, predicted, rel in fs.wronskian_profile([2.0, 5.0, 8.0]):
    assert rel <= 1e-6
c = fs.fit(1.0, [0.5, -1.0])
close(fs.general_solution(c, 3.0), 0.5 * math.cos(2 * math.sqrt(3) - 2) - math.sin(2 * math.sqrt(3) - 2), 1e-6)
independent, _ = cf.is_fundamental(fs.trajectories, 2.0)
assert independent

forced = cf.SequentialFde(0.5, ["1", "0"], "1", (0.1, 20.0))
sol, yp, basis, coeffs = cf.solve_nonhomogeneous(forced, 1.0, [0.0, 0.0], (1.0, 9.0))
close(sol(6.0), 1 - math.cos(2 * math.sqrt(6) - 2), 1e-6)

try:
    cf.Expr("2*")
except ValueError as err:
    assert "offset 2" in str(err)
else:
    raise AssertionError("parse error expected")

assert all(row[3] for row in cf.run_verify("calculus", 42))
print("smoke test passed")
