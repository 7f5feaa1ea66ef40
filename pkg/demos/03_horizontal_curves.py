"""Horizontal curves: lifting, difference quotients, group Riemann sums,
and variation."""

import math

import numpy as np

from carnot import catalog, identity_element
from carnot.curves import (SampledCurve, decay_order, group_riemann_sum,
                           horizontal_lift, is_horizontal, make_control,
                           pansu_quotient_norms, riemann_limit, variation)
from carnot.metric import koranyi

h1 = catalog.get("h1")
e = identity_element(h1)

print("== lifting the unit square loop ==")
curve = horizontal_lift(make_control(h1, "square"), e, steps=800)
print("  endpoint:", np.round(curve.coords[-1], 12))
print("  vertical displacement = enclosed signed area = 1")
print("  contact residual:", is_horizontal(curve).max_residual)

print("\n== parabola control (1, 2t) ==")
par = horizontal_lift(make_control(h1, "parabola"), e, steps=600)
print("  z(1) =", par.coords[-1][2], " (= 1/6 exactly in the limit)")

print("\n== difference quotient decay for the circle control ==")
crv = horizontal_lift(make_control(h1, "circle"), e, steps=2048)
hs = [1e-1, 1e-2, 1e-3, 1e-4]
vals = pansu_quotient_norms(crv, 0.5, hs)
for h, v in zip(hs, vals):
    print("  h = %7.0e   |quotient| = %.6e" % (h, v))
print("  fitted order:", round(decay_order(hs, vals), 5))

print("\n== group Riemann sums for gamma(t) = (t, t^2, 0) ==")
ts = np.linspace(0, 1, 2001)
parab = SampledCurve(h1, ts, np.stack([ts, ts ** 2, 0 * ts], axis=1))
lim = riemann_limit(parab)
print("  limit value:", np.round(lim, 9), " (closed form (1, 1, -1/6))")
for n in (8, 32, 128):
    s = group_riemann_sum(parab, np.linspace(0, 1, n + 1))
    print("  mesh 1/%-4d  error %.2e" % (n, np.linalg.norm(s - lim)))

print("\n== variation of the circle ==")
v = variation(crv, koranyi(h1))
print("  partition sums:        ", v["partition"])
print("  first-layer quadrature:", v["first_layer_integral"])
print("  2 pi =                 ", 2 * math.pi)
