"""Tour of the exact group law.

Builds a few catalog groups, multiplies elements through the BCH recursion,
and cross-checks everything against the independent tensor-series oracle and
the unipotent matrix model.
"""

import numpy as np
from fractions import Fraction as Q

from carnot import (bch_term, catalog, decompose_cn, exp_differential,
                    exp_differential_oracle, group_product, series_oracle_product,
                    vector)

print("== catalog ==")
for name in ("h1", "h2", "h12", "free_2_3", "g42"):
    g = catalog.get(name)
    print("  %-9s dim %2d step %d layers %s" % (name, g.dim, g.step, g.layer_dims()))

h1 = catalog.get("h1")
x = vector(h1, [1, 0, 0])
y = vector(h1, [0, 1, 0])
print("\n== the 3-dimensional Heisenberg group ==")
print("  exp(X) exp(Y) has coordinates", group_product(x, y).coords)
print("  series oracle agrees:        ", series_oracle_product(x, y).coords)
print("  c_2(X, Y) = [X,Y]/2 =        ", bch_term(2, x, y).coords)

f23 = catalog.get("free_2_3")
fx = vector(f23, f23.basis_coords(0))
fy = vector(f23, f23.basis_coords(1))
print("\n== free nilpotent, 2 generators, step 3 (Hall basis) ==")
print("  basis:", f23.basis_names)
print("  c_3(x1, x2) =", bch_term(3, fx, fy).coords, " (1/12 of each bracket)")

dec = decompose_cn(3, f23)
print("  multilinear decomposition of c_3: e_alpha =",
      {"".join(map(str, a)): str(c) for a, c in dec.coefficients.items()})
rng = np.random.default_rng(0)
a = vector(f23, [Q(int(rng.integers(-4, 5)), 2) for _ in range(5)])
b = vector(f23, [Q(int(rng.integers(-4, 5)), 3) for _ in range(5)])
print("  identity check on random rationals:",
      dec.evaluate(a, b).coords == bch_term(3, a, b).coords)

print("\n== differential of exp ==")
m = exp_differential(x)
print("  d exp at X maps Y to", m(y).coords, " (the -1/2 Z twist)")
print("  independent series oracle gives the same matrix:",
      m.matrix == exp_differential_oracle(x).matrix)

model = catalog.matrix_model(h1)
print("\n== unipotent matrix model ==")
print("  exp of (1,2,3):")
for row in model.to_matrix((Q(1), Q(2), Q(3))):
    print("   ", [str(c) for c in row])
print("  model product of (1,0,0), (0,1,0):",
      model.product_coords((Q(1), Q(0), Q(0)), (Q(0), Q(1), Q(0))))
