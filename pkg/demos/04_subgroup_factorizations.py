"""Homogeneous subgroups: decomposition, ideals, quotients, and the
classification of surjections and injections by their splitting behavior."""

from fractions import Fraction as Q

import numpy as np

from carnot import catalog
from carnot.morphism import GradedMorphism
from carnot.subgroups import (classify_epimorphism, classify_monomorphism,
                              find_complement, h21_complement,
                              heisenberg_complement, is_complementary,
                              is_ideal, max_commutative_horizontal_dim,
                              quotient, span_subalgebra, NotHomogeneous)

h1 = catalog.get("h1")
print("== homogeneous subalgebras of the Heisenberg group ==")
try:
    span_subalgebra(h1, [1, 0, 1])
except NotHomogeneous as e:
    print("  span{X + Z} is not homogeneous:", e)
xz = span_subalgebra(h1, [1, 0, 0], [0, 0, 1])
print("  span{X, Z}: layers", sorted(xz.layered_bases), " ideal:", is_ideal(xz))
print("  span{X}: ideal:", is_ideal(span_subalgebra(h1, [1, 0, 0])))

print("\n== quotients ==")
qalg, dpi = quotient(h1, span_subalgebra(h1, [0, 0, 1]))
print("  h1 / center: dim %d, step %d (the abelian plane)" % (qalg.dim, qalg.step))

print("\n== surjections onto the plane ==")
L = GradedMorphism(h1, catalog.abelian(2), [[1, 0, 0], [0, 1, 0]])
out = classify_epimorphism(L)
print("  (x, y, z) -> (x, y):", out.verdict, "--", out.witness.reason)

g42 = catalog.get("g42")
r2 = catalog.abelian(2)
L1 = GradedMorphism(g42, r2, [[1, 0, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0, 0]])
L2 = GradedMorphism(g42, r2, [[0, 0, 1, 0, 0, 0, 0], [0, 0, 0, 1, 0, 0, 0]])
o1, o2 = classify_epimorphism(L1), classify_epimorphism(L2)
print("  counterexample group, first projection: ", o1.verdict,
      " witness:", [tuple(map(str, v)) for v in o1.witness.basis()])
print("  counterexample group, second projection:", o2.verdict,
      "--", o2.witness.reason)

print("\n== constructive complements ==")
h2 = catalog.get("h2")
s = heisenberg_complement(h2, [[0, 1, 0, 0, 0], [0, 0, 0, 1, 0]])
print("  complement of span{y1, y2} in h2:",
      [tuple(map(str, v)) for v in s.basis()])
h12 = catalog.get("h12")
n = span_subalgebra(h12, [0, 1, 0, 0, 0, 0], [0, 0, 1, 0, 0, 0],
                    [0, 0, 0, 0, 1, 0], [0, 0, 0, 0, 0, 1])
h = h21_complement(h12, n)
print("  complexified Heisenberg, commutative kernel case:",
      [tuple(map(str, v)) for v in h.basis()], " complementary:",
      is_complementary(n, h))

print("\n== injections ==")
T = GradedMorphism(catalog.abelian(1), h1, [[1], [0], [0]])
mono = classify_monomorphism(T)
print("  t -> exp(tX):", mono.verdict, " normal complement:",
      [tuple(map(str, v)) for v in mono.normal_complement.basis()])

print("\n== maximal commutative horizontal dimension ==")
for name in ("h1", "h2", "h3", "h12"):
    rep = max_commutative_horizontal_dim(catalog.get(name))
    print("  %-4s -> %d (upper bound %d, exact: %s)" %
          (name, rep.dim, rep.upper_bound, rep.exact))
