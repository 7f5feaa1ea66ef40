"""Homogeneous gauges, generating words, and the sampled metric estimates."""

import numpy as np

from carnot import catalog, element
from carnot.metric import (first_layer_constant, generating_word, koranyi,
                           left_inverse_estimate, norm_exp_estimate,
                           quasi_norm, quasi_triangle_constant, solve_word,
                           standard_word_system, verify_conjugation_estimate,
                           verify_product_estimate, verify_projection_estimate,
                           weighted_max, word_constant)

h1 = catalog.get("h1")
K = koranyi(h1)
print("== Koranyi gauge on the Heisenberg group ==")
print("  N(exp Z) =", quasi_norm(element(h1, [0, 0, 1]), K))
print("  N(exp X) =", quasi_norm(element(h1, [1, 0, 0]), K))
print("  quasi-triangle constant (sampled):",
      round(quasi_triangle_constant(K, samples=3000).sup_observed, 4),
      " (<= 1: a genuine distance)")
W = weighted_max(h1)
print("  weighted-max quasi-triangle constant:",
      round(quasi_triangle_constant(W, samples=3000).sup_observed, 4))

print("\n== generating words ==")
ws = standard_word_system(h1, K)
print("  letters:", ws.indices, " commutator blocks:", ws.commutator_blocks)
a = solve_word(element(h1, [0.0, 0.0, 1.0]), ws)
print("  exp(Z) solves as a =", a)
print("  replaying the word lands at",
      np.round(np.asarray(generating_word(a, ws).coords), 12))
print("  word constant c(G, d) ~",
      round(word_constant(ws, samples=200).sup_observed, 4))

print("\n== sampled estimate constants (sup ratios, label / value) ==")
for g in (h1, catalog.get("h12")):
    Kg = koranyi(g)
    consts = []
    consts += verify_projection_estimate(Kg, samples=3000)
    consts.append(norm_exp_estimate(Kg, samples=3000))
    consts.append(left_inverse_estimate(Kg, samples=3000))
    consts += verify_conjugation_estimate(Kg, samples=3000)
    consts.append(verify_product_estimate(Kg, samples=200))
    consts.append(first_layer_constant(Kg, samples=3000))
    print("  --", g.name)
    for c in consts:
        print("    %-45s %8.4f  (%d samples)" % (c.label, c.sup_observed, c.samples))
