import math
from fractions import Fraction as Q

import numpy as np
import pytest

from carnot import catalog
from carnot.algebra import GroupElement, dilate
from carnot.bch import group_product
from carnot.metric import (HomogeneousMetric, distance, first_layer_constant,
                           first_layer_lower_bound, generating_word, koranyi,
                           left_inverse_estimate, norm_exp_estimate,
                           quasi_norm, quasi_triangle_constant, solve_word,
                           sphere_point, standard_word_system,
                           verify_conjugation_estimate,
                           verify_product_estimate,
                           verify_projection_estimate, weighted_max,
                           word_constant)


def test_koranyi_values(h1):
    K = koranyi(h1)
    assert quasi_norm(GroupElement(h1, [0, 0, 1]), K) == pytest.approx(2.0)
    assert quasi_norm(GroupElement(h1, [1, 0, 0]), K) == pytest.approx(1.0)
    x = GroupElement(h1, [1.0, 2.0, 3.0])
    assert distance(x, x, K) == 0.0


def test_metric_mismatch(h1, h2):
    K = koranyi(h1)
    with pytest.raises(ValueError):
        quasi_norm(GroupElement(h2, np.zeros(5)), K)


def test_homogeneity_and_symmetry(h1, rng):
    K = koranyi(h1)
    for _ in range(20):
        x = GroupElement(h1, rng.standard_normal(3))
        y = GroupElement(h1, rng.standard_normal(3))
        r = float(rng.uniform(0.1, 3.0))
        lhs = distance(dilate(x, r), dilate(y, r), K)
        assert lhs == pytest.approx(r * distance(x, y, K), rel=1e-12)
        assert distance(x, y, K) == pytest.approx(distance(y, x, K), rel=1e-12)
        assert quasi_norm(-x, K) == pytest.approx(quasi_norm(x, K), rel=1e-15)


def test_left_invariance(h12, rng):
    K = koranyi(h12)
    for _ in range(10):
        x = GroupElement(h12, rng.standard_normal(6)).to_float()
        y = GroupElement(h12, rng.standard_normal(6)).to_float()
        z = GroupElement(h12, rng.standard_normal(6)).to_float()
        lhs = distance(group_product(z, x), group_product(z, y), K)
        assert lhs == pytest.approx(distance(x, y, K), rel=1e-12)


def test_weighted_max(h1, rng):
    W = weighted_max(h1)
    assert quasi_norm(GroupElement(h1, [0, 0, 4]), W) == pytest.approx(2.0)
    for _ in range(10):
        x = GroupElement(h1, rng.standard_normal(3))
        r = float(rng.uniform(0.2, 2.5))
        assert quasi_norm(dilate(x, r), W) == pytest.approx(
            r * quasi_norm(x, W), rel=1e-12)
    # quasi-triangle constant is finite and stable-ish; reported, not assumed
    c = quasi_triangle_constant(W, samples=1500, seed=0)
    assert math.isfinite(c.sup_observed) and c.sup_observed < 5


def test_koranyi_true_distance_sampled(h1, h12):
    for g in (h1, h12):
        c = quasi_triangle_constant(koranyi(g), samples=2500, seed=1)
        assert c.sup_observed <= 1.0 + 1e-9


def test_first_layer_lower_bound(h1, rng):
    K = koranyi(h1)
    x = GroupElement(h1, [0.0, 0.0, 1.0]).to_float()
    y = GroupElement(h1, [0.0, 0.0, -0.4]).to_float()
    assert first_layer_lower_bound(x, y, K) == 0.0
    with pytest.raises(ValueError):
        first_layer_lower_bound(x, x, K)
    c = first_layer_constant(K, samples=1500, seed=2)
    assert math.isfinite(c.sup_observed)
    # dilation invariance of the ratio
    a = GroupElement(h1, rng.standard_normal(3)).to_float()
    b = GroupElement(h1, rng.standard_normal(3)).to_float()
    r0 = first_layer_lower_bound(a, b, K)
    r2 = first_layer_lower_bound(dilate(a, 2.0), dilate(b, 2.0), K)
    assert r0 == pytest.approx(r2, rel=1e-9)


def test_projection_estimate(h1):
    K = koranyi(h1)
    consts = verify_projection_estimate(K, radius=1.0, samples=4000, seed=0)
    assert len(consts) == 2
    # vertical points realize ratio 1/4 for the layer >= 2 tail
    assert consts[1].sup_observed <= 0.25 + 1e-9
    z = np.array([0.0, 0.0, 0.7])
    assert abs(0.7 / float(K.quasi_norm_np(z)) ** 2 - 0.25) < 1e-12


def test_conjugation_product_estimates(h1):
    K = koranyi(h1)
    c1, c2 = verify_conjugation_estimate(K, nu=1.0, samples=1200, seed=0)
    assert math.isfinite(c1.sup_observed) and math.isfinite(c2.sup_observed)
    p = verify_product_estimate(K, nu=1.0, n_factors=3, samples=120, seed=0)
    assert math.isfinite(p.sup_observed)
    # single-factor case reduces to the two-point comparison
    p1 = verify_product_estimate(K, nu=1.0, n_factors=1, samples=120, seed=0)
    assert math.isfinite(p1.sup_observed)


def test_norm_and_left_inverse_estimates(h12):
    K = koranyi(h12)
    assert math.isfinite(norm_exp_estimate(K, nu=1.0, samples=2000).sup_observed)
    assert math.isfinite(left_inverse_estimate(K, nu=1.0, samples=2000).sup_observed)


def test_word_system_h1(h1):
    K = koranyi(h1)
    ws = standard_word_system(h1, K)
    assert ws.indices[:2] == (0, 1)
    assert ws.commutator_blocks == ((2, 0, 1),)
    # P^1(a) = exp(a1 X)
    p1 = generating_word([Q(3, 2)], ws, s=1)
    assert p1.coords == (Q(3, 2), 0, 0)
    # the commutator word realizes exp(Z) exactly
    g = generating_word([Q(0), Q(0), Q(1), Q(1), Q(-1), Q(-1)], ws)
    assert g.coords == (0, 0, 1)
    # P^0 = identity
    assert generating_word([], ws, s=0).coords == (0, 0, 0)
    a = solve_word(GroupElement(h1, [0.0, 0.0, 1.0]), ws)
    assert np.allclose(a, [0, 0, 1, 1, -1, -1], atol=1e-12)


def test_word_solver_roundtrip(h1, h12, rng):
    for g in (h1, h12):
        K = koranyi(g)
        ws = standard_word_system(g, K)
        for _ in range(30):
            u = rng.standard_normal(g.dim)
            xc = sphere_point(K, u)
            a = solve_word(GroupElement(g, xc), ws)
            back = generating_word(a, ws)
            assert np.max(np.abs(np.asarray(back.coords) - xc)) < 1e-10
        # single-letter words
        t = float(rng.uniform(0.2, 2.0))
        x = np.zeros(g.dim)
        x[g.layer_indices(1)[0]] = t
        a = solve_word(GroupElement(g, x), ws)
        assert a[0] == pytest.approx(t)
        assert np.allclose(a[1:], 0, atol=1e-12)


def test_word_homogeneity(h1, rng):
    K = koranyi(h1)
    ws = standard_word_system(h1, K)
    for _ in range(10):
        x = GroupElement(h1, rng.standard_normal(3))
        r = float(rng.uniform(0.3, 2.0))
        a = solve_word(x, ws)
        ar = solve_word(dilate(x, r), ws)
        assert np.allclose(ar, r * np.asarray(a), atol=1e-10)


def test_word_constant(h1, rng):
    K = koranyi(h1)
    ws = standard_word_system(h1, K)
    c = word_constant(ws, samples=150, seed=0)
    assert 0 < c.sup_observed < 5
    # abelian: c equals the max coordinate norm over the unit sphere
    r2 = catalog.abelian(2)
    W = weighted_max(r2)
    ws2 = standard_word_system(r2, W)
    c2 = word_constant(ws2, samples=200, seed=0)
    assert c2.sup_observed <= 1.0 + 1e-9


def test_word_system_step_bound(f23):
    with pytest.raises(ValueError):
        standard_word_system(f23)


def test_exp_pair_comparison(h1, rng):
    # d(exp xi, exp eta) <= C |xi - eta|^{1/step} on bounded sets: the pair
    # analogue of the gauge-vs-norm estimate; sampled sup stays finite
    K = koranyi(h1)
    worst = 0.0
    for _ in range(2000):
        xi = rng.uniform(-0.6, 0.6, 3)
        eta = rng.uniform(-0.6, 0.6, 3)
        diff = float(np.linalg.norm(xi - eta))
        if diff < 1e-9:
            continue
        worst = max(worst, float(K.distance_np(xi, eta)) / diff ** 0.5)
    assert math.isfinite(worst) and worst > 0


def test_word_system_rescaled_generators(h1, rng):
    # non-unit gauge for the generators: the system records the rescaling
    # and the solver compensates
    W = weighted_max(h1, weights=[2.0, 3.0])
    ws = standard_word_system(h1, W)
    assert any(abs(s - 1.0) > 1e-12 for s in ws.generator_scales)
    for _ in range(10):
        u = rng.standard_normal(3)
        xc = sphere_point(W, u)
        a = solve_word(GroupElement(h1, xc), ws)
        back = generating_word(a, ws)
        assert np.max(np.abs(np.asarray(back.coords) - xc)) < 1e-10
