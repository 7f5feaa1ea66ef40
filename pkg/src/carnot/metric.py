"""Homogeneous quasi-norms and distances, generating word systems, and the
sampled verification drivers for the metric estimates.

Two gauge families are provided.  The Koranyi gauge
    N(x) = (|pi_1 x|^4 + 16 |pi_2 x|^2)^{1/4}
on step-2 groups (the constant 16 makes it a genuine distance on H-type
groups); and the weighted-max gauge
    N(x) = max_i w_i |pi_i x|^{1/i},
a quasi-distance whose quasi-triangle constant is measured, not assumed.
Distances are left-invariant by construction: d(x, y) = N(x^{-1} y).
"""

import math
from dataclasses import dataclass

import numpy as np

from .algebra import GroupElement, EmpiricalConstant
from .bch import _bch_terms, _FloatRecOps

from fractions import Fraction
Q = Fraction


class HomogeneousMetric:
    def __init__(self, algebra, kind="koranyi", weights=None):
        self.algebra = algebra
        self.kind = kind
        if kind == "koranyi":
            if algebra.step > 2:
                raise ValueError("the Koranyi gauge is defined here for step <= 2")
            self.weights = ()
        elif kind == "weighted_max":
            w = list(weights) if weights is not None else [1.0] * algebra.step
            assert len(w) == algebra.step and all(x > 0 for x in w)
            self.weights = tuple(float(x) for x in w)
        else:
            raise ValueError("unknown metric kind %r" % kind)

    # -- vectorized core ----------------------------------------------------
    def quasi_norm_np(self, coords):
        ops = self.algebra.float_ops()
        ln = ops.layer_norms(coords)
        if self.kind == "koranyi":
            n1 = ln[..., 0]
            n2 = ln[..., 1] if self.algebra.step >= 2 else 0.0
            return (n1 ** 4 + 16.0 * n2 ** 2) ** 0.25
        vals = [ (self.weights[i - 1] * ln[..., i - 1]) ** (1.0 / i)
                 for i in range(1, self.algebra.step + 1) ]
        return np.max(np.stack(vals, axis=-1), axis=-1)

    def distance_np(self, a, b):
        ops = _FloatRecOps(self.algebra)
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        terms = _bch_terms(ops, -a, b, self.algebra.step)
        return self.quasi_norm_np(sum(terms[1:]))

    def __repr__(self):
        return "HomogeneousMetric(%s, %s)" % (self.algebra.name, self.kind)


def quasi_norm(x, metric):
    if x.algebra != metric.algebra:
        raise ValueError("metric/algebra mismatch")
    return float(metric.quasi_norm_np(np.asarray(x.to_float().coords, dtype=float)))


def distance(x, y, metric):
    if x.algebra != metric.algebra or y.algebra != metric.algebra:
        raise ValueError("metric/algebra mismatch")
    return float(metric.distance_np(np.asarray(x.to_float().coords, dtype=float),
                                    np.asarray(y.to_float().coords, dtype=float)))


def koranyi(algebra):
    return HomogeneousMetric(algebra, "koranyi")


def weighted_max(algebra, weights=None):
    return HomogeneousMetric(algebra, "weighted_max", weights)


def default_metric(algebra):
    return koranyi(algebra) if algebra.step <= 2 else weighted_max(algebra)


# ---------------------------------------------------------------------------
# sampling helpers
# ---------------------------------------------------------------------------

def sample_box(algebra, radius, count, rng):
    """Euclidean-coordinate box sample, shape (count, dim)."""
    return rng.uniform(-radius, radius, size=(count, algebra.dim))


def sample_ball(metric, radius, count, rng, oversample=4):
    """Points with quasi-norm <= radius, by rejection from a box."""
    alg = metric.algebra
    out = []
    need = count
    while need > 0:
        cand = sample_box(alg, radius * 1.5, max(64, need * oversample), rng)
        # box coordinates scale like the layer, so widen upper layers
        for i in range(1, alg.step + 1):
            mask = np.array([1.0 if l == i else 0.0 for l in alg.layer_of])
            cand = cand * (1.0 + (radius ** (i - 1) - 1.0) * mask)
        norms = metric.quasi_norm_np(cand)
        good = cand[norms <= radius]
        out.append(good[:need])
        need -= len(good[:need])
    return np.concatenate(out, axis=0)


def sphere_point(metric, u):
    """Dilate a nonzero point onto the unit sphere of the gauge."""
    n = float(metric.quasi_norm_np(u))
    assert n > 0
    ops = metric.algebra.float_ops()
    return ops.dilate(u, 1.0 / n)


# ---------------------------------------------------------------------------
# estimate drivers
# ---------------------------------------------------------------------------

def first_layer_lower_bound(x, y, metric):
    """|pi_1(xi - eta)| / d(x, y); the sampled sup realizes the comparison
    constant between the gauge and the first-layer Euclidean norm."""
    if x == y:
        raise ValueError("coincident points excluded")
    ops = metric.algebra.float_ops()
    xc = np.asarray(x.to_float().coords, dtype=float)
    yc = np.asarray(y.to_float().coords, dtype=float)
    num = float(np.linalg.norm(ops.project_layer(xc - yc, 1)))
    return num / float(metric.distance_np(xc, yc))


def first_layer_constant(metric, radius=1.0, samples=2000, seed=0):
    rng = np.random.default_rng(seed)
    pts = sample_box(metric.algebra, radius, 2 * samples, rng)
    a, b = pts[:samples], pts[samples:]
    ops = metric.algebra.float_ops()
    num = np.linalg.norm(ops.project_layer(a - b, 1), axis=-1)
    den = metric.distance_np(a, b)
    mask = den > 1e-12
    sup = float(np.max(num[mask] / den[mask]))
    return EmpiricalConstant("first_layer_comparison[%s]" % metric.algebra.name,
                             sup, int(mask.sum()), nu=radius)


def verify_projection_estimate(metric, radius=1.0, samples=4000, seed=0):
    """Per-layer sup of |pi^i(log x)| / d(x)^i over the ball of the given
    radius; one EmpiricalConstant per layer i >= 1."""
    alg = metric.algebra
    rng = np.random.default_rng(seed)
    pts = sample_box(alg, radius, samples, rng)
    norms = metric.quasi_norm_np(pts)
    mask = (norms <= radius) & (norms > 1e-9)
    pts, norms = pts[mask], norms[mask]
    ops = alg.float_ops()
    out = []
    for i in range(1, alg.step + 1):
        tails = np.linalg.norm(ops.project_tail(pts, i), axis=-1)
        ratios = tails / norms ** i
        out.append(EmpiricalConstant(
            "tail_projection K_U layer>=%d[%s]" % (i, alg.name),
            float(np.max(ratios)) if len(ratios) else 0.0, int(mask.sum()), nu=radius))
    return out


def norm_exp_estimate(metric, nu=1.0, samples=4000, seed=0):
    """sup d(exp xi) / |xi|^{1/step} over |xi| <= nu."""
    alg = metric.algebra
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((samples, alg.dim))
    scales = rng.uniform(0.05, nu, samples) / np.maximum(
        np.linalg.norm(pts, axis=-1), 1e-12)
    pts = pts * scales[:, None]
    ratios = metric.quasi_norm_np(pts) / np.linalg.norm(pts, axis=-1) ** (1.0 / alg.step)
    return EmpiricalConstant("gauge_vs_norm kappa(nu)[%s]" % alg.name,
                             float(np.max(ratios)), samples, nu=nu)


def left_inverse_estimate(metric, nu=1.0, samples=4000, seed=0):
    """sup |(-xi) o eta| / |xi - eta| over |xi|, |eta| <= nu (Euclidean
    coordinate norms; the group-difference comparison)."""
    alg = metric.algebra
    rng = np.random.default_rng(seed)
    xi = sample_box(alg, nu / math.sqrt(alg.dim), samples, rng)
    eta = sample_box(alg, nu / math.sqrt(alg.dim), samples, rng)
    ops = _FloatRecOps(alg)
    diff = sum(_bch_terms(ops, -xi, eta, alg.step)[1:])
    num = np.linalg.norm(diff, axis=-1)
    den = np.linalg.norm(xi - eta, axis=-1)
    mask = den > 1e-12
    return EmpiricalConstant("group_difference_vs_linear C(nu)[%s]" % alg.name,
                             float(np.max(num[mask] / den[mask])), int(mask.sum()), nu=nu)


def verify_conjugation_estimate(metric, nu=1.0, samples=4000, seed=0):
    """sup over d(x), d(y) <= nu of d(y^-1 x y) / |log x|^{1/step} and of
    d(y^-1 x y) / d(x)^{1/step}."""
    alg = metric.algebra
    rng = np.random.default_rng(seed)
    x = sample_ball(metric, nu, samples, rng)
    y = sample_ball(metric, nu, samples, rng)
    ops = _FloatRecOps(alg)
    xy = sum(_bch_terms(ops, x, y, alg.step)[1:])
    conj = sum(_bch_terms(ops, -y, xy, alg.step)[1:])
    d_conj = metric.quasi_norm_np(conj)
    norm_x = np.linalg.norm(x, axis=-1)
    d_x = metric.quasi_norm_np(x)
    mask = (norm_x > 1e-9) & (d_x > 1e-9)
    e = 1.0 / alg.step
    c1 = EmpiricalConstant("conjugation_vs_norm[%s]" % alg.name,
                           float(np.max(d_conj[mask] / norm_x[mask] ** e)),
                           int(mask.sum()), nu=nu)
    c2 = EmpiricalConstant("conjugation_vs_gauge[%s]" % alg.name,
                           float(np.max(d_conj[mask] / d_x[mask] ** e)),
                           int(mask.sum()), nu=nu)
    return c1, c2


def verify_product_estimate(metric, nu=1.0, n_factors=3, samples=800, seed=0):
    """sup of d(A_1..A_N, B_1..B_N) / sum_j d(A_j, B_j)^{1/step} over factor
    lists satisfying the tail and pairwise hypotheses; violating samples are
    rejected."""
    alg = metric.algebra
    rng = np.random.default_rng(seed)
    ops = _FloatRecOps(alg)

    def prods(mats):
        out = mats[-1]
        acc = [out]
        for j in range(len(mats) - 2, -1, -1):
            out = sum(_bch_terms(ops, mats[j], out, alg.step)[1:])
            acc.append(out)
        return out, acc[::-1]  # full product, tails B_j..B_N

    sup, used = 0.0, 0
    while used < samples:
        b = [sample_ball(metric, nu / (2 * n_factors), 1, rng)[0]
             for _ in range(n_factors)]
        _, tails = prods(b)
        if any(float(metric.quasi_norm_np(t)) > nu for t in tails):
            continue
        pert = [sample_ball(metric, nu / 2, 1, rng)[0] for _ in range(n_factors)]
        a = [sum(_bch_terms(ops, bb, pp, alg.step)[1:]) for bb, pp in zip(b, pert)]
        dterms = [float(metric.distance_np(aa, bb)) for aa, bb in zip(a, b)]
        if any(d > nu for d in dterms):
            continue
        pa, _ = prods(a)
        pb, _ = prods(b)
        num = float(metric.distance_np(pa, pb))
        den = sum(d ** (1.0 / alg.step) for d in dterms)
        if den > 1e-12:
            sup = max(sup, num / den)
            used += 1
    return EmpiricalConstant("product_list_comparison K_nu[N=%d,%s]"
                             % (n_factors, alg.name), sup, used, nu=nu)


def quasi_triangle_constant(metric, radius=1.0, samples=4000, seed=0):
    """sup N(x o y) / (N(x) + N(y)); 1 for a genuine distance."""
    alg = metric.algebra
    rng = np.random.default_rng(seed)
    x = sample_ball(metric, radius, samples, rng)
    y = sample_ball(metric, radius, samples, rng)
    ops = _FloatRecOps(alg)
    xy = sum(_bch_terms(ops, x, y, alg.step)[1:])
    num = metric.quasi_norm_np(xy)
    den = metric.quasi_norm_np(x) + metric.quasi_norm_np(y)
    mask = den > 1e-12
    return EmpiricalConstant("quasi_triangle[%s,%s]" % (metric.kind, alg.name),
                             float(np.max(num[mask] / den[mask])), int(mask.sum()),
                             nu=radius)


# ---------------------------------------------------------------------------
# word systems
# ---------------------------------------------------------------------------

@dataclass
class WordSystem:
    """Index sequence into the first-layer basis directions; the product of
    dilated generators P^s(a) = prod_{t<=s} exp(a_t * X_{i_t} / scale_t).

    Generators are rescaled so each factor has gauge 1 at a = 1; the scales
    are recorded because the construction assumes unit generators."""
    algebra: object
    indices: tuple            # positions into the layer-1 index list
    metric: object
    commutator_blocks: tuple = ()   # ((start, i, j), ...) 4-letter blocks
    generator_scales: tuple = ()

    @property
    def length(self):
        return len(self.indices)

    def generator_vector(self, t):
        alg = self.algebra
        k = alg.layer_indices(1)[self.indices[t]]
        v = np.zeros(alg.dim)
        v[k] = 1.0 / self.generator_scales[t]
        return v


def standard_word_system(algebra, metric=None):
    """Built-in generating word system for abelian and step-2 groups: the m
    horizontal letters solve the first layer linearly, and one 4-letter
    commutator block per chosen bracket pair fills the second layer (in step
    2 the commutator of two exponentials is exactly the exponential of the
    bracket)."""
    if algebra.step > 2:
        raise ValueError("no registered word system beyond step 2")
    metric = metric or default_metric(algebra)
    idx1 = algebra.layer_indices(1)
    m = len(idx1)
    indices = list(range(m))
    blocks = []
    if algebra.step == 2 and algebra.layer_indices(2):
        idx2 = algebra.layer_indices(2)
        chosen, rows = [], []
        import itertools as it
        from . import linalg
        for (i, j) in it.combinations(range(m), 2):
            br = algebra.bracket_coords(algebra.basis_coords(idx1[i]),
                                        algebra.basis_coords(idx1[j]))
            row = [br[k] for k in idx2]
            if any(c != 0 for c in row) and not linalg.in_span(rows, row):
                rows.append(row)
                chosen.append((i, j))
            if len(chosen) == len(idx2):
                break
        if len(chosen) < len(idx2):
            raise ValueError("first layer does not generate the second")
        for (i, j) in chosen:
            blocks.append((len(indices), i, j))
            indices.extend([i, j, i, j])
    scales = []
    for t in indices:
        v = np.zeros(algebra.dim)
        v[idx1[t]] = 1.0
        scales.append(float(metric.quasi_norm_np(v)))
    return WordSystem(algebra, tuple(indices), metric, tuple(blocks), tuple(scales))


def generating_word(a, ws, s=None):
    """P^s(a): the literal product of dilated generators; P^0 = identity."""
    alg = ws.algebra
    a = list(a)
    if s is None:
        s = len(a)
    if not (0 <= s <= ws.length):
        raise ValueError("s out of range 0..%d" % ws.length)
    exact = all(isinstance(c, (int, Fraction)) for c in a) and \
        all(sc == 1.0 for sc in ws.generator_scales)
    if exact:
        from .bch import group_product_coords
        cur = alg.zero_coords()
        idx1 = alg.layer_indices(1)
        for t in range(s):
            vec = [Q(0)] * alg.dim
            vec[idx1[ws.indices[t]]] = Q(a[t])
            cur = group_product_coords(alg, cur, tuple(vec))
        return GroupElement(alg, cur)
    ops = _FloatRecOps(alg)
    cur = np.zeros(alg.dim)
    for t in range(s):
        vec = float(a[t]) * ws.generator_vector(t)
        cur = sum(_bch_terms(ops, cur, vec, alg.step)[1:])
    return GroupElement(alg, cur)


def solve_word(x, ws):
    """Coefficients a with P^N(a) = x, for the built-in step <= 2 systems.

    The horizontal letters take the first-layer coordinates; the remaining
    vertical defect is solved through the commutator blocks, coefficient c
    becoming the 4-letter pattern (s, sgn(c) s, -s, -sgn(c) s) with
    s = sqrt(|c|) (positive first letter)."""
    alg = ws.algebra
    if alg.step > 2:
        raise ValueError("no registered solver for this group")
    xc = np.asarray(x.to_float().coords, dtype=float)
    idx1 = alg.layer_indices(1)
    m = len(idx1)
    a = np.zeros(ws.length)
    for t in range(m):
        a[t] = xc[idx1[ws.indices[t]]] * ws.generator_scales[t]
    if alg.step == 1 or not ws.commutator_blocks:
        return a
    ops = _FloatRecOps(alg)
    horiz = np.zeros(alg.dim)
    for t in range(m):
        horiz = sum(_bch_terms(ops, horiz, a[t] * ws.generator_vector(t), alg.step)[1:])
    defect = sum(_bch_terms(ops, -horiz, xc, alg.step)[1:])
    idx2 = alg.layer_indices(2)
    fops = alg.float_ops()
    cols = []
    for (start, i, j) in ws.commutator_blocks:
        u, v = np.zeros(alg.dim), np.zeros(alg.dim)
        u[idx1[i]] = 1.0 / ws.generator_scales[start]
        v[idx1[j]] = 1.0 / ws.generator_scales[start + 1]
        cols.append(fops.bracket(u, v)[idx2])
    bmat = np.array(cols).T
    coeffs = np.linalg.solve(bmat, defect[idx2])
    for (start, i, j), c in zip(ws.commutator_blocks, coeffs):
        s = math.sqrt(abs(c))
        t = math.copysign(s, c) if c != 0 else 0.0
        a[start:start + 4] = [s, t, -s, -t]
    return a


def word_constant(ws, metric=None, samples=400, seed=0):
    """c(G, d): max over sampled unit-sphere points of max_s |a_s|."""
    metric = metric or ws.metric
    alg = ws.algebra
    rng = np.random.default_rng(seed)
    sup = 0.0
    for _ in range(samples):
        u = rng.standard_normal(alg.dim)
        u /= max(np.linalg.norm(u), 1e-12)
        xc = sphere_point(metric, u)
        a = solve_word(GroupElement(alg, xc), ws)
        sup = max(sup, float(np.max(np.abs(a))))
    return EmpiricalConstant("word_coefficient c(G,d)[%s]" % alg.name,
                             sup, samples, nu=1.0)
