"""Pansu differentiability experiments for group-valued maps: numerical
differentials, the layer recursion for the full differential, contact-system
checks, the mean value defect, Newton-based inverse/implicit/rank solvers,
and tangent-cone blow-ups.

Maps are black boxes on a coordinate box; an analytic first-layer
differential can be attached (exact rational where possible) and is preferred
for kernel and complement computations, since classification verdicts from a
numerically thresholded rank are only as good as the threshold.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import linalg
from .algebra import homogeneous_dimension
from .bch import _bch_terms, _FloatRecOps
from .morphism import GradedMorphism
from .metric import default_metric, sample_ball
from .subgroups import (HomogeneousSubalgebra, classify_epimorphism,
                        classify_monomorphism, layered_decomposition)

Q = Fraction


# ---------------------------------------------------------------------------
# maps
# ---------------------------------------------------------------------------

class PDMap:
    """Group-valued map on a coordinate box.

    evaluator: float coords -> float coords.
    dfirst:    optional analytic first-layer differential, x -> matrix of
               shape (dim W_1, dim V_1) on the layer-1 bases.
    dfirst_exact: same but Fraction-valued at exact points (enables exact
               kernel/complement classification).
    """

    def __init__(self, domain, codomain, evaluator, box=None, dfirst=None,
                 dfirst_exact=None, name="map"):
        self.domain = domain
        self.codomain = codomain
        self.evaluator = evaluator
        self.box = box
        self.dfirst = dfirst
        self.dfirst_exact = dfirst_exact
        self.name = name

    def __call__(self, coords):
        return np.asarray(self.evaluator(np.asarray(coords, dtype=float)), dtype=float)

    def in_box(self, coords):
        if self.box is None:
            return True
        lo, hi = self.box
        return bool(np.all(coords >= lo) and np.all(coords <= hi))


def compose_maps(g, f, name=None):
    assert f.codomain == g.domain
    return PDMap(f.domain, g.codomain, lambda x: g(f(x)),
                 box=f.box, name=name or ("%s*%s" % (g.name, f.name)))


def hom_map(L, name=None):
    """The map induced by an h-homomorphism (exact contact structure)."""
    Lf = L.to_float()
    return PDMap(L.domain, L.codomain, lambda x: Lf.matrix @ x,
                 dfirst=lambda x: _layer_block(Lf, 1), name=name or "hom")


def _layer_block(L, layer):
    di = L.domain.layer_indices(layer)
    ci = L.codomain.layer_indices(layer)
    return np.asarray(L.matrix, dtype=float)[np.ix_(ci, di)]


def dilation_map(algebra, r):
    ops = algebra.float_ops()
    m = len(algebra.layer_indices(1))
    return PDMap(algebra, algebra, lambda x: ops.dilate(x, float(r)),
                 dfirst=lambda x: float(r) * np.eye(m), name="dilation")


def left_translation_map(g):
    alg = g.algebra
    gc = np.asarray(g.to_float().coords, dtype=float)
    ops = _FloatRecOps(alg)
    m = len(alg.layer_indices(1))
    return PDMap(alg, alg,
                 lambda x: sum(_bch_terms(ops, gc, x, alg.step)[1:]),
                 dfirst=lambda x: np.eye(m), name="left_translation")


def radial_level_map(h2):
    """f(x1..x5) = (sqrt(x2^2 + x3^2), x4) on the 5-dimensional Heisenberg
    group; its level sets have tangent cones of different bracket type at
    different points."""
    from .catalog import abelian
    r2 = abelian(2)

    def ev(x):
        return np.array([math.hypot(x[1], x[2]), x[3]])

    def dfirst(x):
        r = math.hypot(x[1], x[2])
        return np.array([[0.0, x[1] / r, x[2] / r, 0.0],
                         [0.0, 0.0, 0.0, 1.0]])

    def dfirst_exact(coords):
        c1, c2 = Q(coords[1]), Q(coords[2])
        rsq = c1 * c1 + c2 * c2
        root = _exact_sqrt(rsq)
        if root is None:
            raise ValueError("analytic differential is irrational here")
        return [[Q(0), c1 / root, c2 / root, Q(0)],
                [Q(0), Q(0), Q(0), Q(1)]]

    return PDMap(h2, r2, ev, dfirst=dfirst, dfirst_exact=dfirst_exact,
                 name="radial_level")


def _exact_sqrt(q):
    q = Q(q)
    if q < 0:
        return None
    num = math.isqrt(q.numerator)
    den = math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Q(num, den)
    return None


def vertical_shear_map(h1):
    """(x, y, z) -> (x, y, z + x^2): smooth, but the vertical shift violates
    the contact system away from {x = 0}; both detectors (contact residual,
    difference-quotient divergence) must agree on flagging it."""
    def ev(x):
        out = x.copy()
        out[2] = x[2] + x[0] ** 2
        return out
    return PDMap(h1, h1, ev, dfirst=lambda x: np.eye(2), name="vertical_shear")


def corner_map(h1):
    """x -> |x_1|: Lipschitz but not P-differentiable on the crease."""
    from .catalog import abelian
    return PDMap(h1, abelian(1), lambda x: np.array([abs(x[0])]), name="corner")


# ---------------------------------------------------------------------------
# differentials
# ---------------------------------------------------------------------------

def group_log_difference(pdmap, x, h_vec):
    """log( f(x)^{-1} f(x o exp(h_vec)) ) in codomain coordinates."""
    dom, cod = pdmap.domain, pdmap.codomain
    opsd, opsc = _FloatRecOps(dom), _FloatRecOps(cod)
    xh = sum(_bch_terms(opsd, x, h_vec, dom.step)[1:])
    if not pdmap.in_box(xh):
        raise ValueError("domain exit")
    fx, fxh = pdmap(x), pdmap(xh)
    return sum(_bch_terms(opsc, -fx, fxh, cod.step)[1:])


def horizontal_derivative(pdmap, x, direction, h=1e-5):
    """Central group-difference quotient along a first-layer direction; its
    first-layer part converges to the horizontal differential."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(direction, dtype=float)
    plus = group_log_difference(pdmap, x, h * v)
    minus = group_log_difference(pdmap, x, -h * v)
    return (plus - minus) / (2 * h)


def component_differentials(domain, codomain, dfirst_matrix, f_at_x):
    """Differentials of the layer components F_j of F = log o f, through the
    triangular recursion

        dF_j(h) = sum_{n=2}^{step} ((-1)^n / n!) pi_j([F(x), dF(h)]_{n-1}),

    built for j = 2..step on top of dF_1 (the right side at layer j only
    reads layers < j).  These are the objects of the first-order contact
    system; note dF_j is generally nonzero on horizontal h, so this is not
    the layer-preserving group differential (see lift_differential).
    Returns the matrix of h -> sum_j dF_j(h)."""
    di1 = domain.layer_indices(1)
    ci1 = codomain.layer_indices(1)
    ops = codomain.float_ops()
    fx = np.asarray(f_at_x, dtype=float)
    mat = np.zeros((codomain.dim, domain.dim))
    for b in range(domain.dim):
        col = np.zeros(codomain.dim)
        if domain.layer_of[b] == 1:
            pos = di1.index(b)
            col[ci1] = np.asarray(dfirst_matrix, dtype=float)[:, pos]
        for j in range(2, codomain.step + 1):
            acc = np.zeros(codomain.dim)
            power = col
            for n in range(2, codomain.step + 1):
                power = ops.bracket(fx, power)
                acc += ((-1) ** n / math.factorial(n)) * power
            col = col + ops.project_layer(acc, j)
        mat[:, b] = col
    return mat


def lift_differential(domain, codomain, dfirst_matrix, f_at_x=None):
    """Extend a first-layer block to the full layer-preserving Pansu
    differential.  The domain must be stratified: each higher basis vector is
    written exactly as a combination of brackets of lower layers, and the
    homomorphism property transports the block upward.  (The component
    recursion of component_differentials cannot see the vertical blocks: it
    vanishes on vertical inputs by layer preservation of dF_1.)

    Accepts a float matrix (returns a float morphism) or a Fraction matrix
    (exact morphism)."""
    del f_at_x  # the layer-preserving extension depends only on the block
    di1 = domain.layer_indices(1)
    ci1 = codomain.layer_indices(1)
    exact = not isinstance(dfirst_matrix, np.ndarray)
    if exact:
        block = [[Q(c) for c in row] for row in dfirst_matrix]
        cols = {}
        for pos, b in enumerate(di1):
            col = [Q(0)] * codomain.dim
            for rpos, k in enumerate(ci1):
                col[k] = block[rpos][pos]
            cols[b] = tuple(col)
        for layer in range(2, domain.step + 1):
            idx = domain.layer_indices(layer)
            if not idx:
                continue
            gen_cols, gen_vecs = [], []
            for a in [k for k in range(domain.dim) if domain.layer_of[k] < layer]:
                for b in [k for k in range(domain.dim)
                          if domain.layer_of[k] == layer - domain.layer_of[a]]:
                    if a in cols and b in cols:
                        br = domain.bracket_coords(domain.basis_coords(a),
                                                   domain.basis_coords(b))
                        if any(c != 0 for c in br):
                            gen_vecs.append([br[k] for k in idx])
                            gen_cols.append(codomain.bracket_coords(cols[a], cols[b]))
            for pos, k in enumerate(idx):
                target = [Q(1) if t == pos else Q(0) for t in range(len(idx))]
                comb = linalg.solve([[gen_vecs[g][t] for g in range(len(gen_vecs))]
                                     for t in range(len(idx))], target) \
                    if gen_vecs else None
                if comb is None:
                    raise ValueError("domain is not stratified: cannot lift layer %d"
                                     % layer)
                col = [Q(0)] * codomain.dim
                for c, gc in zip(comb, gen_cols):
                    col = [x + c * y for x, y in zip(col, gc)]
                cols[k] = tuple(col)
        matrix = [[cols[b][k] for b in range(domain.dim)] for k in range(codomain.dim)]
        return GradedMorphism(domain, codomain, matrix)
    block = np.asarray(dfirst_matrix, dtype=float)
    ops = codomain.float_ops()
    cols = {}
    for pos, b in enumerate(di1):
        col = np.zeros(codomain.dim)
        col[ci1] = block[:, pos]
        cols[b] = col
    for layer in range(2, domain.step + 1):
        idx = domain.layer_indices(layer)
        if not idx:
            continue
        gen_vecs, gen_cols = [], []
        dops = domain.float_ops()
        for a in [k for k in range(domain.dim) if domain.layer_of[k] < layer]:
            for b in [k for k in range(domain.dim)
                      if domain.layer_of[k] == layer - domain.layer_of[a]]:
                if a in cols and b in cols:
                    ea, eb = np.zeros(domain.dim), np.zeros(domain.dim)
                    ea[a], eb[b] = 1.0, 1.0
                    br = dops.bracket(ea, eb)
                    if np.any(br != 0):
                        gen_vecs.append(br[idx])
                        gen_cols.append(ops.bracket(cols[a], cols[b]))
        gmat = np.array(gen_vecs).T if gen_vecs else np.zeros((len(idx), 0))
        for pos, k in enumerate(idx):
            target = np.zeros(len(idx))
            target[pos] = 1.0
            comb, res, rank, _ = np.linalg.lstsq(gmat, target, rcond=None)
            if rank < len(idx) and np.linalg.norm(gmat @ comb - target) > 1e-9:
                raise ValueError("domain is not stratified: cannot lift layer %d"
                                 % layer)
            col = np.zeros(codomain.dim)
            for c, gc in zip(comb, gen_cols):
                col += c * gc
            cols[k] = col
    mat = np.zeros((codomain.dim, domain.dim))
    for b in range(domain.dim):
        mat[:, b] = cols[b]
    return GradedMorphism(domain, codomain, mat)


@dataclass
class DifferentialReport:
    morphism: object
    defect_by_scale: dict
    hom_tolerance: float
    converged: bool


def pansu_differential(pdmap, x, h_grid=(1e-2, 1e-3, 1e-4), directions=24,
                       seed=0, hom_tol=1e-6):
    """Numerical Pansu differential at x: first-layer columns by Richardson-
    extrapolated central quotients (or the analytic first-layer differential
    when attached), lifted to all layers; reports the sup of
    rho(f(x)^{-1} f(xh), L(h)) / d(h) per scale on sampled unit directions."""
    dom, cod = pdmap.domain, pdmap.codomain
    x = np.asarray(x, dtype=float)
    di1 = dom.layer_indices(1)
    ci1 = cod.layer_indices(1)
    if pdmap.dfirst is not None:
        d1 = np.asarray(pdmap.dfirst(x), dtype=float)
    else:
        cols = []
        for pos, k in enumerate(di1):
            v = np.zeros(dom.dim)
            v[k] = 1.0
            h1, h2 = min(h_grid), min(h_grid) / 2
            a = horizontal_derivative(pdmap, x, v, h1)[ci1]
            b = horizontal_derivative(pdmap, x, v, h2)
            cols.append((4 * b[ci1] - a) / 3.0)
        d1 = np.stack(cols, axis=1)
    L = lift_differential(dom, cod, d1, np.asarray(pdmap(x), dtype=float))
    dmetric = default_metric(dom)
    cmetric = default_metric(cod)
    rng = np.random.default_rng(seed)
    opsd, opsc = dom.float_ops(), _FloatRecOps(cod)
    defects = {}
    for h in h_grid:
        worst = 0.0
        for _ in range(directions):
            u = rng.standard_normal(dom.dim)
            u /= max(float(dmetric.quasi_norm_np(u)), 1e-12)
            hv = opsd.dilate(u, h)
            try:
                diff = group_log_difference(pdmap, x, hv)
            except ValueError:
                continue
            lh = L.matrix @ hv
            gap = sum(_bch_terms(opsc, -lh, diff, cod.step)[1:])
            worst = max(worst, float(cmetric.quasi_norm_np(gap)) /
                        float(dmetric.quasi_norm_np(hv)))
        defects[h] = worst
    scales = sorted(defects)
    # a genuinely P-differentiable map either shows decay across scales or
    # sits at the float noise floor (roundoff in vertical components scales
    # like sqrt(eps)/h, so the ratio cannot decrease indefinitely)
    floor = 3e-5 * max(1.0, float(np.max(np.abs(np.asarray(L.matrix)))))
    decays = defects[scales[0]] <= max(0.5 * defects[scales[-1]], 1e-7)
    converged = decays or min(defects.values()) <= floor
    return DifferentialReport(L, defects, hom_tol, converged)


def contact_check(pdmap, sample_points, h=1e-5):
    """Residual of the first-order contact system
    X_i F_j = sum_n ((-1)^n / n!) pi_j([F, X_i F]_{n-1}) for all horizontal
    directions i and layers j >= 2, by central differences."""
    dom, cod = pdmap.domain, pdmap.codomain
    opsd = _FloatRecOps(dom)
    copc = cod.float_ops()
    worst = 0.0
    for x in sample_points:
        x = np.asarray(x, dtype=float)
        fx = pdmap(x)
        for k in dom.layer_indices(1):
            v = np.zeros(dom.dim)
            v[k] = h
            xp = sum(_bch_terms(opsd, x, v, dom.step)[1:])
            xm = sum(_bch_terms(opsd, x, -v, dom.step)[1:])
            xif = (pdmap(xp) - pdmap(xm)) / (2 * h)
            rhs = np.zeros(cod.dim)
            power = xif
            for n in range(2, cod.step + 1):
                power = copc.bracket(fx, power)
                rhs += ((-1) ** n / math.factorial(n)) * power
            for j in range(2, cod.step + 1):
                res = copc.project_layer(xif, j) - copc.project_layer(rhs, j)
                worst = max(worst, float(np.max(np.abs(res))))
    return worst


# ---------------------------------------------------------------------------
# mean value defect
# ---------------------------------------------------------------------------

@dataclass
class MeanValueTable:
    """Per dyadic separation bin: the sup of the defect ratio
    rho(f(x)^{-1}f(y), Df(x)(x^{-1}y)) / d(x,y) (bin_sup) and of the
    undivided defect rho(...) (bin_defect).  For a continuously
    P-differentiable map the ratio decreases to 0; the undivided defect
    decays one order faster."""
    bin_edges: list
    bin_sup: list
    bin_defect: list
    samples: int

    def decreasing(self, slack=1.10):
        return all(b <= a * slack for a, b in zip(self.bin_sup, self.bin_sup[1:]))


def mean_value_ratio(pdmap, center, r1, r2, pair_samples=2000, bins=4,
                     word_system=None, seed=0):
    """Binned sup of rho(f(x)^{-1} f(y), Df(x)(x^{-1} y)) / d(x, y) over pairs
    in the ball of radius r1, binned dyadically by d(x, y).

    The nesting precondition (the piecewise-horizontal connecting lines must
    stay where the differential is controlled) is checked through the word
    constant when a word system is supplied."""
    dom, cod = pdmap.domain, pdmap.codomain
    dmetric, cmetric = default_metric(dom), default_metric(cod)
    if word_system is not None:
        from .metric import word_constant
        c = word_constant(word_system, samples=100, seed=seed).sup_observed
        if r1 + 2.0 * c * word_system.length * (2 * r1) > r2:
            raise ValueError("nesting condition violated: enlarge r2")
    if pdmap.dfirst is None:
        raise ValueError("mean_value_ratio needs the analytic first-layer differential")
    rng = np.random.default_rng(seed)
    center = np.asarray(center, dtype=float)
    opsd, opsc = _FloatRecOps(dom), _FloatRecOps(cod)
    ops = dom.float_ops()
    # paired design: each (base point, direction) is evaluated once per bin
    # at the bin's representative separation y = x o delta_{s_k}(u), which
    # populates every dyadic bin and lets the bin sups inherit the pointwise
    # monotonicity of the defect instead of sampling noise
    xs = sample_ball(dmetric, r1 / 2, pair_samples, rng)
    edges = [r1 / 2 ** k for k in range(bins + 1)]
    sups = [0.0] * bins
    defects = [0.0] * bins
    used = 0
    for u in xs:
        x = sum(_bch_terms(opsd, center, u, dom.step)[1:])
        L = lift_differential(dom, cod, pdmap.dfirst(x), pdmap(x))
        w = rng.standard_normal(dom.dim)
        w /= max(float(dmetric.quasi_norm_np(w)), 1e-12)
        used += 1
        for k in range(bins):
            s = edges[k] * (2 / 3)  # interior of bin k: (edges[k+1], edges[k]]
            y = sum(_bch_terms(opsd, x, ops.dilate(w, s), dom.step)[1:])
            d = float(dmetric.distance_np(x, y))
            xy = sum(_bch_terms(opsd, -x, y, dom.step)[1:])
            pred = L.matrix @ xy
            fdiff = sum(_bch_terms(opsc, -pdmap(x), pdmap(y), cod.step)[1:])
            gap = sum(_bch_terms(opsc, -pred, fdiff, cod.step)[1:])
            rho = float(cmetric.quasi_norm_np(gap))
            sups[k] = max(sups[k], rho / d)
            defects[k] = max(defects[k], rho)
    return MeanValueTable(edges, sups, defects, used)


# ---------------------------------------------------------------------------
# Newton machinery
# ---------------------------------------------------------------------------

def _newton(residual, t0, tol=1e-10, budget=100, fd_scale=1e-6):
    """Damped Newton with finite-difference Jacobian and Armijo backtracking."""
    t = np.asarray(t0, dtype=float).copy()
    r = residual(t)
    best, best_t = float(np.linalg.norm(r)), t.copy()
    for _ in range(budget):
        nrm = float(np.linalg.norm(r))
        if nrm <= tol:
            return t, nrm, True
        n_out, n_in = len(r), len(t)
        jac = np.zeros((n_out, n_in))
        h = fd_scale * max(1.0, float(np.linalg.norm(t)))
        for c in range(n_in):
            dt = np.zeros(n_in)
            dt[c] = h
            jac[:, c] = (residual(t + dt) - residual(t - dt)) / (2 * h)
        try:
            step = np.linalg.solve(jac, -r) if n_out == n_in else \
                np.linalg.lstsq(jac, -r, rcond=None)[0]
        except np.linalg.LinAlgError:
            return best_t, best, False
        lam = 1.0
        while lam > 1e-8:
            cand = t + lam * step
            rc = residual(cand)
            if float(np.linalg.norm(rc)) < nrm:
                t, r = cand, rc
                break
            lam *= 0.5
        else:
            return best_t, best, False
        if float(np.linalg.norm(r)) < best:
            best, best_t = float(np.linalg.norm(r)), t.copy()
    return best_t, best, best <= tol


def local_inverse(pdmap, xbar, y, tol=1e-10, budget=100):
    """Solve f(x) = y near xbar by damped Newton on coordinates; requires an
    invertible differential (checked numerically at xbar)."""
    assert pdmap.domain.dim == pdmap.codomain.dim
    rep = pansu_differential(pdmap, xbar)
    if abs(np.linalg.det(np.asarray(rep.morphism.matrix))) < 1e-10:
        raise ValueError("differential not invertible at the base point")
    y = np.asarray(y, dtype=float)
    t, resid, ok = _newton(lambda z: pdmap(z) - y, np.asarray(xbar, dtype=float),
                           tol=tol, budget=budget)
    if not ok:
        raise RuntimeError("no convergence within budget (residual %.3g)" % resid)
    return t, resid


def bilipschitz_bounds(pdmap, xbar, radius=0.2, samples=400, seed=0):
    """Sampled min/max of rho(f(a), f(b)) / d(a, b) near xbar."""
    dmetric, cmetric = default_metric(pdmap.domain), default_metric(pdmap.codomain)
    rng = np.random.default_rng(seed)
    opsd = _FloatRecOps(pdmap.domain)
    xbar = np.asarray(xbar, dtype=float)
    a = sample_ball(dmetric, radius, samples, rng)
    b = sample_ball(dmetric, radius, samples, rng)
    lo, hi = math.inf, 0.0
    for u, v in zip(a, b):
        x = sum(_bch_terms(opsd, xbar, u, pdmap.domain.step)[1:])
        y = sum(_bch_terms(opsd, xbar, v, pdmap.domain.step)[1:])
        d = float(dmetric.distance_np(x, y))
        if d < 1e-8:
            continue
        r = float(cmetric.distance_np(pdmap(x), pdmap(y))) / d
        lo, hi = min(lo, r), max(hi, r)
    return lo, hi


# ---------------------------------------------------------------------------
# implicit function solver
# ---------------------------------------------------------------------------

@dataclass
class ImplicitSolution:
    pdmap: object
    xbar: np.ndarray
    kernel: object            # HomogeneousSubalgebra N
    witness: object           # complementary H
    nodes: np.ndarray         # (count, dim) kernel group elements n
    phis: np.ndarray          # (count, dim) solved h = phi(n), group coords
    residuals: np.ndarray
    level: np.ndarray
    grid_shape: tuple
    radius: float = 0.0

    def points(self):
        """The level-set points xbar o n o phi(n)."""
        dom = self.pdmap.domain
        ops = _FloatRecOps(dom)
        nh = sum(_bch_terms(ops, self.nodes, self.phis, dom.step)[1:])
        return sum(_bch_terms(ops, self.xbar[None, :], nh, dom.step)[1:])

    def holder_constants(self, max_pairs=200000):
        """kappa with d(phi(n), phi(n')) <= kappa d(phi(n')^-1 n^-1 n' phi(n'))
        over grid pairs, plus the 1/step-Holder constant against the
        Euclidean kernel displacement."""
        dom = self.pdmap.domain
        metric = default_metric(dom)
        ops = _FloatRecOps(dom)
        count = len(self.nodes)
        idx = np.arange(count)
        ii, jj = np.meshgrid(idx, idx, indexing="ij")
        mask = ii < jj
        ii, jj = ii[mask], jj[mask]
        if len(ii) > max_pairs:
            sel = np.random.default_rng(0).choice(len(ii), max_pairs, replace=False)
            ii, jj = ii[sel], jj[sel]
        n, np_, ph, ph_ = (self.nodes[ii], self.nodes[jj],
                           self.phis[ii], self.phis[jj])
        num = metric.distance_np(ph, ph_)
        t = sum(_bch_terms(ops, -n, np_, dom.step)[1:])
        t = sum(_bch_terms(ops, t, ph_, dom.step)[1:])
        t = sum(_bch_terms(ops, -ph_, t, dom.step)[1:])
        den = metric.quasi_norm_np(t)
        good = den > 1e-12
        kappa = float(np.max(num[good] / den[good])) if good.any() else 0.0
        ndisp = np.linalg.norm((-self.nodes[ii] + self.nodes[jj]), axis=-1)
        good2 = ndisp > 1e-12
        holder = float(np.max(num[good2] / ndisp[good2] ** (1.0 / dom.step))) \
            if good2.any() else 0.0
        return {"kappa": kappa, "holder_1_over_step": holder, "pairs": int(len(ii))}


def _exact_differential_morphism(pdmap, xbar_exact):
    d1 = pdmap.dfirst_exact(xbar_exact)
    return lift_differential(pdmap.domain, pdmap.codomain, d1)


def implicit_function(pdmap, xbar, grid_spec=None, tol=1e-10, budget=100, seed=0):
    """Solve the level set of f through xbar as an intrinsic graph over the
    kernel of the differential.

    The differential must be an h-epimorphism; its kernel N and a
    complementary H are computed exactly when the analytic differential is
    attached (else numerically, with a warning flag).  Each grid node n in N
    gets a damped-Newton solve of f(xbar n h) = f(xbar) over H, seeded by
    continuation from the previous node.

    The neighbourhood sizes of the underlying theorem are existential: if a
    node fails, the grid box is halved (up to `shrink_attempts` times) and
    the achieved radius is reported on the solution.
    """
    dom = pdmap.domain
    grid_spec = grid_spec or {}
    xbar = np.asarray(xbar, dtype=float)
    if pdmap.dfirst_exact is not None:
        exact_x = [Q(v).limit_denominator(10 ** 9) for v in xbar]
        L = _exact_differential_morphism(pdmap, exact_x)
        numerical_kernel = False
    else:
        rep = pansu_differential(pdmap, xbar)
        mat = np.asarray(rep.morphism.matrix)
        mat = np.where(np.abs(mat) < 1e-8, 0.0, mat)
        L = GradedMorphism(dom, pdmap.codomain,
                           [[Q(v).limit_denominator(10 ** 6) for v in row]
                            for row in mat])
        numerical_kernel = True
    cls = classify_epimorphism(L)
    if cls.verdict != "h_epimorphism":
        raise ValueError("differential is not an h-epimorphism: %s" % cls.verdict)
    N, H = cls.kernel, cls.witness
    nbasis = np.array([[float(c) for c in v] for v in N.basis()])
    hbasis = np.array([[float(c) for c in v] for v in H.basis()])
    nlayers = [_vec_layer(dom, v) for v in N.basis()]
    radius = float(grid_spec.get("radius", 0.3))
    counts = list(grid_spec.get("counts", None) or [7] * len(nbasis))
    assert len(counts) == len(nbasis)
    shrink_attempts = int(grid_spec.get("shrink_attempts", 3))
    ops = _FloatRecOps(dom)
    fbar = pdmap(xbar)
    target = np.asarray(fbar, dtype=float)

    def solve_node(node, seed_coef):
        base = sum(_bch_terms(ops, xbar, node, dom.step)[1:])

        def resid(hcoef):
            h = hcoef @ hbasis
            pt = sum(_bch_terms(ops, base, h, dom.step)[1:])
            return pdmap(pt) - target

        return _newton(resid, seed_coef, tol=tol, budget=budget)

    last_error = None
    for attempt in range(shrink_attempts + 1):
        axes = []
        for c, l in zip(counts, nlayers):
            r = radius ** l
            axes.append(np.linspace(-r, r, c) if c > 1 else np.array([0.0]))
        mesh = np.meshgrid(*axes, indexing="ij")
        coeffs = np.stack([m.ravel() for m in mesh], axis=-1)
        nodes = coeffs @ nbasis
        count = len(nodes)
        phis = np.zeros((count, dom.dim))
        resids = np.zeros(count)
        hdim = len(hbasis)
        prev = np.zeros(hdim)
        row_len = counts[-1] if counts else 1
        phis_coef_cache = np.zeros(hdim)
        failed = False
        for i in range(count):
            seed_coef = prev if i % max(row_len, 1) != 0 or i == 0 \
                else phis_coef_cache
            hc, r, ok = solve_node(nodes[i], seed_coef)
            if not ok:
                last_error = "node %d of radius %.3g (residual %.3g)" % (
                    i, radius, r)
                failed = True
                break
            if i % max(row_len, 1) == 0:
                phis_coef_cache = hc.copy()
            prev = hc
            phis[i] = hc @ hbasis
            resids[i] = r
        if not failed:
            return ImplicitSolution(pdmap, xbar, N, H, nodes, phis, resids,
                                    target, tuple(counts), radius), \
                numerical_kernel
        radius *= 0.5  # the theorem's neighbourhood is existential: shrink
    raise RuntimeError("implicit solve failed at %s after %d shrink attempts"
                       % (last_error, shrink_attempts))


def uniqueness_check(solution, restarts=5, subset=40, scale=0.3, seed=0):
    """Multi-restart agreement of the implicit solve at random nodes: the
    empirical surrogate for uniqueness of the graph map."""
    pdmap = solution.pdmap
    dom = pdmap.domain
    ops = _FloatRecOps(dom)
    hbasis = np.array([[float(c) for c in v] for v in solution.witness.basis()])
    rng = np.random.default_rng(seed)
    target = solution.level
    worst = 0.0
    pick = rng.choice(len(solution.nodes), size=min(subset, len(solution.nodes)),
                      replace=False)
    for i in pick:
        base = sum(_bch_terms(ops, solution.xbar, solution.nodes[i], dom.step)[1:])

        def resid(hcoef):
            h = hcoef @ hbasis
            pt = sum(_bch_terms(ops, base, h, dom.step)[1:])
            return pdmap(pt) - target

        sols = []
        for r in range(restarts):
            t0 = rng.standard_normal(len(hbasis)) * scale
            hc, rr, ok = _newton(resid, t0, tol=1e-11, budget=200)
            if ok:
                sols.append(hc @ hbasis)
        for a in sols:
            worst = max(worst, float(np.max(np.abs(a - solution.phis[i]))))
    return worst


def translated_graph_check(solution, g, subset=25, tol=1e-7, seed=0):
    """Left-translating the graph yields a graph over the same kernel
    subgroup: decompose the translated points along (N, H) and re-solve the
    translated level problem at the new nodes."""
    pdmap = solution.pdmap
    dom = pdmap.domain
    ops = _FloatRecOps(dom)
    g = np.asarray(g, dtype=float)
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(solution.nodes), size=min(subset, len(solution.nodes)),
                      replace=False)
    hbasis = np.array([[float(c) for c in v] for v in solution.witness.basis()])
    new_xbar = sum(_bch_terms(ops, g, solution.xbar, dom.step)[1:])
    worst = 0.0
    for i in pick:
        node, phi = solution.nodes[i], solution.phis[i]
        nh = sum(_bch_terms(ops, node, phi, dom.step)[1:])
        n2, h2 = split_coords_np(dom, solution.kernel, solution.witness, nh)
        base = sum(_bch_terms(ops, new_xbar, n2, dom.step)[1:])

        def resid(hcoef):
            h = hcoef @ hbasis
            pt = sum(_bch_terms(ops, base, h, dom.step)[1:])
            return pdmap(sum(_bch_terms(ops, -g, pt, dom.step)[1:])) - solution.level

        seed0 = np.linalg.lstsq(hbasis.T, h2, rcond=None)[0]
        hc, r, ok = _newton(resid, seed0, tol=1e-11, budget=200)
        if not ok:
            return math.inf
        worst = max(worst, float(np.max(np.abs(hc @ hbasis - h2))))
    return worst


def split_coords_np(algebra, first, second, coords):
    """Float layerwise split g = exp(p) exp(h) along a complementary pair."""
    ops = _FloatRecOps(algebra)
    pb = [np.array([float(c) for c in v]) for v in first.basis()]
    hb = [np.array([float(c) for c in v]) for v in second.basis()]
    p = np.zeros(algebra.dim)
    h = np.zeros(algebra.dim)
    for layer in range(1, algebra.step + 1):
        idx = algebra.layer_indices(layer)
        if not idx:
            continue
        corr = sum(_bch_terms(ops, p, h, algebra.step)[1:])
        cols = [v for v in pb if _vec_layer_np(algebra, v) == layer] + \
               [v for v in hb if _vec_layer_np(algebra, v) == layer]
        npcols = len([v for v in pb if _vec_layer_np(algebra, v) == layer])
        if not cols:
            continue
        m = np.array([[c[k] for c in cols] for k in idx])
        rhs = np.array([coords[k] - corr[k] for k in idx])
        sol = np.linalg.lstsq(m, rhs, rcond=None)[0]
        for t, (c, col) in enumerate(zip(sol, cols)):
            if t < npcols:
                p = p + c * col
            else:
                h = h + c * col
    return p, h


def _vec_layer(alg, v):
    for k, c in enumerate(v):
        if c != 0:
            return alg.layer_of[k]
    return None


def _vec_layer_np(alg, v):
    for k, c in enumerate(v):
        if abs(c) > 0:
            return alg.layer_of[k]
    return None


# ---------------------------------------------------------------------------
# rank parametrization
# ---------------------------------------------------------------------------

@dataclass
class RankParametrization:
    pdmap: object
    image: object
    normal: object
    projection: object
    psi_points: np.ndarray     # preimages
    h_points: np.ndarray       # grid on the image subgroup
    phi_points: np.ndarray     # graph values in N
    lip_ratio: float


def rank_parametrization(pdmap, xbar, grid_radius=0.25, grid_count=6,
                         tol=1e-10, seed=0):
    """Represent the image of f near xbar as an intrinsic graph over the
    image subgroup of the differential: psi inverts p o f, and
    phi(h) = (p-complement part of f(psi(h)))."""
    dom, cod = pdmap.domain, pdmap.codomain
    xbar = np.asarray(xbar, dtype=float)
    if pdmap.dfirst_exact is not None:
        exact_x = [Q(v).limit_denominator(10 ** 9) for v in xbar]
        T = _exact_differential_morphism(pdmap, exact_x)
    else:
        T = pansu_differential(pdmap, xbar).morphism
        T = GradedMorphism(dom, cod, [[Q(v).limit_denominator(10 ** 6) for v in row]
                                      for row in np.asarray(T.matrix)])
    mono = classify_monomorphism(T)
    if mono.verdict != "h_monomorphism":
        raise ValueError("differential is not an h-monomorphism: %s" % mono.verdict)
    H, N, p = mono.image, mono.normal_complement, mono.projection
    pmat = np.asarray(p.to_float().matrix)
    hbasis = np.array([[float(c) for c in v] for v in H.basis()])
    opsc = _FloatRecOps(cod)
    fxbar = pdmap(xbar)
    h0 = np.linalg.lstsq(hbasis.T, pmat @ fxbar, rcond=None)[0]

    rng = np.random.default_rng(seed)
    hlayers = [_vec_layer(cod, v) for v in H.basis()]
    offsets = [np.linspace(-grid_radius ** l, grid_radius ** l, grid_count)
               for l in hlayers]
    mesh = np.meshgrid(*offsets, indexing="ij")
    coeffs = np.stack([m.ravel() for m in mesh], axis=-1) + h0

    psi_pts, h_pts, phi_pts = [], [], []
    t_seed = xbar.copy()
    for c in coeffs:
        target = c @ hbasis

        def resid(z):
            return pmat @ pdmap(z) - target

        z, r, ok = _newton(resid, t_seed, tol=tol, budget=200)
        if not ok:
            raise RuntimeError("rank solve failed (residual %.3g)" % r)
        t_seed = z
        fz = pdmap(z)
        hpart = pmat @ fz
        npart = sum(_bch_terms(opsc, -hpart, fz, cod.step)[1:])
        psi_pts.append(z)
        h_pts.append(hpart)
        phi_pts.append(npart)
    psi_pts, h_pts, phi_pts = map(np.array, (psi_pts, h_pts, phi_pts))
    cmetric = default_metric(cod)
    lip = 0.0
    for i in range(len(h_pts)):
        for j in range(i + 1, len(h_pts)):
            d = float(cmetric.distance_np(h_pts[i], h_pts[j]))
            if d > 1e-10:
                lip = max(lip, float(np.linalg.norm(phi_pts[i] - phi_pts[j])) / d)
    return RankParametrization(pdmap, H, N, p, psi_pts, h_pts, phi_pts, lip)


# ---------------------------------------------------------------------------
# tangent cones and blow-ups
# ---------------------------------------------------------------------------

@dataclass
class BlowupReport:
    scales: list
    distances: list
    set_to_cone: list
    cone_to_set: list
    R: float

    def __post_init__(self):
        assert all(d >= 0 for d in self.distances)
        assert all(a > b for a, b in zip(self.scales, self.scales[1:])), \
            "scales must decrease"

    @property
    def decreasing(self):
        return all(b <= a * 1.10 for a, b in zip(self.distances, self.distances[1:]))


class LevelSetSampler:
    """Samples a level set as the intrinsic graph produced by the implicit
    solver, exposing both dilated point clouds and graph heights over kernel
    nodes."""

    def __init__(self, pdmap, xbar, solution, tol=1e-10):
        self.pdmap = pdmap
        self.xbar = np.asarray(xbar, dtype=float)
        self.solution = solution
        self.tol = tol
        dom = pdmap.domain
        self._hbasis = np.array([[float(c) for c in v]
                                 for v in solution.witness.basis()])
        self._ops = _FloatRecOps(dom)

    def _solve(self, node, seed_coef=None):
        dom = self.pdmap.domain
        base = sum(_bch_terms(self._ops, self.xbar, node, dom.step)[1:])

        def resid(hcoef):
            h = hcoef @ self._hbasis
            pt = sum(_bch_terms(self._ops, base, h, dom.step)[1:])
            return self.pdmap(pt) - self.solution.level

        t0 = np.zeros(len(self._hbasis)) if seed_coef is None else seed_coef
        hc, r, ok = _newton(resid, t0, tol=self.tol, budget=200)
        if not ok:
            raise RuntimeError("sampler solve failed")
        return hc

    def dilated_points(self, lam, count, rng, R):
        """Points of D_R cap delta_{1/lam}(xbar^{-1} S)."""
        dom = self.pdmap.domain
        ops = dom.float_ops()
        nbasis = np.array([[float(c) for c in v] for v in self.solution.kernel.basis()])
        layers = [_vec_layer_np(dom, v) for v in nbasis]
        out = []
        seed_coef = None
        while len(out) < count:
            coef = np.array([rng.uniform(-(1.2 * R) ** l, (1.2 * R) ** l)
                             for l in layers])
            u = coef @ nbasis
            n = ops.dilate(u, lam)
            hc = self._solve(n, seed_coef)
            seed_coef = hc
            nh = sum(_bch_terms(self._ops, n, hc @ self._hbasis, dom.step)[1:])
            pt = ops.dilate(nh, 1.0 / lam)
            metric = default_metric(dom)
            if float(metric.quasi_norm_np(pt)) <= R:
                out.append(pt)
        return np.array(out)

    def graph_height(self, lam, node_u):
        """gauge(delta_{1/lam} phi(delta_lam u)): the distance from the cone
        node u to its graph point after zooming."""
        dom = self.pdmap.domain
        ops = dom.float_ops()
        n = ops.dilate(node_u, lam)
        hc = self._solve(n)
        phi = hc @ self._hbasis
        metric = default_metric(dom)
        return float(metric.quasi_norm_np(ops.dilate(phi, 1.0 / lam)))


def distance_to_vertical_subgroup(metric, sub, points):
    """Exact homogeneous distance from points to a vertical subgroup of a
    step-2 group (one containing the whole second layer): minimize over the
    free vertical part and the first-layer span."""
    alg = metric.algebra
    assert alg.step <= 2
    idx1 = alg.layer_indices(1)
    rows = [[v[k] for k in idx1] for v in sub.layer_basis(1)]
    pts = np.asarray(points, dtype=float)
    p1 = pts[:, idx1]
    if rows:
        B = np.array([[float(c) for c in r] for r in rows])
        proj = p1 @ B.T @ np.linalg.inv(B @ B.T) @ B
        perp = p1 - proj
    else:
        perp = p1
    rep = np.zeros_like(pts)
    rep[:, idx1] = perp
    return metric.quasi_norm_np(rep)


def hausdorff_distance(metric, cloud_a, cloud_b, chunk=256):
    """Symmetric Hausdorff distance between point clouds in the homogeneous
    metric, chunked brute force (k-d trees only support Minkowski metrics)."""
    def one_sided(A, B):
        worst = 0.0
        for s in range(0, len(A), chunk):
            blk = A[s:s + chunk]
            d = metric.distance_np(blk[:, None, :], B[None, :, :])
            worst = max(worst, float(np.max(np.min(d, axis=1))))
        return worst
    return max(one_sided(cloud_a, cloud_b), one_sided(cloud_b, cloud_a))


def cone_samples(algebra, cone, R, count, rng, metric=None):
    """Random points of the subgroup exp(cone) with gauge <= R."""
    metric = metric or default_metric(algebra)
    basis = np.array([[float(c) for c in v] for v in cone.basis()])
    layers = [_vec_layer_np(algebra, v) for v in basis]
    out = []
    while len(out) < count:
        coef = np.array([rng.uniform(-(1.3 * R) ** l, (1.3 * R) ** l) for l in layers])
        # subgroup = exp of the subalgebra: exponential coordinates directly
        v = coef @ basis
        if float(metric.quasi_norm_np(v)) <= R:
            out.append(v)
    return np.array(out)


def tangent_cone_samples(sampler, xbar, cone, scales, R=1.0, count=1200,
                         seed=0, metric=None):
    """Blow-up report: per scale, the two one-sided deviations between the
    dilated set and the candidate cone inside D_R.

    set -> cone uses the exact vertical projection when available (else a
    dense cone sample); cone -> set uses the intrinsic graph height when the
    sampler provides it (else nearest neighbours against the cloud)."""
    alg = sampler.pdmap.domain if hasattr(sampler, "pdmap") else cone.algebra
    metric = metric or default_metric(alg)
    rng = np.random.default_rng(seed)
    v2 = [list(alg.basis_coords(k)) for k in alg.layer_indices(2)]
    rows = [list(v) for v in cone.basis()]
    vertical = alg.step <= 2 and all(linalg.in_span(rows, v) for v in v2)
    set_to_cone, cone_to_set, dists = [], [], []
    for lam in scales:
        cloud = sampler.dilated_points(lam, count, rng, R)
        if vertical:
            d_a = float(np.max(distance_to_vertical_subgroup(metric, cone, cloud)))
        else:
            cs = cone_samples(alg, cone, R, 4 * count, rng, metric)
            worst = 0.0
            for s in range(0, len(cloud), 256):
                blk = cloud[s:s + 256]
                d = metric.distance_np(blk[:, None, :], cs[None, :, :])
                worst = max(worst, float(np.max(np.min(d, axis=1))))
            d_a = worst
        nodes = cone_samples(alg, cone, 0.95 * R, count, rng, metric)
        if hasattr(sampler, "graph_height"):
            d_b = max(sampler.graph_height(lam, u) for u in nodes)
        else:
            worst = 0.0
            for s in range(0, len(nodes), 256):
                blk = nodes[s:s + 256]
                d = metric.distance_np(blk[:, None, :], cloud[None, :, :])
                worst = max(worst, float(np.max(np.min(d, axis=1))))
            d_b = worst
        set_to_cone.append(d_a)
        cone_to_set.append(d_b)
        dists.append(max(d_a, d_b))
    return BlowupReport(list(scales), dists, set_to_cone, cone_to_set, R)


def tangent_cone_bracket_rank(cone):
    """Rank of the bracket map on the cone subalgebra: 0 means commutative."""
    alg = cone.algebra
    basis = cone.basis()
    rows = []
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            rows.append(list(alg.bracket_coords(basis[i], basis[j])))
    return linalg.rank(rows) if rows else 0


def tangent_dim_check(solution):
    """H-dim of the tangent cone equals H-dim(G) - H-dim(M), exactly, through
    the exact kernel."""
    from .subgroups import subalgebra_as_algebra
    G = solution.pdmap.domain
    M = solution.pdmap.codomain
    n_alg = subalgebra_as_algebra(solution.kernel)
    return {"tangent": homogeneous_dimension(n_alg),
            "ambient": homogeneous_dimension(G),
            "target": homogeneous_dimension(M),
            "ok": homogeneous_dimension(n_alg) ==
            homogeneous_dimension(G) - homogeneous_dimension(M)}


# ---------------------------------------------------------------------------
# named maps (experiment configs and the command line refer to these)
# ---------------------------------------------------------------------------

def named_map(name):
    from . import catalog
    if name == "radial_level":
        return radial_level_map(catalog.get("h2"))
    if name == "xcoord":
        h1 = catalog.get("h1")
        return PDMap(h1, catalog.abelian(1), lambda c: np.array([c[0]]),
                     dfirst=lambda c: np.array([[1.0, 0.0]]),
                     dfirst_exact=lambda c: [[1, 0]], name="xcoord")
    if name == "vertical_shear":
        return vertical_shear_map(catalog.get("h1"))
    if name == "corner":
        return corner_map(catalog.get("h1"))
    if name.startswith("dilation:"):
        return dilation_map(catalog.get("h1"), float(name.split(":")[1]))
    if name == "legendrian_line":
        h1 = catalog.get("h1")
        return PDMap(catalog.abelian(1), h1,
                     lambda t: np.array([t[0], 0.0, 0.0]),
                     dfirst=lambda t: np.array([[1.0], [0.0]]),
                     dfirst_exact=lambda t: [[1], [0]], name="legendrian_line")
    raise KeyError("unknown named map %r" % name)
