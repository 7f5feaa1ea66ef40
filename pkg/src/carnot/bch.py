"""Baker-Campbell-Hausdorff machinery, exact and float.

Two independent routes compute the group product in exponential coordinates:

* ``group_product`` runs the classical BCH recursion
      (n+1) c_{n+1}(X,Y) = 1/2 [X-Y, c_n(X,Y)]
          + sum_{p>=1, 2p<=n} K_{2p} sum_{k_1+..+k_{2p}=n}
                [c_{k_1}, [..., [c_{k_{2p}}, X+Y] ...]]
  with K_{2p} = B_{2p}/(2p)! (Bernoulli numbers, B_2 = 1/6).
* ``series_oracle_product`` computes log(exp(x) exp(y)) in the truncated free
  tensor algebra on two letters and evaluates the resulting Lie polynomial
  through the Dynkin bracketing.  It never touches the recursion, so exact
  agreement of the two is a real check, and it settles every sign convention.

Everything in exact mode is Fraction arithmetic; nilpotency makes all series
finite, so there are no convergence questions.
"""

import functools
import math
from fractions import Fraction

import numpy as np

from . import linalg
from .algebra import AlgebraVector, GroupElement, EmpiricalConstant
from .morphism import GradedMorphism

Q = Fraction


# ---------------------------------------------------------------------------
# scalar helpers
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def bernoulli(m):
    """Bernoulli number B_m with the B_1 = -1/2 convention (so B_2 = 1/6)."""
    if m == 0:
        return Q(1)
    acc = Q(0)
    for j in range(m):
        acc += Q(math.comb(m + 1, j)) * bernoulli(j)
    return -acc / (m + 1)


@functools.lru_cache(maxsize=None)
def _k_coefficient(twop):
    return bernoulli(twop) / Q(math.factorial(twop))


@functools.lru_cache(maxsize=None)
def _compositions(n, parts):
    """All tuples of `parts` positive integers summing to n."""
    if parts == 1:
        return ((n,),)
    out = []
    for first in range(1, n - parts + 2):
        for rest in _compositions(n - first, parts - 1):
            out.append((first,) + rest)
    return tuple(out)


# ---------------------------------------------------------------------------
# the recursion, generic over a coordinate backend
# ---------------------------------------------------------------------------

class _ExactOps:
    def __init__(self, algebra):
        self.algebra = algebra

    def add(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def sub(self, a, b):
        return tuple(x - y for x, y in zip(a, b))

    def scale(self, q, a):
        return tuple(q * x for x in a)

    def bracket(self, a, b):
        return self.algebra.bracket_coords(a, b)


class _FloatRecOps:
    def __init__(self, algebra):
        self.fops = algebra.float_ops()

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def scale(self, q, a):
        return float(q) * a

    def bracket(self, a, b):
        return self.fops.bracket(a, b)


def _bch_terms(ops, x, y, step):
    """List [None, c_1, ..., c_step] of the BCH homogeneous terms."""
    c = [None] * (step + 1)
    c[1] = ops.add(x, y)
    if step == 1:
        return c
    xmy = ops.sub(x, y)
    xpy = c[1]
    for n in range(1, step):
        acc = ops.scale(Q(1, 2), ops.bracket(xmy, c[n]))
        for p in range(1, n // 2 + 1):
            coeff = _k_coefficient(2 * p)
            if coeff == 0:
                continue
            for comp in _compositions(n, 2 * p):
                t = ops.bracket(c[comp[-1]], xpy)
                for k in reversed(comp[:-1]):
                    t = ops.bracket(c[k], t)
                acc = ops.add(acc, ops.scale(coeff, t))
        c[n + 1] = ops.scale(Q(1, n + 1), acc)
    return c


class BchTermCache:
    """Memo of exact BCH term lists per (X, Y) coordinate pair.

    Cached lists must agree with a fresh recomputation; the cache is only an
    evaluation shortcut, never a semantic one.
    """

    def __init__(self, algebra, maxsize=4096):
        self.algebra = algebra
        self.max_n = algebra.step
        self.memo = {}
        self.maxsize = maxsize

    def terms(self, xcoords, ycoords):
        key = (xcoords, ycoords)
        hit = self.memo.get(key)
        if hit is None:
            hit = tuple(_bch_terms(_ExactOps(self.algebra), xcoords, ycoords,
                                   self.algebra.step)[1:])
            if len(self.memo) >= self.maxsize:
                self.memo.clear()
            self.memo[key] = hit
        return hit


def _cache_for(algebra):
    cache = algebra.tags.get("_bch_cache")
    if cache is None:
        cache = BchTermCache(algebra)
        algebra.tags["_bch_cache"] = cache
    return cache


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def bch_term(n, x, y):
    """Homogeneous BCH term c_n(X, Y); c_1 = X + Y, c_2 = [X,Y]/2."""
    alg = x.algebra
    if not (1 <= n <= alg.step):
        raise ValueError("term index out of range 1..step")
    x._check(y)
    if x.scalar_mode == "exact":
        return AlgebraVector(alg, _cache_for(alg).terms(x.coords, y.coords)[n - 1])
    return AlgebraVector(alg, _bch_terms(_FloatRecOps(alg), x.coords, y.coords, alg.step)[n])


def group_product(x, y):
    """Group operation read in exponential coordinates: sum of all c_n."""
    alg = x.algebra
    x._check(y)
    cls = GroupElement if isinstance(x, GroupElement) or isinstance(y, GroupElement) \
        else AlgebraVector
    if x.scalar_mode == "exact":
        terms = _cache_for(alg).terms(x.coords, y.coords)
        out = [Q(0)] * alg.dim
        for t in terms:
            out = [a + b for a, b in zip(out, t)]
        return cls(alg, tuple(out))
    terms = _bch_terms(_FloatRecOps(alg), x.coords, y.coords, alg.step)
    return cls(alg, sum(terms[1:]))


def group_inverse(x):
    """Inverse is coordinate negation in exponential coordinates."""
    return -x


def group_product_coords(algebra, xc, yc):
    """Exact group product on raw coordinate tuples."""
    terms = _cache_for(algebra).terms(tuple(xc), tuple(yc))
    out = [Q(0)] * algebra.dim
    for t in terms:
        out = [a + b for a, b in zip(out, t)]
    return tuple(out)


def conjugate(y, x):
    """y^{-1} x y."""
    return group_product(group_product(group_inverse(y), x), y)


# ---------------------------------------------------------------------------
# differential of exp
# ---------------------------------------------------------------------------

def exp_differential(x):
    """Matrix of Id - sum_{n>=2} ((-1)^n / n!) ad(X)^{n-1}.

    Unipotent because ad(X) is nilpotent; its columns agree with
    d/dt log(exp(-X) exp(X + t b_j)) at t = 0 (see exp_differential_oracle).
    """
    alg = x.algebra
    assert x.scalar_mode == "exact", "exact mode required"
    n = alg.dim
    ad = [[Q(0)] * n for _ in range(n)]
    for j in range(n):
        col = alg.bracket_coords(x.coords, alg.basis_coords(j))
        for k in range(n):
            ad[k][j] = col[k]
    out = linalg.identity(n)
    power = linalg.identity(n)
    for m in range(2, alg.step + 1):
        power = linalg.matmul(ad, power)  # ad(X)^{m-1}
        coeff = -Q((-1) ** m, math.factorial(m))
        for r in range(n):
            for c in range(n):
                out[r][c] += coeff * power[r][c]
    return GradedMorphism(alg, alg, out)


def exp_differential_oracle(x):
    """Independent route: column j is the t-derivative at 0 of
    log(exp(-X) exp(X + t b_j)), evaluated through the free tensor algebra.

    Writes exp(-x)(sum_k (1/k!) sum_{i+j=k-1} x^i b x^j) as a Lie polynomial
    and evaluates it with Dynkin bracketing; only exp/log series and the
    Dynkin idempotent are used, not the BCH recursion.
    """
    alg = x.algebra
    assert x.scalar_mode == "exact"
    deg = alg.step
    exp_negx = _exp_series(_letter_series(0, deg, sign=Q(-1)))
    # t-linear part of exp(x + t y): sum_k 1/k! sum_{i+j=k-1} x^i y x^j
    lin = FreeSeries(deg)
    for k in range(1, deg + 1):
        coeff = Q(1, math.factorial(k))
        for i in range(k):
            word = (0,) * i + (1,) + (0,) * (k - 1 - i)
            lin.terms[word] = lin.terms.get(word, Q(0)) + coeff
    poly = exp_negx.mul(lin)
    cols = []
    for j in range(alg.dim):
        letters = {0: x.coords, 1: alg.basis_coords(j)}
        cols.append(_dynkin_evaluate(poly, alg, letters))
    matrix = [[cols[j][k] for j in range(alg.dim)] for k in range(alg.dim)]
    return GradedMorphism(alg, alg, matrix)


# ---------------------------------------------------------------------------
# free tensor algebra on two letters, truncated
# ---------------------------------------------------------------------------

class FreeSeries:
    """Element of the free associative algebra on letters 0..d-1, truncated
    above `degree`.  terms maps letter tuples to Fraction coefficients; the
    empty word carries the scalar part (0 for Lie elements, 1 for group-like
    ones)."""

    def __init__(self, degree, terms=None):
        self.degree = degree
        self.terms = dict(terms or {})

    def copy(self):
        return FreeSeries(self.degree, self.terms)

    def add(self, other, scale=Q(1)):
        assert self.degree == other.degree, "truncation degree mismatch"
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, Q(0)) + scale * c
            if out[w] == 0:
                del out[w]
        return FreeSeries(self.degree, out)

    def mul(self, other):
        assert self.degree == other.degree, "truncation degree mismatch"
        out = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                if len(w1) + len(w2) > self.degree:
                    continue
                w = w1 + w2
                out[w] = out.get(w, Q(0)) + c1 * c2
        return FreeSeries(self.degree, {w: c for w, c in out.items() if c != 0})

    def graded_component(self, n):
        return {w: c for w, c in self.terms.items() if len(w) == n}


def _letter_series(letter, degree, sign=Q(1)):
    return FreeSeries(degree, {(letter,): sign})


def _exp_series(a):
    """exp of a series with zero scalar part."""
    assert a.terms.get((), Q(0)) == 0
    out = FreeSeries(a.degree, {(): Q(1)})
    power = FreeSeries(a.degree, {(): Q(1)})
    for k in range(1, a.degree + 1):
        power = power.mul(a)
        out = out.add(power, Q(1, math.factorial(k)))
    return out


def _log_series(g):
    """log of a group-like series (scalar part 1)."""
    assert g.terms.get((), Q(0)) == 1
    u = g.add(FreeSeries(g.degree, {(): Q(1)}), Q(-1))
    out = FreeSeries(g.degree)
    power = FreeSeries(g.degree, {(): Q(1)})
    for m in range(1, g.degree + 1):
        power = power.mul(u)
        out = out.add(power, Q((-1) ** (m + 1), m))
    return out


@functools.lru_cache(maxsize=None)
def bch_word_polynomial(degree):
    """log(exp(x) exp(y)) in the truncated free tensor algebra on {x, y}."""
    x = _letter_series(0, degree)
    y = _letter_series(1, degree)
    return _log_series(_exp_series(x).mul(_exp_series(y)))


def _dynkin_evaluate(series, algebra, letters):
    """Evaluate a Lie polynomial given as an associative series.

    By Dynkin-Specht-Wever, a homogeneous Lie element P of degree n satisfies
    P = (1/n) * delta(P) with delta the left-to-right bracketing of words, so
    each word w = l_1 ... l_n contributes (coeff/n) [[..[l_1,l_2],..],l_n].
    """
    out = [Q(0)] * algebra.dim
    for w, c in series.terms.items():
        n = len(w)
        if n == 0:
            if c != 0:
                raise ValueError("not a Lie element (scalar part)")
            continue
        if n == 1:
            vec = letters[w[0]]
            out = [a + c * b for a, b in zip(out, vec)]
            continue
        vec = letters[w[0]]
        for letter in w[1:]:
            vec = algebra.bracket_coords(vec, letters[letter])
        q = c / n
        out = [a + q * b for a, b in zip(out, vec)]
    return tuple(out)


def series_oracle_product(x, y):
    """Independent BCH oracle: log(exp(x)exp(y)) from the free tensor algebra,
    projected into the algebra by Dynkin bracketing.  If the algebra carries a
    registered unipotent matrix model, the result is cross-checked against
    exact matrix exp/log as well."""
    alg = x.algebra
    x._check(y)
    assert x.scalar_mode == "exact", "the oracle runs in exact mode"
    poly = bch_word_polynomial(alg.step)
    letters = {0: x.coords, 1: y.coords}
    coords = _dynkin_evaluate(poly, alg, letters)
    model = alg.tags.get("matrix_model")
    if model is not None:
        via_model = model.product_coords(x.coords, y.coords)
        if tuple(via_model) != tuple(coords):
            raise AssertionError("matrix model disagrees with the series oracle")
    cls = GroupElement if isinstance(x, GroupElement) else AlgebraVector
    return cls(alg, coords)


# ---------------------------------------------------------------------------
# the multilinear decomposition of c_n
# ---------------------------------------------------------------------------

class LnDecomposition:
    """Coefficients e_{n,alpha}, alpha in {1,2}^{n-1}, with
    c_n(A1, A2) = sum_alpha e_{n,alpha} * B_n(A_alpha, A1 + A2)
    where B_n is the right-nested bracket [X1,[X2,[...,[X_{n-1},X_n]..]]."""

    def __init__(self, n, coefficients):
        self.n = n
        self.coefficients = dict(coefficients)

    def evaluate(self, a1, a2):
        """Exact evaluation of the right-hand side on algebra vectors."""
        alg = a1.algebra
        s = tuple(u + v for u, v in zip(a1.coords, a2.coords))
        args = {1: a1.coords, 2: a2.coords}
        out = [Q(0)] * alg.dim
        for alpha, e in self.coefficients.items():
            if e == 0:
                continue
            vec = s
            for letter in reversed(alpha):
                vec = alg.bracket_coords(args[letter], vec)
            out = [u + e * v for u, v in zip(out, vec)]
        return AlgebraVector(alg, tuple(out))


@functools.lru_cache(maxsize=None)
def _decompose_cn_universal(n):
    """Solve for e_{n,alpha} in the free tensor algebra; free variables are
    pinned to 0, which reproduces (1/2, 0) at n = 2."""
    deg = n
    cn = bch_word_polynomial(deg).graded_component(n)
    alphas = [tuple(a) for a in _tuples_12(n - 1)]
    # expand B_n(A_alpha, A1+A2) into words; letters 0 <-> A1, 1 <-> A2
    words = sorted({w for w in _all_words(2, n)})
    windex = {w: i for i, w in enumerate(words)}
    cols = []
    for alpha in alphas:
        series = FreeSeries(deg, {(0,): Q(1), (1,): Q(1)})  # A1 + A2
        for letter in reversed(alpha):
            arg = _letter_series(letter - 1, deg)
            series = _comm(arg, series)
        col = [Q(0)] * len(words)
        for w, c in series.terms.items():
            col[windex[w]] = c
        cols.append(col)
    matrix = [[cols[a][r] for a in range(len(alphas))] for r in range(len(words))]
    rhs = [cn.get(w, Q(0)) for w in words]
    sol = linalg.solve(matrix, rhs)
    if sol is None:
        raise AssertionError("multilinear decomposition system is inconsistent")
    return {alpha: e for alpha, e in zip(alphas, sol)}


def _comm(a, b):
    return a.mul(b).add(b.mul(a), Q(-1))


def _tuples_12(length):
    if length == 0:
        return [()]
    shorter = _tuples_12(length - 1)
    return [t + (v,) for t in shorter for v in (1, 2)]


def _all_words(nletters, length):
    if length == 0:
        return [()]
    shorter = _all_words(nletters, length - 1)
    return [w + (l,) for w in shorter for l in range(nletters)]


def decompose_cn(n, algebra):
    """Multilinear decomposition of c_n for 2 <= n <= step.  The coefficients
    are universal (free Lie algebra on two generators); the algebra argument
    fixes the admissible range of n."""
    if not (2 <= n <= algebra.step):
        raise ValueError("n out of range 2..step")
    return LnDecomposition(n, _decompose_cn_universal(n))


# ---------------------------------------------------------------------------
# remainder splitting and difference bounds
# ---------------------------------------------------------------------------

def cn_remainder(n, x, y):
    """R_n with c_n(X,Y) = ((-1)^{n-1}/n!) [ (Y-X)/2, X+Y ]_{n-1} + R_n.

    R_2 vanishes identically; for n >= 3 the remainder is cubically small in
    X + Y on bounded sets."""
    alg = x.algebra
    if not (2 <= n <= alg.step):
        raise ValueError("n out of range 2..step")
    cn = bch_term(n, x, y)
    half = Q(1, 2) if x.scalar_mode == "exact" else 0.5
    a = half * (y - x)
    b = x + y
    vec = b
    for _ in range(n - 1):
        vec = _bracket_vec(a, vec)
    coeff = Q((-1) ** (n - 1), math.factorial(n))
    main = coeff * vec if x.scalar_mode == "exact" else float(coeff) * vec
    return cn - main


def _bracket_vec(a, b):
    from .algebra import bracket
    return bracket(a, b)


def cn_difference_ratio(n, x, y, d1, d2, nu):
    """||c_n(X+D1, Y+D2) - c_n(X, Y)|| / (nu^{n-1} max(||D1||, ||D2||));
    zero perturbations give ratio 0 by convention."""
    denom = nu ** (n - 1) * max(d1.norm(), d2.norm())
    if denom == 0:
        return 0.0
    diff = bch_term(n, x + d1, y + d2) - bch_term(n, x, y)
    return diff.norm() / denom


def cn_difference_bound(algebra, n, nu, samples=200, seed=0):
    """Sampled sup of the c_n difference ratio over ||X||,||Y||,||D|| <= nu."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x, y, d1, d2 = (_random_ball_vector(algebra, nu, rng) for _ in range(4))
        worst = max(worst, cn_difference_ratio(n, x, y, d1, d2, nu))
    return EmpiricalConstant(label="bch_term_difference gamma_%d[%s]" % (n, algebra.name),
                             sup_observed=worst, samples=samples, nu=nu)


def _random_ball_vector(algebra, nu, rng):
    v = rng.standard_normal(algebra.dim)
    v *= rng.uniform(0, nu) / max(np.linalg.norm(v), 1e-300)
    return AlgebraVector(algebra, v)


def bilinear_bound(algebra, n, nu=1.0, samples=400, seed=0):
    """Sampled sup of ||c_n(X, Y)|| / ||[X, Y]|| over ||X||, ||Y|| <= nu with
    [X, Y] != 0; finite because every addend of c_n beyond the first contains
    a bracket factor."""
    from .algebra import bracket
    rng = np.random.default_rng(seed)
    worst, used = 0.0, 0
    while used < samples:
        x = _random_ball_vector(algebra, nu, rng)
        y = _random_ball_vector(algebra, nu, rng)
        br = bracket(x, y).norm()
        if br < 1e-9:
            continue
        worst = max(worst, bch_term(n, x, y).norm() / br)
        used += 1
    return EmpiricalConstant(label="bch_term_vs_bracket alpha_%d[%s]"
                             % (n, algebra.name),
                             sup_observed=worst, samples=used, nu=nu)
