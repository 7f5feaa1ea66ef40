"""Graded nilpotent Lie algebras from exact rational structure constants.

A ``GradedAlgebra`` stores a basis split into layers V_1 .. V_step and a
sparse table c_{ij}^k (canonical orientation i < j, the j < i entries are
derived by antisymmetry) with [b_i, b_j] = sum_k c_{ij}^k b_k.  All algebraic
primitives here are exact; ``FloatOps`` exposes the same operations on float
numpy arrays for the analytic modules.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import linalg

Q = Fraction


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def add(self, kind, where, detail):
        self.violations.append({"kind": kind, "where": where, "detail": detail})

    def __str__(self):
        if self.ok:
            return "valid graded Lie algebra"
        lines = ["%s at %s: %s" % (v["kind"], v["where"], v["detail"]) for v in self.violations]
        return "\n".join(lines)


def validate_table(dim, step, layer_of, entries):
    """Check a raw structure-constant table (list of (i, j, k, coeff), 0-based).

    Reports antisymmetry conflicts (both orientations present and
    inconsistent, or diagonal entries), grading violations
    layer(k) != layer(i)+layer(j), layers out of range, and Jacobi failures.
    Diagnostic only: always returns a report, never raises.
    """
    report = ValidationReport()
    for idx, layer in enumerate(layer_of):
        if not (1 <= layer <= step):
            report.add("layer_range", (idx,), "layer %d outside 1..%d" % (layer, step))
    table = {}
    for (i, j, k, c) in entries:
        c = Q(c)
        if i == j and c != 0:
            report.add("antisymmetry", (i, j, k), "nonzero [b_i, b_i] coefficient")
            continue
        table.setdefault((i, j), {}).setdefault(k, Q(0))
        table[(i, j)][k] += c
    # antisymmetry between explicit opposite orientations
    for (i, j), terms in table.items():
        if i < j and (j, i) in table:
            for k in set(terms) | set(table[(j, i)]):
                if terms.get(k, Q(0)) != -table[(j, i)].get(k, Q(0)):
                    report.add("antisymmetry", (i, j, k),
                               "c_%d%d^%d != -c_%d%d^%d" % (i, j, k, j, i, k))
    # canonical table for the remaining checks
    canon = {}
    for (i, j), terms in table.items():
        a, b, sgn = (i, j, Q(1)) if i < j else (j, i, Q(-1))
        for k, c in terms.items():
            if c == 0:
                continue
            if (a, b) in canon and k in canon[(a, b)]:
                continue  # the antisymmetry pass already compared both
            canon.setdefault((a, b), {})[k] = sgn * c
    for (i, j), terms in canon.items():
        for k, c in terms.items():
            if c != 0 and layer_of[k] != layer_of[i] + layer_of[j]:
                report.add("grading", (i, j, k),
                           "layer(%d)=%d but layer(%d)+layer(%d)=%d"
                           % (k, layer_of[k], i, j, layer_of[i] + layer_of[j]))

    def brk(x, y):
        out = [Q(0)] * dim
        for (a, b), terms in canon.items():
            coef = x[a] * y[b] - x[b] * y[a]
            if coef:
                for k, c in terms.items():
                    out[k] += coef * c
        return out

    basis = [[Q(1) if t == s else Q(0) for t in range(dim)] for s in range(dim)]
    for i in range(dim):
        for j in range(i + 1, dim):
            for k in range(j + 1, dim):
                acc = brk(basis[i], brk(basis[j], basis[k]))
                for a, b in ((j, (k, i)), (k, (i, j))):
                    term = brk(basis[a], brk(basis[b[0]], basis[b[1]]))
                    acc = [u + v for u, v in zip(acc, term)]
                if any(x != 0 for x in acc):
                    report.add("jacobi", (i, j, k), "cyclic bracket sum nonzero")
    return report


def validate_grading(algebra):
    """Validation report for an already-constructed algebra (grading + Jacobi;
    antisymmetry holds by construction of the canonical table)."""
    entries = []
    for (i, j), terms in algebra.struct.items():
        for k, c in terms.items():
            entries.append((i, j, k, c))
    return validate_table(algebra.dim, algebra.step, algebra.layer_of, entries)


# ---------------------------------------------------------------------------
# the algebra
# ---------------------------------------------------------------------------

class GradedAlgebra:
    """Finite-dimensional graded Lie algebra over Q.

    layer_of: layer index (1-based) of each basis vector.
    struct:   {(i, j): {k: Fraction}} with i < j only.
    tags:     optional metadata set by catalog constructors (e.g. a symplectic
              J-structure); used to register closed-form algorithms.
    """

    def __init__(self, name, layer_of, struct, basis_names=None, tags=None, check=True):
        self.name = name
        self.layer_of = tuple(int(l) for l in layer_of)
        self.dim = len(self.layer_of)
        self.step = max(self.layer_of) if self.layer_of else 1
        canon = {}
        for (i, j), terms in struct.items():
            assert i < j, "structure table must use i < j orientation"
            kept = {k: Q(c) for k, c in terms.items() if Q(c) != 0}
            if kept:
                canon[(i, j)] = kept
        self.struct = canon
        self.basis_names = tuple(basis_names) if basis_names else tuple(
            "e%d" % (i + 1) for i in range(self.dim))
        self.tags = dict(tags or {})
        self._float_ops = None
        self._stratified = None
        if check:
            report = validate_grading(self)
            if not report.ok:
                raise ValueError("invalid graded algebra %r:\n%s" % (name, report))

    # -- basic geometry of the grading ------------------------------------
    def layer_indices(self, i):
        return [k for k, l in enumerate(self.layer_of) if l == i]

    def layer_dims(self):
        return [len(self.layer_indices(i)) for i in range(1, self.step + 1)]

    def __repr__(self):
        return "GradedAlgebra(%r, dim=%d, step=%d)" % (self.name, self.dim, self.step)

    def __eq__(self, other):
        return (isinstance(other, GradedAlgebra) and self.layer_of == other.layer_of
                and self.struct == other.struct)

    def __hash__(self):
        return hash((self.layer_of, tuple(sorted(
            (i, j, k, c) for (i, j), t in self.struct.items() for k, c in t.items()))))

    # -- exact coordinate operations --------------------------------------
    def zero_coords(self):
        return tuple([Q(0)] * self.dim)

    def basis_coords(self, k):
        return tuple(Q(1) if t == k else Q(0) for t in range(self.dim))

    def bracket_coords(self, x, y):
        out = [x[0] * 0] * self.dim  # keeps Fraction zeros exact
        for (i, j), terms in self.struct.items():
            coef = x[i] * y[j] - x[j] * y[i]
            if coef:
                for k, c in terms.items():
                    out[k] = out[k] + coef * c
        return tuple(out)

    def dilate_coords(self, x, r):
        return tuple(c * r ** self.layer_of[k] for k, c in enumerate(x))

    def project_layer_coords(self, x, i):
        return tuple(c if self.layer_of[k] == i else c * 0 for k, c in enumerate(x))

    def project_tail_coords(self, x, i):
        return tuple(c if self.layer_of[k] >= i else c * 0 for k, c in enumerate(x))

    # -- float backend ------------------------------------------------------
    def float_ops(self):
        if self._float_ops is None:
            self._float_ops = FloatOps(self)
        return self._float_ops


class AlgebraVector:
    """Coordinate vector in the fixed graded basis of an algebra.

    scalar_mode is 'exact' (tuple of Fraction) or 'float' (1-d numpy array).
    Conversion is one way, exact -> float, via to_float().
    """

    __slots__ = ("algebra", "coords")

    def __init__(self, algebra, coords):
        self.algebra = algebra
        if isinstance(coords, np.ndarray):
            self.coords = np.asarray(coords, dtype=float)
        else:
            self.coords = tuple(Q(c) for c in coords)
        assert len(self.coords) == algebra.dim, "coordinate length != algebra dim"

    @property
    def scalar_mode(self):
        return "float" if isinstance(self.coords, np.ndarray) else "exact"

    def to_float(self):
        if self.scalar_mode == "float":
            return self
        return type(self)(self.algebra, np.array([float(c) for c in self.coords]))

    def __eq__(self, other):
        if not isinstance(other, AlgebraVector) or self.algebra is not other.algebra:
            return NotImplemented
        if self.scalar_mode == "float" or other.scalar_mode == "float":
            return bool(np.array_equal(np.asarray(self.coords, dtype=float),
                                       np.asarray(other.coords, dtype=float)))
        return self.coords == other.coords

    def __hash__(self):
        if self.scalar_mode == "float":
            raise TypeError("float-mode vectors are not hashable")
        return hash((id(self.algebra), self.coords))

    def __add__(self, other):
        self._check(other)
        if self.scalar_mode == "float":
            return type(self)(self.algebra, self.coords + other.coords)
        return type(self)(self.algebra, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other):
        self._check(other)
        if self.scalar_mode == "float":
            return type(self)(self.algebra, self.coords - other.coords)
        return type(self)(self.algebra, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self):
        if self.scalar_mode == "float":
            return type(self)(self.algebra, -self.coords)
        return type(self)(self.algebra, tuple(-a for a in self.coords))

    def __rmul__(self, scalar):
        if self.scalar_mode == "float":
            return type(self)(self.algebra, float(scalar) * self.coords)
        return type(self)(self.algebra, tuple(Q(scalar) * a for a in self.coords))

    def _check(self, other):
        if self.algebra is not other.algebra and self.algebra != other.algebra:
            raise ValueError("algebra mismatch")
        if self.scalar_mode != other.scalar_mode:
            raise ValueError("scalar mode mismatch (convert with to_float first)")

    def norm(self):
        """Euclidean norm of the coordinates (the declared coordinate norm)."""
        if self.scalar_mode == "float":
            return float(np.linalg.norm(self.coords))
        return math.sqrt(float(sum(c * c for c in self.coords)))

    def __repr__(self):
        if self.scalar_mode == "float":
            return "AlgebraVector(%s)" % np.array2string(self.coords, precision=6)
        return "AlgebraVector(%s)" % (",".join(str(c) for c in self.coords))


class GroupElement(AlgebraVector):
    """Same coordinates read as exponential coordinates of the first kind:
    the element is exp of the stored algebra vector, identity = all zeros."""

    def __repr__(self):
        body = AlgebraVector.__repr__(self)
        return "GroupElement" + body[len("AlgebraVector"):]


def vector(algebra, coords):
    return AlgebraVector(algebra, coords)


def element(algebra, coords):
    return GroupElement(algebra, coords)


def identity_element(algebra):
    return GroupElement(algebra, algebra.zero_coords())


# ---------------------------------------------------------------------------
# operations on vectors
# ---------------------------------------------------------------------------

def bracket(x, y):
    """Exact bilinear extension of the structure constants."""
    x._check(y)
    if x.scalar_mode == "float":
        ops = x.algebra.float_ops()
        return AlgebraVector(x.algebra, ops.bracket(x.coords, y.coords))
    return AlgebraVector(x.algebra, x.algebra.bracket_coords(x.coords, y.coords))


def iterated_bracket(x, y, k):
    """[x, y]_k = [x, [x, ..., [x, y]...]] with k occurrences of x; [x,y]_0 = y."""
    assert k >= 0
    out = y
    for _ in range(k):
        out = bracket(x, out)
    return out


def dilate(x, r):
    """Grading dilation: layer-i coordinates scale by r^i.  Needs r > 0."""
    if x.scalar_mode == "float":
        r = float(r)
        if r <= 0:
            raise ValueError("dilation parameter must be positive")
        ops = x.algebra.float_ops()
        return type(x)(x.algebra, ops.dilate(x.coords, r))
    r = Q(r)
    if r <= 0:
        raise ValueError("dilation parameter must be positive")
    return type(x)(x.algebra, x.algebra.dilate_coords(x.coords, r))


def project_layer(x, i):
    if not (1 <= i <= x.algebra.step):
        raise ValueError("layer out of range")
    if x.scalar_mode == "float":
        mask = np.array([1.0 if l == i else 0.0 for l in x.algebra.layer_of])
        return type(x)(x.algebra, x.coords * mask)
    return type(x)(x.algebra, x.algebra.project_layer_coords(x.coords, i))


def project_tail(x, i):
    if not (1 <= i <= x.algebra.step):
        raise ValueError("layer out of range")
    if x.scalar_mode == "float":
        mask = np.array([1.0 if l >= i else 0.0 for l in x.algebra.layer_of])
        return type(x)(x.algebra, x.coords * mask)
    return type(x)(x.algebra, x.algebra.project_tail_coords(x.coords, i))


def homogeneous_dimension(algebra):
    """Sum of i * dim V_i; the Hausdorff dimension under any homogeneous
    distance."""
    return sum(i * d for i, d in enumerate(algebra.layer_dims(), start=1))


def is_stratified(algebra):
    """True iff [V_1, V_i] spans V_{i+1} for every i < step (exact rank)."""
    if algebra._stratified is not None:
        return algebra._stratified
    out = True
    v1 = algebra.layer_indices(1)
    for i in range(1, algebra.step):
        target = algebra.layer_indices(i + 1)
        if not target:
            continue
        rows = []
        for a in v1:
            for b in algebra.layer_indices(i):
                lo, hi = min(a, b), max(a, b)
                terms = algebra.struct.get((lo, hi), {})
                sgn = Q(1) if a < b else Q(-1)
                row = [sgn * terms.get(k, Q(0)) for k in target]
                rows.append(row)
        if linalg.rank(rows) < len(target):
            out = False
            break
    algebra._stratified = out
    return out


# ---------------------------------------------------------------------------
# empirical constants
# ---------------------------------------------------------------------------

@dataclass
class EmpiricalConstant:
    """An existential constant observed by sampling: the recorded value is a
    sup of ratios, never a claimed sharp constant."""
    label: str
    sup_observed: float
    samples: int
    nu: float = float("nan")

    def __post_init__(self):
        assert self.sup_observed >= 0.0
        assert self.samples >= 1

    def csv_row(self):
        return [self.label, "%.17g" % self.nu, str(self.samples), "%.17g" % self.sup_observed]


def bracket_norm_constant(algebra, norm_spec="euclidean"):
    """Certified upper bound for |[X,Y]| <= beta |X| |Y| in the Euclidean
    coordinate norm: the Frobenius norm of the full structure tensor.  This is
    a triangle-inequality bound over the table, not a sampled value."""
    assert norm_spec == "euclidean", "only the declared Euclidean coordinate norm is supported"
    total = Q(0)
    for (i, j), terms in algebra.struct.items():
        for k, c in terms.items():
            total += 2 * c * c  # both orientations of the tensor
    bound = math.sqrt(float(total))
    if bound > 0:
        bound = math.nextafter(bound, math.inf)  # round up: keep it certified
    return EmpiricalConstant(label="bracket_norm_bound[%s]" % algebra.name,
                             sup_observed=bound, samples=1)


# ---------------------------------------------------------------------------
# float backend
# ---------------------------------------------------------------------------

class FloatOps:
    """Vectorized float operations; all functions accept arrays of shape
    (..., dim) and broadcast over the leading axes."""

    def __init__(self, algebra):
        self.algebra = algebra
        self.dim = algebra.dim
        self.step = algebra.step
        entries = []
        for (i, j), terms in algebra.struct.items():
            for k, c in terms.items():
                entries.append((i, j, k, float(c)))
        self.entries = entries
        self.layer_of = np.array(algebra.layer_of)
        self.layer_masks = [None] + [
            (self.layer_of == i).astype(float) for i in range(1, self.step + 1)]

    def zero(self, like=None):
        if like is None:
            return np.zeros(self.dim)
        return np.zeros(np.asarray(like).shape)

    def bracket(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for (i, j, k, c) in self.entries:
            out[..., k] += c * (x[..., i] * y[..., j] - x[..., j] * y[..., i])
        return out

    def dilate(self, x, r):
        x = np.asarray(x, dtype=float)
        r = np.asarray(r, dtype=float)
        return x * r[..., None] ** self.layer_of if r.ndim else x * r ** self.layer_of

    def project_layer(self, x, i):
        return np.asarray(x, dtype=float) * self.layer_masks[i]

    def project_tail(self, x, i):
        mask = (self.layer_of >= i).astype(float)
        return np.asarray(x, dtype=float) * mask

    def layer_norms(self, x):
        """Euclidean norm of each layer component, shape (..., step)."""
        x = np.asarray(x, dtype=float)
        return np.stack([np.linalg.norm(x * self.layer_masks[i], axis=-1)
                         for i in range(1, self.step + 1)], axis=-1)
