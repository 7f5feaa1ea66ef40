"""Exact linear algebra over the rationals.

Matrices are lists of lists of ``fractions.Fraction`` (row major).  Nothing
here mutates its arguments; every routine copies first.  This is the kernel
behind subalgebra canonicalization, quotients and all classification
decisions, where float rank tolerances would be unacceptable.
"""

from fractions import Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def identity(n):
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def zeros(nrows, ncols):
    return [[ZERO] * ncols for _ in range(nrows)]


def transpose(m):
    return [list(col) for col in zip(*m)] if m else []


def matmul(a, b):
    assert len(a[0]) == len(b), "inner dimensions differ"
    bt = transpose(b)
    return [[sum((x * y for x, y in zip(row, col)), ZERO) for col in bt] for row in a]


def matvec(a, v):
    assert len(a[0]) == len(v)
    return [sum((x * y for x, y in zip(row, v)), ZERO) for row in a]


def rref(m):
    """Reduced row echelon form.  Returns (rref_matrix, pivot_columns)."""
    if not m:
        return [], []
    a = [list(row) for row in m]
    nrows, ncols = len(a), len(a[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pivot_row = None
        for i in range(r, nrows):
            if a[i][c] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        a[r], a[pivot_row] = a[pivot_row], a[r]
        pv = a[r][c]
        a[r] = [x / pv for x in a[r]]
        for i in range(nrows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return a, pivots


def rank(m):
    return len(rref(m)[1])


def row_space_basis(m):
    """Canonical (RREF) basis of the row space; empty rows dropped."""
    r, pivots = rref(m)
    return [row for row in r[: len(pivots)]]


def nullspace(m):
    """Basis of the right nullspace, as a list of vectors."""
    if not m:
        return []
    r, pivots = rref(m)
    ncols = len(m[0])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [ZERO] * ncols
        v[fc] = ONE
        for i, pc in enumerate(pivots):
            v[pc] = -r[i][fc]
        basis.append(v)
    return basis


def solve(a, b):
    """One exact solution of a x = b, or None if inconsistent.

    Free variables are set to zero, which makes the result canonical.
    """
    nrows = len(a)
    ncols = len(a[0]) if nrows else 0
    aug = [list(row) + [bv] for row, bv in zip(a, b)]
    r, pivots = rref(aug)
    if ncols in pivots:
        return None
    x = [ZERO] * ncols
    for i, pc in enumerate(pivots):
        x[pc] = r[i][ncols]
    return x


def inverse(m):
    n = len(m)
    aug = [list(row) + list(idrow) for row, idrow in zip(m, identity(n))]
    r, pivots = rref(aug)
    if pivots != list(range(n)):
        return None
    return [row[n:] for row in r[:n]]


def in_span(basis_rows, v):
    """Is v in the row span of basis_rows?  Exact membership test."""
    if not basis_rows:
        return all(x == 0 for x in v)
    m = [list(r) for r in basis_rows]
    before = rank(m)
    return rank(m + [list(v)]) == before


def complement_basis(basis_rows, dim):
    """Coordinate vectors extending basis_rows to a basis of Q^dim.

    Picks standard basis vectors on the non-pivot columns of the RREF, which
    keeps the choice canonical.
    """
    _, pivots = rref(basis_rows) if basis_rows else ([], [])
    out = []
    for c in range(dim):
        if c not in pivots:
            v = [ZERO] * dim
            v[c] = ONE
            out.append(v)
    return out




