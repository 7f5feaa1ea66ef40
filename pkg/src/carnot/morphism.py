"""Layer-preserving linear maps between graded algebras.

A GradedMorphism holds the matrix of a linear map in the fixed graded bases
(columns = images of domain basis vectors).  It is the common container for
algebra homomorphisms, projections and Pansu differentials; the homomorphism
flags are computed on demand and cached.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import linalg

Q = Fraction


class GradedMorphism:
    def __init__(self, domain, codomain, matrix):
        self.domain = domain
        self.codomain = codomain
        if isinstance(matrix, np.ndarray):
            self.matrix = np.asarray(matrix, dtype=float)
            assert self.matrix.shape == (codomain.dim, domain.dim)
        else:
            self.matrix = [[Q(c) for c in row] for row in matrix]
            assert len(self.matrix) == codomain.dim
            assert all(len(r) == domain.dim for r in self.matrix)
        self._flags = {}

    @property
    def scalar_mode(self):
        return "float" if isinstance(self.matrix, np.ndarray) else "exact"

    def to_float(self):
        if self.scalar_mode == "float":
            return self
        return GradedMorphism(self.domain, self.codomain,
                              np.array([[float(c) for c in row] for row in self.matrix]))

    def column(self, j):
        if self.scalar_mode == "float":
            return self.matrix[:, j]
        return tuple(self.matrix[k][j] for k in range(self.codomain.dim))

    def apply_coords(self, x):
        if self.scalar_mode == "float":
            return self.matrix @ np.asarray(x, dtype=float)
        return tuple(linalg.matvec(self.matrix, list(x)))

    def __call__(self, v):
        assert v.algebra == self.domain, "algebra mismatch"
        if self.scalar_mode == "float" or v.scalar_mode == "float":
            m = self.to_float()
            return type(v)(self.codomain, m.matrix @ np.asarray(
                v.to_float().coords, dtype=float))
        return type(v)(self.codomain, self.apply_coords(v.coords))

    def compose(self, other):
        """self after other."""
        assert other.codomain == self.domain
        if self.scalar_mode == "float" or other.scalar_mode == "float":
            return GradedMorphism(other.domain, self.codomain,
                                  self.to_float().matrix @ other.to_float().matrix)
        return GradedMorphism(other.domain, self.codomain,
                              linalg.matmul(self.matrix, other.matrix))

    # -- flags --------------------------------------------------------------
    def is_layer_preserving(self, tol=0.0):
        """Equivalent to commuting with dilations: the matrix block from
        domain layer i to codomain layer j vanishes unless i == j."""
        key = ("layer", tol)
        if key not in self._flags:
            ok = True
            for j in range(self.domain.dim):
                lj = self.domain.layer_of[j]
                for k in range(self.codomain.dim):
                    if self.codomain.layer_of[k] != lj:
                        v = self.matrix[k][j] if self.scalar_mode == "exact" else self.matrix[k, j]
                        if (v != 0) if tol == 0.0 else (abs(float(v)) > tol):
                            ok = False
            self._flags[key] = ok
        return self._flags[key]

    def is_lie_hom(self, tol=0.0):
        """L[X,Y] = [LX, LY] on all basis pairs."""
        key = ("lie", tol)
        if key not in self._flags:
            dom, cod = self.domain, self.codomain
            ok = True
            if self.scalar_mode == "exact":
                cols = [self.column(j) for j in range(dom.dim)]
                for i in range(dom.dim):
                    for j in range(i + 1, dom.dim):
                        br = dom.bracket_coords(dom.basis_coords(i), dom.basis_coords(j))
                        lhs = self.apply_coords(br)
                        rhs = cod.bracket_coords(cols[i], cols[j])
                        if lhs != rhs:
                            ok = False
                self._flags[key] = ok
            else:
                m = self.matrix
                ops_d, ops_c = dom.float_ops(), cod.float_ops()
                worst = 0.0
                eye = np.eye(dom.dim)
                for i in range(dom.dim):
                    for j in range(i + 1, dom.dim):
                        br = ops_d.bracket(eye[i], eye[j])
                        diff = m @ br - ops_c.bracket(m[:, i], m[:, j])
                        worst = max(worst, float(np.max(np.abs(diff))))
                self._flags[key] = worst <= tol
            if self.scalar_mode == "float" and tol == 0.0:
                self._flags[key] = False  # exact claims need exact arithmetic
        return self._flags[key]

    def is_h_homomorphism(self, tol=0.0):
        return self.is_layer_preserving(tol) and self.is_lie_hom(tol)

    def is_surjective(self):
        if self.scalar_mode == "exact":
            return linalg.rank(self.matrix) == self.codomain.dim
        return np.linalg.matrix_rank(self.matrix) == self.codomain.dim

    def is_injective(self):
        if self.scalar_mode == "exact":
            return linalg.rank(self.matrix) == self.domain.dim
        return np.linalg.matrix_rank(self.matrix) == self.domain.dim

    def kernel_basis(self):
        """Exact basis of the kernel (list of coordinate vectors)."""
        assert self.scalar_mode == "exact"
        return linalg.nullspace(self.matrix)

    def image_basis(self):
        assert self.scalar_mode == "exact"
        return linalg.row_space_basis(linalg.transpose(self.matrix))

    def determinant_is_one(self):
        """For endomorphisms given exactly: det == 1."""
        assert self.scalar_mode == "exact" and self.domain.dim == self.codomain.dim
        m = [list(r) for r in self.matrix]
        n = len(m)
        det = Q(1)
        for c in range(n):
            piv = next((r for r in range(c, n) if m[r][c] != 0), None)
            if piv is None:
                return False
            if piv != c:
                m[c], m[piv] = m[piv], m[c]
                det = -det
            det *= m[c][c]
            inv = 1 / m[c][c]
            for r in range(c + 1, n):
                if m[r][c] != 0:
                    f = m[r][c] * inv
                    m[r] = [a - f * b for a, b in zip(m[r], m[c])]
        return det == 1

    def __repr__(self):
        return "GradedMorphism(%s -> %s, %s)" % (
            self.domain.name, self.codomain.name, self.scalar_mode)


def identity_morphism(algebra):
    return GradedMorphism(algebra, algebra, linalg.identity(algebra.dim))


@dataclass
class HomReport:
    is_lie_hom: bool
    is_layer_preserving: bool
    violations: list = field(default_factory=list)

    @property
    def is_h_homomorphism(self):
        return self.is_lie_hom and self.is_layer_preserving


def check_h_homomorphism(L, tol=0.0):
    """Diagnostic report: bracket compatibility on basis pairs and block
    structure of the matrix.  h-homomorphism iff both hold."""
    violations = []
    lp = L.is_layer_preserving(tol)
    if not lp:
        for j in range(L.domain.dim):
            for k in range(L.codomain.dim):
                v = L.matrix[k][j] if L.scalar_mode == "exact" else L.matrix[k, j]
                if ((v != 0) if tol == 0.0 else abs(float(v)) > tol) and \
                        L.codomain.layer_of[k] != L.domain.layer_of[j]:
                    violations.append(("layer", j, k))
    lie = L.is_lie_hom(tol)
    if not lie and L.scalar_mode == "exact":
        dom, cod = L.domain, L.codomain
        for i in range(dom.dim):
            for j in range(i + 1, dom.dim):
                br = dom.bracket_coords(dom.basis_coords(i), dom.basis_coords(j))
                if L.apply_coords(br) != cod.bracket_coords(L.column(i), L.column(j)):
                    violations.append(("bracket", i, j))
    return HomReport(is_lie_hom=lie, is_layer_preserving=lp, violations=violations)
