"""Lagrange reference elements on the unit triangle and quadrature rules.

Basis coefficients are obtained by inverting the Vandermonde matrix of the
monomial basis at the lattice nodes in exact rational arithmetic, so the
Kronecker property holds to machine precision for every supported degree.
Quadrature is the conical product of a Gauss-Legendre rule with a
Gauss-Jacobi rule (weight 1-x), collapsing the square onto the triangle.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import roots_jacobi

MAX_DEGREE = 4


def _lattice_nodes(degree: int):
    """Nodes ordered: vertices, edge 0 (v0->v1), edge 1 (v1->v2),
    edge 2 (v2->v0), then interior row by row."""
    k = degree
    verts = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)), (Fraction(0), Fraction(1))]
    nodes = list(verts)
    for a, b in ((0, 1), (1, 2), (2, 0)):
        pa, pb = verts[a], verts[b]
        for step in range(1, k):
            t = Fraction(step, k)
            nodes.append((pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])))
    for j in range(1, k):
        for i in range(1, k - j):
            nodes.append((Fraction(i, k), Fraction(j, k)))
    return nodes


def _invert_fraction_matrix(mat):
    n = len(mat)
    aug = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(mat)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[pivot] = aug[pivot], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


class ReferenceElement:
    """Nodal Lagrange basis of a given degree on the reference triangle."""

    def __init__(self, degree: int):
        if not isinstance(degree, (int, np.integer)) or not 1 <= degree <= MAX_DEGREE:
            raise ValueError(f"degree must be an integer in 1..{MAX_DEGREE}, got {degree!r}")
        self.degree = int(degree)
        self.exponents = [(a, b) for total in range(degree + 1) for b in range(total + 1)
                          for a in (total - b,)]
        frac_nodes = _lattice_nodes(self.degree)
        self.nodes = np.array([[float(x), float(y)] for x, y in frac_nodes])
        self.n_basis = len(frac_nodes)
        vand = [[x ** a * y ** b for a, b in self.exponents] for x, y in frac_nodes]
        inv = _invert_fraction_matrix(vand)
        # row i of coeffs holds the monomial coefficients of basis function i
        self._coeffs = np.array([[float(inv[m][i]) for m in range(self.n_basis)]
                                 for i in range(self.n_basis)])

    def tabulate(self, points: np.ndarray):
        """Values (n_basis, n_pts) and reference gradients (n_basis, n_pts, 2)."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        x, y = pts[:, 0], pts[:, 1]
        n_mono = len(self.exponents)
        mono = np.empty((n_mono, len(pts)))
        dmono = np.zeros((n_mono, len(pts), 2))
        for m, (a, b) in enumerate(self.exponents):
            mono[m] = x ** a * y ** b
            if a > 0:
                dmono[m, :, 0] = a * x ** (a - 1) * y ** b
            if b > 0:
                dmono[m, :, 1] = b * x ** a * y ** (b - 1)
        values = self._coeffs @ mono
        grads = np.einsum("im,mpd->ipd", self._coeffs, dmono)
        return values, grads


_element_cache: dict[int, ReferenceElement] = {}


def reference_element(degree: int) -> ReferenceElement:
    if degree not in _element_cache:
        _element_cache[degree] = ReferenceElement(degree)
    return _element_cache[degree]


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray   # (n_points, 2) inside the reference triangle
    weights: np.ndarray  # (n_points,), positive, summing to 1/2
    exactness: int       # every polynomial up to this degree integrates exactly


def triangle_rule(exactness: int) -> QuadratureRule:
    """Conical-product Gauss rule exact to the requested polynomial degree."""
    if not isinstance(exactness, (int, np.integer)) or exactness < 0:
        raise ValueError(f"exactness must be a nonnegative integer, got {exactness!r}")
    m = (int(exactness) + 2) // 2  # 2m-1 >= exactness
    m = max(m, 1)
    xg, wg = np.polynomial.legendre.leggauss(m)
    sg = 0.5 * (xg + 1.0)          # Legendre points on [0, 1], weights wg/2
    xj, wj = roots_jacobi(m, 1.0, 0.0)
    tj = 0.5 * (xj + 1.0)          # Jacobi points on [0, 1] for weight (1-x), weights wj/4
    x = np.repeat(tj, m)
    s = np.tile(sg, m)
    points = np.column_stack([x, s * (1.0 - x)])
    weights = np.repeat(wj / 4.0, m) * np.tile(wg / 2.0, m)
    return QuadratureRule(points, weights, int(exactness))


def assembly_exactness(*degrees: int) -> int:
    """Quadrature degree used for assembly: cubic nonlinearities of the
    highest participating polynomial degree plus a safety margin."""
    return 3 * max(degrees) + 2
