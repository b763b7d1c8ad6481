"""Reference element and quadrature checks.

Monomial integrals over the reference triangle have the closed form
int x^a y^b = a! b! / (a+b+2)!, which serves as the oracle for the
quadrature exactness contract.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epmhd.elements import (
    QuadratureRule,
    assembly_exactness,
    reference_element,
    triangle_rule,
)


def exact_monomial_integral(a, b):
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


@pytest.mark.parametrize("degree", [1, 2, 3, 4])
def test_kronecker_property(degree):
    el = reference_element(degree)
    vals, _ = el.tabulate(el.nodes)
    assert np.max(np.abs(vals - np.eye(el.n_basis))) < 1e-13


@pytest.mark.parametrize("degree", [1, 2, 3, 4])
def test_basis_count(degree):
    el = reference_element(degree)
    assert el.n_basis == (degree + 1) * (degree + 2) // 2


def _random_triangle_points(rng, n):
    p = rng.random((n, 2))
    flip = p.sum(axis=1) > 1
    p[flip] = 1 - p[flip]
    return p


@pytest.mark.parametrize("degree", [1, 2, 3, 4])
def test_partition_of_unity(degree):
    el = reference_element(degree)
    pts = _random_triangle_points(np.random.default_rng(0), 40)
    vals, grads = el.tabulate(pts)
    assert np.max(np.abs(vals.sum(axis=0) - 1)) < 1e-12
    assert np.max(np.abs(grads.sum(axis=0))) < 1e-11


@pytest.mark.parametrize("degree", [1, 2, 3, 4])
def test_polynomial_reproduction(degree):
    rng = np.random.default_rng(degree)
    coef = {(a, b): rng.normal() for a in range(degree + 1) for b in range(degree + 1 - a)}

    def poly(p):
        return sum(c * p[:, 0] ** a * p[:, 1] ** b for (a, b), c in coef.items())

    el = reference_element(degree)
    nodal = poly(el.nodes)
    pts = _random_triangle_points(rng, 30)
    vals, _ = el.tabulate(pts)
    assert np.max(np.abs(nodal @ vals - poly(pts))) < 1e-11


def test_gradients_match_finite_differences():
    el = reference_element(3)
    pts = _random_triangle_points(np.random.default_rng(1), 10) * 0.8 + 0.05
    _, grads = el.tabulate(pts)
    h = 1e-6
    for d, step in enumerate([np.array([h, 0.0]), np.array([0.0, h])]):
        vp, _ = el.tabulate(pts + step)
        vm, _ = el.tabulate(pts - step)
        fd = (vp - vm) / (2 * h)
        assert np.max(np.abs(fd - grads[:, :, d])) < 1e-8


@given(st.integers(min_value=0, max_value=16))
@settings(max_examples=17, deadline=None)
def test_quadrature_exactness(exactness):
    rule = triangle_rule(exactness)
    assert np.all(rule.weights > 0)
    assert abs(rule.weights.sum() - 0.5) < 1e-14
    # points strictly inside the closed reference triangle
    x, y = rule.points[:, 0], rule.points[:, 1]
    assert np.all(x > -1e-14) and np.all(y > -1e-14) and np.all(x + y < 1 + 1e-14)
    for a in range(exactness + 1):
        for b in range(exactness + 1 - a):
            approx = float(rule.weights @ (x ** a * y ** b))
            assert abs(approx - exact_monomial_integral(a, b)) < 5e-15 * (a + b + 1), (a, b)


def test_quadrature_is_not_wastefully_large():
    assert len(triangle_rule(8).points) == 25
    assert len(triangle_rule(11).points) == 36
    assert len(triangle_rule(14).points) == 64


def test_assembly_exactness_rule():
    assert assembly_exactness(2, 1, 1) == 8
    assert assembly_exactness(3, 2, 2) == 11
    assert assembly_exactness(4, 3, 3) == 14


@pytest.mark.parametrize("bad", [0, 5, -1, 2.5])
def test_invalid_degree_rejected(bad):
    with pytest.raises(ValueError):
        reference_element(bad)


def test_invalid_exactness_rejected():
    with pytest.raises(ValueError):
        triangle_rule(-2)
    with pytest.raises(ValueError):
        triangle_rule(3.5)
