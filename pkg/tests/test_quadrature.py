"""
Tests for the quadrature module
"""

from math import factorial

import numpy as np
import pytest

from gpwtdg.quadrature import (
    QuadratureOrders,
    collapsed_rule,
    gauss_edge,
    integrate_edge,
    integrate_triangle,
    triangle_area,
    triangle_rule,
)
from .utils import reference_triangle


def monomial_integral(a: int, b: int) -> float:
    """Exact integral of x^a y^b over the reference triangle"""
    return factorial(a) * factorial(b) / factorial(a + b + 2)


def test_gauss_edge_exactness():
    """
    m points integrate t^(2m - 1) exactly on [0, 1]
    """
    rule = gauss_edge(5)
    assert rule.count == 5
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.all((rule.nodes > 0) & (rule.nodes < 1))
    assert np.sum(rule.weights * rule.nodes**9) == pytest.approx(0.1, abs=1e-15)


def test_gauss_edge_invalid():
    """
    A rule needs at least one point
    """
    with pytest.raises(ValueError, match="at least one point"):
        gauss_edge(0)


@pytest.mark.parametrize("degree", range(1, 13))
def test_triangle_rule_exactness(degree):
    """
    Every monomial of total degree <= degree is integrated exactly
    """
    rule = triangle_rule(degree)
    assert rule.degree >= degree
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-14)
    vertices = reference_triangle()
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            value = integrate_triangle(
                rule, vertices, lambda pts, a=a, b=b: pts[:, 0] ** a * pts[:, 1] ** b
            )
            assert value == pytest.approx(monomial_integral(a, b), abs=1e-14)


@pytest.mark.parametrize("degree", [1, 2, 4, 5])
def test_symmetric_rules_positive(degree):
    """
    Low order rules have positive weights and points inside the triangle
    """
    rule = triangle_rule(degree)
    assert np.all(rule.weights > 0)
    assert np.all(rule.nodes > 0)
    assert np.allclose(rule.nodes.sum(axis=1), 1.0)


def test_collapsed_rule_size():
    """
    The tensor rule uses ceil((degree + 1) / 2) points per direction
    """
    rule = collapsed_rule(9)
    assert rule.count == 25
    assert rule.degree == 9


def test_triangle_rule_invalid():
    """
    Degree 0 is rejected
    """
    with pytest.raises(ValueError, match="Unsupported triangle rule degree"):
        triangle_rule(0)


def test_integrate_edge_oscillatory():
    """
    exp(i 15 x) on [0, 1] converges quickly with the number of points
    """
    exact = (np.exp(15j) - 1.0) / 15j

    def wave(pts):
        return np.exp(15j * pts[:, 0])

    coarse = integrate_edge(gauss_edge(12), [0.0, 0.0], [1.0, 0.0], wave)
    fine = integrate_edge(gauss_edge(16), [0.0, 0.0], [1.0, 0.0], wave)
    assert abs(coarse - exact) <= 5e-10
    assert abs(fine - exact) <= 1e-13


def test_integrate_edge_length_scaling():
    """
    The constant 1 integrates to the segment length
    """
    value = integrate_edge(
        gauss_edge(3), [1.0, 1.0], [4.0, 5.0], lambda pts: np.ones(len(pts))
    )
    assert value == pytest.approx(5.0)


def test_integrate_triangle_physical():
    """
    Area and first moment on a physical triangle
    """
    vertices = np.array([[1.0, 1.0], [3.0, 1.0], [1.0, 4.0]])
    rule = triangle_rule(2)
    assert integrate_triangle(rule, vertices, lambda pts: np.ones(len(pts))) == (
        pytest.approx(3.0)
    )
    # centroid x is 5/3
    assert integrate_triangle(rule, vertices, lambda pts: pts[:, 0]) == (
        pytest.approx(5.0)
    )


def test_triangle_area_sign():
    """
    Clockwise triangles have negative area
    """
    vertices = reference_triangle()
    assert triangle_area(vertices) == pytest.approx(0.5)
    assert triangle_area(vertices[::-1]) == pytest.approx(-0.5)


def test_quadrature_orders_defaults():
    """
    Edge counts grow with kappa h, triangle degree follows
    """
    orders = QuadratureOrders(q=3, kappa=15.0)
    assert orders.edge_points(1.0) == 21
    assert orders.triangle_degree(1.0) == 41
    assert orders.edge_points(0.1) == 10
    assert orders.triangle_degree(0.1) == 19
    assert orders.edge_rule(0.1).count == 10
    assert orders.element_rule(0.1, extra=2).degree >= 21


def test_quadrature_orders_override():
    """
    An override fixes the edge count and scales the triangle degree
    """
    orders = QuadratureOrders(q=3, kappa=15.0, override=7)
    assert orders.edge_points(2.0) == 7
    assert orders.triangle_degree(2.0) == 13
