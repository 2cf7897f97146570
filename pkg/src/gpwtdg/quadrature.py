"""
Quadrature rules for edges and triangles

Edge rules are Gauss-Legendre rules on [0, 1]. Triangle rules are stored in
barycentric coordinates with weights normalised to sum to one, so applying a
rule to a physical triangle multiplies by its area.
"""

from dataclasses import dataclass
from math import ceil, sqrt
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi


@dataclass(frozen=True)
class EdgeRule:
    """
    Gauss-Legendre rule on [0, 1]

    - nodes: parameter values strictly inside (0, 1)
    - weights: sum to 1
    """

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def count(self) -> int:
        """Number of points in the rule"""
        return len(self.nodes)


@dataclass(frozen=True)
class TriangleRule:
    """
    Triangle rule in barycentric coordinates

    - nodes: (n, 3) barycentric coordinates
    - weights: (n,) positive weights summing to 1
    - degree: total polynomial degree integrated exactly
    """

    nodes: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def count(self) -> int:
        """Number of points in the rule"""
        return len(self.weights)

    def points(self, vertices: np.ndarray) -> np.ndarray:
        """
        Map the nodes onto a physical triangle

        :param vertices: (3, 2) vertex coordinates

        :return: (n, 2) physical quadrature points
        """
        return self.nodes @ np.asarray(vertices, dtype=float)


def gauss_edge(m: int) -> EdgeRule:
    """
    Gauss-Legendre rule with m points on [0, 1], exact to degree 2m - 1

    :param m: number of points

    :return: the EdgeRule

    :raises ValueError: If m < 1
    """
    if m < 1:
        raise ValueError(f"❌ Edge rule needs at least one point, got {m}")
    nodes, weights = leggauss(m)
    return EdgeRule(nodes=0.5 * (nodes + 1.0), weights=0.5 * weights)


def _orbit_3(a: float) -> np.ndarray:
    """Barycentric orbit (1-2a, a, a) and its permutations"""
    b = 1.0 - 2.0 * a
    return np.array([[b, a, a], [a, b, a], [a, a, b]])


def _symmetric_rule(degree: int) -> Optional[TriangleRule]:
    """
    Low order symmetric rules with positive weights, or None above degree 5
    """
    if degree <= 1:
        return TriangleRule(np.full((1, 3), 1.0 / 3.0), np.ones(1), 1)
    if degree == 2:
        return TriangleRule(_orbit_3(1.0 / 6.0), np.full(3, 1.0 / 3.0), 2)
    if degree <= 4:
        nodes = np.vstack([_orbit_3(0.445948490915965), _orbit_3(0.091576213509771)])
        weights = np.repeat([0.223381589678011, 0.109951743655322], 3)
        return TriangleRule(nodes, weights, 4)
    if degree == 5:
        r15 = sqrt(15.0)
        nodes = np.vstack(
            [
                np.full((1, 3), 1.0 / 3.0),
                _orbit_3((6.0 - r15) / 21.0),
                _orbit_3((6.0 + r15) / 21.0),
            ]
        )
        weights = np.concatenate(
            [
                [9.0 / 40.0],
                np.full(3, (155.0 - r15) / 1200.0),
                np.full(3, (155.0 + r15) / 1200.0),
            ]
        )
        return TriangleRule(nodes, weights, 5)
    return None


def collapsed_rule(degree: int) -> TriangleRule:
    """
    Tensor rule on the square collapsed onto the triangle

    Gauss-Legendre in the first direction and Gauss-Jacobi (weight 1 - t) in the
    collapsed direction, m = ceil((degree + 1) / 2) points each.

    :param degree: total degree to integrate exactly

    :return: the TriangleRule
    """
    m = max(1, ceil((degree + 1) / 2))
    s, ws = leggauss(m)
    t, wt = roots_jacobi(m, 1.0, 0.0)
    xi = 0.5 * (s + 1.0)
    eta = 0.5 * (t + 1.0)
    xx = np.outer(1.0 - eta, xi)
    yy = np.outer(eta, np.ones(m))
    # area of the reference triangle is 1/2, so the weights are doubled
    ww = 2.0 * np.outer(wt / 4.0, ws / 2.0)
    x = xx.ravel()
    y = yy.ravel()
    nodes = np.column_stack([1.0 - x - y, x, y])
    return TriangleRule(nodes, ww.ravel(), 2 * m - 1)


def triangle_rule(degree: int) -> TriangleRule:
    """
    Rule exact for total degree <= degree on any triangle

    :param degree: required exactness degree

    :return: a symmetric rule up to degree 5, a collapsed tensor rule above

    :raises ValueError: If degree < 1
    """
    if degree < 1:
        raise ValueError(f"❌ Unsupported triangle rule degree: {degree}")
    rule = _symmetric_rule(degree)
    if rule is not None:
        return rule
    return collapsed_rule(degree)


def integrate_edge(
    rule: EdgeRule,
    start: np.ndarray,
    end: np.ndarray,
    integrand: Callable[[np.ndarray], np.ndarray],
) -> complex:
    """
    Integrate over the straight segment from start to end

    :param rule: the EdgeRule to use
    :param start: first endpoint
    :param end: second endpoint
    :param integrand: function of (n, 2) points returning n values

    :return: the integral, scaled by the segment length
    """
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    points = start + np.outer(rule.nodes, end - start)
    length = float(np.hypot(*(end - start)))
    return length * np.sum(rule.weights * integrand(points))


def integrate_triangle(
    rule: TriangleRule,
    vertices: np.ndarray,
    integrand: Callable[[np.ndarray], np.ndarray],
) -> complex:
    """
    Integrate over a triangle

    :param rule: the TriangleRule to use
    :param vertices: (3, 2) vertex coordinates
    :param integrand: function of (n, 2) points returning n values

    :return: the integral, scaled by the triangle area
    """
    vertices = np.asarray(vertices, dtype=float)
    area = triangle_area(vertices)
    return area * np.sum(rule.weights * integrand(rule.points(vertices)))


def triangle_area(vertices: np.ndarray) -> float:
    """
    Signed area of a triangle, positive when counterclockwise

    :param vertices: (3, 2) vertex coordinates
    """
    (x1, y1), (x2, y2), (x3, y3) = np.asarray(vertices, dtype=float)
    return 0.5 * ((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1))


@dataclass(frozen=True)
class QuadratureOrders:
    """
    Point counts used by assembly and error evaluation

    Edges use m = max(10, 2(q + 2), ceil(kappa h) + 6) points and triangles a rule
    of degree max(2(q + 2), 2m - 1). An override replaces the edge count and
    scales the triangle degree with it.
    """

    q: int
    kappa: float
    override: Optional[int] = None

    def edge_points(self, h: float) -> int:
        """
        :param h: diameter of the largest element touching the edge

        :return: number of Gauss points on an edge
        """
        if self.override is not None:
            return self.override
        return max(10, 2 * (self.q + 2), ceil(self.kappa * h) + 6)

    def triangle_degree(self, h: float) -> int:
        """
        :param h: element diameter

        :return: exactness degree of the element rule
        """
        if self.override is not None:
            return 2 * self.override - 1
        return max(2 * (self.q + 2), 2 * self.edge_points(h) - 1)

    def edge_rule(self, h: float) -> EdgeRule:
        """Gauss rule for an edge next to elements of size h"""
        return gauss_edge(self.edge_points(h))

    def element_rule(self, h: float, extra: int = 0) -> TriangleRule:
        """
        Triangle rule for an element of size h

        :param h: element diameter
        :param extra: (optional) degrees added on top, used for error norms
        """
        return triangle_rule(self.triangle_degree(h) + extra)
