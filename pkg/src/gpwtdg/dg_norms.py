"""
DG and DG+ norms of piecewise functions

Any object with ``evaluate(element, points) -> (values, gradients, residuals)``
can be measured, which covers discrete GPW solutions, exact solutions and their
differences. The residual is (Delta + kappa^2 epsilon) u on the element.
"""

from dataclasses import dataclass, fields
from typing import Optional, Protocol, Sequence, Tuple

import numpy as np

from .assembly import DgParameters, edge_quadrature, element_quadrature
from .epsilon import CoefficientField
from .gpw import GpwBasisSet
from .mesh import EdgeKind, Mesh
from .quadrature import QuadratureOrders

Traces = Tuple[np.ndarray, np.ndarray, np.ndarray]


class PiecewiseFunction(Protocol):
    """A function known element by element"""

    def evaluate(self, element: int, points: np.ndarray) -> Traces:
        """
        :return: (values (n,), gradients (n, 2), residuals (n,)) on the element
        """


class DiscreteFunction:
    """
    Linear combination of GPW basis functions

    :param bases: one GpwBasisSet per element
    :param coefficients: global coefficient vector, p per element
    :param field: the coefficient field epsilon
    """

    def __init__(
        self,
        bases: Sequence[GpwBasisSet],
        coefficients: np.ndarray,
        field: CoefficientField,
    ):
        self.bases = bases
        self.p = len(bases[0])
        self.coefficients = np.asarray(coefficients, dtype=complex).reshape(
            len(bases), self.p
        )
        self.field = field

    def evaluate(self, element: int, points: np.ndarray) -> Traces:
        basis = self.bases[element]
        eps = self.field.value(points[:, 0], points[:, 1])
        values, gradients, residuals = basis.helmholtz(points, eps)
        c = self.coefficients[element]
        return c @ values, np.einsum("l,lnk->nk", c, gradients), c @ residuals


class ExactFunction:
    """
    A smooth function given by value and gradient callbacks

    Exact solutions solve the Helmholtz equation, so their residual is zero.

    :param exact: object with ``value(x, y)`` and ``gradient(x, y)``
    """

    def __init__(self, exact):
        self.exact = exact

    def evaluate(self, element: int, points: np.ndarray) -> Traces:
        x, y = points[:, 0], points[:, 1]
        values = np.asarray(self.exact.value(x, y), dtype=complex) * np.ones(len(x))
        gradients = np.asarray(self.exact.gradient(x, y), dtype=complex)
        return values, gradients, np.zeros(len(x), dtype=complex)


class Difference:
    """
    first - second

    :param first: a PiecewiseFunction
    :param second: a PiecewiseFunction
    """

    def __init__(self, first: PiecewiseFunction, second: PiecewiseFunction):
        self.first = first
        self.second = second

    def evaluate(self, element: int, points: np.ndarray) -> Traces:
        a = self.first.evaluate(element, points)
        b = self.second.evaluate(element, points)
        return tuple(u - v for u, v in zip(a, b))


@dataclass(frozen=True)
class DgNormTerms:
    """
    Squared terms of the DG and DG+ norms

    DG terms:

    - jump_dn: (1/kappa) ||beta^1/2 [[grad u]]||^2 on interior edges
    - jump: kappa ||alpha^1/2 [[u]]||^2 on interior edges
    - robin_dn: (1/kappa) ||delta^1/2 du/dn||^2 on Robin edges
    - robin_value: kappa ||(1 - delta)^1/2 u||^2 on Robin edges
    - dirichlet_value: kappa ||alpha^1/2 u||^2 on Dirichlet edges
    - volume: (1/kappa^2) ||gamma^1/2 (Delta u + kappa^2 eps u)||^2

    Additional DG+ terms:

    - plus_average: kappa ||beta^-1/2 {u}||^2 on interior edges
    - plus_average_grad: (1/kappa) ||alpha^-1/2 {grad u}||^2 on interior edges
    - plus_robin: kappa ||delta^-1/2 u||^2 on Robin edges
    - plus_dirichlet_dn: (1/kappa) ||alpha^-1 du/dn||^2 on Dirichlet edges
    - plus_volume: kappa^2 ||gamma^-1/2 u||^2, None when gamma = 0
    """

    jump_dn: float
    jump: float
    robin_dn: float
    robin_value: float
    dirichlet_value: float
    volume: float
    plus_average: float
    plus_average_grad: float
    plus_robin: float
    plus_dirichlet_dn: float
    plus_volume: Optional[float]

    @property
    def dg_squared(self) -> float:
        """||u||_DG^2"""
        return (
            self.jump_dn
            + self.jump
            + self.robin_dn
            + self.robin_value
            + self.dirichlet_value
            + self.volume
        )

    @property
    def dg(self) -> float:
        """||u||_DG"""
        return float(np.sqrt(self.dg_squared))

    @property
    def plus_squared(self) -> float:
        """Sum of the additional DG+ terms that are present"""
        total = (
            self.plus_average
            + self.plus_average_grad
            + self.plus_robin
            + self.plus_dirichlet_dn
        )
        return total + (self.plus_volume or 0.0)

    @property
    def dg_plus(self) -> float:
        """||u||_DG+"""
        return float(np.sqrt(self.dg_squared + self.plus_squared))

    def as_dict(self) -> dict:
        """Terms by name"""
        return {f.name: getattr(self, f.name) for f in fields(self)}


def dg_norm_terms(
    mesh: Mesh,
    function: PiecewiseFunction,
    kappa: float,
    params: DgParameters,
    orders: QuadratureOrders,
    include_volume: Optional[bool] = None,
    extra_points: int = 0,
    extra_degree: int = 0,
) -> DgNormTerms:
    """
    Evaluate all DG and DG+ terms of a piecewise function by quadrature

    :param mesh: the Mesh
    :param function: the PiecewiseFunction to measure
    :param kappa: wavenumber
    :param params: the DgParameters
    :param orders: QuadratureOrders for edges and elements
    :param include_volume: DG+ volume term; None includes it when gamma0 > 0
    :param extra_points: (optional) points added to every edge rule
    :param extra_degree: (optional) degrees added to every element rule

    :return: the DgNormTerms

    :raises ValueError: If the DG+ volume term is requested with gamma0 = 0
    """
    if include_volume is None:
        include_volume = params.gamma0 > 0
    elif include_volume and params.gamma0 == 0:
        raise ValueError("❌ DG+ volume term needs gamma > 0, gamma0 is 0")

    alpha, beta, delta = params.alpha, params.beta, params.delta
    terms = dict.fromkeys(
        [
            "jump_dn",
            "jump",
            "robin_dn",
            "robin_value",
            "dirichlet_value",
            "volume",
            "plus_average",
            "plus_average_grad",
            "plus_robin",
            "plus_dirichlet_dn",
        ],
        0.0,
    )
    plus_volume = 0.0

    for k in range(len(mesh)):
        points, weights = element_quadrature(mesh, orders, k, extra_degree)
        values, _, residuals = function.evaluate(k, points)
        gamma = params.gamma(mesh.diameters[k])
        terms["volume"] += gamma / kappa**2 * float(weights @ np.abs(residuals) ** 2)
        if include_volume:
            plus_volume += kappa**2 / gamma * float(weights @ np.abs(values) ** 2)

    for edge in mesh.edges:
        points, weights = edge_quadrature(mesh, orders, edge, extra_points)
        normal = np.asarray(edge.normal)
        u, grad, _ = function.evaluate(edge.plus, points)
        dn = grad @ normal
        if edge.kind is EdgeKind.INTERIOR:
            u2, grad2, _ = function.evaluate(edge.minus, points)
            jump, jump_dn = u - u2, dn - grad2 @ normal
            avg, avg_grad = 0.5 * (u + u2), 0.5 * (grad + grad2)
            terms["jump_dn"] += beta / kappa * float(weights @ np.abs(jump_dn) ** 2)
            terms["jump"] += kappa * alpha * float(weights @ np.abs(jump) ** 2)
            terms["plus_average"] += kappa / beta * float(weights @ np.abs(avg) ** 2)
            terms["plus_average_grad"] += float(
                weights @ np.sum(np.abs(avg_grad) ** 2, axis=1)
            ) / (kappa * alpha)
        elif edge.kind is EdgeKind.ROBIN:
            terms["robin_dn"] += delta / kappa * float(weights @ np.abs(dn) ** 2)
            terms["robin_value"] += kappa * (1 - delta) * float(
                weights @ np.abs(u) ** 2
            )
            terms["plus_robin"] += kappa / delta * float(weights @ np.abs(u) ** 2)
        else:
            terms["dirichlet_value"] += kappa * alpha * float(weights @ np.abs(u) ** 2)
            terms["plus_dirichlet_dn"] += float(weights @ np.abs(dn) ** 2) / (
                kappa * alpha**2
            )

    return DgNormTerms(**terms, plus_volume=plus_volume if include_volume else None)


def dg_plus_seminorm_terms(
    mesh: Mesh,
    function: PiecewiseFunction,
    kappa: float,
    params: DgParameters,
    orders: QuadratureOrders,
    include_volume: Optional[bool] = None,
) -> float:
    """
    Sum of the terms the DG+ norm adds to the DG norm

    :return: non-negative real

    :raises ValueError: If the volume term is requested with gamma0 = 0
    """
    terms = dg_norm_terms(mesh, function, kappa, params, orders, include_volume)
    return terms.plus_squared
