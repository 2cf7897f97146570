"""
Generalized plane waves

A GPW on an element K is exp(P) with P a complex polynomial of total degree
q + 1 centred at the centroid of K. Its coefficients follow from the Taylor
expansion of epsilon so that (Delta + kappa^2 epsilon) exp(P) = O(r^q) about the
centroid. Each element carries p = 2n + 1 of them with equi-spaced directions.
"""

from dataclasses import dataclass, field as dc_field
from enum import Enum
from math import cos, pi, sin
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.signal import convolve2d

from .epsilon import CoefficientField
from .quadrature import TriangleRule, triangle_area, triangle_rule

# below this |epsilon(centroid)| the normalization falls back to N = i kappa
EPS_FLOOR = 1e-12


class Normalization(Enum):
    """Choice of N in (lambda_10, lambda_01) = N (cos theta, sin theta)"""

    I_KAPPA_SQRT_EPS = "i_kappa_sqrt_eps"
    SQRT_MINUS_KAPPA2_EPS = "sqrt_minus_kappa2_eps"


def normalization_constant(
    eps: float,
    kappa: float,
    policy: Normalization = Normalization.I_KAPPA_SQRT_EPS,
    fallback: bool = True,
) -> Tuple[complex, complex, bool]:
    """
    Normalization constant N and its square

    :param eps: epsilon at the centroid
    :param kappa: wavenumber
    :param policy: the Normalization to apply
    :param fallback: use N = i kappa when |eps| is below the floor

    :return: (N, N^2, degenerate) where N^2 = -kappa^2 eps is kept exactly and
        degenerate tells whether the fallback was used

    :raises ValueError: If eps is below the floor and fallback is off
    """
    if abs(eps) < EPS_FLOOR:
        if not fallback:
            raise ValueError(
                f"❌ |epsilon| = {abs(eps):.3g} at centroid, normalization undefined"
            )
        return 1j * kappa, complex(-kappa * kappa), True
    n_squared = complex(-kappa * kappa * eps)
    if policy is Normalization.SQRT_MINUS_KAPPA2_EPS:
        return complex(np.sqrt(n_squared)), n_squared, False
    return 1j * kappa * complex(np.sqrt(complex(eps))), n_squared, False


def gpw_coefficients(
    taylor: np.ndarray,
    kappa: float,
    q: int,
    theta: float,
    n_value: complex,
    n_squared: complex,
) -> np.ndarray:
    """
    Solve the GPW recursion for one direction

    :param taylor: Taylor table of epsilon about the centroid, at least q - 1 deep
    :param kappa: wavenumber
    :param q: approximation order
    :param theta: direction angle
    :param n_value: normalization constant N
    :param n_squared: N^2, used in place of lambda_10^2 + lambda_01^2

    :return: (q + 2, q + 2) complex table lam with lam[i, j] the coefficient of
        (x - x_K)^i (y - y_K)^j, zero for i + j > q + 1
    """
    d = q + 1
    lam = np.zeros((d + 1, d + 1), dtype=complex)
    lam[1, 0] = n_value * cos(theta)
    lam[0, 1] = n_value * sin(theta)

    for i in range(q):
        for j in range(q - i):
            total = -kappa * kappa * taylor[i, j] - (j + 2) * (j + 1) * lam[i, j + 2]
            if i == 0 and j == 0:
                total -= n_squared
            else:
                for k in range(i + 1):
                    for l in range(j + 1):
                        weight = (i - k + 1) * (k + 1)
                        total -= weight * lam[i - k + 1, j - l] * lam[k + 1, l]
                for k in range(j + 1):
                    for l in range(i + 1):
                        weight = (j - k + 1) * (k + 1)
                        total -= weight * lam[i - l, j - k + 1] * lam[l, k + 1]
            lam[i + 2, j] = total / ((i + 2) * (i + 1))
    return lam


def _derivative_tables(lam: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Tables of dP/dx, dP/dy and Laplacian of P with the shape of lam"""
    size = lam.shape[-1]
    idx = np.arange(size)
    px = np.zeros_like(lam)
    py = np.zeros_like(lam)
    px[..., :-1, :] = lam[..., 1:, :] * idx[1:, None]
    py[..., :, :-1] = lam[..., :, 1:] * idx[None, 1:]
    lap = np.zeros_like(lam)
    lap[..., :-1, :] += px[..., 1:, :] * idx[1:, None]
    lap[..., :, :-1] += py[..., :, 1:] * idx[None, 1:]
    return px, py, lap


def _monomials(points: np.ndarray, centroid: np.ndarray, size: int):
    """Powers of the centred coordinates, each (n, size)"""
    rel = np.atleast_2d(np.asarray(points, dtype=float)) - centroid
    powers = np.arange(size)
    return rel[:, :1] ** powers, rel[:, 1:2] ** powers


@dataclass(frozen=True)
class GpwFunction:
    """
    One generalized plane wave exp(P)

    - centroid: expansion point (x_K, y_K)
    - coefficients: (q + 2, q + 2) complex table of P
    - theta: direction angle
    - normalization: the constant N
    - n_squared: N^2 as used by the recursion
    - q: approximation order
    """

    centroid: Tuple[float, float]
    coefficients: np.ndarray
    theta: float
    normalization: complex
    n_squared: complex
    q: int

    @property
    def degree(self) -> int:
        """Total degree of P"""
        return self.q + 1

    def evaluate(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Value, gradient and Laplacian at some points

        :param points: (n, 2) points or a single point

        :return: (value (n,), gradient (n, 2), laplacian (n,))
        """
        values, gradients, laplacians = _evaluate_stack(
            self.coefficients[None], np.asarray(self.centroid), points
        )
        return values[0], gradients[0], laplacians[0]

    def exponent(self, points: np.ndarray) -> np.ndarray:
        """
        :return: P at the points
        """
        rel = np.atleast_2d(np.asarray(points, dtype=float)) - self.centroid
        return npoly.polyval2d(rel[:, 0], rel[:, 1], self.coefficients)


def _evaluate_stack(lam: np.ndarray, centroid: np.ndarray, points: np.ndarray):
    """Evaluate a stack of (p, d, d) tables at n points"""
    xp, yp = _monomials(points, centroid, lam.shape[-1])
    px, py, lap = _derivative_tables(lam)
    stack = np.stack([lam, px, py, lap])
    p_val, p_x, p_y, p_lap = np.einsum("ni,nj,spij->spn", xp, yp, stack)
    values = np.exp(p_val)
    gradients = values[..., None] * np.stack([p_x, p_y], axis=-1)
    laplacians = values * (p_lap + p_x * p_x + p_y * p_y)
    return values, gradients, laplacians


def build_gpw(
    field: CoefficientField,
    centroid: Sequence[float],
    kappa: float,
    q: int,
    theta: float,
    normalization: Normalization = Normalization.I_KAPPA_SQRT_EPS,
    fallback: bool = True,
) -> GpwFunction:
    """
    Build one GPW at a centroid

    :param field: the coefficient field epsilon
    :param centroid: expansion point
    :param kappa: wavenumber
    :param q: approximation order, at least 1
    :param theta: direction angle
    :param normalization: policy for N
    :param fallback: use N = i kappa when epsilon vanishes at the centroid

    :return: the GpwFunction

    :raises ValueError: If q < 1, kappa <= 0, the field is not smooth enough or
        the normalization is undefined without fallback
    """
    _check_parameters(field, kappa, q)
    x0, y0 = (float(c) for c in centroid)
    taylor = field.taylor(x0, y0, q - 1)
    n_value, n_squared, _ = normalization_constant(
        taylor[0, 0], kappa, normalization, fallback
    )
    lam = gpw_coefficients(taylor, kappa, q, theta, n_value, n_squared)
    lam.setflags(write=False)
    return GpwFunction((x0, y0), lam, float(theta), n_value, n_squared, q)


def _check_parameters(field: CoefficientField, kappa: float, q: int):
    if q < 1:
        raise ValueError(f"❌ Approximation order q must be at least 1, got {q}")
    if kappa <= 0:
        raise ValueError(f"❌ Wavenumber must be positive, got {kappa}")
    field.require_order(q - 1)


def directions(n: int) -> np.ndarray:
    """
    :param n: direction parameter, p = 2n + 1

    :return: the p equi-spaced angles 2 pi l / p
    """
    p = 2 * n + 1
    return 2.0 * pi * np.arange(p) / p


@dataclass(frozen=True)
class GpwBasisSet:
    """
    The p GPWs of one element

    - element: triangle index
    - functions: GpwFunction per direction, sharing centroid and N
    - n, q, kappa: basis parameters
    - degenerate: True when the normalization fell back to N = i kappa
    """

    element: int
    functions: Tuple[GpwFunction, ...]
    n: int
    q: int
    kappa: float
    degenerate: bool = False
    _stack: np.ndarray = dc_field(init=False, repr=False, compare=False)

    def __post_init__(self):
        stack = np.stack([f.coefficients for f in self.functions])
        stack.setflags(write=False)
        object.__setattr__(self, "_stack", stack)

    def __len__(self) -> int:
        return len(self.functions)

    @property
    def p(self) -> int:
        """Number of directions"""
        return 2 * self.n + 1

    @property
    def centroid(self) -> np.ndarray:
        """Shared expansion point"""
        return np.asarray(self.functions[0].centroid)

    @property
    def coefficients(self) -> np.ndarray:
        """(p, q + 2, q + 2) stacked coefficient tables"""
        return self._stack

    def evaluate(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Evaluate every basis function

        :param points: (n, 2) points

        :return: (values (p, n), gradients (p, n, 2), laplacians (p, n))
        """
        return _evaluate_stack(self._stack, self.centroid, points)

    def helmholtz(
        self, points: np.ndarray, eps_values: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Values, gradients and Helmholtz residuals (Delta + kappa^2 eps) phi

        :param points: (n, 2) points
        :param eps_values: epsilon at the points

        :return: (values (p, n), gradients (p, n, 2), residuals (p, n))
        """
        values, gradients, laplacians = self.evaluate(points)
        return values, gradients, laplacians + self.kappa**2 * eps_values * values

    def combine(self, coefficients: np.ndarray, points: np.ndarray):
        """
        Evaluate sum_l c_l phi_l

        :param coefficients: (p,) complex weights
        :param points: (n, 2) points

        :return: (value (n,), gradient (n, 2), laplacian (n,))
        """
        values, gradients, laplacians = self.evaluate(points)
        c = np.asarray(coefficients)
        return c @ values, np.einsum("l,lnk->nk", c, gradients), c @ laplacians


def build_basis_set(
    field: CoefficientField,
    element: int,
    centroid: Sequence[float],
    kappa: float,
    n: int,
    q: int,
    normalization: Normalization = Normalization.I_KAPPA_SQRT_EPS,
) -> GpwBasisSet:
    """
    Build the p = 2n + 1 GPWs of an element

    :param field: the coefficient field epsilon
    :param element: triangle index, used for reporting
    :param centroid: centroid of the triangle
    :param kappa: wavenumber
    :param n: direction parameter, at least 1
    :param q: approximation order, at least 1
    :param normalization: policy for N

    :return: the GpwBasisSet

    :raises ValueError: If n < 1 or any build_gpw check fails
    """
    if n < 1:
        raise ValueError(f"❌ Direction parameter n must be at least 1, got {n}")
    _check_parameters(field, kappa, q)
    x0, y0 = (float(c) for c in centroid)
    taylor = field.taylor(x0, y0, q - 1)
    n_value, n_squared, degenerate = normalization_constant(
        taylor[0, 0], kappa, normalization
    )
    if degenerate:
        print(
            f"⚠️ Element {element}: epsilon vanishes at centroid ({x0:.4g}, {y0:.4g}),"
            " using N = i kappa"
        )
    functions = []
    for theta in directions(n):
        lam = gpw_coefficients(taylor, kappa, q, theta, n_value, n_squared)
        lam.setflags(write=False)
        functions.append(
            GpwFunction((x0, y0), lam, float(theta), n_value, n_squared, q)
        )
    return GpwBasisSet(element, tuple(functions), n, q, kappa, degenerate)


def build_mesh_bases(
    mesh,
    field: CoefficientField,
    kappa: float,
    n: int,
    q: int,
    normalization: Normalization = Normalization.I_KAPPA_SQRT_EPS,
    executor=None,
) -> List[GpwBasisSet]:
    """
    Build one GpwBasisSet per triangle of a mesh

    :param mesh: the Mesh
    :param field: the coefficient field epsilon
    :param kappa: wavenumber
    :param n: direction parameter
    :param q: approximation order
    :param normalization: policy for N
    :param executor: (optional) concurrent.futures executor to map over elements

    :return: list of basis sets in element order
    """

    def build(k: int) -> GpwBasisSet:
        return build_basis_set(
            field, k, mesh.centroids[k], kappa, n, q, normalization
        )

    elements = range(len(mesh))
    if executor is None:
        return [build(k) for k in elements]
    return list(executor.map(build, elements))


def helmholtz_taylor_residual(
    gpw: GpwFunction,
    field: CoefficientField,
    kappa: float,
    degree: Optional[int] = None,
) -> np.ndarray:
    """
    Taylor coefficients of Delta P + grad P . grad P + kappa^2 epsilon

    Computed from the coefficient table by polynomial arithmetic, independently
    of the recursion. Since (Delta + kappa^2 eps) exp(P) equals exp(P) times this
    polynomial, the GPW property means every coefficient of total degree < q is
    zero.

    :param gpw: the GpwFunction to check
    :param field: the coefficient field epsilon
    :param kappa: wavenumber
    :param degree: (optional) highest total degree kept, q - 1 by default

    :return: (degree + 1, degree + 1) complex table, zero above the degree
    """
    if degree is None:
        degree = gpw.q - 1
    px, py, lap = _derivative_tables(gpw.coefficients)
    product = convolve2d(px, px) + convolve2d(py, py)
    size = degree + 1
    table = np.zeros((size, size), dtype=complex)
    for source in (lap, product):
        rows = min(size, source.shape[0])
        cols = min(size, source.shape[1])
        table[:rows, :cols] += source[:rows, :cols]
    x0, y0 = gpw.centroid
    table += kappa * kappa * field.taylor(x0, y0, degree)
    i, j = np.indices(table.shape)
    table[i + j > degree] = 0.0
    return table


@dataclass(frozen=True)
class ResidualFit:
    """
    Fitted decay of the Helmholtz residual of a GPW

    - radii: sample radii
    - residuals: largest |(Delta + kappa^2 eps) exp(P)| on each circle
    - slope: least squares slope of log residual against log radius, None when
      the GPW is an exact solution
    """

    radii: np.ndarray
    residuals: np.ndarray
    slope: Optional[float]

    @property
    def exact(self) -> bool:
        """True when every residual is at round-off level"""
        return self.slope is None


def residual_order(
    gpw: GpwFunction,
    field: CoefficientField,
    kappa: float,
    radii: Iterable[float],
    samples: int = 32,
    tolerance: float = 1e-12,
) -> ResidualFit:
    """
    Measure the order of the Helmholtz residual about the centroid

    :param gpw: the GpwFunction to check
    :param field: the coefficient field epsilon
    :param kappa: wavenumber
    :param radii: circle radii around the centroid
    :param samples: points per circle
    :param tolerance: residuals below this count as exact

    :return: the ResidualFit
    """
    radii = np.asarray(list(radii), dtype=float)
    angles = 2.0 * pi * np.arange(samples) / samples
    ring = np.column_stack([np.cos(angles), np.sin(angles)])
    residuals = np.empty(len(radii))
    for m, r in enumerate(radii):
        points = np.asarray(gpw.centroid) + r * ring
        values, _, laplacians = gpw.evaluate(points)
        eps = field.value(points[:, 0], points[:, 1])
        residuals[m] = np.max(np.abs(laplacians + kappa * kappa * eps * values))
    if np.all(residuals <= tolerance):
        return ResidualFit(radii, residuals, None)
    slope, _ = np.polyfit(np.log(radii), np.log(residuals), 1)
    return ResidualFit(radii, residuals, float(slope))


def best_approximation(
    basis: GpwBasisSet,
    vertices: np.ndarray,
    target: Callable[[np.ndarray], np.ndarray],
    rule: Optional[TriangleRule] = None,
) -> Tuple[np.ndarray, float]:
    """
    Best L2 approximation of a function on a triangle by a basis set

    Solved as a weighted least squares problem on the quadrature points.

    :param basis: the GpwBasisSet
    :param vertices: (3, 2) triangle vertices
    :param target: function of (n, 2) points
    :param rule: (optional) TriangleRule, degree 12 by default

    :return: (coefficients (p,), L2 error)
    """
    rule = rule or triangle_rule(12)
    vertices = np.asarray(vertices, dtype=float)
    points = rule.points(vertices)
    sqrt_w = np.sqrt(rule.weights * triangle_area(vertices))
    values, _, _ = basis.evaluate(points)
    matrix = sqrt_w[:, None] * values.T
    rhs = sqrt_w * np.asarray(target(points), dtype=complex)
    coefficients, *_ = np.linalg.lstsq(matrix, rhs, rcond=None)
    error = float(np.linalg.norm(matrix @ coefficients - rhs))
    return coefficients, error


def write_coefficient_tables(
    bases: Sequence[GpwBasisSet], path: Union[str, Path]
) -> Path:
    """
    Dump coefficient tables as text

    Every GPW starts with a ``# element k direction l theta`` line followed by one
    ``i j re im`` line per coefficient with i + j <= q + 1.

    :param bases: basis sets to write
    :param path: output path

    :return: the Path written
    """
    path = Path(path)
    with path.open("w", encoding="utf-8") as f:
        for basis in bases:
            for l, gpw in enumerate(basis.functions):
                f.write(f"# element {basis.element} direction {l} {gpw.theta!r}\n")
                lam = gpw.coefficients
                for i in range(gpw.degree + 1):
                    for j in range(gpw.degree + 1 - i):
                        f.write(f"{i} {j} {float(lam[i, j].real)!r} {float(lam[i, j].imag)!r}\n")
    return path
