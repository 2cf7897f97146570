"""
Special functions and exact solutions

- Airy: u(x, y) = Ai(kappa^(2/3) y) solves Delta u - kappa^2 y u = 0
- Weber: u(x, y) = P_o(sqrt(kappa) x, a) with P_o the odd solution of
  w'' + (s^2 / 4 - a) w = 0, w(0) = 0, w'(0) = 1
- plane wave: u = exp(i kappa (x cos theta + y sin theta)) for epsilon = 1
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import airy

from .epsilon import (
    CoefficientField,
    make_airy_field,
    make_constant,
    make_weber_field,
)

AIRY_RANGE = 30.0
WEBER_RANGE = 10.0
WEBER_RTOL = 1e-12
WEBER_ATOL = 1e-14


def airy_ai(t) -> Tuple[np.ndarray, np.ndarray]:
    """
    Airy function Ai and its derivative

    :param t: real argument(s), |t| <= 30

    :return: (Ai(t), Ai'(t))

    :raises ValueError: If an argument is out of range
    """
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > AIRY_RANGE):
        raise ValueError(
            f"❌ Airy argument outside [-{AIRY_RANGE:g}, {AIRY_RANGE:g}]: "
            f"{float(np.max(np.abs(t))):.6g}"
        )
    ai, aip, _, _ = airy(t)
    return ai, aip


def _weber_rhs(a: float) -> Callable:
    def rhs(s, w):
        return [w[1], -(s * s / 4.0 - a) * w[0]]

    return rhs


@lru_cache(maxsize=32)
def _weber_dense(a: float, rtol: float, odd: bool):
    """Dense output of the Weber solution on [0, WEBER_RANGE]"""
    start = [0.0, 1.0] if odd else [1.0, 0.0]
    sol = solve_ivp(
        _weber_rhs(a),
        (0.0, WEBER_RANGE),
        start,
        method="DOP853",
        rtol=rtol,
        atol=WEBER_ATOL,
        dense_output=True,
    )
    if not sol.success:
        raise RuntimeError(f"❌ Weber integration failed for a={a}: {sol.message}")
    return sol.sol


def _weber(s, a: float, rtol: float, odd: bool):
    s = np.asarray(s, dtype=float)
    if np.any(np.abs(s) > WEBER_RANGE):
        raise ValueError(
            f"❌ Weber argument outside [-{WEBER_RANGE:g}, {WEBER_RANGE:g}]: "
            f"{float(np.max(np.abs(s))):.6g}"
        )
    dense = _weber_dense(float(a), float(rtol), odd)
    w, dw = dense(np.abs(s).ravel())
    w, dw = w.reshape(s.shape), dw.reshape(s.shape)
    flip = np.sign(s) < 0
    # odd solutions flip the value, even ones the derivative
    if odd:
        w = np.where(flip, -w, w)
    else:
        dw = np.where(flip, -dw, dw)
    return w, dw


def weber_po(s, a: float, rtol: float = WEBER_RTOL) -> Tuple[np.ndarray, np.ndarray]:
    """
    Odd solution of Weber's equation w'' + (s^2 / 4 - a) w = 0

    Normalized by w(0) = 0, w'(0) = 1. Integrated once per (a, rtol) on
    [0, 10] with an adaptive 8th order Runge-Kutta scheme and extended to
    negative s by oddness.

    :param s: real argument(s), |s| <= 10
    :param a: Weber parameter
    :param rtol: (optional) relative tolerance of the integration

    :return: (w(s), w'(s))

    :raises ValueError: If an argument is out of range
    :raises RuntimeError: If the integration fails
    """
    return _weber(s, a, rtol, True)


def weber_pe(s, a: float, rtol: float = WEBER_RTOL) -> Tuple[np.ndarray, np.ndarray]:
    """
    Even solution of Weber's equation with w(0) = 1, w'(0) = 0

    :return: (w(s), w'(s))
    """
    return _weber(s, a, rtol, False)


@dataclass(frozen=True)
class ExactSolution:
    """
    Exact solution of Delta u + kappa^2 epsilon u = 0

    - name: problem name
    - kappa: wavenumber
    - field: the CoefficientField epsilon
    - value: (x, y) -> complex values
    - gradient: (x, y) -> complex (n, 2) gradients
    """

    name: str
    kappa: float
    field: CoefficientField
    value: Callable
    gradient: Callable


def _stack_gradient(gx, gy) -> np.ndarray:
    gx, gy = np.broadcast_arrays(np.asarray(gx), np.asarray(gy))
    return np.stack([gx, gy], axis=-1).astype(complex)


def make_airy(kappa: float) -> ExactSolution:
    """
    :return: the Airy solution Ai(kappa^(2/3) y) for epsilon = -y
    """
    scale = kappa ** (2.0 / 3.0)

    def value(x, y):
        ai, _ = airy_ai(scale * np.asarray(y, dtype=float))
        return (ai + 0 * np.asarray(x, dtype=float)).astype(complex)

    def gradient(x, y):
        _, aip = airy_ai(scale * np.asarray(y, dtype=float))
        return _stack_gradient(0 * np.asarray(x, dtype=float), scale * aip)

    return ExactSolution("airy", kappa, make_airy_field(), value, gradient)


def make_weber(kappa: float, a: float = 5.0) -> ExactSolution:
    """
    :return: the Weber solution P_o(sqrt(kappa) x, a) for epsilon = x^2/4 - a/kappa
    """
    scale = np.sqrt(kappa)
    field = make_weber_field(a, kappa)

    def value(x, y):
        w, _ = weber_po(scale * np.asarray(x, dtype=float), a)
        return (w + 0 * np.asarray(y, dtype=float)).astype(complex)

    def gradient(x, y):
        _, dw = weber_po(scale * np.asarray(x, dtype=float), a)
        return _stack_gradient(scale * dw, 0 * np.asarray(y, dtype=float))

    return ExactSolution(f"weber:{a:g}", kappa, field, value, gradient)


def make_plane_wave(kappa: float, theta: float = 0.0) -> ExactSolution:
    """
    :return: exp(i kappa (x cos theta + y sin theta)) for epsilon = 1
    """
    dx, dy = np.cos(theta), np.sin(theta)

    def value(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return np.exp(1j * kappa * (x * dx + y * dy))

    def gradient(x, y):
        u = value(x, y)
        return _stack_gradient(1j * kappa * dx * u, 1j * kappa * dy * u)

    return ExactSolution("constant", kappa, make_constant(1.0), value, gradient)


def make_exact(
    problem: str, kappa: float, a: float = 5.0, theta: float = 0.0
) -> ExactSolution:
    """
    Exact solution by problem name

    :param problem: ``airy``, ``weber`` or ``constant``
    :param kappa: wavenumber
    :param a: (optional) Weber parameter
    :param theta: (optional) plane wave direction

    :return: the ExactSolution

    :raises ValueError: If the problem is unknown or kappa <= 0
    """
    if kappa <= 0:
        raise ValueError(f"❌ Wavenumber must be positive, got {kappa}")
    if problem == "airy":
        return make_airy(kappa)
    if problem == "weber":
        return make_weber(kappa, a)
    if problem == "constant":
        return make_plane_wave(kappa, theta)
    raise ValueError(f"❌ Unknown problem: {problem}")


def impedance_trace(
    exact: ExactSolution, points: np.ndarray, normals: np.ndarray, kappa: float
) -> np.ndarray:
    """
    Impedance data g = u + (du/dn) / (i kappa)

    The exact solution then satisfies du/dn + i kappa u = i kappa g.

    :param exact: the ExactSolution
    :param points: (n, 2) boundary points
    :param normals: (n, 2) outward unit normals
    :param kappa: wavenumber

    :return: (n,) complex g
    """
    points = np.atleast_2d(points)
    normals = np.broadcast_to(normals, points.shape)
    x, y = points[:, 0], points[:, 1]
    dn = np.sum(exact.gradient(x, y) * normals, axis=-1)
    return exact.value(x, y) + dn / (1j * kappa)


def robin_data(exact: ExactSolution) -> Callable:
    """
    :return: boundary data function (points, normals) -> g for the load vector
    """

    def data(points: np.ndarray, normals: np.ndarray) -> np.ndarray:
        return impedance_trace(exact, points, normals, exact.kappa)

    return data


def dirichlet_data(exact: ExactSolution) -> Callable:
    """
    :return: boundary data function (points, normals) -> u
    """

    def data(points: np.ndarray, normals: np.ndarray) -> np.ndarray:
        del normals
        return exact.value(points[:, 0], points[:, 1])

    return data


def finite_difference_residual(
    exact: ExactSolution, points: np.ndarray, step: float = 1e-4
) -> np.ndarray:
    """
    |Delta u + kappa^2 eps u| by a five point Laplacian, relative to kappa^2 max|u|

    :param exact: the ExactSolution
    :param points: (n, 2) sample points
    :param step: (optional) difference step

    :return: (n,) relative residuals
    """
    points = np.atleast_2d(points)
    x, y = points[:, 0], points[:, 1]
    u = exact.value(x, y)
    laplacian = (
        exact.value(x + step, y)
        + exact.value(x - step, y)
        + exact.value(x, y + step)
        + exact.value(x, y - step)
        - 4.0 * u
    ) / step**2
    k2 = exact.kappa**2
    residual = np.abs(laplacian + k2 * exact.field.value(x, y) * u)
    return residual / (k2 * max(float(np.max(np.abs(u))), 1e-300))
