"""
Coefficient fields epsilon(x, y)

A field supplies point values and exact mixed partial derivatives, which the
GPW construction samples at element centroids. The built-in fields are
polynomials, held as a table of monomial coefficients so any derivative is exact.
"""

from math import factorial, inf, sqrt
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


class CoefficientField:
    """
    Base class for real coefficient fields

    :param name: descriptive name used in logs and output files
    :param order: highest total derivative order available (inf for polynomials)
    """

    def __init__(self, name: str, order: float):
        self.name = name
        self.order = order

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r})"

    def value(self, x: ArrayLike, y: ArrayLike) -> ArrayLike:
        """
        :return: epsilon at the points (x, y)
        """
        return self.partial(0, 0, x, y)

    def partial(self, i: int, j: int, x: ArrayLike, y: ArrayLike) -> ArrayLike:
        """
        :param i: derivative order in x
        :param j: derivative order in y

        :return: d^i/dx^i d^j/dy^j epsilon at the points (x, y)
        """
        raise NotImplementedError

    def taylor(self, x0: float, y0: float, degree: int) -> np.ndarray:
        """
        Taylor coefficients about (x0, y0)

        :param x0: expansion point x
        :param y0: expansion point y
        :param degree: highest total degree kept

        :return: (degree + 1, degree + 1) array t with t[i, j] the coefficient of
            (x - x0)^i (y - y0)^j, zero for i + j > degree

        :raises ValueError: If the field is not smooth enough
        """
        self.require_order(degree)
        table = np.zeros((degree + 1, degree + 1))
        for i in range(degree + 1):
            for j in range(degree + 1 - i):
                table[i, j] = self.partial(i, j, x0, y0) / (
                    factorial(i) * factorial(j)
                )
        return table

    def require_order(self, order: int):
        """
        :raises ValueError: If derivatives up to order are not available
        """
        if order > self.order:
            raise ValueError(
                f"❌ Field {self.name} provides derivatives up to order "
                f"{self.order}, {order} required"
            )


class PolynomialField(CoefficientField):
    """
    Polynomial field sum c_ab x^a y^b with exact derivatives

    :param coefficients: mapping (a, b) -> c_ab
    :param name: descriptive name
    """

    def __init__(self, coefficients: Dict[Tuple[int, int], float], name: str):
        super().__init__(name, inf)
        self.coefficients = {
            (int(a), int(b)): float(c) for (a, b), c in coefficients.items() if c
        }
        self.degree = max((a + b for a, b in self.coefficients), default=0)

    def partial(self, i: int, j: int, x: ArrayLike, y: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        result = np.zeros(np.broadcast(x, y).shape)
        for (a, b), c in self.coefficients.items():
            if a < i or b < j:
                continue
            scale = c * (factorial(a) // factorial(a - i)) * (
                factorial(b) // factorial(b - j)
            )
            result = result + scale * x ** (a - i) * y ** (b - j)
        if result.ndim == 0:
            return float(result)
        return result


class CallbackField(CoefficientField):
    """
    User supplied field from callbacks

    :param value: function (x, y) -> epsilon
    :param partials: mapping (i, j) -> function (x, y) for each available
        derivative; (0, 0) defaults to value
    :param order: declared smoothness order, every (i, j) with i + j <= order
        must be present in partials
    :param name: descriptive name

    :raises ValueError: If a declared derivative is missing
    """

    def __init__(
        self,
        value: Callable[[ArrayLike, ArrayLike], ArrayLike],
        partials: Optional[Dict[Tuple[int, int], Callable]] = None,
        order: int = 0,
        name: str = "callback",
    ):
        super().__init__(name, order)
        self.partials = dict(partials or {})
        self.partials.setdefault((0, 0), value)
        missing = [
            (i, s - i)
            for s in range(order + 1)
            for i in range(s + 1)
            if (i, s - i) not in self.partials
        ]
        if missing:
            raise ValueError(
                f"❌ Field {name} declares order {order}, missing {missing}"
            )

    def partial(self, i: int, j: int, x: ArrayLike, y: ArrayLike) -> ArrayLike:
        self.require_order(i + j)
        return self.partials[(i, j)](x, y)


def make_constant(c: float) -> PolynomialField:
    """
    Constant field epsilon = c

    :param c: the constant value
    """
    return PolynomialField({(0, 0): c}, f"constant:{c:g}")


def make_airy_field() -> PolynomialField:
    """Airy field epsilon(x, y) = -y"""
    return PolynomialField({(0, 1): -1.0}, "airy")


def make_weber_field(a: float, kappa: float) -> PolynomialField:
    """
    Weber field epsilon(x, y) = x^2 / 4 - a / kappa

    :param a: Weber parameter
    :param kappa: wavenumber

    :raises ValueError: If kappa <= 0
    """
    if kappa <= 0:
        raise ValueError(f"❌ Weber field needs kappa > 0, got {kappa}")
    return PolynomialField({(2, 0): 0.25, (0, 0): -a / kappa}, f"weber:{a:g}")


def weber_turning_point(a: float, kappa: float) -> float:
    """
    :return: x > 0 where the Weber field changes sign
    """
    return sqrt(4.0 * a / kappa)


def field_from_name(name: str, kappa: Optional[float] = None) -> CoefficientField:
    """
    Build a field from its configuration name

    Names: ``constant:<c>``, ``airy``, ``weber:<a>``

    :param name: the configuration name
    :param kappa: (optional) wavenumber, required for weber

    :return: the CoefficientField

    :raises ValueError: If the name is not recognised
    """
    kind, _, arg = name.strip().lower().partition(":")
    try:
        if kind == "constant":
            return make_constant(float(arg) if arg else 1.0)
        if kind == "airy" and not arg:
            return make_airy_field()
        if kind == "weber":
            if kappa is None:
                raise ValueError("❌ weber field needs kappa")
            return make_weber_field(float(arg) if arg else 5.0, kappa)
    except ValueError as err:
        raise ValueError(f"❌ Invalid field name {name!r}: {err}") from err
    raise ValueError(f"❌ Unknown field name: {name!r}")
