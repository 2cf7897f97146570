"""
Direct solution of the assembled system

Systems below `DENSE_LIMIT` unknowns are factorized densely with LAPACK and
their 1-norm condition number is estimated by ``gecon``. Larger ones use a
sparse LU and a block 1-norm estimate of the inverse.
"""

from dataclasses import dataclass
from pprint import pprint
from time import perf_counter

import numpy as np
from scipy.linalg import get_lapack_funcs, lu_factor, lu_solve
from scipy.sparse import csc_matrix, issparse
from scipy.sparse.linalg import LinearOperator, onenormest, splu

DENSE_LIMIT = 2000


class SingularSystemError(RuntimeError):
    """The factorization hit an exactly zero pivot"""


@dataclass(frozen=True)
class SolveReport:
    """
    Outcome of a direct solve

    - solution: complex coefficient vector
    - relative_residual: ||M x - b|| / ||b|| from the original matrix, or the
      absolute residual when b = 0
    - condition: 1-norm condition estimate, inf for singular systems
    - factor_time, solve_time: wall times in seconds
    """

    solution: np.ndarray
    relative_residual: float
    condition: float
    factor_time: float
    solve_time: float


class Factorization:
    """
    LU factorization of a square complex matrix

    :param matrix: dense array or scipy sparse matrix
    :param dense_limit: (optional) size below which a dense LU is used
    :param deterministic: restrict the sparse condition estimate to its
        single column variant, which draws no random vectors

    :raises ValueError: If the matrix is not square
    :raises SingularSystemError: If the matrix is exactly singular
    """

    def __init__(
        self,
        matrix,
        dense_limit: int = DENSE_LIMIT,
        deterministic: bool = True,
    ):
        shape = matrix.shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ValueError(f"❌ Matrix must be square, got shape {shape}")
        self.matrix = matrix
        self.n = shape[0]
        self.dense = self.n < dense_limit
        self.deterministic = deterministic
        self.debug = False
        self._lu = None
        self._sparse_lu = None

        start = perf_counter()
        if self.dense:
            array = matrix.toarray() if issparse(matrix) else np.asarray(matrix)
            self._array = array.astype(complex)
            self._lu = lu_factor(self._array, check_finite=True)
            if np.any(np.diag(self._lu[0]) == 0):
                raise SingularSystemError("❌ Matrix is exactly singular")
        else:
            try:
                self._sparse_lu = splu(csc_matrix(matrix, dtype=complex))
            except RuntimeError as err:
                raise SingularSystemError(f"❌ Sparse LU failed: {err}") from err
        self.factor_time = perf_counter() - start

    def solve(self, rhs: np.ndarray, trans: str = "N") -> np.ndarray:
        """
        :param rhs: right hand side
        :param trans: ``N`` for M x = b, ``H`` for M^H x = b

        :return: the solution
        """
        rhs = np.asarray(rhs, dtype=complex)
        if rhs.shape[0] != self.n:
            raise ValueError(
                f"❌ Right hand side has length {rhs.shape[0]}, expected {self.n}"
            )
        if self.debug:
            pprint(
                {"n": self.n, "dense": self.dense, "factor_time": self.factor_time}
            )
        if self.dense:
            return lu_solve(self._lu, rhs, trans=2 if trans == "H" else 0)
        return self._sparse_lu.solve(rhs, trans=trans)

    def condition(self) -> float:
        """
        1-norm condition estimate

        :return: estimate >= 1, inf when the reciprocal condition is zero
        """
        if self.dense:
            lu = self._lu[0]
            gecon = get_lapack_funcs("gecon", (lu,))
            anorm = np.linalg.norm(self._array, 1)
            rcond, info = gecon(lu, anorm, norm="1")
            if info != 0:
                raise RuntimeError(f"❌ LAPACK gecon failed with info={info}")
            return float(np.inf) if rcond == 0 else max(1.0, float(1.0 / rcond))

        inverse = LinearOperator(
            (self.n, self.n),
            matvec=self.solve,
            rmatvec=lambda x: self.solve(x, trans="H"),
            dtype=complex,
        )
        t = 1 if self.deterministic else 2
        estimate = onenormest(self.matrix, t=t) * onenormest(inverse, t=t)
        if not np.isfinite(estimate):
            return float(np.inf)
        return max(1.0, float(estimate))


def relative_residual(matrix, solution: np.ndarray, rhs: np.ndarray) -> float:
    """
    :return: ||M x - b|| / ||b||, or ||M x - b|| when b = 0
    """
    residual = float(np.linalg.norm(matrix @ solution - rhs))
    scale = float(np.linalg.norm(rhs))
    return residual / scale if scale > 0 else residual


def solve_direct(
    system,
    estimate_condition: bool = True,
    dense_limit: int = DENSE_LIMIT,
    deterministic: bool = True,
) -> SolveReport:
    """
    Solve an assembled system by LU

    :param system: AssembledSystem, or any object with ``matrix`` and ``rhs``
    :param estimate_condition: compute the condition estimate
    :param dense_limit: (optional) size below which a dense LU is used
    :param deterministic: see `Factorization`

    :return: the SolveReport

    :raises ValueError: If the shapes do not match
    :raises SingularSystemError: If the matrix is exactly singular
    """
    matrix, rhs = system.matrix, np.asarray(system.rhs, dtype=complex)
    if matrix.shape[0] != rhs.shape[0]:
        raise ValueError(
            f"❌ Matrix has {matrix.shape[0]} rows, right hand side {rhs.shape[0]}"
        )
    factorization = Factorization(matrix, dense_limit, deterministic)
    start = perf_counter()
    solution = factorization.solve(rhs)
    solve_time = perf_counter() - start
    condition = factorization.condition() if estimate_condition else float("nan")
    residual = relative_residual(matrix, solution, rhs)
    if residual > 1e-8:
        print(
            f"⚠️ Relative residual {residual:.3e} with condition estimate "
            f"{condition:.3e}"
        )
    return SolveReport(
        solution, residual, condition, factorization.factor_time, solve_time
    )


def condition_estimate(system, dense_limit: int = DENSE_LIMIT) -> float:
    """
    1-norm condition estimate of a system matrix

    :param system: AssembledSystem, or any object with ``matrix``

    :return: estimate >= 1, inf for a singular matrix
    """
    try:
        return Factorization(system.matrix, dense_limit).condition()
    except SingularSystemError:
        return float(np.inf)
