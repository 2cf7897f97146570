"""
Convergence studies

`run_convergence` refines the initial mesh level by level, solves the GPW
Trefftz DG system on each mesh and measures the error against the exact
solution. Results are written as CSV tables and log-log SVG plots of the error
against C/h = sqrt(N_dof / p).
"""

import csv
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass
from math import sqrt
from pathlib import Path
from time import perf_counter
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from matplotlib.figure import Figure

from .analytic import ExactSolution, dirichlet_data, make_exact, robin_data
from .assembly import Assembler, DgParameters, element_quadrature
from .config import RunConfig
from .dg_norms import DiscreteFunction, Difference, ExactFunction, dg_norm_terms
from .gpw import GpwBasisSet, build_mesh_bases
from .mesh import EdgeKind, Mesh, build_structured_mesh, read_mesh_file, refine_uniform
from .quadrature import QuadratureOrders
from .solver import SingularSystemError, solve_direct

CONDITION_LIMIT = 1e14

CSV_COLUMNS = [
    "level",
    "h",
    "ndof",
    "c_over_h",
    "rel_l2",
    "dg_err",
    "cond",
    "assemble_s",
    "solve_s",
    "flagged",
]


@dataclass(frozen=True)
class ConvergenceRecord:
    """
    Results of one refinement level

    - level: refinement level, 0 for the initial mesh
    - h: largest element diameter
    - ndof: number of unknowns
    - p: directions per element
    - rel_l2: relative L2 error
    - dg_err: (optional) DG norm of the error
    - cond: condition estimate of the system
    - assemble_s, solve_s: (optional) wall times, None in deterministic mode
    - flagged: condition above CONDITION_LIMIT, excluded from the rate fit
    """

    level: int
    h: float
    ndof: int
    p: int
    rel_l2: float
    dg_err: Optional[float]
    cond: float
    assemble_s: Optional[float] = None
    solve_s: Optional[float] = None
    flagged: bool = False

    @property
    def c_over_h(self) -> float:
        """sqrt(N_dof / p), proportional to 1 / h on uniform meshes"""
        return sqrt(self.ndof / self.p)


@dataclass(frozen=True)
class ConvergenceResult:
    """
    - config: the RunConfig
    - records: one ConvergenceRecord per completed level
    - rate: fitted slope of log error against log h, None with too few levels
    """

    config: RunConfig
    records: List[ConvergenceRecord]
    rate: Optional[float]


class ConvergenceAborted(RuntimeError):
    """
    A level failed to solve

    :param message: error description
    :param result: ConvergenceResult with the completed levels
    """

    def __init__(self, message: str, result: ConvergenceResult):
        super().__init__(message)
        self.result = result


def initial_mesh(config: RunConfig) -> Mesh:
    """
    :return: mesh file from the config, or the structured mesh of [-1, 1]^2
    """
    kind = config.boundary_kind
    if config.mesh is not None:
        return read_mesh_file(config.mesh, kind)
    return build_structured_mesh(
        -1.0, 1.0, -1.0, 1.0, cells=config.cells, pattern=config.pattern, boundary=kind
    )


def compute_l2_error(
    mesh: Mesh,
    coefficients: np.ndarray,
    bases: Sequence[GpwBasisSet],
    exact: ExactSolution,
    orders: Optional[QuadratureOrders] = None,
    extra_degree: int = 2,
) -> Tuple[float, float]:
    """
    L2 error of a GPW expansion against an exact solution

    :param mesh: the Mesh
    :param coefficients: global coefficient vector
    :param bases: one GpwBasisSet per element
    :param exact: the ExactSolution
    :param orders: (optional) QuadratureOrders, defaults from the basis
    :param extra_degree: degrees added to the element rule

    :return: (absolute error, relative error)

    :raises ValueError: If the exact solution has zero norm
    """
    orders = orders or QuadratureOrders(bases[0].q, exact.kappa)
    coefficients = np.asarray(coefficients, dtype=complex).reshape(len(bases), -1)
    error2 = 0.0
    norm2 = 0.0
    for k, basis in enumerate(bases):
        points, weights = element_quadrature(mesh, orders, k, extra_degree)
        u_h = coefficients[k] @ basis.evaluate(points)[0]
        u = exact.value(points[:, 0], points[:, 1])
        error2 += float(weights @ np.abs(u_h - u) ** 2)
        norm2 += float(weights @ np.abs(u) ** 2)
    if norm2 == 0.0:
        raise ValueError("❌ Exact solution has zero L2 norm")
    return sqrt(error2), sqrt(error2 / norm2)


def compute_dg_error(
    mesh: Mesh,
    coefficients: np.ndarray,
    bases: Sequence[GpwBasisSet],
    exact: ExactSolution,
    params: DgParameters,
    orders: Optional[QuadratureOrders] = None,
) -> float:
    """
    DG norm of u - u_h

    The exact solution contributes no volume residual, so the volume term is
    the stabilization residual of u_h.

    :return: the DG error
    """
    orders = orders or QuadratureOrders(bases[0].q, exact.kappa)
    error = Difference(
        ExactFunction(exact), DiscreteFunction(bases, coefficients, exact.field)
    )
    terms = dg_norm_terms(
        mesh, error, exact.kappa, params, orders, include_volume=False
    )
    return terms.dg


def fit_rate(records: Sequence[ConvergenceRecord], levels: int) -> Optional[float]:
    """
    Least squares slope of log rel_l2 against log h

    Uses the last max(3, levels - 1) levels, skipping flagged ones.

    :return: the slope, None with fewer than two usable levels
    """
    window = list(records)[-max(3, levels - 1) :]
    usable = [r for r in window if not r.flagged and r.rel_l2 > 0]
    if len(usable) < 2:
        return None
    slope, _ = np.polyfit(
        np.log([r.h for r in usable]), np.log([r.rel_l2 for r in usable]), 1
    )
    return float(slope)


def run_convergence(config: RunConfig) -> ConvergenceResult:
    """
    Run a refinement study

    :param config: the RunConfig

    :return: ConvergenceResult with one record per level and the fitted rate

    :raises ConvergenceAborted: If a level fails to solve, carrying the
        completed levels
    :raises ValueError: If the exact solution is undefined on part of the domain
    """
    threads = config.worker_threads()
    deterministic = threads == 1
    exact = make_exact(config.problem, config.kappa, config.weber_a, config.theta)
    field = config.field()
    params = config.params
    orders = QuadratureOrders(config.q, config.kappa, config.quad_order)
    data = (
        robin_data(exact)
        if config.boundary_kind is EdgeKind.ROBIN
        else dirichlet_data(exact)
    )

    records: List[ConvergenceRecord] = []
    mesh = initial_mesh(config)
    # raises ValueError when the domain leaves the range of the exact solution
    exact.value(mesh.vertices[:, 0], mesh.vertices[:, 1])
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else nullcontext()
    with pool as executor:
        for level in range(config.levels):
            if level > 0:
                mesh = refine_uniform(mesh)
            start = perf_counter()
            bases = build_mesh_bases(
                mesh,
                field,
                config.kappa,
                config.n,
                config.q,
                config.gpw_normalization,
                executor,
            )
            assembler = Assembler(
                mesh, bases, field, config.kappa, params, orders, threads
            )
            if config.boundary_kind is EdgeKind.ROBIN:
                system = assembler.assemble(robin=data)
            else:
                system = assembler.assemble(dirichlet=data)
            assemble_s = perf_counter() - start
            try:
                report = solve_direct(system, deterministic=deterministic)
            except SingularSystemError as err:
                result = ConvergenceResult(
                    config, records, fit_rate(records, config.levels)
                )
                raise ConvergenceAborted(
                    f"❌ {config.label} level {level}: {err}", result
                ) from err

            _, rel_l2 = compute_l2_error(mesh, report.solution, bases, exact, orders)
            dg_err = compute_dg_error(
                mesh, report.solution, bases, exact, params, orders
            )
            flagged = not report.condition <= CONDITION_LIMIT
            record = ConvergenceRecord(
                level=level,
                h=mesh.h,
                ndof=system.ndof,
                p=config.p,
                rel_l2=rel_l2,
                dg_err=dg_err,
                cond=report.condition,
                assemble_s=None if deterministic else assemble_s,
                solve_s=None
                if deterministic
                else report.factor_time + report.solve_time,
                flagged=flagged,
            )
            records.append(record)
            print(
                f"☁️ {config.label} level {level}: h={mesh.h:.4g} ndof={system.ndof} "
                f"rel_l2={rel_l2:.3e} cond={report.condition:.3e}"
            )
            if flagged:
                print(
                    f"⚠️ Level {level} condition {report.condition:.3e} exceeds "
                    f"{CONDITION_LIMIT:.0e}, excluded from the rate"
                )

    rate = fit_rate(records, config.levels)
    if rate is not None:
        print(f"✅ {config.label}: rate {rate:.3f}")
    return ConvergenceResult(config, records, rate)


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(records: Sequence[ConvergenceRecord], path: Union[str, Path]) -> Path:
    """
    Write records as CSV

    :param records: the ConvergenceRecords
    :param path: output path

    :return: the Path written
    """
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for record in records:
            writer.writerow(
                {
                    column: _format(
                        record.c_over_h
                        if column == "c_over_h"
                        else getattr(record, column)
                    )
                    for column in CSV_COLUMNS
                }
            )
    return path


def read_csv(path: Union[str, Path]) -> List[ConvergenceRecord]:
    """
    Read records written by `write_csv`

    :param path: CSV path

    :return: list of ConvergenceRecord

    :raises FileNotFoundError: If the file does not exist
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"❌ CSV file not found: {path}")

    def optional(text: str) -> Optional[float]:
        return float(text) if text != "" else None

    records = []
    with path.open(newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            ndof = int(row["ndof"])
            records.append(
                ConvergenceRecord(
                    level=int(row["level"]),
                    h=float(row["h"]),
                    ndof=ndof,
                    p=round(ndof / float(row["c_over_h"]) ** 2),
                    rel_l2=float(row["rel_l2"]),
                    dg_err=optional(row["dg_err"]),
                    cond=float(row["cond"]),
                    assemble_s=optional(row["assemble_s"]),
                    solve_s=optional(row["solve_s"]),
                    flagged=row["flagged"] == "1",
                )
            )
    return records


def plot_convergence(
    results: Sequence[ConvergenceResult],
    path: Union[str, Path],
    orders: Sequence[int] = (2, 3, 4, 5),
) -> Path:
    """
    Log-log plot of relative L2 error against C/h

    :param results: one series per ConvergenceResult
    :param path: SVG output path
    :param orders: reference slopes drawn as dotted lines

    :return: the Path written
    """
    path = Path(path)
    fig = Figure(figsize=(7, 6))
    ax = fig.subplots()
    anchor = None
    for result in results:
        if not result.records:
            continue
        x = np.array([r.c_over_h for r in result.records])
        y = np.array([r.rel_l2 for r in result.records])
        rate = "" if result.rate is None else f" O(h^{result.rate:.2f})"
        ax.loglog(x, y, "o-", label=f"n={result.config.n} q={result.config.q}{rate}")
        if anchor is None:
            anchor = (x, y[0])
    if anchor is not None:
        x, y0 = anchor
        for order in orders:
            ax.loglog(x, y0 * (x / x[0]) ** (-order), "k:", lw=0.8)
            ax.annotate(f"{order}", (x[-1], y0 * (x[-1] / x[0]) ** (-order)))
        ax.legend(loc="lower left", fontsize=8)
    ax.grid(True)
    ax.set_xlabel("C/h")
    ax.set_ylabel("relative L2 error")
    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    return path


def emit_outputs(
    results: Sequence[ConvergenceResult], out: Union[str, Path], stem: str
) -> List[Path]:
    """
    Write one CSV per run and one SVG for all runs

    :param results: the ConvergenceResults
    :param out: output directory, created if needed
    :param stem: file name of the plot without extension

    :return: the Paths written

    :raises OSError: If the directory cannot be written
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written = [
        write_csv(result.records, out / f"{result.config.label}.csv")
        for result in results
    ]
    written.append(plot_convergence(results, out / f"{stem}.svg"))
    for path in written:
        print(f"✅ Wrote {path}")
    return written
