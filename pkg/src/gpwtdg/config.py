"""
Run configuration and experiment presets

A `RunConfig` describes one convergence study. Presets expand to lists of
them covering the Airy and Weber parameter grids.
"""

import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional

from .assembly import DgParameters
from .epsilon import CoefficientField, field_from_name
from .gpw import Normalization
from .mesh import EdgeKind

THREADS_ENV = "GPWTDG_THREADS"

PROBLEMS = ("airy", "weber", "constant")
BOUNDARIES = ("robin", "dirichlet")
PATTERNS = ("diagonal", "crisscross")


class ConfigError(ValueError):
    """Invalid run configuration"""


def thread_count(value: Optional[str] = None) -> int:
    """
    Worker thread cap from GPWTDG_THREADS

    :param value: (optional) explicit setting, read from the environment if None

    :return: number of threads, os.cpu_count() when unset; 1 means the
        deterministic single threaded mode

    :raises ConfigError: If the setting is not a positive integer
    """
    if value is None:
        value = os.environ.get(THREADS_ENV)
    if value is None or value.strip() == "":
        return os.cpu_count() or 1
    try:
        threads = int(value)
    except ValueError as err:
        raise ConfigError(
            f"❌ {THREADS_ENV} must be an integer, got {value!r}"
        ) from err
    if threads < 1:
        raise ConfigError(f"❌ {THREADS_ENV} must be at least 1, got {threads}")
    return threads


@dataclass(frozen=True)
class RunConfig:
    """
    One convergence study

    :param problem: ``airy``, ``weber`` or ``constant``
    :param kappa: wavenumber
    :param n: direction parameter, p = 2n + 1
    :param q: GPW approximation order
    :param gamma0: stabilization scale
    :param gamma_exp: stabilization exponent r in gamma = gamma0 h^r
    :param levels: number of meshes, the initial one included
    :param quad_order: (optional) edge point count overriding the defaults
    :param mesh: (optional) mesh file replacing the structured initial mesh
    :param out: output directory
    :param boundary: ``robin`` or ``dirichlet``
    :param weber_a: Weber parameter a
    :param theta: plane wave direction for the constant problem
    :param cells: cells per side of the structured initial mesh
    :param pattern: ``diagonal`` or ``crisscross``
    :param normalization: name of the GPW Normalization
    :param threads: (optional) worker cap, GPWTDG_THREADS when None

    :raises ConfigError: If any value is out of range
    """

    problem: str = "airy"
    kappa: float = 15.0
    n: int = 2
    q: int = 3
    gamma0: float = 1.0
    gamma_exp: float = 3.0
    levels: int = 5
    quad_order: Optional[int] = None
    mesh: Optional[Path] = None
    out: Path = Path("results")
    boundary: str = "robin"
    weber_a: float = 5.0
    theta: float = 0.0
    cells: int = 2
    pattern: str = "diagonal"
    normalization: str = Normalization.I_KAPPA_SQRT_EPS.value
    threads: Optional[int] = None

    def __post_init__(self):
        checks = [
            (self.problem in PROBLEMS, f"problem must be one of {PROBLEMS}"),
            (self.kappa > 0, "kappa must be positive"),
            (self.n >= 1, "n must be at least 1"),
            (self.q >= 1, "q must be at least 1"),
            (self.gamma0 >= 0, "gamma0 must be non-negative"),
            (self.gamma_exp >= 0, "gamma exponent must be non-negative"),
            (self.levels >= 1, "levels must be at least 1"),
            (
                self.quad_order is None or self.quad_order >= 1,
                "quadrature order must be at least 1",
            ),
            (self.boundary in BOUNDARIES, f"boundary must be one of {BOUNDARIES}"),
            (self.cells >= 1, "cells must be at least 1"),
            (self.pattern in PATTERNS, f"pattern must be one of {PATTERNS}"),
            (
                self.normalization in [m.value for m in Normalization],
                "unknown normalization",
            ),
            (self.threads is None or self.threads >= 1, "threads must be at least 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(f"❌ Invalid configuration: {message}")
        if self.mesh is not None:
            object.__setattr__(self, "mesh", Path(self.mesh))
        object.__setattr__(self, "out", Path(self.out))

    @property
    def p(self) -> int:
        """Directions per element"""
        return 2 * self.n + 1

    @property
    def label(self) -> str:
        """Name used for output files"""
        return (
            f"{self.problem}-k{self.kappa:g}-n{self.n}-q{self.q}"
            f"-g{self.gamma0:g}h{self.gamma_exp:g}-{self.boundary}"
        )

    @property
    def params(self) -> DgParameters:
        """DG weights, the UWVF choice with this stabilization"""
        return DgParameters(gamma0=self.gamma0, gamma_exp=self.gamma_exp)

    @property
    def boundary_kind(self) -> EdgeKind:
        """EdgeKind of the outer boundary"""
        return EdgeKind(self.boundary)

    @property
    def gpw_normalization(self) -> Normalization:
        """The Normalization enum member"""
        return Normalization(self.normalization)

    @property
    def field_name(self) -> str:
        """Configuration name of the coefficient field, see `field_from_name`"""
        if self.problem == "weber":
            return f"weber:{self.weber_a!r}"
        if self.problem == "constant":
            return "constant:1"
        return self.problem

    def field(self) -> CoefficientField:
        """The coefficient field of the problem, built from `field_name`"""
        return field_from_name(self.field_name, self.kappa)

    def worker_threads(self) -> int:
        """Configured thread cap, falling back to GPWTDG_THREADS"""
        return self.threads if self.threads is not None else thread_count()


def _grid(base: RunConfig, pairs) -> List[RunConfig]:
    return [replace(base, n=n, q=q) for n, q in pairs]


def _full_grid(base: RunConfig) -> List[RunConfig]:
    return _grid(base, [(n, q) for n in range(1, 5) for q in (1, 3, 4, 5)])


def _nq_grid(base: RunConfig) -> List[RunConfig]:
    return _grid(
        base, [(n, q) for n in range(1, 5) for q in (n - 1, n, n + 1) if q >= 1]
    )


def _presets() -> Dict[str, List[RunConfig]]:
    airy_h3 = RunConfig("airy", 15.0, gamma0=1.0, gamma_exp=3.0)
    airy_h1 = replace(airy_h3, gamma_exp=1.0)
    airy_0 = replace(airy_h3, gamma0=0.0, gamma_exp=0.0)
    weber_h3 = RunConfig("weber", 50.0, gamma0=1.0, gamma_exp=3.0, weber_a=5.0)
    return {
        "airy-gh3": _full_grid(airy_h3),
        "airy-gh1": _full_grid(airy_h1),
        "airy-g0": _full_grid(airy_0),
        "weber-gh3": _full_grid(weber_h3),
        "airy-gh3-nq": _nq_grid(airy_h3),
        "airy-gh1-nq": _nq_grid(airy_h1),
        "airy-g0-nq": _nq_grid(airy_0),
        "weber-gh3-nq": _nq_grid(weber_h3),
        "weber-fast": [replace(weber_h3, kappa=20.0, n=2, q=3, levels=6)],
    }


PRESETS = _presets()


def preset(name: str, out: Optional[Path] = None, **overrides) -> List[RunConfig]:
    """
    Expand a named preset

    :param name: preset name, see PRESETS
    :param out: (optional) output directory for every run
    :param overrides: (optional) RunConfig fields replaced in every run

    :return: list of RunConfig

    :raises ConfigError: If the preset is unknown or an override is invalid
    """
    if name not in PRESETS:
        raise ConfigError(
            f"❌ Unknown preset {name!r}, choose from {', '.join(sorted(PRESETS))}"
        )
    if out is not None:
        overrides["out"] = Path(out)
    try:
        return [replace(config, **overrides) for config in PRESETS[name]]
    except TypeError as err:
        raise ConfigError(f"❌ Invalid preset override: {err}") from err
