#!/usr/bin/env python3
"""Utils for tests"""

from pathlib import Path
from typing import List, Tuple

import numpy as np

from gpwtdg.analytic import ExactSolution, make_exact
from gpwtdg.gpw import GpwBasisSet, build_mesh_bases
from gpwtdg.mesh import EdgeKind, Mesh, build_structured_mesh, refine_uniform


def reference_triangle() -> np.ndarray:
    """The triangle (0, 0), (1, 0), (0, 1)"""
    return np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def small_mesh(
    cells: int = 2, boundary: EdgeKind = EdgeKind.ROBIN, refinements: int = 0
) -> Mesh:
    """Structured mesh of [-1, 1]^2, optionally refined"""
    mesh = build_structured_mesh(cells=cells, boundary=boundary)
    for _ in range(refinements):
        mesh = refine_uniform(mesh)
    return mesh


def problem_setup(
    problem: str,
    kappa: float,
    n: int,
    q: int,
    mesh: Mesh,
) -> Tuple[ExactSolution, List[GpwBasisSet]]:
    """
    Exact solution and GPW bases for a mesh
    Returns (exact, bases)
    """
    exact = make_exact(problem, kappa)
    return exact, build_mesh_bases(mesh, exact.field, kappa, n, q)


def plane_wave_coefficients(mesh: Mesh, kappa: float, p: int) -> np.ndarray:
    """
    Coefficients reproducing exp(i kappa x) with the direction 0 basis function
    of every element
    """
    x = np.zeros((len(mesh), p), dtype=complex)
    x[:, 0] = np.exp(1j * kappa * mesh.centroids[:, 0])
    return x.ravel()


def random_vectors(size: int, count: int, seed: int = 1) -> np.ndarray:
    """Complex random vectors as rows, reproducible"""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((count, size)) + 1j * rng.standard_normal(
        (count, size)
    )


def write_text(path: Path, text: str) -> Path:
    """Utility: write a text file and return its path."""
    path.write_text(text, encoding="utf-8")
    return path
