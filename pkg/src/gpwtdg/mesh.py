"""
Triangular meshes of rectangles and polygonal domains

A `Mesh` is immutable after construction. It stores vertices, counterclockwise
triangles and the classified edge list used by the DG assembly: interior edges
know both neighbours, boundary edges are Robin or Dirichlet.
"""

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from .quadrature import triangle_area


class EdgeKind(Enum):
    """Classification of a mesh edge"""

    INTERIOR = "interior"
    DIRICHLET = "dirichlet"
    ROBIN = "robin"


BoundaryRule = Union[EdgeKind, Callable[[np.ndarray, np.ndarray], EdgeKind]]


@dataclass(frozen=True)
class Edge:
    """
    A mesh edge

    - vertices: sorted endpoint indices
    - kind: EdgeKind of the edge
    - plus: index of K+ (the lower triangle index on interior edges)
    - minus: index of K-, None on the boundary
    - normal: unit normal pointing out of K+
    - length: edge length
    """

    vertices: Tuple[int, int]
    kind: EdgeKind
    plus: int
    minus: Optional[int]
    normal: Tuple[float, float]
    length: float

    @property
    def is_boundary(self) -> bool:
        """True for Robin and Dirichlet edges"""
        return self.minus is None


@dataclass(frozen=True)
class RegularityReport:
    """
    Mesh regularity ratios

    - tau: largest diameter ratio between triangles sharing an edge
    - tau_robin: largest h / h_K over triangles touching a Robin edge
    """

    tau: float
    tau_robin: float


def _key(a: int, b: int) -> Tuple[int, int]:
    return (a, b) if a < b else (b, a)


class Mesh:
    """
    Immutable triangular mesh

    :param vertices: (V, 2) vertex coordinates
    :param triangles: (T, 3) vertex indices, counterclockwise
    :param boundary: EdgeKind for every boundary edge, or a function
        (midpoint, outward normal) -> EdgeKind
    :param boundary_kinds: (optional) explicit kinds keyed by sorted vertex pair,
        taking precedence over boundary

    :raises ValueError: If a triangle is degenerate or clockwise, or an edge is
        shared by more than two triangles
    """

    def __init__(
        self,
        vertices: np.ndarray,
        triangles: np.ndarray,
        boundary: BoundaryRule = EdgeKind.ROBIN,
        boundary_kinds: Optional[Dict[Tuple[int, int], EdgeKind]] = None,
    ):
        self.vertices = np.array(vertices, dtype=float).reshape(-1, 2)
        self.triangles = np.array(triangles, dtype=int).reshape(-1, 3)
        if self.triangles.size == 0:
            raise ValueError("❌ Mesh has no triangles")
        if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
            raise ValueError("❌ Triangle references a missing vertex")

        self.areas = np.array(
            [triangle_area(self.element_vertices(k)) for k in range(len(self))]
        )
        bad = np.flatnonzero(self.areas <= 0.0)
        if bad.size:
            raise ValueError(
                f"❌ Triangles {bad.tolist()} have non-positive signed area"
            )
        self.centroids = self.vertices[self.triangles].mean(axis=1)
        corners = self.vertices[self.triangles]
        sides = corners[:, [1, 2, 0]] - corners
        self.diameters = np.hypot(sides[..., 0], sides[..., 1]).max(axis=1)
        self.h = float(self.diameters.max())

        self.edges = self._build_edges(boundary, boundary_kinds or {})
        for array in (
            self.vertices,
            self.triangles,
            self.areas,
            self.centroids,
            self.diameters,
        ):
            array.setflags(write=False)

    def __len__(self) -> int:
        return len(self.triangles)

    def __repr__(self) -> str:
        return (
            f"Mesh({len(self.vertices)} vertices, {len(self)} triangles, "
            f"{len(self.edges)} edges, h={self.h:.4g})"
        )

    def element_vertices(self, k: int) -> np.ndarray:
        """
        :param k: triangle index

        :return: (3, 2) vertex coordinates of triangle k
        """
        return self.vertices[self.triangles[k]]

    def edge_points(self, edge: Edge) -> Tuple[np.ndarray, np.ndarray]:
        """
        :return: the two endpoint coordinates of an edge
        """
        a, b = edge.vertices
        return self.vertices[a], self.vertices[b]

    def edges_of(self, kind: EdgeKind) -> List[Edge]:
        """
        :param kind: the EdgeKind to select

        :return: edges of that kind in mesh order
        """
        return [edge for edge in self.edges if edge.kind is kind]

    def boundary_kinds(self) -> Dict[Tuple[int, int], EdgeKind]:
        """
        :return: kind of every boundary edge keyed by its vertex pair
        """
        return {edge.vertices: edge.kind for edge in self.edges if edge.is_boundary}

    def neighbours(self) -> List[Tuple[int, int]]:
        """
        :return: (K+, K-) for every interior edge, the adjacency of the mesh
        """
        return [(e.plus, e.minus) for e in self.edges if e.minus is not None]

    def total_area(self) -> float:
        """Sum of the triangle areas"""
        return float(self.areas.sum())

    def _build_edges(
        self,
        boundary: BoundaryRule,
        boundary_kinds: Dict[Tuple[int, int], EdgeKind],
    ) -> List[Edge]:
        owners: Dict[Tuple[int, int], List[int]] = {}
        for k, (a, b, c) in enumerate(self.triangles.tolist()):
            for pair in ((a, b), (b, c), (c, a)):
                owners.setdefault(_key(*pair), []).append(k)

        edges = []
        for pair in sorted(owners):
            elements = owners[pair]
            if len(elements) > 2:
                raise ValueError(
                    f"❌ Edge {pair} is shared by {len(elements)} triangles"
                )
            plus = min(elements)
            minus = max(elements) if len(elements) == 2 else None
            start, end = self.vertices[list(pair)]
            tangent = end - start
            length = float(np.hypot(*tangent))
            normal = np.array([tangent[1], -tangent[0]]) / length
            if np.dot(normal, 0.5 * (start + end) - self.centroids[plus]) < 0:
                normal = -normal
            if minus is not None:
                kind = EdgeKind.INTERIOR
            elif pair in boundary_kinds:
                kind = boundary_kinds[pair]
            elif isinstance(boundary, EdgeKind):
                kind = boundary
            else:
                kind = boundary(0.5 * (start + end), normal)
            if minus is None and kind is EdgeKind.INTERIOR:
                raise ValueError(f"❌ Boundary edge {pair} classified interior")
            edges.append(
                Edge(
                    pair,
                    kind,
                    plus,
                    minus,
                    (float(normal[0]), float(normal[1])),
                    length,
                )
            )
        return edges


def build_structured_mesh(
    xmin: float = -1.0,
    xmax: float = 1.0,
    ymin: float = -1.0,
    ymax: float = 1.0,
    cells: int = 2,
    pattern: str = "diagonal",
    boundary: BoundaryRule = EdgeKind.ROBIN,
) -> Mesh:
    """
    Triangulate an axis aligned rectangle

    The rectangle is split into cells x cells rectangles and every cell into two
    triangles. With ``diagonal`` all cells are cut from lower left to upper
    right, with ``crisscross`` the cut alternates in a checkerboard.

    :param xmin: left side
    :param xmax: right side
    :param ymin: bottom side
    :param ymax: top side
    :param cells: number of cells per side
    :param pattern: ``diagonal`` or ``crisscross``
    :param boundary: EdgeKind or classifier for the boundary edges

    :return: the Mesh

    :raises ValueError: If the rectangle is degenerate or the pattern unknown
    """
    if not (xmax > xmin and ymax > ymin):
        raise ValueError(
            f"❌ Invalid domain [{xmin}, {xmax}] x [{ymin}, {ymax}]"
        )
    if cells < 1:
        raise ValueError(f"❌ Need at least one cell per side, got {cells}")
    if pattern not in ("diagonal", "crisscross"):
        raise ValueError(f"❌ Unknown mesh pattern: {pattern}")

    xs = np.linspace(xmin, xmax, cells + 1)
    ys = np.linspace(ymin, ymax, cells + 1)
    vertices = np.array([(x, y) for y in ys for x in xs])

    def index(i: int, j: int) -> int:
        return j * (cells + 1) + i

    triangles = []
    for j in range(cells):
        for i in range(cells):
            sw, se = index(i, j), index(i + 1, j)
            nw, ne = index(i, j + 1), index(i + 1, j + 1)
            if pattern == "diagonal" or (i + j) % 2 == 0:
                triangles += [(sw, se, ne), (sw, ne, nw)]
            else:
                triangles += [(sw, se, nw), (se, ne, nw)]
    return Mesh(vertices, triangles, boundary)


def refine_uniform(mesh: Mesh) -> Mesh:
    """
    Split every triangle into four through its edge midpoints

    Boundary edge kinds are inherited by the two halves of each boundary edge.

    :param mesh: the Mesh to refine

    :return: the refined Mesh
    """
    vertices = [tuple(v) for v in mesh.vertices.tolist()]
    midpoints: Dict[Tuple[int, int], int] = {}

    def midpoint(a: int, b: int) -> int:
        key = _key(a, b)
        if key not in midpoints:
            xa, ya = vertices[a]
            xb, yb = vertices[b]
            vertices.append((0.5 * (xa + xb), 0.5 * (ya + yb)))
            midpoints[key] = len(vertices) - 1
        return midpoints[key]

    triangles = []
    for a, b, c in mesh.triangles.tolist():
        mab, mbc, mca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        triangles += [(a, mab, mca), (mab, b, mbc), (mca, mbc, c), (mab, mbc, mca)]

    kinds = {}
    for (a, b), kind in mesh.boundary_kinds().items():
        m = midpoints[(a, b)]
        kinds[_key(a, m)] = kind
        kinds[_key(m, b)] = kind
    return Mesh(np.array(vertices), triangles, EdgeKind.ROBIN, kinds)


def check_mesh_regularity(mesh: Mesh) -> RegularityReport:
    """
    Local quasi-uniformity ratios of a mesh

    :param mesh: the Mesh to inspect

    :return: RegularityReport with tau = max h_K / h_K' over neighbours and
        tau_robin = max h / h_K over triangles touching a Robin edge
        (1.0 when there are none)
    """
    d = mesh.diameters
    tau = 1.0
    for plus, minus in mesh.neighbours():
        tau = max(tau, d[plus] / d[minus], d[minus] / d[plus])
    robin = {e.plus for e in mesh.edges_of(EdgeKind.ROBIN)}
    tau_robin = max((mesh.h / d[k] for k in robin), default=1.0)
    return RegularityReport(float(tau), float(tau_robin))


def read_mesh_file(
    path: Union[str, Path], boundary: BoundaryRule = EdgeKind.ROBIN
) -> Mesh:
    """
    Read a plain text mesh

    The first line holds ``V T``, then V lines ``x y`` and T lines ``i j k`` with
    0-based counterclockwise vertex indices. Blank lines and ``#`` comments are
    skipped.

    :param path: Path to the mesh file
    :param boundary: EdgeKind or classifier for the boundary edges

    :return: the Mesh

    :raises FileNotFoundError: If the file does not exist
    :raises ValueError: If the file is malformed
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"❌ Mesh file not found: {path}")
    lines = [
        line.split("#", 1)[0].split()
        for line in path.read_text(encoding="utf-8").splitlines()
    ]
    lines = [line for line in lines if line]
    try:
        n_vertices, n_triangles = (int(v) for v in lines[0])
        vertices = [[float(v) for v in line] for line in lines[1 : 1 + n_vertices]]
        triangles = [
            [int(v) for v in line]
            for line in lines[1 + n_vertices : 1 + n_vertices + n_triangles]
        ]
    except (IndexError, ValueError) as err:
        raise ValueError(f"❌ Malformed mesh file {path}: {err}") from err
    if len(vertices) != n_vertices or len(triangles) != n_triangles:
        raise ValueError(f"❌ Mesh file {path} is truncated")
    if any(len(v) != 2 for v in vertices) or any(len(t) != 3 for t in triangles):
        raise ValueError(f"❌ Malformed mesh file {path}: wrong column count")
    return Mesh(np.array(vertices), np.array(triangles), boundary)


def write_mesh_file(mesh: Mesh, path: Union[str, Path]) -> Path:
    """
    Write a mesh in the format read by `read_mesh_file`

    :param mesh: the Mesh to write
    :param path: output path

    :return: the Path written
    """
    path = Path(path)
    with path.open("w", encoding="utf-8") as f:
        f.write(f"{len(mesh.vertices)} {len(mesh)}\n")
        for x, y in mesh.vertices.tolist():
            f.write(f"{x!r} {y!r}\n")
        for i, j, k in mesh.triangles.tolist():
            f.write(f"{i} {j} {k}\n")
    return path
