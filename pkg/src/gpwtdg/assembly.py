"""
Assembly of the stabilized Trefftz DG system

Rows of the matrix are test functions (K, l) and columns trial functions
(K', l'), so M[(K, l), (K', l')] = B_h(phi_{K', l'}, phi_{K, l}) with the
second argument conjugated. Interior edges use n = n+ and jumps
[[u]] = u+ - u-, averages {u} = (u+ + u-) / 2.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from pprint import pprint
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import bsr_matrix

from .epsilon import CoefficientField
from .gpw import GpwBasisSet
from .mesh import Edge, EdgeKind, Mesh
from .quadrature import QuadratureOrders, gauss_edge, triangle_area

BoundaryData = Callable[[np.ndarray, np.ndarray], np.ndarray]
BlockKey = Tuple[int, int]


@dataclass(frozen=True)
class DgParameters:
    """
    Flux and stabilization weights

    - alpha: value jump penalty on interior and Dirichlet edges
    - beta: normal derivative jump penalty on interior edges
    - delta: Robin weight, strictly between 0 and 1
    - gamma0, gamma_exp: stabilization gamma_K = gamma0 h_K^gamma_exp

    The defaults are the classical UWVF choice with gamma = h^3.
    """

    alpha: float = 0.5
    beta: float = 0.5
    delta: float = 0.5
    gamma0: float = 1.0
    gamma_exp: float = 3.0

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError(
                f"❌ alpha and beta must be positive, got {self.alpha}, {self.beta}"
            )
        if not 0 < self.delta < 1:
            raise ValueError(f"❌ delta must lie in (0, 1), got {self.delta}")
        if self.gamma0 < 0 or self.gamma_exp < 0:
            raise ValueError(
                f"❌ gamma0 and its exponent must be non-negative, got "
                f"{self.gamma0}, {self.gamma_exp}"
            )

    def gamma(self, h: float) -> float:
        """
        :param h: element diameter h_K

        :return: stabilization weight gamma_K
        """
        return self.gamma0 * h**self.gamma_exp


class Variant(Enum):
    """Equivalent ways of writing the sesquilinear form"""

    PRIMAL = "primal"
    ADJOINT = "adjoint"
    PRIMAL_IBP = "primal-ibp"


@dataclass(frozen=True)
class AssembledSystem:
    """
    Block sparse system M x = b

    - matrix: complex scipy bsr_matrix with p x p blocks
    - rhs: complex right hand side
    - p: directions per element
    - blocks: the p x p blocks keyed by (test element, trial element)
    """

    matrix: bsr_matrix
    rhs: np.ndarray
    p: int
    blocks: Dict[BlockKey, np.ndarray]

    @property
    def ndof(self) -> int:
        """Number of unknowns"""
        return self.matrix.shape[0]

    @property
    def n_elements(self) -> int:
        """Number of elements"""
        return self.ndof // self.p

    def dof(self, element: int, direction: int) -> int:
        """
        :return: global index of basis function (element, direction)
        """
        return element * self.p + direction

    def dof_map(self) -> np.ndarray:
        """
        :return: (ndof, 2) array of (element, direction) per global index
        """
        index = np.arange(self.ndof)
        return np.column_stack([index // self.p, index % self.p])

    def write(self, path: Union[str, Path]) -> Tuple[Path, Path]:
        """
        Dump the matrix as ``row col re im`` lines with a sidecar dof map

        :param path: matrix output path, the dof map goes to ``<path>.dofs``

        :return: the two Paths written
        """
        path = Path(path)
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with path.open("w", encoding="utf-8") as f:
            f.write(f"# {self.ndof} {self.ndof} {len(order)}\n")
            for m in order:
                value = coo.data[m]
                f.write(f"{coo.row[m]} {coo.col[m]} {float(value.real)!r} {float(value.imag)!r}\n")
        dofs = path.with_name(path.name + ".dofs")
        with dofs.open("w", encoding="utf-8") as f:
            f.write("# dof element direction\n")
            for m, (element, direction) in enumerate(self.dof_map().tolist()):
                f.write(f"{m} {element} {direction}\n")
        return path, dofs


def pair(test: np.ndarray, trial: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """
    Weighted sesquilinear pairing of two traces

    :param test: (p, n) test traces, conjugated
    :param trial: (p', n) trial traces
    :param weights: (n,) quadrature weights

    :return: (p, p') block sum_q w_q conj(test_l) trial_m
    """
    return np.einsum("lq,q,mq->lm", test.conj(), weights, trial)


@dataclass(frozen=True)
class _Side:
    """Traces of one element's basis on an edge, n = n+"""

    values: np.ndarray
    dn: np.ndarray
    sign: int

    @property
    def jump(self) -> np.ndarray:
        return self.sign * self.values

    @property
    def avg(self) -> np.ndarray:
        return 0.5 * self.values

    @property
    def jump_dn(self) -> np.ndarray:
        return self.sign * self.dn

    @property
    def avg_dn(self) -> np.ndarray:
        return 0.5 * self.dn


def blocks_to_bsr(blocks: Dict[BlockKey, np.ndarray], n_elements: int, p: int):
    """
    :return: bsr_matrix holding the blocks, stored in row major block order
    """
    keys = sorted(blocks)
    rows = np.array([k[0] for k in keys], dtype=int)
    cols = np.array([k[1] for k in keys], dtype=int)
    indptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=n_elements))])
    data = (
        np.stack([blocks[k] for k in keys])
        if keys
        else np.zeros((0, p, p), dtype=complex)
    )
    return bsr_matrix((data, cols, indptr), shape=(n_elements * p, n_elements * p))


def element_quadrature(mesh: Mesh, orders: QuadratureOrders, k: int, extra: int = 0):
    """
    Quadrature points of a triangle

    :param mesh: the Mesh
    :param orders: the QuadratureOrders
    :param k: element index
    :param extra: (optional) degrees added to the element rule

    :return: (points (n, 2), weights (n,)) with weights summing to the area
    """
    vertices = mesh.element_vertices(k)
    rule = orders.element_rule(mesh.diameters[k], extra)
    return rule.points(vertices), rule.weights * triangle_area(vertices)


def edge_quadrature(mesh: Mesh, orders: QuadratureOrders, edge: Edge, extra: int = 0):
    """
    Quadrature points of an edge, sized by the larger neighbour

    :param mesh: the Mesh
    :param orders: the QuadratureOrders
    :param edge: the Edge
    :param extra: (optional) points added to the edge rule

    :return: (points (n, 2), weights (n,)) with weights summing to the length
    """
    h = mesh.diameters[edge.plus]
    if edge.minus is not None:
        h = max(h, mesh.diameters[edge.minus])
    start, end = mesh.edge_points(edge)
    rule = orders.edge_rule(h)
    if extra:
        rule = gauss_edge(rule.count + extra)
    points = start + np.outer(rule.nodes, end - start)
    return points, rule.weights * edge.length


class Assembler:
    """
    Assemble B_h, F and the DG Gram matrix over GPW bases

    :param mesh: the Mesh
    :param bases: one GpwBasisSet per triangle, in element order
    :param field: the coefficient field epsilon
    :param kappa: wavenumber
    :param params: the DgParameters
    :param orders: (optional) QuadratureOrders, defaults from the basis q
    :param threads: worker threads, 1 runs everything in order on the caller

    :raises ValueError: If a basis set is missing or inconsistent
    """

    def __init__(
        self,
        mesh: Mesh,
        bases: Sequence[GpwBasisSet],
        field: CoefficientField,
        kappa: float,
        params: DgParameters,
        orders: Optional[QuadratureOrders] = None,
        threads: int = 1,
    ):
        if len(bases) != len(mesh):
            raise ValueError(
                f"❌ Missing basis sets: {len(bases)} for {len(mesh)} elements"
            )
        for k, basis in enumerate(bases):
            if basis is None or basis.element != k:
                raise ValueError(f"❌ Missing basis set for element {k}")
        sizes = {len(basis) for basis in bases}
        if len(sizes) != 1:
            raise ValueError(f"❌ Basis sets disagree on p: {sorted(sizes)}")
        self.mesh = mesh
        self.bases = list(bases)
        self.field = field
        self.kappa = float(kappa)
        self.params = params
        self.p = sizes.pop()
        self.orders = orders or QuadratureOrders(bases[0].q, self.kappa)
        self.threads = max(1, int(threads))
        self.debug = False

    def _map(self, task: Callable, items: Iterable) -> List:
        if self.threads == 1:
            return [task(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(task, items))

    def element_quadrature(self, k: int, extra: int = 0):
        """Quadrature points and weights of element k"""
        return element_quadrature(self.mesh, self.orders, k, extra)

    def edge_quadrature(self, edge: Edge, extra: int = 0):
        """Quadrature points and weights of an edge"""
        return edge_quadrature(self.mesh, self.orders, edge, extra)

    def _side(self, k: int, points: np.ndarray, normal: np.ndarray, sign: int) -> _Side:
        values, gradients, _ = self.bases[k].evaluate(points)
        return _Side(values, gradients @ normal, sign)

    def _element_traces(self, k: int):
        points, weights = self.element_quadrature(k)
        eps = self.field.value(points[:, 0], points[:, 1])
        values, gradients, residuals = self.bases[k].helmholtz(points, eps)
        return weights, eps, values, gradients, residuals

    def volume_block(
        self, k: int, variant: Variant, stabilized: bool = True
    ) -> np.ndarray:
        """
        Element contribution to the diagonal block (k, k)

        :param k: element index
        :param variant: the Variant of the form
        :param stabilized: include the (i / kappa^2) gamma residual term

        :return: p x p block
        """
        weights, eps, values, gradients, residuals = self._element_traces(k)
        k2 = self.kappa**2
        if variant is Variant.PRIMAL:
            block = np.einsum("lqd,q,mqd->lm", gradients.conj(), weights, gradients)
            block -= pair(values, values, weights * k2 * eps)
        elif variant is Variant.ADJOINT:
            block = -pair(residuals, values, weights)
        else:
            block = -pair(values, residuals, weights)
        if stabilized:
            block = block + self.stabilization_block(k, weights, residuals)
        return block

    def stabilization_block(self, k: int, weights=None, residuals=None) -> np.ndarray:
        """
        (i / kappa^2) gamma_K times the Gram matrix of the Helmholtz residuals

        :param k: element index
        :param weights: (optional) element quadrature weights
        :param residuals: (optional) (p, n) residuals at the quadrature points

        :return: p x p block
        """
        if residuals is None:
            weights, _, _, _, residuals = self._element_traces(k)
        gamma = self.params.gamma(self.mesh.diameters[k])
        return (1j * gamma / self.kappa**2) * pair(residuals, residuals, weights)

    def interior_blocks(
        self, edge: Edge, variant: Variant
    ) -> Dict[BlockKey, np.ndarray]:
        """
        Coupling blocks of an interior edge

        :param edge: the interior Edge
        :param variant: the Variant of the form

        :return: the four blocks keyed (test element, trial element)
        """
        points, weights = self.edge_quadrature(edge)
        normal = np.asarray(edge.normal)
        sides = {
            edge.plus: self._side(edge.plus, points, normal, 1),
            edge.minus: self._side(edge.minus, points, normal, -1),
        }
        ik = 1j * self.kappa
        alpha, beta = self.params.alpha, self.params.beta
        blocks = {}
        for kt, t in sides.items():
            for ks, s in sides.items():
                if variant is Variant.PRIMAL:
                    block = -pair(t.jump, s.avg_dn, weights) - pair(
                        t.avg_dn, s.jump, weights
                    )
                elif variant is Variant.ADJOINT:
                    block = pair(t.jump_dn, s.avg, weights) - pair(
                        t.jump, s.avg_dn, weights
                    )
                else:
                    block = pair(t.avg, s.jump_dn, weights) - pair(
                        t.avg_dn, s.jump, weights
                    )
                block -= (beta / ik) * pair(t.jump_dn, s.jump_dn, weights)
                block += ik * alpha * pair(t.jump, s.jump, weights)
                blocks[(kt, ks)] = block
        return blocks

    def boundary_block(self, edge: Edge, variant: Variant) -> np.ndarray:
        """
        Diagonal block contributed by a Robin or Dirichlet edge

        :param edge: the boundary Edge
        :param variant: the Variant of the form

        :return: p x p block for (K+, K+)
        """
        points, weights = self.edge_quadrature(edge)
        side = self._side(edge.plus, points, np.asarray(edge.normal), 1)
        u, d = side.values, side.dn
        ik = 1j * self.kappa
        if edge.kind is EdgeKind.ROBIN:
            delta = self.params.delta
            block = ik * (1 - delta) * pair(u, u, weights) - (delta / ik) * pair(
                d, d, weights
            )
            if variant is Variant.PRIMAL:
                block -= delta * (pair(d, u, weights) + pair(u, d, weights))
            elif variant is Variant.ADJOINT:
                block += (1 - delta) * pair(d, u, weights) - delta * pair(u, d, weights)
            else:
                block += (1 - delta) * pair(u, d, weights) - delta * pair(d, u, weights)
            return block
        block = ik * self.params.alpha * pair(u, u, weights)
        if variant is not Variant.ADJOINT:
            block -= pair(d, u, weights)
        if variant is not Variant.PRIMAL_IBP:
            block -= pair(u, d, weights)
        return block

    def _collect(self, element_task: Callable, edge_task: Callable):
        element_parts = self._map(element_task, range(len(self.mesh)))
        edge_parts = self._map(edge_task, self.mesh.edges)
        blocks: Dict[BlockKey, np.ndarray] = {}
        for part in element_parts + edge_parts:
            for key, block in part.items():
                if not np.all(np.isfinite(block)):
                    raise ValueError(f"❌ Non-finite quadrature result in block {key}")
                if key in blocks:
                    blocks[key] = blocks[key] + block
                else:
                    blocks[key] = block
        if self.debug:
            pprint(
                {
                    "elements": len(self.mesh),
                    "edges": len(self.mesh.edges),
                    "blocks": len(blocks),
                    "edge points": sorted(
                        {self.orders.edge_points(h) for h in self.mesh.diameters}
                    ),
                }
            )
        return blocks

    def matrix_blocks(
        self, variant: Variant = Variant.PRIMAL, stabilized: bool = True
    ) -> Dict[BlockKey, np.ndarray]:
        """
        All blocks of B_h

        :param variant: the Variant of the form
        :param stabilized: include the residual stabilization

        :return: blocks keyed (test element, trial element)
        """

        def element_task(k: int):
            return {(k, k): self.volume_block(k, variant, stabilized)}

        def edge_task(edge: Edge):
            if edge.kind is EdgeKind.INTERIOR:
                return self.interior_blocks(edge, variant)
            return {(edge.plus, edge.plus): self.boundary_block(edge, variant)}

        return self._collect(element_task, edge_task)

    def gram_blocks(self) -> Dict[BlockKey, np.ndarray]:
        """
        Blocks of the Hermitian matrix G with x* G x = ||u_x||_DG^2
        """
        kappa = self.kappa
        alpha, beta, delta = self.params.alpha, self.params.beta, self.params.delta

        def element_task(k: int):
            weights, _, _, _, residuals = self._element_traces(k)
            gamma = self.params.gamma(self.mesh.diameters[k])
            return {(k, k): (gamma / kappa**2) * pair(residuals, residuals, weights)}

        def edge_task(edge: Edge):
            points, weights = self.edge_quadrature(edge)
            normal = np.asarray(edge.normal)
            if edge.kind is EdgeKind.INTERIOR:
                sides = {
                    edge.plus: self._side(edge.plus, points, normal, 1),
                    edge.minus: self._side(edge.minus, points, normal, -1),
                }
                return {
                    (kt, ks): (beta / kappa) * pair(t.jump_dn, s.jump_dn, weights)
                    + kappa * alpha * pair(t.jump, s.jump, weights)
                    for kt, t in sides.items()
                    for ks, s in sides.items()
                }
            side = self._side(edge.plus, points, normal, 1)
            if edge.kind is EdgeKind.ROBIN:
                block = (delta / kappa) * pair(side.dn, side.dn, weights) + kappa * (
                    1 - delta
                ) * pair(side.values, side.values, weights)
            else:
                block = kappa * alpha * pair(side.values, side.values, weights)
            return {(edge.plus, edge.plus): block}

        return self._collect(element_task, edge_task)

    def load_vector(
        self,
        robin: Optional[BoundaryData] = None,
        dirichlet: Optional[BoundaryData] = None,
    ) -> np.ndarray:
        """
        Right hand side F(phi_{K, l})

        Robin data g enters as du/dn + i kappa u = i kappa g, Dirichlet data as
        u = g_D. Both are functions of (points (n, 2), normals (n, 2)).

        :param robin: (optional) impedance data on Robin edges
        :param dirichlet: (optional) Dirichlet data on Dirichlet edges

        :return: complex vector of length p * elements
        """
        rhs = np.zeros((len(self.mesh), self.p), dtype=complex)
        ik = 1j * self.kappa
        for edge in self.mesh.edges:
            if edge.kind is EdgeKind.ROBIN and robin is not None:
                data, delta = robin, self.params.delta
                value_weight, dn_weight = ik * (1 - delta), -delta
            elif edge.kind is EdgeKind.DIRICHLET and dirichlet is not None:
                data = dirichlet
                value_weight, dn_weight = ik * self.params.alpha, -1.0
            else:
                continue
            points, weights = self.edge_quadrature(edge)
            normal = np.asarray(edge.normal)
            side = self._side(edge.plus, points, normal, 1)
            normals = np.tile(normal, (len(points), 1))
            g = np.asarray(data(points, normals), dtype=complex)
            rhs[edge.plus] += side.values.conj() @ (weights * value_weight * g)
            rhs[edge.plus] += side.dn.conj() @ (weights * dn_weight * g)
        if not np.all(np.isfinite(rhs)):
            raise ValueError("❌ Non-finite quadrature result in the load vector")
        return rhs.ravel()

    def assemble(
        self,
        variant: Variant = Variant.PRIMAL,
        robin: Optional[BoundaryData] = None,
        dirichlet: Optional[BoundaryData] = None,
        stabilized: bool = True,
    ) -> AssembledSystem:
        """
        Assemble matrix and right hand side

        :param variant: the Variant of the form
        :param robin: (optional) impedance data
        :param dirichlet: (optional) Dirichlet data
        :param stabilized: include the residual stabilization

        :return: the AssembledSystem
        """
        blocks = self.matrix_blocks(variant, stabilized)
        matrix = blocks_to_bsr(blocks, len(self.mesh), self.p)
        rhs = self.load_vector(robin, dirichlet)
        return AssembledSystem(matrix, rhs, self.p, blocks)


def assemble_system(
    mesh: Mesh,
    bases: Sequence[GpwBasisSet],
    field: CoefficientField,
    kappa: float,
    params: DgParameters,
    robin: Optional[BoundaryData] = None,
    dirichlet: Optional[BoundaryData] = None,
    orders: Optional[QuadratureOrders] = None,
    threads: int = 1,
) -> AssembledSystem:
    """
    Assemble B_h and F in the primal form

    :return: the AssembledSystem
    """
    assembler = Assembler(mesh, bases, field, kappa, params, orders, threads)
    return assembler.assemble(Variant.PRIMAL, robin, dirichlet)


def assemble_alternative(
    mesh: Mesh,
    bases: Sequence[GpwBasisSet],
    field: CoefficientField,
    kappa: float,
    params: DgParameters,
    variant: Variant,
    robin: Optional[BoundaryData] = None,
    dirichlet: Optional[BoundaryData] = None,
    orders: Optional[QuadratureOrders] = None,
    threads: int = 1,
) -> AssembledSystem:
    """
    Assemble B_h and F through one of the integrated by parts forms

    :param variant: Variant.ADJOINT or Variant.PRIMAL_IBP (PRIMAL also accepted)

    :return: the AssembledSystem
    """
    assembler = Assembler(mesh, bases, field, kappa, params, orders, threads)
    return assembler.assemble(variant, robin, dirichlet)


def assemble_dg_gram(
    mesh: Mesh,
    bases: Sequence[GpwBasisSet],
    field: CoefficientField,
    kappa: float,
    params: DgParameters,
    orders: Optional[QuadratureOrders] = None,
    threads: int = 1,
) -> bsr_matrix:
    """
    Gram matrix of the DG norm over the GPW basis

    :return: Hermitian positive semidefinite bsr_matrix
    """
    assembler = Assembler(mesh, bases, field, kappa, params, orders, threads)
    return blocks_to_bsr(assembler.gram_blocks(), len(mesh), assembler.p)
