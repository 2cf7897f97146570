"""
Tests for the assembly module
"""

import numpy as np
import pytest

from gpwtdg.analytic import dirichlet_data, make_exact, robin_data
from gpwtdg.assembly import (
    Assembler,
    DgParameters,
    Variant,
    assemble_alternative,
    assemble_dg_gram,
    assemble_system,
    pair,
)
from gpwtdg.gpw import build_mesh_bases
from gpwtdg.mesh import EdgeKind
from gpwtdg.quadrature import QuadratureOrders
from .utils import plane_wave_coefficients, random_vectors, small_mesh

# pylint: disable=redefined-outer-name

BOUNDARIES = [EdgeKind.ROBIN, EdgeKind.DIRICHLET]


def airy_assembler(boundary, kappa=8.0, n=2, q=3, refinements=0, **kwargs):
    """Assembler for the Airy problem on the 8 triangle mesh"""
    mesh = small_mesh(boundary=boundary, refinements=refinements)
    exact = make_exact("airy", kappa)
    bases = build_mesh_bases(mesh, exact.field, kappa, n, q)
    params = kwargs.pop("params", DgParameters())
    return Assembler(mesh, bases, exact.field, kappa, params, **kwargs), exact


def boundary_data(exact, boundary):
    """Keyword arguments passing the right boundary data"""
    if boundary is EdgeKind.ROBIN:
        return {"robin": robin_data(exact)}
    return {"dirichlet": dirichlet_data(exact)}


def test_dg_parameters():
    """
    Defaults are the UWVF weights with gamma = h^3
    """
    params = DgParameters()
    assert (params.alpha, params.beta, params.delta) == (0.5, 0.5, 0.5)
    assert params.gamma(0.5) == pytest.approx(0.125)
    assert DgParameters(gamma0=0.0, gamma_exp=0.0).gamma(0.5) == 0.0


@pytest.mark.parametrize(
    "kwargs, message",
    [
        ({"alpha": 0.0}, "alpha and beta"),
        ({"beta": -1.0}, "alpha and beta"),
        ({"delta": 1.0}, "delta"),
        ({"delta": 0.0}, "delta"),
        ({"gamma0": -1.0}, "gamma0"),
    ],
)
def test_dg_parameters_invalid(kwargs, message):
    """
    Out of range weights are rejected
    """
    with pytest.raises(ValueError, match=message):
        DgParameters(**kwargs)


def test_pair():
    """
    pair conjugates the test traces
    """
    test = np.array([[1j, 2.0]])
    trial = np.array([[1.0, 1j], [3.0, 0.0]])
    block = pair(test, trial, np.array([0.5, 2.0]))
    assert block.shape == (1, 2)
    assert block[0, 0] == pytest.approx(-0.5j + 4j)
    assert block[0, 1] == pytest.approx(-1.5j)


@pytest.mark.parametrize("boundary", BOUNDARIES)
def test_system_layout(boundary):
    """
    Block sparsity follows the element adjacency
    """
    assembler, exact = airy_assembler(boundary)
    system = assembler.assemble(**boundary_data(exact, boundary))
    mesh = assembler.mesh
    assert system.p == 5
    assert system.ndof == 40
    assert system.n_elements == 8
    assert system.matrix.shape == (40, 40)
    assert system.matrix.blocksize == (5, 5)
    assert len(system.blocks) == len(mesh) + 2 * len(mesh.neighbours())
    assert system.rhs.shape == (40,)
    assert np.all(np.isfinite(system.rhs))
    assert np.linalg.norm(system.rhs) > 0
    assert system.dof(3, 2) == 17
    assert system.dof_map()[17].tolist() == [3, 2]
    dense = system.matrix.toarray()
    for (row, col), block in system.blocks.items():
        rows, cols = slice(5 * row, 5 * row + 5), slice(5 * col, 5 * col + 5)
        assert np.array_equal(dense[rows, cols], block)


@pytest.mark.parametrize("boundary", BOUNDARIES)
def test_variants_agree(boundary):
    """
    The primal form and both integrated by parts forms give the same matrix
    """
    mesh = small_mesh(cells=4, boundary=boundary)
    assert len(mesh) == 32
    kappa = 4.0
    exact = make_exact("airy", kappa)
    bases = build_mesh_bases(mesh, exact.field, kappa, 2, 3)
    orders = QuadratureOrders(3, kappa, override=20)
    params = DgParameters(alpha=0.7, beta=0.3, delta=0.4)
    matrices = [
        assemble_alternative(
            mesh, bases, exact.field, kappa, params, variant, orders=orders
        ).matrix.toarray()
        for variant in Variant
    ]
    scale = np.linalg.norm(matrices[0])
    for other in matrices[1:]:
        assert np.linalg.norm(other - matrices[0]) <= 1e-8 * scale


@pytest.mark.parametrize("boundary", BOUNDARIES)
@pytest.mark.parametrize("variant", list(Variant))
def test_plane_wave_consistency(boundary, variant):
    """
    A plane wave in the discrete space satisfies the discrete equations
    """
    kappa = 10.0
    mesh = small_mesh(boundary=boundary)
    exact = make_exact("constant", kappa)
    bases = build_mesh_bases(mesh, exact.field, kappa, 1, 1)
    system = assemble_alternative(
        mesh,
        bases,
        exact.field,
        kappa,
        DgParameters(),
        variant,
        **boundary_data(exact, boundary),
    )
    x = plane_wave_coefficients(mesh, kappa, 3)
    residual = np.linalg.norm(system.matrix @ x - system.rhs)
    assert residual <= 1e-9 * np.linalg.norm(system.rhs)


@pytest.mark.parametrize("boundary", BOUNDARIES)
@pytest.mark.parametrize("gamma0", [1.0, 0.0])
def test_coercivity_identity(boundary, gamma0):
    """
    Im(x* M x) equals the DG norm x* G x
    """
    params = DgParameters(gamma0=gamma0)
    assembler, exact = airy_assembler(boundary, params=params)
    matrix = assembler.assemble(**boundary_data(exact, boundary)).matrix.toarray()
    gram = assemble_dg_gram(
        assembler.mesh, assembler.bases, exact.field, assembler.kappa, params
    ).toarray()
    assert np.allclose(gram, gram.conj().T, rtol=0, atol=1e-12 * np.abs(gram).max())
    for x in random_vectors(matrix.shape[0], 100):
        im = (x.conj() @ matrix @ x).imag
        norm2 = (x.conj() @ gram @ x).real
        assert norm2 > 0
        assert im >= (1 - 1e-6) * norm2
        assert im == pytest.approx(norm2, rel=1e-7)


def test_stabilization_vanishes_for_plane_waves():
    """
    Exact Trefftz functions have no residual to stabilize
    """
    kappa = 6.0
    mesh = small_mesh()
    exact = make_exact("constant", kappa)
    bases = build_mesh_bases(mesh, exact.field, kappa, 2, 2)
    assembler = Assembler(mesh, bases, exact.field, kappa, DgParameters())
    for k in range(len(mesh)):
        assert np.max(np.abs(assembler.stabilization_block(k))) <= 1e-10
    stabilized = assembler.assemble(stabilized=True).matrix.toarray()
    plain = assembler.assemble(stabilized=False).matrix.toarray()
    assert np.allclose(stabilized, plain, rtol=0, atol=1e-10)


def test_stabilization_block_hermitian():
    """
    The stabilization is i times a Hermitian positive semidefinite block
    """
    assembler, _ = airy_assembler(EdgeKind.ROBIN)
    block = assembler.stabilization_block(0) / 1j
    assert np.allclose(block, block.conj().T)
    eigenvalues = np.linalg.eigvalsh(0.5 * (block + block.conj().T))
    assert eigenvalues.min() >= -1e-12 * np.abs(eigenvalues).max()


def test_threaded_assembly_identical():
    """
    Worker threads do not change the result
    """
    serial, exact = airy_assembler(EdgeKind.ROBIN, refinements=1)
    threaded, _ = airy_assembler(EdgeKind.ROBIN, refinements=1, threads=3)
    first = serial.assemble(robin=robin_data(exact))
    second = threaded.assemble(robin=robin_data(exact))
    assert np.array_equal(first.matrix.toarray(), second.matrix.toarray())
    assert np.array_equal(first.rhs, second.rhs)


def test_assemble_system_wrapper():
    """
    assemble_system is the primal form
    """
    assembler, exact = airy_assembler(EdgeKind.ROBIN)
    data = robin_data(exact)
    system = assemble_system(
        assembler.mesh,
        assembler.bases,
        exact.field,
        assembler.kappa,
        assembler.params,
        robin=data,
    )
    direct = assembler.assemble(Variant.PRIMAL, robin=data)
    assert np.array_equal(system.matrix.toarray(), direct.matrix.toarray())
    assert np.array_equal(system.rhs, direct.rhs)


def test_load_vector_ignores_other_kind():
    """
    Robin data does nothing on a Dirichlet boundary
    """
    assembler, exact = airy_assembler(EdgeKind.DIRICHLET)
    assert np.all(assembler.load_vector(robin=robin_data(exact)) == 0)
    assert np.any(assembler.load_vector(dirichlet=dirichlet_data(exact)) != 0)


def test_missing_basis():
    """
    Every element needs its basis set
    """
    mesh = small_mesh()
    exact = make_exact("airy", 5.0)
    bases = build_mesh_bases(mesh, exact.field, 5.0, 1, 2)
    with pytest.raises(ValueError, match="Missing basis"):
        Assembler(mesh, bases[:-1], exact.field, 5.0, DgParameters())
    with pytest.raises(ValueError, match="Missing basis set for element 1"):
        Assembler(mesh, [bases[0]] * len(mesh), exact.field, 5.0, DgParameters())


def test_debug_output(capsys):
    """
    debug prints the block summary
    """
    assembler, _ = airy_assembler(EdgeKind.ROBIN)
    assembler.debug = True
    assembler.matrix_blocks()
    out = capsys.readouterr().out
    assert "'blocks': 24" in out


def test_write_system(tmp_path):
    """
    The matrix dump has one line per stored entry and a dof sidecar
    """
    assembler, exact = airy_assembler(EdgeKind.ROBIN, n=1, q=2)
    system = assembler.assemble(robin=robin_data(exact))
    matrix_path, dof_path = system.write(tmp_path / "system.txt")
    lines = matrix_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == f"# 24 24 {system.matrix.tocoo().nnz}"
    assert len(lines) == 1 + system.matrix.tocoo().nnz
    row, col, re, im = lines[1].split()
    assert (int(row), int(col)) == (0, 0)
    assert complex(float(re), float(im)) == system.matrix.toarray()[0, 0]
    dofs = dof_path.read_text(encoding="utf-8").splitlines()
    assert dof_path.name == "system.txt.dofs"
    assert len(dofs) == 25
    assert dofs[-1] == "23 7 2"
