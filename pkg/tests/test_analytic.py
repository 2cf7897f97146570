"""
Tests for special functions and exact solutions
"""

import numpy as np
import pytest
from scipy.special import gamma

from gpwtdg.analytic import (
    airy_ai,
    dirichlet_data,
    finite_difference_residual,
    impedance_trace,
    make_airy,
    make_exact,
    make_plane_wave,
    make_weber,
    robin_data,
    weber_pe,
    weber_po,
)


def sample_points(count=40, seed=5):
    """Reproducible points in [-1, 1]^2"""
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, (count, 2))


def test_airy_at_zero():
    """
    Ai(0) and Ai'(0) from their closed forms
    """
    ai, aip = airy_ai(0.0)
    expected_ai = 1.0 / (3.0 ** (2.0 / 3.0) * gamma(2.0 / 3.0))
    expected_aip = -1.0 / (3.0 ** (1.0 / 3.0) * gamma(1.0 / 3.0))
    assert ai == pytest.approx(expected_ai, abs=1e-10)
    assert aip == pytest.approx(expected_aip, abs=1e-10)


def maclaurin_airy(t, terms=40):
    """Independent power series for Ai, valid for moderate |t|"""
    c1, aip0 = airy_ai(0.0)
    c2 = -aip0
    f = np.ones_like(t)
    g = t.copy()
    f_sum, g_sum = f.copy(), g.copy()
    t3 = t**3
    for k in range(terms):
        f = f * t3 / ((3 * k + 2) * (3 * k + 3))
        g = g * t3 / ((3 * k + 3) * (3 * k + 4))
        f_sum += f
        g_sum += g
    return c1 * f_sum - c2 * g_sum


def test_airy_series():
    """
    Ai agrees with its Maclaurin series near the origin
    """
    t = np.linspace(-3.0, 3.0, 25)
    ai, _ = airy_ai(t)
    assert np.allclose(ai, maclaurin_airy(t), rtol=0, atol=1e-10)


def test_airy_asymptotics():
    """
    Ai follows its asymptotic forms far from the origin
    """
    t = np.array([15.0, 20.0, 25.0])
    zeta = 2.0 / 3.0 * t**1.5
    decaying = np.exp(-zeta) / (2 * np.sqrt(np.pi) * t**0.25) * (1 - 5 / (72 * zeta))
    ai, _ = airy_ai(t)
    assert np.allclose(ai, decaying, rtol=1e-4, atol=0)
    oscillating = np.sin(zeta + np.pi / 4) / (np.sqrt(np.pi) * t**0.25)
    ai, _ = airy_ai(-t)
    assert np.allclose(ai, oscillating, rtol=0, atol=1e-3)
    ai, _ = airy_ai(np.array([1.0, 2.0, 5.0]))
    assert ai[2] < ai[1] < ai[0]


def test_airy_range():
    """
    Arguments beyond 30 in magnitude are rejected
    """
    ai, _ = airy_ai(np.array([-30.0, 30.0]))
    assert np.all(np.isfinite(ai))
    with pytest.raises(ValueError, match="Airy argument"):
        airy_ai(np.array([0.0, -31.0]))


@pytest.mark.parametrize("a", [0.5, 5.0])
def test_weber_wronskian(a):
    """
    w_o w_e' - w_o' w_e stays -1 across the range
    """
    s = np.linspace(-10.0, 10.0, 81)
    wo, dwo = weber_po(s, a)
    we, dwe = weber_pe(s, a)
    wronskian = wo * dwe - dwo * we
    scale = np.maximum(1.0, np.abs(wo * dwe) + np.abs(dwo * we))
    assert np.all(np.abs(wronskian + 1.0) <= 1e-9 * scale)


def test_weber_initial_values_and_parity():
    """
    P_o is odd with P_o'(0) = 1, P_e is even with P_e(0) = 1
    """
    wo, dwo = weber_po(np.array([0.0]), 5.0)
    we, dwe = weber_pe(np.array([0.0]), 5.0)
    assert (wo[0], dwo[0]) == pytest.approx((0.0, 1.0))
    assert (we[0], dwe[0]) == pytest.approx((1.0, 0.0))

    s = np.array([0.3, 2.5, 7.0])
    wo_plus, dwo_plus = weber_po(s, 5.0)
    wo_minus, dwo_minus = weber_po(-s, 5.0)
    assert np.allclose(wo_minus, -wo_plus)
    assert np.allclose(dwo_minus, dwo_plus)
    we_plus, dwe_plus = weber_pe(s, 5.0)
    we_minus, dwe_minus = weber_pe(-s, 5.0)
    assert np.allclose(we_minus, we_plus)
    assert np.allclose(dwe_minus, -dwe_plus)


def test_weber_equation():
    """
    The dense solution satisfies w'' + (s^2 / 4 - a) w = 0
    """
    a = 0.5
    s = np.linspace(-6.0, 6.0, 13)
    step = 1e-4
    w, _ = weber_po(s, a)
    _, dw_plus = weber_po(s + step, a)
    _, dw_minus = weber_po(s - step, a)
    second = (dw_plus - dw_minus) / (2 * step)
    assert np.allclose(second + (s * s / 4 - a) * w, 0.0, atol=1e-5)


def test_weber_tolerance():
    """
    Tightening the integration tolerance leaves the solution unchanged
    """
    s = np.linspace(-10.0, 10.0, 41)
    w, dw = weber_po(s, 5.0)
    w_fine, dw_fine = weber_po(s, 5.0, rtol=5e-13)
    assert np.all(np.abs(w - w_fine) <= 1e-9 * np.maximum(1.0, np.abs(w)))
    assert np.all(np.abs(dw - dw_fine) <= 1e-9 * np.maximum(1.0, np.abs(dw)))


def test_weber_range():
    """
    Arguments beyond 10 in magnitude are rejected
    """
    with pytest.raises(ValueError, match="Weber argument"):
        weber_po(np.array([10.5]), 5.0)


@pytest.mark.parametrize(
    "exact",
    [make_airy(15.0), make_weber(50.0, 5.0), make_plane_wave(10.0, 0.4)],
    ids=["airy", "weber", "plane"],
)
def test_pde_residual(exact):
    """
    Exact solutions solve the Helmholtz equation
    """
    residual = finite_difference_residual(exact, sample_points())
    assert np.max(residual) <= 1e-6


def test_gradients_match_differences():
    """
    Analytic gradients agree with central differences
    """
    step = 1e-5
    points = sample_points(10)
    for exact in (make_airy(15.0), make_weber(20.0), make_plane_wave(5.0, 1.0)):
        x, y = points[:, 0], points[:, 1]
        gradient = exact.gradient(x, y)
        assert gradient.shape == (10, 2)
        assert gradient.dtype == complex
        dx = (exact.value(x + step, y) - exact.value(x - step, y)) / (2 * step)
        dy = (exact.value(x, y + step) - exact.value(x, y - step)) / (2 * step)
        scale = np.max(np.abs(gradient))
        assert np.allclose(gradient[:, 0], dx, atol=1e-6 * scale)
        assert np.allclose(gradient[:, 1], dy, atol=1e-6 * scale)


def test_make_exact():
    """
    Problems by name
    """
    assert make_exact("airy", 15.0).name == "airy"
    weber = make_exact("weber", 50.0, a=3.0)
    assert weber.name == "weber:3"
    assert weber.field.value(0.0, 0.0) == pytest.approx(-3.0 / 50.0)
    plane = make_exact("constant", 4.0, theta=0.5)
    assert plane.value(np.array([0.0]), np.array([0.0]))[0] == pytest.approx(1.0)
    with pytest.raises(ValueError, match="Unknown problem"):
        make_exact("bessel", 1.0)
    with pytest.raises(ValueError, match="Wavenumber"):
        make_exact("airy", 0.0)


def test_impedance_trace():
    """
    g = u + du/dn / (i kappa) for a plane wave travelling in x
    """
    kappa = 3.0
    exact = make_plane_wave(kappa, 0.0)
    points = np.array([[1.0, 0.2], [1.0, -0.5]])
    u = exact.value(points[:, 0], points[:, 1])
    outgoing = impedance_trace(exact, points, np.array([1.0, 0.0]), kappa)
    incoming = impedance_trace(exact, points, np.array([-1.0, 0.0]), kappa)
    assert np.allclose(outgoing, 2 * u)
    assert np.allclose(incoming, 0.0)
    data = robin_data(exact)
    assert np.allclose(data(points, np.tile([1.0, 0.0], (2, 1))), 2 * u)


def test_dirichlet_data():
    """
    Dirichlet data is the trace of u
    """
    exact = make_airy(15.0)
    points = sample_points(5)
    values = dirichlet_data(exact)(points, np.zeros_like(points))
    assert np.allclose(values, exact.value(points[:, 0], points[:, 1]))
