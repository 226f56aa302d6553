import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hartree.grid import (GridMismatchError, WaveFunction, apply_kinetic_multiplier,
                          boundary_mass, gaussian, inner_product, l2_norm, make_grid,
                          second_moment, spectral_derivative)

from oracles import centered_second_difference, gaussian_density, quad


def random_smooth(grid, seed, modes=12):
    rng = np.random.default_rng(seed)
    m = np.arange(-modes, modes + 1)
    c = rng.normal(size=m.size) + 1j * rng.normal(size=m.size)
    c /= (1 + np.abs(m)) ** 2
    x = grid.points
    return WaveFunction(grid, np.exp(2j * np.pi * np.outer(x - grid.x_min, m) / grid.length) @ c)


def test_make_grid_basic():
    g = make_grid(8, -1, 1)
    assert g.dx == 0.25
    assert g.points[0] == -1
    assert np.all(np.diff(g.points) > 0)
    np.testing.assert_allclose(np.sort(g.wavenumbers), np.pi * np.arange(-4, 4), atol=1e-14)


@pytest.mark.parametrize("args", [(7, -1, 1), (12, -1, 1), (4, -1, 1), (8, 1, 1), (8, 2, -1)])
def test_make_grid_rejects(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_inner_product_constant():
    g = make_grid(8, -1, 1)
    one = WaveFunction(g, np.ones(8))
    assert inner_product(one, one) == pytest.approx(2.0, abs=1e-15)
    assert l2_norm(one) == pytest.approx(np.sqrt(2.0), abs=1e-15)


def test_inner_product_even_odd():
    g = make_grid(64, -1, 1)
    x = g.points
    # symmetric grid about 0 needs x -> -x to map grid points to grid points
    f = WaveFunction(g, np.cos(np.pi * x) + x**2)
    h = WaveFunction(g, np.sin(np.pi * x))
    assert abs(inner_product(f, h)) < 1e-14


def test_gaussian_normalization_against_quadrature():
    g = make_grid(512, -10, 10)
    x = g.points
    phi = WaveFunction(g, np.pi ** -0.25 * np.exp(-x**2 / 2))
    oracle = quad(gaussian_density)
    assert inner_product(phi, phi).real == pytest.approx(oracle, abs=1e-10)
    assert l2_norm(phi) == pytest.approx(1.0, abs=1e-10)


def test_grid_mismatch():
    a = WaveFunction(make_grid(8, -1, 1), np.ones(8))
    b = WaveFunction(make_grid(8, -2, 2), np.ones(8))
    with pytest.raises(GridMismatchError):
        inner_product(a, b)


def test_zero_function():
    g = make_grid(16, 0, 1)
    z = WaveFunction(g, np.zeros(16))
    assert l2_norm(z) == 0.0
    assert second_moment(z) == 0.0


def test_rejects_nonfinite():
    g = make_grid(8, 0, 1)
    with pytest.raises(FloatingPointError):
        WaveFunction(g, np.array([np.nan] + [0.0] * 7))


def test_kinetic_identity():
    g = make_grid(128, -5, 5)
    f = random_smooth(g, 1)
    out = apply_kinetic_multiplier(f, lambda k: np.ones_like(k))
    assert np.abs(out.values - f.values).max() < 1e-14 * np.abs(f.values).max() * 10


def test_kinetic_unimodular_preserves_norm():
    g = make_grid(128, -5, 5)
    f = random_smooth(g, 2)
    dt = 0.37
    out = apply_kinetic_multiplier(f, lambda k: np.exp(-1j * dt * k**2 / 2))
    assert l2_norm(out) == pytest.approx(l2_norm(f), rel=1e-13)


def test_second_derivative_of_sine():
    g = make_grid(256, -1, 1)
    x = g.points
    f = WaveFunction(g, np.sin(np.pi * x))
    out = apply_kinetic_multiplier(f, lambda k: -k**2)
    exact = -np.pi**2 * np.sin(np.pi * x)
    assert np.abs(out.values - exact).max() < 1e-10
    # cross-check with centred differences, accurate to O(dx^2)
    fd = centered_second_difference(np.sin(np.pi * x), g.dx)
    assert np.abs(out.values.real - fd).max() < np.pi**4 * g.dx**2 / 12 * 1.01


def test_second_moment_gaussian():
    g = make_grid(512, -10, 10)
    phi = WaveFunction(g, np.pi ** -0.25 * np.exp(-g.points**2 / 2))
    oracle = quad(lambda x: x**2 * gaussian_density(x))
    assert oracle == pytest.approx(0.5, abs=1e-12)
    assert second_moment(phi) == pytest.approx(oracle, abs=1e-8)


def test_second_moment_shifted_gaussian():
    g = make_grid(512, -12, 12)
    a = 1.7
    phi = WaveFunction(g, np.pi ** -0.25 * np.exp(-(g.points - a) ** 2 / 2))
    oracle = quad(lambda x: x**2 * gaussian_density(x, a))
    assert oracle == pytest.approx(a**2 + 0.5, abs=1e-10)
    assert second_moment(phi) == pytest.approx(oracle, abs=1e-6)


def test_gaussian_helper_is_normalized_and_centered():
    g = make_grid(256, -10, 10)
    phi = gaussian(g, center=1.0, width=0.8, momentum=2.0)
    assert l2_norm(phi) == pytest.approx(1.0, abs=1e-14)
    assert boundary_mass(phi) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_parseval(seed):
    g = make_grid(128, -3, 5)
    f = random_smooth(g, seed)
    F = np.fft.fft(f.values)
    spectral = np.sum(np.abs(F) ** 2) / g.n * g.dx
    assert l2_norm(f) ** 2 == pytest.approx(spectral, rel=1e-12)


def test_unimodular_multiplier_100_states():
    g = make_grid(256, -8, 8)
    rng = np.random.default_rng(7)
    for seed in range(100):
        f = random_smooth(g, seed)
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, g.n))
        out = apply_kinetic_multiplier(f, phases)
        assert l2_norm(out) == pytest.approx(l2_norm(f), rel=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_hermitian_symmetry(s1, s2):
    g = make_grid(64, -2, 2)
    f, h = random_smooth(g, s1), random_smooth(g, s2)
    a, b = inner_product(f, h), inner_product(h, f)
    assert abs(a - b.conjugate()) <= 1e-14 * max(1.0, abs(a))


@pytest.mark.parametrize("order", [1, 2, 3])
def test_spectral_derivative_trig_polynomial(order):
    g = make_grid(64, 0, 2 * np.pi)
    x = g.points
    f = 0.3 + np.cos(3 * x) - 2 * np.sin(7 * x) + 0.5 * np.cos(11 * x)
    exact = {
        1: -3 * np.sin(3 * x) - 14 * np.cos(7 * x) - 5.5 * np.sin(11 * x),
        2: -9 * np.cos(3 * x) + 98 * np.sin(7 * x) - 60.5 * np.cos(11 * x),
        3: 27 * np.sin(3 * x) + 686 * np.cos(7 * x) + 665.5 * np.sin(11 * x),
    }[order]
    d = spectral_derivative(f, g, order)
    assert np.abs(d - exact).max() <= 1e-12 * np.abs(exact).max()
