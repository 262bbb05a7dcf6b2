import math

import numpy as np
import pytest
from scipy import integrate, special

from quadrature import (
    SURFACE_MEASURE,
    QuadratureError,
    RadialGrid,
    SphereGrid,
    integrate_octave,
    integrate_octaves,
    integrate_rn_polar,
    integrate_sphere,
    integrate_to_origin,
    octave_of,
    radial_octave,
)


GRID = RadialGrid(k_min=-2, k_max=2, nodes_per_octave=16)


def test_octave_of_uses_half_open_octaves():
    assert octave_of(1.0) == 0
    assert octave_of(1.5) == 1
    assert octave_of(2.0) == 1
    assert octave_of(0.5) == -1


@pytest.mark.parametrize(
    "g, k, expected",
    [
        (lambda t: 1.0 / t, 1, math.log(2.0)),
        (lambda t: np.ones_like(t), 0, 0.5),
        (lambda t: t**2, 2, 56.0 / 3.0),
    ],
)
def test_integrate_octave_matches_antiderivatives(g, k, expected):
    result = integrate_octave(g, k, GRID)
    np.testing.assert_allclose(result.value, expected, rtol=1e-12)
    assert result.error < 1e-10


def test_octave_additivity():
    g = lambda t: np.sin(t) + t**0.5
    joint = integrate_octaves(g, GRID.with_range(0, 1)).value
    np.testing.assert_allclose(joint, integrate_octave(g, 0, GRID).value + integrate_octave(g, 1, GRID).value, rtol=1e-12)


def test_breakpoints_keep_jumps_exact():
    step = lambda t: np.where(t > 1.3, 1.0, 0.0)
    assert integrate_octave(step, 1, GRID, breakpoints=(1.3,)).value == pytest.approx(0.7, rel=1e-12)


def test_non_finite_sample_names_the_node():
    with pytest.raises(QuadratureError, match="Non-finite"):
        radial_octave(lambda t: np.full_like(t, np.nan), 1, 8)


def test_grid_validation():
    with pytest.raises(ValueError):
        RadialGrid(k_min=3, k_max=1)
    with pytest.raises(ValueError):
        RadialGrid(k_min=0, k_max=1, nodes_per_octave=7, rule="simpson")
    with pytest.raises(ValueError):
        SphereGrid(dim=4)


def test_simpson_rule_is_exact_for_cubics():
    grid = RadialGrid(k_min=0, k_max=1, nodes_per_octave=8, rule="simpson")
    assert integrate_octave(lambda t: t**3, 1, grid).value == pytest.approx(15.0 / 4.0, rel=1e-12)


@pytest.mark.parametrize(
    "dim, h, expected",
    [
        (2, lambda y: np.ones(y.shape[0]), 2.0 * math.pi),
        (1, lambda y: np.ones(y.shape[0]), 2.0),
        (3, lambda y: y[:, 0] ** 2, 4.0 * math.pi / 3.0),
    ],
)
def test_integrate_sphere(dim, h, expected):
    assert integrate_sphere(h, SphereGrid(dim=dim)) == pytest.approx(expected, rel=1e-12)


def test_integrate_rn_polar_disk_area_reports_truncation():
    disk = lambda x: np.where(np.linalg.norm(x, axis=1) <= 1.0, 1.0, 0.0)
    result = integrate_rn_polar(disk, RadialGrid(k_min=-20, k_max=0), SphereGrid(dim=2), support=(None, 0))
    assert abs(result.value - math.pi) < 1e-6
    assert result.truncated
    assert result.notes


def test_integrate_rn_polar_shell_integral():
    F = lambda x: np.where(
        (np.linalg.norm(x, axis=1) > 1.0) & (np.linalg.norm(x, axis=1) <= 2.0), 1.0 / np.linalg.norm(x, axis=1), 0.0
    )
    result = integrate_rn_polar(F, RadialGrid(k_min=0, k_max=2), SphereGrid(dim=2), support=(1, 1))
    assert result.value == pytest.approx(2.0 * math.pi, rel=1e-12)
    assert not result.truncated
    assert result.per_octave[0] == 0.0


def test_polar_consistency_for_separable_integrand():
    sphere = SphereGrid(dim=2)
    radial = RadialGrid(k_min=-1, k_max=2)
    F = lambda x: np.linalg.norm(x, axis=1) * (1.0 + (x[:, 0] / np.linalg.norm(x, axis=1)) ** 2)
    separated = integrate_octaves(lambda r: r * r, radial).value * integrate_sphere(
        lambda y: 1.0 + y[:, 0] ** 2, sphere
    )
    np.testing.assert_allclose(integrate_rn_polar(F, radial, sphere).value, separated, rtol=1e-10)


def test_integrate_to_origin_closes_geometric_sum():
    result = integrate_to_origin(lambda k: 2.0**k, 0)
    assert result.value == pytest.approx(2.0, rel=1e-10)
    assert result.truncated


def test_integrate_to_origin_rejects_non_decaying_octaves():
    with pytest.raises(QuadratureError):
        integrate_to_origin(lambda k: 1.0, 0, max_octaves=50)


@pytest.mark.parametrize("k", [-3, 0, 4])
@pytest.mark.parametrize(
    "g",
    [lambda t: np.exp(-t) * t**1.5, lambda t: np.sin(t) / t, lambda t: 1.0 / (1.0 + t**2)],
    ids=["gamma-like", "sinc", "lorentzian"],
)
def test_octave_quadrature_agrees_with_adaptive_quad(g, k):
    expected, _ = integrate.quad(g, 2.0 ** (k - 1), 2.0**k, epsabs=0.0, epsrel=1e-13)
    np.testing.assert_allclose(integrate_octave(g, k).value, expected, rtol=1e-10)


def test_surface_measures():
    for dim, value in SURFACE_MEASURE.items():
        assert value == pytest.approx(2.0 * math.pi ** (dim / 2.0) / special.gamma(dim / 2.0), rel=1e-14)
