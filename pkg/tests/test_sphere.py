"""Grid, transform, and differential-operator checks on the unit sphere."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmclab.errors import ConfigurationError, GridMismatchError
from cmclab.sphere import (
    FOUR_PI,
    ScalarField,
    SpectralCoeffs,
    _legendre_tables,
    analyze,
    build_grid,
    integrate,
    project_low_modes,
    sphere_laplacian,
    synthesize,
    tangential_gradient,
)


def unit_coeffs(grid, l, m):
    c = np.zeros(grid.n_coeffs)
    c[grid.coeff_index(l, m)] = 1.0
    return c


def test_grid_node_count_and_weight_sum():
    grid = build_grid(4)
    assert grid.n_nodes == 50
    assert grid.weights.sum() == pytest.approx(FOUR_PI, rel=1e-14)
    assert build_grid(32).n_nodes == 2178


def test_grid_rejects_small_band_limit():
    with pytest.raises(ConfigurationError):
        build_grid(3)


def test_quadrature_kills_harmonics_up_to_twice_band_limit():
    """The product rule integrates Y_lm exactly for l <= 2L."""
    grid = build_grid(8)
    L2 = 2 * grid.band_limit
    Q, _, _ = _legendre_tables(L2, grid.cos_theta, derivatives=False)
    for l, m in [(1, 0), (5, 3), (11, -7), (16, 16), (16, 0), (13, -1)]:
        tab = Q[abs(m), l]
        if m == 0:
            vals = np.repeat(tab, grid.n_phi)
        elif m > 0:
            vals = np.sqrt(2) * np.repeat(tab, grid.n_phi) * np.cos(m * grid.node_phi)
        else:
            vals = np.sqrt(2) * np.repeat(tab, grid.n_phi) * np.sin(-m * grid.node_phi)
        assert abs(grid.integrate_values(vals)) < 1e-12


def test_analyze_single_harmonic():
    grid = build_grid(6)
    f = ScalarField(grid, grid.synthesize_values(unit_coeffs(grid, 2, 1)))
    c = analyze(f).values
    expected = unit_coeffs(grid, 2, 1)
    assert np.allclose(c, expected, atol=1e-13)


def test_constant_field_coefficient():
    grid = build_grid(5)
    c = analyze(ScalarField(grid, np.ones(grid.n_nodes))).values
    assert c[0] == pytest.approx(np.sqrt(FOUR_PI), rel=1e-14)
    assert np.max(np.abs(c[1:])) < 1e-14


def test_round_trip_random_band_limited():
    grid = build_grid(16)
    rng = np.random.default_rng(7)
    c = rng.standard_normal(grid.n_coeffs)
    f = grid.synthesize_values(c)
    err = np.abs(grid.analyze_values(f) - c).max() / np.abs(c).max()
    assert err < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=4, max_value=12), st.integers(min_value=0, max_value=2**32 - 1))
def test_round_trip_property(L, seed):
    grid = build_grid(L)
    c = np.random.default_rng(seed).standard_normal(grid.n_coeffs)
    back = grid.analyze_values(grid.synthesize_values(c))
    assert np.abs(back - c).max() <= 1e-12 * max(1.0, np.abs(c).max())


def test_parseval():
    grid = build_grid(12)
    rng = np.random.default_rng(3)
    c = rng.standard_normal(grid.n_coeffs)
    f = grid.synthesize_values(c)
    lhs = np.sum(c**2)
    rhs = grid.integrate_values(f**2)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_integrate_examples():
    grid = build_grid(8)
    one = ScalarField(grid, np.ones(grid.n_nodes))
    assert integrate(one) == pytest.approx(FOUR_PI, rel=1e-14)
    nu1 = grid.directions[:, 0]
    assert grid.integrate_values(nu1**2) == pytest.approx(FOUR_PI / 3, rel=1e-13)
    y32 = grid.synthesize_values(unit_coeffs(grid, 3, 2))
    assert abs(grid.integrate_values(y32)) < 1e-13


def test_integrate_weighted_and_grid_mismatch():
    grid = build_grid(6)
    f = ScalarField(grid, np.ones(grid.n_nodes))
    w = ScalarField(grid, grid.directions[:, 2] ** 2)
    assert integrate(f, w) == pytest.approx(FOUR_PI / 3, rel=1e-13)
    other = build_grid(7)
    with pytest.raises(GridMismatchError):
        integrate(f, ScalarField(other, np.ones(other.n_nodes)))


def test_sphere_laplacian_eigenrelation():
    grid = build_grid(9)
    for l, m in [(1, 0), (2, -2), (2, 1), (0, 0), (7, 5)]:
        c = SpectralCoeffs(grid, unit_coeffs(grid, l, m))
        lap = sphere_laplacian(c).values
        assert np.allclose(lap, -l * (l + 1.0) * c.values, atol=1e-15)


def test_node_level_laplacian_matches_eigenvalue():
    """Chart second derivatives reproduce Delta Y = -l(l+1) Y at the nodes."""
    grid = build_grid(10)
    st_nodes = np.repeat(grid.sin_theta, grid.n_phi)
    ct_nodes = np.repeat(grid.cos_theta, grid.n_phi)
    for l, m in [(3, 2), (6, -4), (10, 10), (5, 0)]:
        c = unit_coeffs(grid, l, m)
        f = grid.synthesize_values(c)
        ftt = grid.synthesize_values(c, dtheta=2)
        ft = grid.synthesize_values(c, dtheta=1)
        fpp = grid.synthesize_values(c, dphi=2)
        lap = ftt + (ct_nodes / st_nodes) * ft + fpp / st_nodes**2
        assert np.abs(lap + l * (l + 1.0) * f).max() < 1e-9 * (1 + l * (l + 1.0))


def test_mixed_derivative_against_analytic_field():
    """d2/(dtheta dphi) of band-limited fields matches closed forms."""
    grid = build_grid(8)
    th, ph = grid.node_theta, grid.node_phi
    cases = [
        (np.sin(th) * np.cos(ph), np.cos(th) * -np.sin(ph)),
        (np.cos(th) * np.sin(th) * np.cos(ph), np.cos(2 * th) * -np.sin(ph)),
    ]
    for f, expected in cases:
        mixed = grid.synthesize_values(grid.analyze_values(f), dtheta=1, dphi=1)
        assert np.abs(mixed - expected).max() < 1e-11


def test_tangential_gradient_norm_and_tangency():
    grid = build_grid(10)
    for l, m in [(1, 1), (4, -3), (6, 0)]:
        f = ScalarField(grid, grid.synthesize_values(unit_coeffs(grid, l, m)))
        grad = tangential_gradient(f)
        norm2 = grid.integrate_values(np.sum(grad**2, axis=1))
        assert norm2 == pytest.approx(l * (l + 1.0), rel=1e-11)
        radial = np.abs(np.sum(grad * grid.directions, axis=1)).max()
        assert radial < 1e-12 * (1 + np.abs(grad).max())


def test_project_low_modes_examples():
    grid = build_grid(8)
    nu = grid.directions
    f0, a = project_low_modes(ScalarField(grid, 5.0 + nu[:, 2]))
    assert f0 == pytest.approx(5.0, abs=1e-13)
    assert np.allclose(a, [0, 0, 1], atol=1e-13)

    y20 = grid.synthesize_values(unit_coeffs(grid, 2, 0))
    f0, a = project_low_modes(ScalarField(grid, y20))
    assert abs(f0) < 1e-14
    assert np.allclose(a, 0, atol=1e-14)

    f0, a = project_low_modes(ScalarField(grid, nu[:, 0] + 2 * nu[:, 1]))
    assert abs(f0) < 1e-14
    assert np.allclose(a, [1, 2, 0], atol=1e-13)


def test_projection_remainder_orthogonal():
    grid = build_grid(9)
    rng = np.random.default_rng(5)
    f = grid.synthesize_values(rng.standard_normal(grid.n_coeffs))
    f0, a = project_low_modes(ScalarField(grid, f))
    rem = f - f0 - grid.directions @ a
    assert abs(grid.integrate_values(rem)) < 1e-12 * (1 + np.abs(f).max())
    for i in range(3):
        assert abs(grid.integrate_values(rem * grid.directions[:, i])) < 1e-12 * (
            1 + np.abs(f).max()
        )


def test_evaluate_matches_grid_synthesis():
    grid = build_grid(7)
    rng = np.random.default_rng(13)
    c = rng.standard_normal(grid.n_coeffs)
    f = grid.synthesize_values(c)
    vals = grid.evaluate(c, grid.node_theta, grid.node_phi)
    assert np.abs(vals - f).max() < 1e-11 * np.abs(f).max()


def test_scalar_field_validation():
    grid = build_grid(5)
    with pytest.raises(GridMismatchError):
        ScalarField(grid, np.ones(3))
    bad = np.ones(grid.n_nodes)
    bad[0] = np.nan
    with pytest.raises(ConfigurationError):
        ScalarField(grid, bad)
