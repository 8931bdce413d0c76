"""Momentum, centers, the lapse equation, and the evolution law."""

import numpy as np
import pytest

from cmclab.errors import SolvabilityError
from cmclab.models import (
    InitialDataModel,
    euclidean,
    perturbed_schwarzschild,
    schwarzschild,
    synthetic_data,
    time_symmetric_data,
    translated,
)
from cmclab.cmc import SolverConfig, solve_cmc
from cmclab.fits import fit_decay_exponent
from cmclab.physics import (
    adm_center_from_leaf_formula,
    adm_center_integral,
    artificial_flow_integrate,
    center_velocity_from_lapse,
    evolution_residual,
    lapse_rhs,
    quasi_local_momentum,
    solve_lapse,
)
from cmclab.sphere import ScalarField, build_grid
from cmclab.surfaces import (
    SurfaceEmbedding,
    compute_geometry,
    euclidean_center,
    low_eigenpairs,
)

CFG = SolverConfig(band_limit=16, compute_eigenvalues=False)
M = 1.0


@pytest.fixture(scope="module")
def schw_leaf16():
    return solve_cmc(schwarzschild(M), 16.0, CFG)


@pytest.fixture(scope="module")
def synthetic16():
    return synthetic_data(schwarzschild(M), delta=1.0, amplitude=1.0, direction=(1, 0, 0))


def test_momentum_vanishes_for_time_symmetric(schw_leaf16):
    data = time_symmetric_data(schwarzschild(M))
    rep = quasi_local_momentum(schw_leaf16, data)
    assert np.abs(rep.quasi_local).max() < 1e-14
    assert np.abs(rep.correction).max() < 1e-14


def test_momentum_pure_trace_kbar_nearly_cancels(schw_leaf16):
    """kbar = c g gives flux integrand -2c g(nu) whose sphere average vanishes."""
    base = schwarzschild(M)
    c = 0.3

    def kb(x):
        return c * base._g(x)

    def dkb(x):
        return c * base._dg(x)

    data = InitialDataModel(base=base, time_symmetric=False, _kbar=kb, _dkbar=dkb)
    rep = quasi_local_momentum(schw_leaf16, data)
    # scale: the integrand magnitude is ~2c over area ~4 pi sigma^2 / 8 pi
    assert np.abs(rep.quasi_local).max() < 1e-3 * c * schw_leaf16.sigma**2


def test_momentum_flat_space_closed_form(synthetic16):
    """Flux -> +B/3 b and correction -> -B/3 b as sigma grows (flat limit)."""
    sigmas = [32.0, 64.0, 128.0]
    flux_err, corr_err = [], []
    for s in sigmas:
        leaf = solve_cmc(schwarzschild(M), s, CFG)
        rep = quasi_local_momentum(leaf, synthetic16)
        flux_err.append(abs(rep.quasi_local[0] - 1.0 / 3.0))
        corr_err.append(abs(rep.correction[0] + 1.0 / 3.0))
        assert np.abs(rep.quasi_local[1:]).max() < 1e-12
    assert flux_err[-1] < flux_err[0]
    assert corr_err[-1] < corr_err[0]
    assert flux_err[-1] < 0.02 and corr_err[-1] < 0.02


def test_momentum_matches_fine_quadrature(synthetic16):
    leaf = solve_cmc(schwarzschild(M), 16.0, CFG)
    rep = quasi_local_momentum(leaf, synthetic16)
    fine = build_grid(4 * leaf.surface.grid.band_limit)
    refined = SurfaceEmbedding(fine, leaf.surface.center, _pad(leaf.surface, fine))
    rep_fine = quasi_local_momentum(refined, synthetic16, sigma=leaf.sigma)
    assert np.abs(rep.quasi_local - rep_fine.quasi_local).max() < 1e-6
    assert np.abs(rep.correction - rep_fine.correction).max() < 1e-6


def _pad(surface, fine):
    coeffs = np.zeros(fine.n_coeffs)
    coeffs[: surface.grid.n_coeffs] = surface.rho_coeffs
    return coeffs


def test_momentum_linarity_in_kbar(schw_leaf16):
    base = schwarzschild(M)
    d1 = synthetic_data(base, delta=1.0, amplitude=1.0)
    d2 = synthetic_data(base, delta=1.0, amplitude=2.0)
    r1 = quasi_local_momentum(schw_leaf16, d1)
    r2 = quasi_local_momentum(schw_leaf16, d2)
    assert np.allclose(r2.quasi_local, 2.0 * r1.quasi_local, rtol=1e-10, atol=1e-14)
    assert np.allclose(r2.correction, 2.0 * r1.correction, rtol=1e-10, atol=1e-14)


def test_adm_center_schwarzschild_is_origin():
    for rho in (16.0, 64.0):
        z = adm_center_integral(schwarzschild(M), rho)
        assert np.abs(z).max() < 1e-12


def test_adm_center_translated_tends_to_offset():
    a = np.array([2.0, 0.0, 0.0])
    model = translated(schwarzschild(M), a)
    gaps = [np.linalg.norm(adm_center_integral(model, rho) - a) for rho in (64.0, 128.0, 256.0)]
    assert gaps[2] < gaps[0]
    assert gaps[2] < 0.02


def test_adm_center_exact_equivariance_with_centered_domain():
    model = perturbed_schwarzschild(M, 0.5, 0.1, "odd")
    a = np.array([5.0, 0.0, 0.0])
    z0 = adm_center_integral(model, 32.0)
    z1 = adm_center_integral(translated(model, a), 32.0, center=a)
    assert np.abs(z1 - (z0 + a)).max() < 1e-10


def test_adm_leaf_formula_matches_odd_model_closed_form():
    """Leading order of the flux center on the odd model: A(2+eps)/(6m) s^(1-eps)."""
    eps, A = 0.5, 0.1
    model = perturbed_schwarzschild(M, eps, A, "odd")
    for s in (32.0, 128.0):
        z = adm_center_from_leaf_formula(model, s)
        expect = A * (2 + eps) / (6 * M) * s ** (1 - eps)
        assert z[0] == pytest.approx(expect, rel=1e-6)
        assert abs(z[1]) < 1e-12 and abs(z[2]) < 1e-12


def test_lapse_rhs_zero_for_time_symmetric(schw_leaf16):
    data = time_symmetric_data(schwarzschild(M))
    rhs = lapse_rhs(schw_leaf16, data)
    assert np.abs(rhs.values).max() == 0.0


def test_lapse_rhs_scaling(synthetic16):
    """||rhs||_inf decays like 1/sigma^(2+min(eps,delta))."""
    sigmas = [16.0, 32.0, 64.0]
    norms = []
    for s in sigmas:
        leaf = solve_cmc(schwarzschild(M), s, CFG)
        norms.append(np.abs(lapse_rhs(leaf, synthetic16).values).max())
    fit = fit_decay_exponent(sigmas, norms)
    assert fit.exponent >= 2.7  # 2 + min(eps, delta) = 3 up to curvature corrections
    assert fit.residual < 0.1


def test_solve_lapse_zero_rhs_gives_zero(schw_leaf16):
    data = time_symmetric_data(schwarzschild(M))
    w = solve_lapse(schw_leaf16, data)
    assert np.abs(w.values).max() == 0.0


def test_solve_lapse_eigen_identity(schw_leaf16):
    """L w = lambda_op f for an eigenpair returns w = f.

    `low_eigenpairs` reports the positive-Laplacian convention, so the
    operator eigenvalue is the negative of the reported one.
    """
    model = schwarzschild(M)
    geo = compute_geometry(schw_leaf16.surface, model)
    lam_report, f = low_eigenpairs(schw_leaf16.surface, model, n=1, geometry=geo)[0]
    rhs = -lam_report * f.values
    w = geo.solve_operator(rhs)
    assert np.abs(w - f.values).max() < 1e-8 * np.abs(f.values).max()


def test_solve_lapse_flat_degree_one_source_raises():
    flat = euclidean()
    grid = build_grid(12)
    sphere = SurfaceEmbedding.round_sphere(grid, 8.0)
    geo = compute_geometry(sphere, flat)
    with pytest.raises(SolvabilityError):
        geo.solve_operator(grid.directions[:, 0], check_kernel_load=True)


def test_lapse_growth_bound(synthetic16):
    """||w||_{W^1,inf} grows no faster than sigma^(1 - min(eps, delta))."""
    sigmas = [16.0, 32.0, 64.0]
    norms = []
    for s in sigmas:
        leaf = solve_cmc(schwarzschild(M), s, CFG)
        norms.append(evolution_residual(leaf, synthetic16).lapse_w1inf)
    fit = fit_decay_exponent(sigmas, norms)
    growth = -fit.exponent
    assert growth <= (1.0 - 1.0) + 0.2  # eps = delta = 1 for this family


def test_center_velocity_constant_lapse_is_zero(schw_leaf16):
    grid = schw_leaf16.surface.grid
    geo = compute_geometry(schw_leaf16.surface, schwarzschild(M))
    w = ScalarField(grid, np.ones(grid.n_nodes))
    v = center_velocity_from_lapse(schw_leaf16, w, geometry=geo)
    assert np.abs(v).max() < 1e-4  # near-round leaf: average of nu is small


def test_center_velocity_unit_mode_on_euclidean_sphere():
    grid = build_grid(12)
    sphere = SurfaceEmbedding.round_sphere(grid, 5.0)
    geo = compute_geometry(sphere, euclidean())
    w = ScalarField(grid, grid.directions[:, 0])
    v = center_velocity_from_lapse(sphere, w, geometry=geo)
    assert np.allclose(v, [1.0, 0.0, 0.0], atol=1e-12)


def test_center_velocity_matches_deformation_oracle():
    """3 avg(nu w) tracks the finite-difference motion of the centroid."""
    model = schwarzschild(M)
    leaf = solve_cmc(model, 16.0, CFG)
    geo = compute_geometry(leaf.surface, model)
    grid = leaf.surface.grid
    rng = np.random.default_rng(3)
    c = np.zeros(grid.n_coeffs)
    c[grid.coeff_l <= 4] = rng.standard_normal(int((grid.coeff_l <= 4).sum()))
    w = grid.synthesize_values(c)
    w /= np.abs(w).max()
    v = center_velocity_from_lapse(leaf, ScalarField(grid, w), geometry=geo)
    # deform with normal speed w: radial speed = w / gbar(N, nu)
    proj = np.einsum("ni,nij,nj->n", grid.directions, geo.gbar, geo.normal)
    h = 1e-4
    bumped = SurfaceEmbedding.from_radial_values(
        grid, leaf.surface.radius_values + h * w / proj, leaf.surface.center
    )
    v_fd = (euclidean_center(bumped) - euclidean_center(leaf.surface)) / h
    w_l2 = np.sqrt(geo.integrate(w**2))
    tol = 5.0 * w_l2 / leaf.sigma**2 + 100.0 * h
    assert np.abs(v - v_fd).max() < tol


def test_evolution_residual_time_symmetric_is_tiny(schw_leaf16):
    data = time_symmetric_data(schwarzschild(M))
    rep = evolution_residual(schw_leaf16, data)
    assert rep.residual <= 1e-8


def test_evolution_residual_decays(synthetic16):
    sigmas = [16.0, 32.0, 64.0]
    res = [
        evolution_residual(solve_cmc(schwarzschild(M), s, CFG), synthetic16).residual
        for s in sigmas
    ]
    fit = fit_decay_exponent(sigmas, res)
    assert fit.exponent >= 0.7
    assert res[-1] < res[0]


def test_evolution_sides_scale_linearly_with_kbar():
    base = schwarzschild(M)
    leaf = solve_cmc(base, 16.0, CFG)
    reps = [
        evolution_residual(leaf, synthetic_data(base, delta=1.0, amplitude=b))
        for b in (1.0, 2.0)
    ]
    assert np.allclose(
        reps[1].center_velocity, 2.0 * reps[0].center_velocity, rtol=0.01, atol=1e-12
    )
    assert np.allclose(reps[1].prediction, 2.0 * reps[0].prediction, rtol=0.01, atol=1e-12)


def test_artificial_flow_schwarzschild_stays_at_origin():
    res = artificial_flow_integrate(schwarzschild(M), 16.0, tau_steps=8, band_limit=12)
    assert np.abs(res.centers).max() == 0.0


def test_artificial_flow_recovers_translated_center():
    """Flow endpoint approaches the true center a, with the definitional
    slice curvature factor 1/2; the proof-text factor 2 overshoots by 4.

    The interpolation is anchored at the origin so that the flow really
    has to travel from 0 to the translated center.
    """
    a = np.array([1.0, 0.0, 0.0])
    origin = np.zeros(3)
    model = translated(schwarzschild(M), a)
    res = artificial_flow_integrate(model, 16.0, tau_steps=12, band_limit=12, anchor=origin)
    assert np.linalg.norm(res.endpoint - a) < 0.05
    res_far = artificial_flow_integrate(model, 32.0, tau_steps=12, band_limit=12, anchor=origin)
    assert np.linalg.norm(res_far.endpoint - a) < np.linalg.norm(res.endpoint - a)
    variant = artificial_flow_integrate(
        model, 16.0, tau_steps=12, kbar_factor=2.0, band_limit=12, anchor=origin
    )
    assert np.linalg.norm(variant.endpoint - a) > 10 * np.linalg.norm(res.endpoint - a)


def test_artificial_flow_step_halving():
    model = perturbed_schwarzschild(M, 0.5, 0.1, "odd")
    z20 = artificial_flow_integrate(model, 16.0, tau_steps=20, band_limit=12).endpoint
    z40 = artificial_flow_integrate(model, 16.0, tau_steps=40, band_limit=12).endpoint
    assert np.linalg.norm(z40 - z20) <= 1e-8


def test_artificial_flow_translation_equivariance():
    """With the default anchor the whole flow path shifts by exactly a."""
    model = perturbed_schwarzschild(M, 0.5, 0.1, "odd")
    a = np.array([5.0, 0.0, 0.0])
    base = artificial_flow_integrate(model, 16.0, tau_steps=10, band_limit=12)
    moved = artificial_flow_integrate(translated(model, a), 16.0, tau_steps=10, band_limit=12)
    assert np.abs(moved.centers - (base.centers + a)).max() < 1e-8


def test_center_report_converges_on_translated_model():
    from cmclab.physics import cmc_adm_center_report

    a = np.array([2.0, 0.0, 0.0])
    model = translated(schwarzschild(M), a)
    report = cmc_adm_center_report(
        model,
        sigmas=[10.0, 16.0],
        adm_radii=[32.0, 64.0, 128.0, 256.0],
        config=SolverConfig(band_limit=12, compute_eigenvalues=False),
    )
    assert report.extrapolation.converged
    assert np.linalg.norm(report.extrapolation.limit - a) < 1e-3
    assert np.abs(report.cmc_centers - a).max() < 1e-8
    rec = report.to_record()
    assert rec["extrapolation"]["converged"] is True


def test_center_report_flags_divergent_adm_sweep():
    from cmclab.physics import cmc_adm_center_report

    model = perturbed_schwarzschild(M, 0.5, 0.1, "odd")
    report = cmc_adm_center_report(
        model,
        sigmas=[10.0, 16.0],
        adm_radii=[32.0, 64.0, 128.0, 256.0],
        config=SolverConfig(band_limit=12, compute_eigenvalues=False),
    )
    assert not report.extrapolation.converged  # centers drift like sigma^(1/2)


def test_lapse_rhs_matches_metric_variation_oracle():
    """-(d/dtau) H(fixed surface; interpolated metric) equals the assembled
    right-hand side with the definitional slice curvature (gS - g)/2."""
    from cmclab.models import artificial_data, interpolated

    a = np.array([1.0, 0.0, 0.0])
    model = translated(schwarzschild(M), a)
    grid = build_grid(12)
    surf = SurfaceEmbedding.round_sphere(grid, 16.0, (0.3, 0.0, 0.0))
    tau0, dtau = 0.5, 1e-5
    origin = np.zeros(3)
    Hp = compute_geometry(surf, interpolated(model, tau0 + dtau, anchor=origin)).mean_curvature
    Hm = compute_geometry(surf, interpolated(model, tau0 - dtau, anchor=origin)).mean_curvature
    dH = (Hp - Hm) / (2 * dtau)
    data = artificial_data(model, tau0, factor=0.5, anchor=origin)
    geo = compute_geometry(surf, data.base)
    rhs = lapse_rhs(surf, data, geometry=geo)
    assert np.abs(rhs.values + dH).max() < 1e-8 * np.abs(dH).max()
