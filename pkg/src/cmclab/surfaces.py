"""Differential geometry of radial-graph closed surfaces in an ambient metric.

A surface is the graph ``x(theta, phi) = center + rho(theta, phi) * N`` over
the unit sphere, with a positive band-limited radial field.  All tensor
fields on the surface are stored componentwise in the ambient Cartesian
frame (tangential operators act via projection), which avoids the
coordinate singularities of raw (theta, phi) components at the poles.

Sign convention: ``k(X, Y) = <nabla_X Y, nu>`` with outward unit normal
``nu``, so the Euclidean round sphere of radius ``r`` has mean curvature
``H = -2/r``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import (
    ConfigurationError,
    GridMismatchError,
    ResolutionWarning,
    SolverError,
)
from .models import MetricModel, _christoffel_from, ricci
from .sphere import ScalarField, SphericalGrid, build_grid

__all__ = [
    "SurfaceEmbedding",
    "SurfaceGeometry",
    "compute_geometry",
    "euclidean_center",
    "stability_operator_apply",
    "low_eigenpairs",
    "sobolev_norm",
    "resample",
    "surface_divergence",
]

#: fraction of spectral energy allowed in the top two degrees before a
#: resolution warning is emitted
_TAIL_ENERGY_LIMIT = 0.01


@dataclass(frozen=True)
class SurfaceEmbedding:
    """Star-shaped closed surface: center plus radial graph coefficients.

    The canonical representation is spectral (``rho_coeffs``); node values
    are synthesized on demand.  This makes JSON serialization bit-exact.
    """

    grid: SphericalGrid
    center: np.ndarray
    rho_coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(3)
        rc = np.asarray(self.rho_coeffs, dtype=float)
        if rc.shape != (self.grid.n_coeffs,):
            raise GridMismatchError(
                f"expected {self.grid.n_coeffs} radial coefficients, got {rc.shape}"
            )
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "rho_coeffs", rc)
        if self.radius_values.min() <= 0:
            raise ConfigurationError("radial field must be positive everywhere")

    @classmethod
    def round_sphere(cls, grid: SphericalGrid, radius: float, center=(0.0, 0.0, 0.0)):
        if radius <= 0:
            raise ConfigurationError(f"sphere radius must be positive, got {radius}")
        coeffs = np.zeros(grid.n_coeffs)
        coeffs[0] = radius * np.sqrt(4.0 * np.pi)
        return cls(grid, np.asarray(center, dtype=float), coeffs)

    @classmethod
    def from_radial_values(cls, grid: SphericalGrid, values: np.ndarray, center=(0.0, 0.0, 0.0)):
        return cls(grid, np.asarray(center, dtype=float), grid.analyze_values(values))

    @cached_property
    def radius_values(self) -> np.ndarray:
        return self.grid.synthesize_values(self.rho_coeffs)

    @property
    def radial(self) -> ScalarField:
        return ScalarField(self.grid, self.radius_values)

    @cached_property
    def positions(self) -> np.ndarray:
        return self.center + self.radius_values[:, None] * self.grid.directions

    def translate(self, a) -> "SurfaceEmbedding":
        return SurfaceEmbedding(self.grid, self.center + np.asarray(a, dtype=float), self.rho_coeffs)

    def with_radius(self, coeffs: np.ndarray) -> "SurfaceEmbedding":
        return SurfaceEmbedding(self.grid, self.center, coeffs)

    # -- serialization ----------------------------------------------------

    def to_record(self) -> dict:
        return {
            "center": self.center.tolist(),
            "band_limit": self.grid.band_limit,
            "rho_coeffs": self.rho_coeffs.tolist(),
        }

    @classmethod
    def from_record(cls, record: dict) -> "SurfaceEmbedding":
        grid = build_grid(int(record["band_limit"]))
        return cls(grid, np.array(record["center"], dtype=float), np.array(record["rho_coeffs"], dtype=float))

    def to_json(self) -> str:
        return json.dumps(self.to_record())

    @classmethod
    def from_json(cls, text: str) -> "SurfaceEmbedding":
        return cls.from_record(json.loads(text))


class SurfaceGeometry:
    """First/second fundamental forms and derived fields of one embedding.

    Instances are computed once by :func:`compute_geometry` and treated as
    immutable; the weak-form operator matrices are assembled lazily and
    cached.
    """

    def __init__(self, surface: SurfaceEmbedding, model: MetricModel):
        grid = surface.grid
        self.surface = surface
        self.model = model
        self.grid = grid
        c = surface.rho_coeffs
        rho = grid.synthesize_values(c)
        rho_t = grid.synthesize_values(c, dtheta=1)
        rho_p = grid.synthesize_values(c, dphi=1)
        rho_tt = grid.synthesize_values(c, dtheta=2)
        rho_tp = grid.synthesize_values(c, dtheta=1, dphi=1)
        rho_pp = grid.synthesize_values(c, dphi=2)

        N = grid.directions
        Nt, Np = grid.d_dir_dtheta, grid.d_dir_dphi
        Ntt, Ntp, Npp = grid.d2_dir_dtheta2, grid.d2_dir_dthetadphi, grid.d2_dir_dphi2

        x = surface.center + rho[:, None] * N
        t_th = rho_t[:, None] * N + rho[:, None] * Nt
        t_ph = rho_p[:, None] * N + rho[:, None] * Np
        x_tt = rho_tt[:, None] * N + 2 * rho_t[:, None] * Nt + rho[:, None] * Ntt
        x_tp = rho_tp[:, None] * N + rho_t[:, None] * Np + rho_p[:, None] * Nt + rho[:, None] * Ntp
        x_pp = rho_pp[:, None] * N + 2 * rho_p[:, None] * Np + rho[:, None] * Npp

        self.positions = x
        self.tangents = np.stack([t_th, t_ph], axis=1)  # (n, 2, 3)
        self.second_derivs = np.stack(
            [np.stack([x_tt, x_tp], axis=1), np.stack([x_tp, x_pp], axis=1)], axis=1
        )  # (n, 2, 2, 3)

        gbar = model.metric(x)
        dgbar = model.metric_deriv(x)
        self.gbar = gbar
        self.dgbar = dgbar
        self.gbar_inv = np.linalg.inv(gbar)
        self.gamma_bar = _christoffel_from(self.gbar_inv, dgbar)

        # induced metric in the (theta, phi) chart and its Euclidean analogue
        a = np.einsum("nIa,nab,nJb->nIJ", self.tangents, gbar, self.tangents)
        a_e = np.einsum("nIa,nJa->nIJ", self.tangents, self.tangents)
        self.induced = a
        det_a = a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] ** 2
        det_e = a_e[:, 0, 0] * a_e[:, 1, 1] - a_e[:, 0, 1] ** 2
        if det_a.min() <= 0:
            raise SolverError("induced metric degenerate: surface parametrization broke down")
        self.det_induced = det_a
        inv = np.empty_like(a)
        inv[:, 0, 0] = a[:, 1, 1]
        inv[:, 1, 1] = a[:, 0, 0]
        inv[:, 0, 1] = inv[:, 1, 0] = -a[:, 0, 1]
        self.induced_inv = inv / det_a[:, None, None]

        sin_t = np.repeat(grid.sin_theta, grid.n_phi)
        self.weights_induced = grid.weights * np.sqrt(det_a) / sin_t
        self.weights_euclidean = grid.weights * np.sqrt(det_e) / sin_t
        self.area = float(self.weights_induced.sum())
        self.area_euclidean = float(self.weights_euclidean.sum())
        self.sigma_scale = float(np.sqrt(self.area / (4.0 * np.pi)))

        # outward unit normal: Euclidean cross product gives the conormal
        n_flat = np.cross(t_th, t_ph)
        nu = np.einsum("nij,nj->ni", self.gbar_inv, n_flat)
        norm = np.sqrt(np.einsum("ni,nij,nj->n", nu, gbar, nu))
        nu /= norm[:, None]
        outward = np.einsum("ni,ni->n", nu, x - surface.center)
        if np.mean(outward) < 0:
            nu = -nu
        if np.any(np.einsum("ni,ni->n", nu, x - surface.center) <= 0):
            raise SolverError("normal orientation inconsistent: surface not star-shaped")
        self.normal = nu
        self.normal_flat = np.einsum("nij,nj->ni", gbar, nu)

        # second fundamental form k_IJ = (x_IJ + Gamma(t_I, t_J)) . nu_flat
        gamma_t = np.einsum(
            "nkab,nIa,nJb->nIJk", self.gamma_bar, self.tangents, self.tangents
        )
        kk = np.einsum("nIJk,nk->nIJ", self.second_derivs + gamma_t, self.normal_flat)
        self.second_fund = kk
        self.mean_curvature = np.einsum("nIJ,nIJ->n", self.induced_inv, kk)
        self.trace_free = kk - 0.5 * self.mean_curvature[:, None, None] * a
        self.k_norm2 = np.einsum(
            "nIK,nJL,nIJ,nKL->n", self.induced_inv, self.induced_inv, kk, kk
        )
        self.trace_free_norm2 = np.einsum(
            "nIK,nJL,nIJ,nKL->n",
            self.induced_inv,
            self.induced_inv,
            self.trace_free,
            self.trace_free,
        )
        self.ric_normal = np.einsum(
            "nij,ni,nj->n", ricci(model, x), self.normal, self.normal
        )
        self.potential = self.k_norm2 + self.ric_normal

    # -- chart calculus ----------------------------------------------------

    def chart_derivs(self, values: np.ndarray) -> np.ndarray:
        """Spectral (theta, phi) derivatives of a node scalar, shape (n, 2)."""
        c = self.grid.analyze_values(values)
        return np.stack(
            [self.grid.synthesize_values(c, dtheta=1), self.grid.synthesize_values(c, dphi=1)],
            axis=1,
        )

    @cached_property
    def chart_christoffel(self) -> np.ndarray:
        """Induced-metric Christoffel symbols ``(n, 2, 2, 2)``, node-exact.

        Built from analytic chart derivatives of the induced metric
        (embedding second derivatives plus ambient metric derivatives), so
        no spectral differentiation of tensor components is involved.
        """
        # d_K a_IJ = x_KI.g.t_J + t_I.g.x_KJ + t_I.(t_K^m d_m g).t_J
        dg_along = np.einsum("nKm,nmab->nKab", self.tangents, self.dgbar)
        da = (
            np.einsum("nKIa,nab,nJb->nKIJ", self.second_derivs, self.gbar, self.tangents)
            + np.einsum("nIa,nab,nKJb->nKIJ", self.tangents, self.gbar, self.second_derivs)
            + np.einsum("nIa,nKab,nJb->nKIJ", self.tangents, dg_along, self.tangents)
        )
        t = (
            np.einsum("nILJ->nLIJ", da)
            + np.einsum("nJLI->nLIJ", da)
            - da
        )
        return 0.5 * np.einsum("nKL,nLIJ->nKIJ", self.induced_inv, t)

    def tangential_gradient(self, values: np.ndarray) -> np.ndarray:
        """Surface gradient of a node scalar in ambient components (n, 3)."""
        df = self.chart_derivs(values)
        return np.einsum("nIJ,nJ,nIa->na", self.induced_inv, df, self.tangents)

    def integrate(self, values: np.ndarray, measure: str = "induced") -> float:
        w = self.weights_induced if measure == "induced" else self.weights_euclidean
        return float(w @ values)

    # -- weak-form operator -------------------------------------------------

    @cached_property
    def operator_matrices(self):
        """Galerkin matrices (A, M) of the stability operator.

        ``A[a, b] = -int <grad Y_a, grad Y_b> dmu + int V Y_a Y_b dmu`` and
        ``M`` is the L2(dmu) mass matrix, both over the spherical-harmonic
        basis of the surface's grid.
        """
        B, Bt, Bp = self.grid.basis_matrices()
        w = self.weights_induced
        W11 = w * self.induced_inv[:, 0, 0]
        W12 = w * self.induced_inv[:, 0, 1]
        W22 = w * self.induced_inv[:, 1, 1]
        l11 = np.sqrt(W11)
        l21 = W12 / l11
        l22 = np.sqrt(np.maximum(W22 - l21**2, 0.0))
        R1 = l11[:, None] * Bt + l21[:, None] * Bp
        R2 = l22[:, None] * Bp
        A = -(R1.T @ R1) - (R2.T @ R2) + (B * (w * self.potential)[:, None]).T @ B
        F = np.sqrt(w)[:, None] * B
        M = F.T @ F
        A = 0.5 * (A + A.T)
        M = 0.5 * (M + M.T)
        return A, M

    @cached_property
    def operator_eigensystem(self):
        """Full generalized eigendecomposition (ascending eigenvalues)."""
        A, M = self.operator_matrices
        vals, vecs = scipy.linalg.eigh(A, M)
        return vals, vecs

    def apply_operator(self, values: np.ndarray) -> np.ndarray:
        """Node values of ``L f`` for node values of ``f`` (Galerkin sense)."""
        A, M = self.operator_matrices
        c = self.grid.analyze_values(values)
        self._check_tail(c)
        u = scipy.linalg.solve(M, A @ c, assume_a="pos")
        return self.grid.synthesize_values(u)

    def solve_operator(
        self,
        rhs_values: np.ndarray,
        eigenvalue_floor: float = 1e-14,
        check_kernel_load: bool = False,
    ) -> np.ndarray:
        """Solve ``L u = rhs`` in weak form through the eigendecomposition.

        Eigencomponents with ``|lambda|`` below ``eigenvalue_floor`` times
        the spectral radius are treated as exact kernel and dropped
        (minimal-norm solution).  With ``check_kernel_load`` a right-hand
        side carrying a meaningful load on a kernel mode raises
        (solvability failure, e.g. degree-one sources in a flat ambient);
        Newton stepping leaves the check off because the flat-space
        translation modes are pure gauge there.
        """
        from .errors import SolvabilityError

        A, M = self.operator_matrices
        vals, vecs = self.operator_eigensystem
        B, _, _ = self.grid.basis_matrices()
        load = vecs.T @ (B.T @ (self.weights_induced * rhs_values))
        cutoff = eigenvalue_floor * np.abs(vals).max()
        kernel = np.abs(vals) <= cutoff
        if check_kernel_load and np.any(kernel):
            # loads are bounded by ||rhs||_{L^2(dmu)} for M-orthonormal modes
            rhs_scale = np.sqrt(self.integrate(rhs_values**2))
            bad = np.abs(load[kernel]).max()
            if bad > 1e-8 * rhs_scale:
                raise SolvabilityError(
                    "right-hand side loads an exactly degenerate mode "
                    f"(|load| = {bad:.3e}, ||rhs|| = {rhs_scale:.3e})"
                )
        coeffs_eig = np.where(kernel, 0.0, load / np.where(kernel, 1.0, vals))
        u = vecs @ coeffs_eig
        return self.grid.synthesize_values(u)

    def _check_tail(self, coeffs: np.ndarray):
        l = self.grid.coeff_l
        total = float(np.sum(coeffs**2))
        if total == 0:
            return
        tail = float(np.sum(coeffs[l >= self.grid.band_limit - 1] ** 2))
        if tail > _TAIL_ENERGY_LIMIT * total:
            warnings.warn(
                f"spectral tail holds {100 * tail / total:.1f}% of the field energy; "
                f"band limit L={self.grid.band_limit} may be too low",
                ResolutionWarning,
                stacklevel=3,
            )


def compute_geometry(surface: SurfaceEmbedding, model: MetricModel) -> SurfaceGeometry:
    """All fundamental forms of ``surface`` inside ``model``."""
    return SurfaceGeometry(surface, model)


def euclidean_center(
    surface: SurfaceEmbedding,
    measure: str = "euclidean",
    geometry: SurfaceGeometry | None = None,
) -> np.ndarray:
    """Coordinate centroid ``(int x dH^2) / (int dH^2)`` of the surface.

    The default measure is the Euclidean-induced one (the convention of the
    ADM comparison); ``measure="induced"`` uses the ambient-metric measure
    and requires a precomputed geometry.  Exactly translation-equivariant.
    """
    if measure == "euclidean":
        grid = surface.grid
        c = surface.rho_coeffs
        rho = surface.radius_values
        rho_t = grid.synthesize_values(c, dtheta=1)
        rho_p = grid.synthesize_values(c, dphi=1)
        sin_t = np.repeat(grid.sin_theta, grid.n_phi)
        # |t_theta x t_phi| for a radial graph over the round sphere
        jac = rho * np.sqrt((rho**2 + rho_t**2) * sin_t**2 + rho_p**2) / sin_t
        w = grid.weights * jac
    elif measure == "induced":
        if geometry is None:
            raise ConfigurationError("measure='induced' needs a computed geometry")
        w = geometry.weights_induced
        rho = surface.radius_values
    else:
        raise ConfigurationError(f"unknown center measure {measure!r}")
    offsets = rho[:, None] * surface.grid.directions
    return surface.center + (w @ offsets) / w.sum()


def stability_operator_apply(
    surface: SurfaceEmbedding,
    model: MetricModel,
    f: ScalarField,
    geometry: SurfaceGeometry | None = None,
) -> ScalarField:
    """Apply ``L f = Delta f + (|k|^2 + Ric(nu, nu)) f`` on the surface."""
    if f.grid is not surface.grid:
        raise GridMismatchError("field and surface live on different grids")
    geo = geometry if geometry is not None else compute_geometry(surface, model)
    return ScalarField(surface.grid, geo.apply_operator(f.values))


def low_eigenpairs(
    surface: SurfaceEmbedding,
    model: MetricModel,
    n: int = 3,
    geometry: SurfaceGeometry | None = None,
    dense_limit: int = 32,
):
    """The n smallest-|lambda| eigenpairs of the stability operator.

    Eigenvalues are reported in the positive-Laplacian spectral convention
    ``L f = -lambda f`` (so the degree-one cluster of a mass-m leaf sits
    near ``+6m/sigma^3``, and higher modes of a Euclidean sphere are
    positive).  Dense generalized symmetric solve up to ``dense_limit``
    band limit, shift-invert Lanczos above.  Eigenfields are
    L2(dmu)-orthonormal.
    """
    if n > 10:
        raise ConfigurationError("low_eigenpairs supports at most 10 pairs")
    geo = geometry if geometry is not None else compute_geometry(surface, model)
    grid = surface.grid
    if grid.band_limit <= dense_limit:
        vals, vecs = geo.operator_eigensystem
        order = np.argsort(np.abs(vals), kind="stable")[:n]
    else:
        import scipy.sparse.linalg as spla

        A, M = geo.operator_matrices
        lu = scipy.linalg.lu_factor(A)
        op_inv = spla.LinearOperator(A.shape, lambda v: scipy.linalg.lu_solve(lu, v))
        try:
            vals, vecs = spla.eigsh(A, k=n, M=M, sigma=0.0, OPinv=op_inv, which="LM")
        except Exception as exc:  # pragma: no cover - iteration breakdown
            raise SolverError(f"shift-invert eigeniteration failed: {exc}") from exc
        order = np.argsort(np.abs(vals), kind="stable")
    pairs = []
    for idx in order[:n]:
        field = ScalarField(grid, grid.synthesize_values(vecs[:, idx]))
        pairs.append((-float(vals[idx]), field))
    return pairs


def surface_divergence(geometry: SurfaceGeometry, vector: np.ndarray) -> np.ndarray:
    """Surface divergence of a tangential vector field in ambient components."""
    dX = np.stack(
        [geometry.chart_derivs(vector[:, k]) for k in range(3)], axis=2
    )  # (n, 2, 3): d_I X^k
    covar = dX + np.einsum(
        "nkab,nIa,nb->nIk", geometry.gamma_bar, geometry.tangents, vector
    )
    return np.einsum("nIJ,nIk,nkl,nJl->n", geometry.induced_inv, covar, geometry.gbar, geometry.tangents)


def _tensor_pointwise_norm(geometry: SurfaceGeometry, T: np.ndarray) -> np.ndarray:
    inv = geometry.induced_inv
    return np.sqrt(
        np.maximum(np.einsum("nIK,nJL,nIJ,nKL->n", inv, inv, T, T), 0.0)
    )


def _lp_norm(geometry: SurfaceGeometry, values: np.ndarray, p) -> float:
    if p == np.inf or p == "inf":
        return float(np.abs(values).max())
    p = float(p)
    return float(geometry.integrate(np.abs(values) ** p) ** (1.0 / p))


def sobolev_norm(
    geometry: SurfaceGeometry,
    field,
    k: int = 0,
    p=2,
    scale: float | None = None,
) -> float:
    """Scale-invariant Sobolev norm ``|T|_{L^p} + sigma * |grad T|_{W^{k-1,p}}``.

    ``field`` is a scalar (ScalarField or node array) or a chart-component
    (0,2)-tensor of shape (n, 2, 2), e.g. the trace-free curvature.  The
    scale defaults to the surface's area radius.  Scalars support k <= 2,
    tensors k <= 1.
    """
    if k not in (0, 1, 2):
        raise ConfigurationError("sobolev_norm supports orders k in {0, 1, 2}")
    if p not in (1, 2, np.inf, "inf"):
        raise ConfigurationError("sobolev_norm supports p in {1, 2, inf}")
    sigma = float(scale) if scale is not None else geometry.sigma_scale
    values = field.values if isinstance(field, ScalarField) else np.asarray(field, dtype=float)

    if values.ndim == 1:
        total = _lp_norm(geometry, np.abs(values), p)
        if k == 0:
            return total
        df = geometry.chart_derivs(values)  # one-form d_I f
        grad_norm = np.sqrt(
            np.maximum(np.einsum("nIJ,nI,nJ->n", geometry.induced_inv, df, df), 0.0)
        )
        if k == 1:
            return total + sigma * _lp_norm(geometry, grad_norm, p)
        # Hessian: nabla_I d_J f = d_I d_J f - Gamma^K_IJ d_K f
        c = geometry.grid.analyze_values(values)
        g = geometry.grid
        hess_chart = np.empty((g.n_nodes, 2, 2))
        hess_chart[:, 0, 0] = g.synthesize_values(c, dtheta=2)
        hess_chart[:, 0, 1] = hess_chart[:, 1, 0] = g.synthesize_values(c, dtheta=1, dphi=1)
        hess_chart[:, 1, 1] = g.synthesize_values(c, dphi=2)
        hess = hess_chart - np.einsum("nKIJ,nK->nIJ", geometry.chart_christoffel, df)
        hess_norm = _tensor_pointwise_norm(geometry, hess)
        return total + sigma * (
            _lp_norm(geometry, grad_norm, p) + sigma * _lp_norm(geometry, hess_norm, p)
        )

    if values.shape[1:] == (2, 2):
        if k > 1:
            raise ConfigurationError("tensor Sobolev norms support k <= 1")
        total = _lp_norm(geometry, _tensor_pointwise_norm(geometry, values), p)
        if k == 0:
            return total
        dT = np.empty((values.shape[0], 2, 2, 2))  # (n, K, I, J) = d_K T_IJ
        for I in range(2):
            for J in range(2):
                dT[:, :, I, J] = geometry.chart_derivs(values[:, I, J])
        gam = geometry.chart_christoffel
        covar = (
            dT
            - np.einsum("nLKI,nLJ->nKIJ", gam, values)
            - np.einsum("nLKJ,nIL->nKIJ", gam, values)
        )
        inv = geometry.induced_inv
        norm = np.sqrt(
            np.maximum(
                np.einsum(
                    "nKM,nIN,nJP,nKIJ,nMNP->n", inv, inv, inv, covar, covar
                ),
                0.0,
            )
        )
        return total + sigma * _lp_norm(geometry, norm, p)

    raise ConfigurationError(f"unsupported field shape {values.shape} for sobolev_norm")


def resample(
    surface: SurfaceEmbedding,
    new_center,
    grid: SphericalGrid | None = None,
    max_iter: int = 60,
    tol: float = 1e-13,
) -> SurfaceEmbedding:
    """Re-express the same point set as a radial graph about a new center.

    Solves per direction for the intersection of the ray from
    ``new_center`` with the surface; requires the surface to remain
    star-shaped about the new center.
    """
    grid = grid if grid is not None else surface.grid
    new_center = np.asarray(new_center, dtype=float).reshape(3)
    d = new_center - surface.center
    if np.all(d == 0):
        if grid is surface.grid:
            return surface
        # pure regrid: the flat coefficient layout is degree-major, so
        # padding/truncating is an exact band-limited restatement
        coeffs = np.zeros(grid.n_coeffs)
        n = min(grid.n_coeffs, surface.grid.n_coeffs)
        coeffs[:n] = surface.rho_coeffs[:n]
        return SurfaceEmbedding(grid, new_center, coeffs)
    N = grid.directions
    rho_scale = float(surface.radius_values.mean())
    t = np.full(grid.n_nodes, rho_scale)
    for _ in range(max_iter):
        q = d[None, :] + t[:, None] * N
        qn = np.linalg.norm(q, axis=1)
        ct = np.clip(q[:, 2] / qn, -1.0, 1.0)
        phi = np.mod(np.arctan2(q[:, 1], q[:, 0]), 2.0 * np.pi)
        rho_target = surface.grid.evaluate(
            surface.rho_coeffs, np.arccos(ct), phi, cos_theta=ct
        )
        # positive root of |d + t N| = rho_target
        dN = N @ d
        disc = dN**2 + rho_target**2 - d @ d
        if np.any(disc <= 0):
            raise SolverError("surface is not star-shaped about the requested center")
        t_new = -dN + np.sqrt(disc)
        shift = np.abs(t_new - t).max()
        t = t_new
        if shift < tol * rho_scale:
            break
    else:
        raise SolverError("resampling fixed point did not converge")
    return SurfaceEmbedding.from_radial_values(grid, t, new_center)
