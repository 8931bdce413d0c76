"""Analytic ambient 3-metrics and initial data sets.

Every model supplies closed-form evaluators for the metric and its first
and second coordinate derivatives on ``|x| > r_min`` (finite differences
appear only in tests).  Initial data attach a symmetric two-tensor
``kbar`` with first derivatives and a lapse; the energy and momentum
densities are *defined* through the constraint equations

    2*rho = S - |kbar|^2 + (tr kbar)^2,      J = div(tr(kbar) g - kbar),

so every model is a valid data set by construction.

Array conventions (vectorized over leading axes):

* points ``x``: shape ``(..., 3)``
* metric ``g``: ``(..., 3, 3)``
* first derivatives ``dg[..., k, i, j] = d_k g_ij``
* second derivatives ``d2g[..., l, k, i, j] = d_l d_k g_ij``
* ``kbar`` like ``g``; ``dkbar`` like ``dg``; lapse scalar ``(...,)`` with
  gradient ``(..., 3)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, ModelError
from .sphere import build_grid

__all__ = [
    "DecayClass",
    "MetricModel",
    "InitialDataModel",
    "DecayReport",
    "euclidean",
    "schwarzschild",
    "translated",
    "interpolated",
    "perturbed_schwarzschild",
    "synthetic_data",
    "time_symmetric_data",
    "artificial_data",
    "christoffel",
    "christoffel_deriv",
    "ricci",
    "scalar_curvature",
    "momentum_density",
    "energy_density",
    "verify_decay",
]

_ID3 = np.eye(3)


@dataclass(frozen=True)
class DecayClass:
    """Decay order bookkeeping: ``|d^g (g - gS)| <= constant / r^(1+|g|+epsilon)``.

    ``delta`` is the extrinsic-curvature exponent of the matching data set
    (``|d^g kbar| <= c / r^(1+|g|+delta)``); ``order`` is the number of
    controlled derivatives.
    """

    epsilon: float
    delta: float = 1.0
    constant: float | None = None
    order: int = 2

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ModelError(f"decay rate epsilon must be positive, got {self.epsilon}")
        if not (0 < self.delta <= 1 + self.epsilon):
            raise ModelError(f"delta must lie in (0, 1 + epsilon], got {self.delta}")
        if self.constant is not None and self.constant < 0:
            raise ModelError("decay constant must be nonnegative")
        if self.order < 2:
            raise ModelError("need at least two controlled derivative orders")


@dataclass(frozen=True)
class MetricModel:
    """Ambient Riemannian 3-metric with analytic derivatives.

    Evaluation is restricted to the exterior of the exclusion ball
    (center ``exclusion_center``, radius ``r_min``), which keeps surface
    computations in the asymptotic regime and away from the isotropic
    coordinate singularity.
    """

    name: str
    mass: float
    r_min: float
    decay: DecayClass
    exclusion_center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    _g: Callable = None
    _dg: Callable = None
    _d2g: Callable = None
    _alpha: Callable = None
    _dalpha: Callable = None

    def _check_domain(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != 3:
            raise ModelError(f"points must have shape (..., 3), got {x.shape}")
        r = np.linalg.norm(x - self.exclusion_center, axis=-1)
        if np.any(r <= self.r_min):
            raise DomainError(
                f"point at radius {r.min():.3g} inside exclusion radius {self.r_min:.3g} "
                f"of model '{self.name}'"
            )
        return x

    def metric(self, x) -> np.ndarray:
        return self._g(self._check_domain(x))

    def metric_deriv(self, x) -> np.ndarray:
        return self._dg(self._check_domain(x))

    def metric_deriv2(self, x) -> np.ndarray:
        return self._d2g(self._check_domain(x))

    def lapse(self, x) -> np.ndarray:
        return self._alpha(self._check_domain(x))

    def lapse_deriv(self, x) -> np.ndarray:
        return self._dalpha(self._check_domain(x))


@dataclass(frozen=True)
class InitialDataModel:
    """Initial data set: base metric plus extrinsic curvature and lapse."""

    base: MetricModel
    time_symmetric: bool
    _kbar: Callable = None
    _dkbar: Callable = None
    _alpha: Callable = None
    _dalpha: Callable = None

    def kbar(self, x) -> np.ndarray:
        return self._kbar(self.base._check_domain(x))

    def kbar_deriv(self, x) -> np.ndarray:
        return self._dkbar(self.base._check_domain(x))

    def lapse(self, x) -> np.ndarray:
        fn = self._alpha if self._alpha is not None else self.base._alpha
        return fn(self.base._check_domain(x))

    def lapse_deriv(self, x) -> np.ndarray:
        fn = self._dalpha if self._dalpha is not None else self.base._dalpha
        return fn(self.base._check_domain(x))


# ---------------------------------------------------------------------------
# model constructors
# ---------------------------------------------------------------------------


def _schwarzschild_evaluators(m: float):
    def g(x):
        r = np.linalg.norm(x, axis=-1)
        phi = 1.0 + m / (2.0 * r)
        return phi[..., None, None] ** 4 * _ID3

    def dg(x):
        r = np.linalg.norm(x, axis=-1)[..., None]
        phi = 1.0 + m / (2.0 * r)
        dphi = -(m / 2.0) * x / r**3
        coef = 4.0 * phi**3 * dphi  # (..., 3)
        return coef[..., :, None, None] * _ID3

    def d2g(x):
        r = np.linalg.norm(x, axis=-1)[..., None]
        phi = (1.0 + m / (2.0 * r))[..., None]
        dphi = -(m / 2.0) * x / r**3
        d2phi = -(m / 2.0) * (
            _ID3 / r[..., None] ** 3
            - 3.0 * x[..., :, None] * x[..., None, :] / r[..., None] ** 5
        )
        coef = 12.0 * phi**2 * dphi[..., :, None] * dphi[..., None, :] + 4.0 * phi**3 * d2phi
        return coef[..., :, :, None, None] * _ID3

    def alpha(x):
        r = np.linalg.norm(x, axis=-1)
        return (1.0 - 2.0 * m / r) / (1.0 + 2.0 * m / r)

    def dalpha(x):
        r = np.linalg.norm(x, axis=-1)[..., None]
        return (4.0 * m / (r + 2.0 * m) ** 2) * x / r

    return g, dg, d2g, alpha, dalpha


def schwarzschild(m: float) -> MetricModel:
    """Conformally flat Schwarzschild timeslice ``(1 + m/2r)^4 * euclidean``."""
    if m <= 0:
        raise ModelError(f"Schwarzschild mass must be positive, got {m}")
    g, dg, d2g, alpha, dalpha = _schwarzschild_evaluators(m)
    return MetricModel(
        name=f"schwarzschild(m={m:g})",
        mass=m,
        r_min=max(4.0 * m, 1.0),
        decay=DecayClass(epsilon=1.0, constant=0.0),
        _g=g,
        _dg=dg,
        _d2g=d2g,
        _alpha=alpha,
        _dalpha=dalpha,
    )


def euclidean() -> MetricModel:
    """Flat ambient space; the zero-mass limit used in oracle tests."""
    g, dg, d2g, alpha, dalpha = _schwarzschild_evaluators(0.0)
    return MetricModel(
        name="euclidean",
        mass=0.0,
        r_min=0.0,
        decay=DecayClass(epsilon=1.0, constant=0.0),
        _g=g,
        _dg=dg,
        _d2g=d2g,
        _alpha=alpha,
        _dalpha=dalpha,
    )


def translated(model: MetricModel, a: Sequence[float]) -> MetricModel:
    """The same geometry expressed in coordinates shifted by ``a``."""
    a = np.asarray(a, dtype=float).reshape(3)

    def shift(fn):
        return lambda x: fn(np.asarray(x, dtype=float) - a)

    return replace(
        model,
        name=f"translated({model.name}, a={a.tolist()})",
        exclusion_center=model.exclusion_center + a,
        _g=shift(model._g),
        _dg=shift(model._dg),
        _d2g=shift(model._d2g),
        _alpha=shift(model._alpha),
        _dalpha=shift(model._dalpha),
    )


def _anchored_schwarzschild_evaluators(mass: float, anchor: np.ndarray):
    fns = _schwarzschild_evaluators(mass)
    if np.all(anchor == 0):
        return fns
    return tuple((lambda f: (lambda x: f(np.asarray(x, dtype=float) - anchor)))(f) for f in fns)


def interpolated(model: MetricModel, tau: float, anchor=None) -> MetricModel:
    """Affine interpolation ``gS + tau * (g - gS)`` toward Schwarzschild.

    ``tau = 0`` is the Schwarzschild metric of the model's mass, ``tau = 1``
    the model itself; the lapse stays the Schwarzschild one.  The
    Schwarzschild reference is centered at ``anchor`` (default: the
    model's exclusion center, so translated models interpolate toward a
    translated reference and the family is translation-equivariant).
    """
    if not (0.0 <= tau <= 1.0):
        raise ModelError(f"interpolation parameter must lie in [0, 1], got {tau}")
    anchor = np.asarray(
        anchor if anchor is not None else model.exclusion_center, dtype=float
    ).reshape(3)
    gs, dgs, d2gs, alpha, dalpha = _anchored_schwarzschild_evaluators(model.mass, anchor)

    def mix(fa, fb):
        return lambda x: fa(x) + tau * (fb(x) - fa(x))

    return replace(
        model,
        name=f"interpolated({model.name}, tau={tau:g})",
        _g=mix(gs, model._g),
        _dg=mix(dgs, model._dg),
        _d2g=mix(d2gs, model._d2g),
        _alpha=alpha,
        _dalpha=dalpha,
    )


_PERTURBATION_SHAPES = ("even", "odd")


def perturbed_schwarzschild(
    m: float, epsilon: float, amplitude: float, shape: str = "even"
) -> MetricModel:
    """Schwarzschild plus a closed-form decaying perturbation.

    Shapes: ``"even"`` adds ``A * delta_ij / r^(1+eps)`` (parity even, keeps
    all centers at the origin); ``"odd"`` adds ``A * x1 * delta_ij / r^(2+eps)``
    (parity odd, drives the centers along the x-axis).
    """
    if shape not in _PERTURBATION_SHAPES:
        raise ModelError(f"unknown perturbation shape {shape!r}; choose from {_PERTURBATION_SHAPES}")
    if epsilon <= 0:
        raise ModelError("perturbation decay epsilon must be positive")
    base = schwarzschild(m)
    A = float(amplitude)

    if shape == "even":

        def p(x):
            r = np.linalg.norm(x, axis=-1)
            return (A * r ** -(1.0 + epsilon))[..., None, None] * _ID3

        def dp(x):
            r = np.linalg.norm(x, axis=-1)[..., None]
            coef = -A * (1.0 + epsilon) * x * r ** -(3.0 + epsilon)
            return coef[..., :, None, None] * _ID3

        def d2p(x):
            r = np.linalg.norm(x, axis=-1)[..., None, None]
            xx = x[..., :, None] * x[..., None, :]
            coef = -A * (1.0 + epsilon) * (
                _ID3 * r ** -(3.0 + epsilon) - (3.0 + epsilon) * xx * r ** -(5.0 + epsilon)
            )
            return coef[..., :, :, None, None] * _ID3

        # order-by-order sup of r^(1+|g|+eps)|d^g p| over directions
        cbar = A * max(1.0, 1.0 + epsilon, (1.0 + epsilon) * (4.0 + epsilon))
    else:

        def p(x):
            r = np.linalg.norm(x, axis=-1)
            return (A * x[..., 0] * r ** -(2.0 + epsilon))[..., None, None] * _ID3

        def dp(x):
            r = np.linalg.norm(x, axis=-1)[..., None]
            e1 = _ID3[0]
            coef = A * (e1 * r ** -(2.0 + epsilon) - (2.0 + epsilon) * x[..., 0:1] * x * r ** -(4.0 + epsilon))
            return coef[..., :, None, None] * _ID3

        def d2p(x):
            r = np.linalg.norm(x, axis=-1)[..., None, None]
            e1 = _ID3[0]
            x1 = x[..., 0][..., None, None]
            xx = x[..., :, None] * x[..., None, :]
            e1x = e1[:, None] * x[..., None, :]
            xe1 = x[..., :, None] * e1[None, :]
            coef = A * (
                -(2.0 + epsilon) * (e1x + xe1 + x1 * _ID3) * r ** -(4.0 + epsilon)
                + (2.0 + epsilon) * (4.0 + epsilon) * x1 * xx * r ** -(6.0 + epsilon)
            )
            return coef[..., :, :, None, None] * _ID3

        cbar = A * max(1.0, 3.0 + epsilon, (2.0 + epsilon) * (7.0 + epsilon))

    def add(fa, fb):
        return lambda x: fa(x) + fb(x)

    return replace(
        base,
        name=f"perturbed(m={m:g}, eps={epsilon:g}, A={A:g}, {shape})",
        decay=DecayClass(epsilon=epsilon, constant=cbar),
        _g=add(base._g, p),
        _dg=add(base._dg, dp),
        _d2g=add(base._d2g, d2p),
    )


def time_symmetric_data(base: MetricModel) -> InitialDataModel:
    """Data with vanishing extrinsic curvature (momentum-free)."""

    def kb(x):
        return np.zeros(x.shape[:-1] + (3, 3))

    def dkb(x):
        return np.zeros(x.shape[:-1] + (3, 3, 3))

    return InitialDataModel(base=base, time_symmetric=True, _kbar=kb, _dkbar=dkb)


def synthetic_data(
    base: MetricModel, delta: float, amplitude: float, direction: Sequence[float] = (1.0, 0.0, 0.0)
) -> InitialDataModel:
    """Closed-form extrinsic curvature ``B (b_i x_j + b_j x_i) / r^(2+delta)``.

    Decays like ``r^-(1+delta)``; the lapse is the Schwarzschild one of the
    base mass, so the data satisfy the declared decay class with any
    ``delta`` in ``(0, 1]``.
    """
    if not (0.0 < delta <= 1.0):
        raise ModelError(f"kbar decay exponent delta must lie in (0, 1], got {delta}")
    B = float(amplitude)
    if B == 0.0:
        return time_symmetric_data(base)
    b = np.asarray(direction, dtype=float).reshape(3)
    nb = np.linalg.norm(b)
    if nb == 0:
        raise ModelError("direction must be a nonzero vector")
    b = b / nb

    def kb(x):
        r = np.linalg.norm(x, axis=-1)[..., None, None]
        bx = b[:, None] * x[..., None, :] + x[..., :, None] * b[None, :]
        return B * bx * r ** -(2.0 + delta)

    # dlin[l, i, j] = d_l (b_i x_j + b_j x_i) = b_i delta_jl + b_j delta_il
    dlin = _ID3[:, None, :] * b[None, :, None] + _ID3[:, :, None] * b[None, None, :]

    def dkb(x):
        r = np.linalg.norm(x, axis=-1)[..., None, None, None]
        bx = b[:, None] * x[..., None, :] + x[..., :, None] * b[None, :]
        return B * (
            dlin * r ** -(2.0 + delta)
            - (2.0 + delta) * x[..., :, None, None] * bx[..., None, :, :] * r ** -(4.0 + delta)
        )

    return InitialDataModel(base=base, time_symmetric=False, _kbar=kb, _dkbar=dkb)


def artificial_data(
    model: MetricModel, tau: float, factor: float = 0.5, anchor=None
) -> InitialDataModel:
    """Slice data of the artificial product spacetime at interpolation time ``tau``.

    The ambient metric is ``interpolated(model, tau)``; the slice extrinsic
    curvature is ``factor * (gS - g)`` with unit lapse.  ``factor = 0.5`` is
    the definitional value ``-(1/2) d_tau g_tau``; ``factor = 2.0`` is kept
    as a diagnostic variant (see the decay/center comparison reports).
    """
    anchor = np.asarray(
        anchor if anchor is not None else model.exclusion_center, dtype=float
    ).reshape(3)
    ambient = interpolated(model, tau, anchor=anchor)
    gs, dgs, _, _, _ = _anchored_schwarzschild_evaluators(model.mass, anchor)

    def kb(x):
        return factor * (gs(x) - model._g(x))

    def dkb(x):
        return factor * (dgs(x) - model._dg(x))

    def alpha(x):
        return np.ones(np.asarray(x).shape[:-1])

    def dalpha(x):
        return np.zeros(np.asarray(x).shape)

    trivial = model.decay.constant == 0.0
    return InitialDataModel(
        base=ambient,
        time_symmetric=trivial,
        _kbar=kb,
        _dkbar=dkb,
        _alpha=alpha,
        _dalpha=dalpha,
    )


# ---------------------------------------------------------------------------
# curvature assembly
# ---------------------------------------------------------------------------


def _inverse_metric(g):
    return np.linalg.inv(g)


def christoffel(model: MetricModel, x) -> np.ndarray:
    """Christoffel symbols ``Gamma[..., k, i, j] = Gamma^k_ij``."""
    g = model.metric(x)
    dg = model.metric_deriv(x)
    ginv = _inverse_metric(g)
    return _christoffel_from(ginv, dg)


def _christoffel_from(ginv, dg):
    t = (
        np.einsum("...ilj->...lij", dg)
        + np.einsum("...jli->...lij", dg)
        - np.einsum("...lij->...lij", dg)
    )
    return 0.5 * np.einsum("...kl,...lij->...kij", ginv, t)


def christoffel_deriv(model: MetricModel, x) -> np.ndarray:
    """``dGamma[..., m, k, i, j] = d_m Gamma^k_ij`` from analytic d2g."""
    g = model.metric(x)
    dg = model.metric_deriv(x)
    d2g = model.metric_deriv2(x)
    ginv = _inverse_metric(g)
    dginv = -np.einsum("...ka,...mab,...bl->...mkl", ginv, dg, ginv)
    t = (
        np.einsum("...ilj->...lij", dg)
        + np.einsum("...jli->...lij", dg)
        - dg
    )
    dt = (
        np.einsum("...milj->...mlij", d2g)
        + np.einsum("...mjli->...mlij", d2g)
        - d2g
    )
    return 0.5 * (
        np.einsum("...mkl,...lij->...mkij", dginv, t)
        + np.einsum("...kl,...mlij->...mkij", ginv, dt)
    )


def ricci(model: MetricModel, x) -> np.ndarray:
    """Ricci tensor assembled from Gamma and its analytic derivative."""
    gamma = christoffel(model, x)
    dgamma = christoffel_deriv(model, x)
    term1 = np.einsum("...kkij->...ij", dgamma)
    term2 = np.einsum("...ikkj->...ij", dgamma)
    term3 = np.einsum("...kkl,...lij->...ij", gamma, gamma)
    term4 = np.einsum("...kil,...lkj->...ij", gamma, gamma)
    return term1 - term2 + term3 - term4


def scalar_curvature(model: MetricModel, x) -> np.ndarray:
    g = model.metric(x)
    return np.einsum("...ij,...ij->...", _inverse_metric(g), ricci(model, x))


def momentum_density(data: InitialDataModel, x) -> np.ndarray:
    """Constraint momentum density ``J_i = (div(tr(kbar) g - kbar))_i``."""
    model = data.base
    g = model.metric(x)
    dg = model.metric_deriv(x)
    kb = data.kbar(x)
    dkb = data.kbar_deriv(x)
    ginv = _inverse_metric(g)
    dginv = -np.einsum("...ka,...mab,...bl->...mkl", ginv, dg, ginv)
    hbar = np.einsum("...ab,...ab->...", ginv, kb)
    dhbar = np.einsum("...mab,...ab->...m", dginv, kb) + np.einsum(
        "...ab,...mab->...m", ginv, dkb
    )
    pi = hbar[..., None, None] * g - kb
    dpi = (
        dhbar[..., :, None, None] * g[..., None, :, :]
        + hbar[..., None, None, None] * dg
        - dkb
    )
    gamma = _christoffel_from(ginv, dg)
    div = (
        np.einsum("...jk,...jki->...i", ginv, dpi)
        - np.einsum("...jk,...ljk,...li->...i", ginv, gamma, pi)
        - np.einsum("...jk,...lji,...kl->...i", ginv, gamma, pi)
    )
    return div


def energy_density(data: InitialDataModel, x) -> np.ndarray:
    """Constraint energy density ``2 rho = S - |kbar|^2 + (tr kbar)^2``."""
    model = data.base
    g = model.metric(x)
    ginv = _inverse_metric(g)
    kb = data.kbar(x)
    hbar = np.einsum("...ab,...ab->...", ginv, kb)
    ksq = np.einsum("...ac,...bd,...ab,...cd->...", ginv, ginv, kb, kb)
    return 0.5 * (scalar_curvature(model, x) - ksq + hbar**2)


# ---------------------------------------------------------------------------
# decay validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayReport:
    """Measured decay constants of a model or data set.

    ``constants[quantity][order]`` is ``max_r sup_dir r^(1+order+rate) *
    |d^order difference|`` with the rate appropriate for the quantity;
    ``per_radius`` holds the radius-resolved sups of the zeroth order for
    exponent fitting.
    """

    radii: tuple
    constants: dict
    per_radius: dict
    fitted_exponents: dict
    declared_constant: float | None
    passed: bool
    growing: bool


def _direction_set(n_level: int = 8) -> np.ndarray:
    return build_grid(n_level).directions


def verify_decay(
    target: MetricModel | InitialDataModel,
    decay: DecayClass | None = None,
    radii: Sequence[float] = (16.0, 32.0, 64.0, 128.0, 256.0),
    pass_margin: float = 1.0,
) -> DecayReport:
    """Measure asymptotic decay against a declared class.

    Samples ``r^(1+|order|+rate) |d^order (quantity - reference)|`` on a
    fixed direction set for orders 0..2 (metric) and 0..1 (kbar, lapse) and
    reports the sups; ``passed`` checks them against the declared constant
    when one is given.  A monotone factor >2 growth of the order-0 sup from
    the smallest to the largest radius marks the report as ``growing``
    (declared rate too optimistic).
    """
    radii = tuple(float(r) for r in radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ModelError("sample radii must be strictly increasing")
    if isinstance(target, InitialDataModel):
        data, model = target, target.base
    else:
        data, model = None, target
    if decay is None:
        decay = model.decay
    eps, delta = decay.epsilon, decay.delta
    dirs = _direction_set()

    gs, dgs, d2gs, alphas, dalphas = _schwarzschild_evaluators(model.mass)
    per_radius: dict = {}
    constants: dict = {}

    def record(quantity, order, rate, sups):
        weighted = [r ** (1.0 + order + rate) * s for r, s in zip(radii, sups)]
        constants.setdefault(quantity, {})[order] = max(weighted)
        if order == 0:
            per_radius[quantity] = {"sup": tuple(sups), "weighted": tuple(weighted)}

    def sup_abs(arr):
        flat = arr.reshape(arr.shape[0], -1)
        return np.abs(flat).max()

    diffs0, diffs1, diffs2 = [], [], []
    for r in radii:
        pts = r * dirs
        diffs0.append(sup_abs(model.metric(pts) - gs(pts)))
        diffs1.append(sup_abs(model.metric_deriv(pts) - dgs(pts)))
        diffs2.append(sup_abs(model.metric_deriv2(pts) - d2gs(pts)))
    record("metric", 0, eps, diffs0)
    record("metric", 1, eps, diffs1)
    record("metric", 2, eps, diffs2)

    if data is not None:
        k0, k1, a0, a1 = [], [], [], []
        for r in radii:
            pts = r * dirs
            k0.append(sup_abs(data.kbar(pts)))
            k1.append(sup_abs(data.kbar_deriv(pts)))
            a0.append(sup_abs(data.lapse(pts) - alphas(pts)))
            a1.append(sup_abs(data.lapse_deriv(pts) - dalphas(pts)))
        record("kbar", 0, delta, k0)
        record("kbar", 1, delta, k1)
        record("lapse", 0, eps - delta, a0)
        record("lapse", 1, eps - delta, a1)

    fitted = {}
    for quantity, row in per_radius.items():
        sups = np.asarray(row["sup"])
        if np.all(sups > 0):
            slope = np.polyfit(np.log(radii), np.log(sups), 1)[0]
            fitted[quantity] = -slope  # measured decay exponent 1 + rate
        else:
            fitted[quantity] = np.inf

    growing = False
    for row in per_radius.values():
        w = row["weighted"]
        if w[-1] > 2.0 * max(w[0], 1e-300) and w[0] > 0:
            growing = True

    declared = decay.constant
    if declared is None:
        passed = not growing
    else:
        top = max(v for orders in constants.values() for v in orders.values())
        passed = top <= pass_margin * max(declared, 1e-12) and not growing
    return DecayReport(
        radii=radii,
        constants=constants,
        per_radius=per_radius,
        fitted_exponents=fitted,
        declared_constant=declared,
        passed=passed,
        growing=growing,
    )
