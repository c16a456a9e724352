"""Momentum means/spreads per detection scheme and their closed-form limits.

``spread`` integrates the normalized k2 density of a scheme; the closed
forms (small-slit expansion, slit-independent inclusive width, wide-slit
limit, single-slit estimate) are evaluated exactly for comparison.

``total_variance_report`` decomposes the momentum variance over the left
detector coordinate kappa: the kappa-weighted average of the conditional
variances plus the variance of the conditional means must reproduce the
inclusive variance (law of total variance); the report returns both pieces,
the relative residual of the identity, and the diagnostic curves p(kappa),
m(kappa), v(kappa).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .conditioning import (
    Central,
    Conditioned,
    DetectionScheme,
    Inclusive,
    SlitConfig,
    _edge_tail_mass,
    _edge_tail_remainder,
    _envelope_std,
    _inclusive_density_batch,
    _mesh,
    _psi_mixed_matrix,
    _slit_transform_batch,
)
from .quadrature import (
    DEFAULT_SPEC,
    QuadratureSpec,
    ToleranceError,
    integrate_many,
    integrate_many_real_line,
    _WG,
    _WGK,
)
from .state import GaussianPairState, derived_widths

__all__ = [
    "SpreadResult",
    "DegenerateDensityError",
    "spread",
    "cd_small_a_formula",
    "id_formula",
    "cd_wide_slit_limit",
    "physical_slit_estimate",
    "TotalVarianceReport",
    "total_variance_report",
]

_TWO_PI = 2.0 * math.pi


class DegenerateDensityError(RuntimeError):
    """The scheme's k2 density carries no resolvable weight (e.g. the
    conditioning momentum lies far outside the populated band)."""


@dataclass(frozen=True)
class SpreadResult:
    scheme: DetectionScheme
    half_width: float
    mean_k2: float
    delta_k2: float
    numeric_error: float


def spread(state: GaussianPairState, slit: SlitConfig,
           scheme: DetectionScheme,
           spec: QuadratureSpec = DEFAULT_SPEC) -> SpreadResult:
    """Mean and standard deviation of k2 under the scheme's density.

    The density is |central amplitude|^2, |conditioned amplitude|^2, or the
    inclusive density; moments are taken over the whole line with the
    Gaussian-envelope window of width s_k (the conditioned tails are bounded
    by the unconditioned envelope, so the same window is sound for every
    scheme).
    """
    s_k, _, _ = derived_widths(state)
    a = slit.half_width
    cut = spec.tail_cutoff_multiplier

    if isinstance(scheme, Inclusive):
        def profile(k2s):
            return _inclusive_density_batch(state, slit, k2s, spec)
        min_panels = math.ceil(cut)
    elif isinstance(scheme, (Central, Conditioned)):
        kappa = scheme.kappa if isinstance(scheme, Conditioned) else 0.0

        def profile(k2s):
            tvals, terrs = _slit_transform_batch(state, slit, kappa, k2s,
                                                 spec)
            mags = np.abs(tvals)
            return mags * mags, 2.0 * mags * terrs
        # slit-edge ripples of the amplitude have wavelength
        # pi*(s+s-)^2 sum / (a*|d|) in k2; resolve them from the start
        ripple = 4 * cut * s_k * a * abs(state.sdiff) / (
            math.pi * state.ssum)
        min_panels = max(math.ceil(cut), math.ceil(ripple))
    else:
        raise TypeError(f"unknown detection scheme: {scheme!r}")

    def rows(k2s: np.ndarray) -> np.ndarray:
        # moment rows plus the density's own uncertainty rows, so the
        # amplitude-level quadrature errors propagate into the moments
        dens, derr = profile(k2s)
        k2sq = k2s * k2s
        return np.stack([dens, k2s * dens, k2sq * dens, derr, k2sq * derr])

    m0, m1, m2, e0, e2 = integrate_many_real_line(rows, s_k, spec,
                                                  min_panels=min_panels)
    e0v = max(e0.value.real, 0.0)
    e2v = max(e2.value.real, 0.0)
    w = m0.value.real
    dw = m0.error_estimate + e0v
    if not (w > 0.0) or w <= 10.0 * dw:
        raise DegenerateDensityError(
            f"total weight {w:.3e} indistinguishable from zero "
            f"(error estimate {dw:.3e})")
    mean = m1.value.real / w
    second = m2.value.real / w
    var = second - mean * mean

    d2 = m2.error_estimate + e2v
    d1 = m1.error_estimate + math.sqrt(e0v * e2v)
    dmean = d1 / w + abs(mean) * dw / w
    dsecond = d2 / w + abs(second) * dw / w
    dvar = dsecond + 2.0 * abs(mean) * dmean
    if var <= 10.0 * dvar:
        raise DegenerateDensityError(
            f"variance {var:.3e} indistinguishable from zero "
            f"(error estimate {dvar:.3e})")
    delta = math.sqrt(var)
    err = max(dmean, dvar / (2.0 * delta))
    return SpreadResult(scheme=scheme, half_width=a, mean_k2=mean,
                        delta_k2=delta, numeric_error=err)


def cd_small_a_formula(state: GaussianPairState, slit: SlitConfig) -> float:
    """Small-slit expansion of the central-detection spread:
    (1/2)*sqrt(s+^2+s-^2) * [1 - (a^2/12)*(s+^2-s-^2)^2/(s+^2+s-^2)].

    Truncated at O(a^2) inside the bracket; the omitted remainder is O(a^4).
    Raises ValueError once the bracket turns non-positive and warns when the
    correction exceeds 10% (expansion leaving its validity range).
    """
    s, d = state.ssum, state.sdiff
    correction = (slit.half_width ** 2 / 12.0) * d * d / s
    if correction >= 1.0:
        raise ValueError(
            f"small-slit expansion invalid: bracket 1 - {correction:.3g} <= 0")
    if correction > 0.1:
        warnings.warn(
            "small-slit correction exceeds 10%; expansion unreliable",
            stacklevel=2)
    return 0.5 * math.sqrt(s) * (1.0 - correction)


def id_formula(state: GaussianPairState) -> float:
    """Inclusive-detection spread sqrt(s+^2+s-^2)/2 -- independent of the
    slit width by the exact factorization of the inclusive density."""
    return 0.5 * math.sqrt(state.ssum)


def cd_wide_slit_limit(state: GaussianPairState) -> float:
    """Central-detection spread with the slit removed:
    s+*s- / sqrt(s+^2+s-^2)."""
    return state.sprod / math.sqrt(state.ssum)


def physical_slit_estimate(slit: SlitConfig) -> float:
    """Single-slit diffraction order of magnitude, 1/(2a); reported
    alongside computed spreads for scale."""
    return 1.0 / (2.0 * slit.half_width)


# --- total-variance decomposition -----------------------------------------

_KAPPA_CHUNK = 512


def _tail_moment_coefficients(state: GaussianPairState, slit: SlitConfig
                              ) -> tuple[np.ndarray, np.ndarray]:
    """k2-moments of the slit-edge tail coefficients, in closed form.

    With h(y, k2) = Psi(y, k2), the large-kappa density behaves like
    [c0(k2) - 2 Re(z(k2) e^{-2 i kappa a})] / (2 pi kappa^2).  Because both
    c0 and z are Gaussians (times a linear phase) in k2, their moments
    M_j = int k2^j c0 dk2 and Z_j = int k2^j z dk2 are exact Gaussian
    integrals.
    """
    a = slit.half_width
    s, d, pp = state.ssum, state.sdiff, state.sprod
    pref2 = 2.0 / math.pi * pp / s
    q0 = pref2 * math.exp(-2.0 * (pp * a) ** 2 / s)
    gauss = math.sqrt(math.pi * s / 2.0)  # int exp(-2 k^2/s) dk
    m0 = 2.0 * q0 * gauss
    m2 = m0 * s / 4.0
    # z(k2) = q0 * exp(-2 k2^2/s) * exp(2 i d a k2 / s)
    z0 = q0 * gauss * math.exp(-(d * a) ** 2 / (2.0 * s))
    z1 = 1j * (d * a / 2.0) * z0
    z2 = (s / 4.0 - (d * a) ** 2 / 4.0) * z0
    return np.array([m0, 0.0, m2]), np.array([z0, z1, z2], dtype=complex)


def _conditional_moments(state: GaussianPairState, slit: SlitConfig,
                         kappas: np.ndarray, spec: QuadratureSpec,
                         y_panels: int, k2_panels: int
                         ) -> tuple[np.ndarray, np.ndarray, int, int]:
    """k2-moments g_j(kappa) = int k2^j |Phi(kappa,k2)|^2 dk2, j = 0,1,2.

    Returns (g, err, y_panels, k2_panels): g with shape (3, n), the matching
    inner-quadrature error bounds, and the panel counts actually used (both
    meshes double until the embedded-rule differences are small against the
    row peaks).
    """
    a = slit.half_width
    s_k = 0.5 * math.sqrt(state.ssum)
    cut = spec.tail_cutoff_multiplier
    lim = cut * s_k
    kappas = np.asarray(kappas, dtype=float)

    while True:
        y, hy = _mesh(a, y_panels)
        k2, hk = _mesh(lim, k2_panels)
        wy15 = np.tile(_WGK, y_panels) * hy
        wy7 = np.tile(_WG, y_panels) * hy
        wk15 = np.tile(_WGK, k2_panels) * hk
        wk7 = np.tile(_WG, k2_panels) * hk
        kmom = np.stack([np.ones_like(k2), k2, k2 * k2], axis=1)  # (nk2, 3)
        psi = _psi_mixed_matrix(state, y, k2)
        w15psi = wy15[:, None] * psi
        w7psi = wy7[:, None] * psi

        n = kappas.size
        g15 = np.empty((n, 3))
        ey = np.empty((n, 3))
        ek = np.empty((n, 3))
        for start in range(0, n, _KAPPA_CHUNK):
            chunk = kappas[start:start + _KAPPA_CHUNK]
            phase = np.exp(-1j * np.outer(chunk, y))
            amp15 = phase @ w15psi
            amp7 = phase @ w7psi
            dens15 = (amp15.real ** 2 + amp15.imag ** 2) / _TWO_PI
            dens7 = (amp7.real ** 2 + amp7.imag ** 2) / _TWO_PI
            stop = start + chunk.size
            g15[start:stop] = dens15 @ (wk15[:, None] * kmom)
            ek[start:stop] = np.abs(dens15 @ (wk7[:, None] * kmom)
                                    - g15[start:stop])
            ey[start:stop] = np.abs(dens7 @ (wk15[:, None] * kmom)
                                    - g15[start:stop])

        scale = np.maximum(np.max(np.abs(g15), axis=0), spec.abs_tol)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * scale)
        need_y = bool(np.any(ey.max(axis=0) > tol))
        need_k = bool(np.any(ek.max(axis=0) > tol))
        if not (need_y or need_k):
            return g15.T, (ey + ek).T, y_panels, k2_panels
        total = (y_panels + k2_panels) * 15
        if total > 64 * spec.max_subdivisions:
            raise ToleranceError(
                "conditional-moment meshes did not converge "
                f"(y_panels={y_panels}, k2_panels={k2_panels})", None)
        if need_y:
            y_panels *= 2
        if need_k:
            k2_panels *= 2


def _moment_mesh_sizes(state: GaussianPairState, slit: SlitConfig,
                       spec: QuadratureSpec, kappa_max: float
                       ) -> tuple[int, int]:
    a = slit.half_width
    s, d = state.ssum, state.sdiff
    s_k = 0.5 * math.sqrt(s)
    cut = spec.tail_cutoff_multiplier
    y_panels = max(1,
                   math.ceil(2 * a * kappa_max / math.pi),
                   math.ceil(2 * a / _envelope_std(state)))
    ripple = 4 * cut * s_k * a * abs(d) / (math.pi * s)
    k2_panels = max(2 * math.ceil(cut), math.ceil(ripple) + math.ceil(cut))
    return y_panels, k2_panels


@dataclass(frozen=True)
class TotalVarianceReport:
    """Decomposition of the inclusive momentum variance over kappa.

    within_variance  = E_kappa[v(kappa)]   (average conditional variance)
    between_variance = Var_kappa[m(kappa)] (variance of conditional means)
    residual is the relative defect of within + between against the
    slit-independent inclusive variance; the curves sample the kappa
    marginal p, conditional mean m, and conditional variance v.
    """

    within_variance: float
    between_variance: float
    reference_variance: float
    residual: float
    total_weight: float
    numeric_error: float
    kappa_grid: np.ndarray
    weight_density: np.ndarray
    conditional_mean: np.ndarray
    conditional_variance: np.ndarray


def total_variance_report(state: GaussianPairState, slit: SlitConfig,
                          spec: QuadratureSpec = DEFAULT_SPEC,
                          rel_target: float = 1e-7,
                          kappa_cut: float | None = None,
                          curve_points: int = 41) -> TotalVarianceReport:
    """Verify E_kappa[v] + Var_kappa[m] = (inclusive spread)^2 numerically.

    The post-slit joint density |Phi(kappa, k2)|^2 is reduced to its k2
    moments g_j(kappa); the kappa integrals of g0, g1, g2 and g1^2/g0 give
    the total weight, the mean, the within/between split, and the identity
    residual.  Slit edges make every g_j decay like 1/kappa^2, so the
    integrals are cut at |kappa| <= cut and completed with closed-form
    edge-tail corrections (exact Gaussian moments of the edge
    coefficients); ``rel_target`` sizes the automatic cut, ``kappa_cut``
    overrides it.
    """
    a = slit.half_width
    s = state.ssum
    v_id = s / 4.0  # inclusive variance, exact closed form
    s_k = 0.5 * math.sqrt(s)
    _, s_y, _ = derived_widths(state)
    mcoef, zcoef = _tail_moment_coefficients(state, slit)
    w_rough = math.erf(a / (math.sqrt(2.0) * s_y))

    if kappa_cut is None:
        budget = 0.25 * rel_target * v_id * max(w_rough, 1e-6)
        scale = mcoef[0] * v_id + mcoef[2]
        cut = (scale / (4.0 * a * budget)) ** (1.0 / 3.0)
        cut = min(max(cut, 60.0), 700.0)
    else:
        cut = float(kappa_cut)

    # the odd moment integrates to ~0, so give the outer rule an absolute
    # floor scaled to the even rows instead of chasing a relative target
    outer_spec = QuadratureSpec(
        rel_tol=spec.rel_tol,
        abs_tol=max(spec.abs_tol, 0.1 * spec.rel_tol * max(w_rough, 1e-6)),
        max_subdivisions=spec.max_subdivisions,
        tail_cutoff_multiplier=spec.tail_cutoff_multiplier)

    y_panels, k2_panels = _moment_mesh_sizes(state, slit, spec, cut)
    inner_err = np.zeros(3)
    mesh = {"y": y_panels, "k2": k2_panels}

    def rows(kappas: np.ndarray) -> np.ndarray:
        g, err, mesh["y"], mesh["k2"] = _conditional_moments(
            state, slit, kappas, spec, mesh["y"], mesh["k2"])
        np.maximum(inner_err, err.max(axis=1), out=inner_err)
        b = g[1] * g[1] / np.maximum(g[0], 1e-300)
        return np.stack([g[0], g[1], g[2], b])

    min_panels = max(8, math.ceil(2 * a * (2 * cut) / math.pi))
    q0r, q1r, q2r, br = integrate_many(rows, -cut, cut, outer_spec,
                                       min_panels=min_panels)

    # closed-form tail corrections beyond the cut
    tails = np.array([_edge_tail_mass(mcoef[j], zcoef[j], a, cut)
                      for j in range(3)])
    rems = np.array([_edge_tail_remainder(abs(mcoef[j]) + 2 * abs(zcoef[j]),
                                          a, cut) for j in range(3)])
    # g1^2/g0 tail: oscillation-averaged leading term, O(1/cut)
    theta = np.linspace(0.0, _TWO_PI, 256, endpoint=False)
    num_t = (2.0 * (zcoef[1] * np.exp(-1j * theta)).real) ** 2
    den_t = mcoef[0] - 2.0 * (zcoef[0] * np.exp(-1j * theta)).real
    # where den -> 0 the numerator vanishes like den^2, so the ratio -> 0
    ratio = np.zeros_like(den_t)
    alive = den_t > 1e-12 * mcoef[0]
    ratio[alive] = num_t[alive] / den_t[alive]
    b_tail = float(np.mean(ratio)) / (math.pi * cut)
    # (mean over the phase of the 1/kappa^2 coefficient) * int_{|k|>cut} dk/k^2

    weight = q0r.value.real + tails[0]
    q1 = q1r.value.real + tails[1]
    q2 = q2r.value.real + tails[2]
    b_int = br.value.real + b_tail

    mean = q1 / weight
    within = (q2 - b_int) / weight
    between = b_int / weight - mean * mean
    residual = abs(within + between - v_id) / v_id

    err = (q0r.error_estimate + q1r.error_estimate + q2r.error_estimate
           + br.error_estimate + float(np.sum(rems)) + abs(b_tail)
           + float(np.sum(inner_err)) * 2 * cut) / weight

    # diagnostic curves on a kappa grid covering the populated band
    span = 8.0 * max(s_k, 0.5 / a)
    grid = np.linspace(-span, span, curve_points)
    gc, _, _, _ = _conditional_moments(state, slit, grid, spec,
                                       *_moment_mesh_sizes(state, slit, spec,
                                                           span))
    p = gc[0] / weight
    m_curve = gc[1] / np.maximum(gc[0], 1e-300)
    v_curve = gc[2] / np.maximum(gc[0], 1e-300) - m_curve ** 2

    return TotalVarianceReport(
        within_variance=within,
        between_variance=between,
        reference_variance=v_id,
        residual=residual,
        total_weight=weight,
        numeric_error=err,
        kappa_grid=grid,
        weight_density=p,
        conditional_mean=m_curve,
        conditional_variance=v_curve,
    )
