"""
Quadrature oracle for heralded two-source HOM interference.

The coincidence probability behind a 50:50 beam splitter is

    P(delay) = 1/2 [1 - eta Re I(delay) / (N_a N_b)]
    I(delay) = int f_a(s, t) f_a*(s', t) f_b(s', t') f_b*(s, t') exp(i (s - s') delay)

with f(s, t) = pump(s + t) g_S(s) g_T(t) in detuning variables, N the single-pair
norms and eta the polarization overlap. Every factor is gaussian, so the
integrand is exp(-z^T M z / 2 + i delay g^T z). Whitening M turns the weight into
exp(-|y|^2) and a rotation puts the phase on one axis; the tensor-product
Gauss-Hermite rule then factorizes into one-dimensional rules.
"""
import functools
import math
from typing import Callable, Optional, Sequence, Tuple, List

import numpy as np
from pydantic import BaseModel, Field

from ..errors import ConvergenceError, CoverageError, DomainError, FitError, DivergenceError
from ..state import DipModel, DipParams, JointSpectralAmplitude, OracleSettings, SpectralGaussian
from .analytic import dip_width, visibility
from .fitting import fit_gaussian_dip
from .units import PUMP_CENTER_NM, NM

RESIDUAL_LIMIT = 1e-4
COVERAGE_SIGMAS = 5.0


@functools.lru_cache(maxsize=32)
def hermite_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    # physicists' nodes/weights for int exp(-x^2) f(x) dx
    return np.polynomial.hermite.hermgauss(order)


def jsa_from_params(params: DipParams, pump_center_nm: float = PUMP_CENTER_NM) -> JointSpectralAmplitude:
    pump_wl = pump_center_nm * NM
    signal = SpectralGaussian(center_wavelength=2 * pump_wl, rms_bandwidth_omega=params.sigma_S)
    trigger = None
    if not params.trigger_unfiltered:
        trigger = SpectralGaussian(center_wavelength=2 * pump_wl, rms_bandwidth_omega=params.sigma_T)
    return JointSpectralAmplitude(
        pump=SpectralGaussian(center_wavelength=pump_wl, rms_bandwidth_omega=params.sigma_p),
        signal_filter=signal,
        trigger_filter=trigger,
    )


def _add_term(m: np.ndarray, coeffs: Sequence[float], sigma: float) -> None:
    # amplitude factor exp(-(c.z)^2 / 4 sigma^2) contributes c c^T / (2 sigma^2)
    c = np.asarray(coeffs, dtype=float)
    m += np.outer(c, c) / (2.0 * sigma ** 2)


def _amplitude_terms(jsa: JointSpectralAmplitude, s: int, t: int, n: int) -> List[Tuple[np.ndarray, float]]:
    # quadratic terms of ln f(z_s, z_t) in an n-variable space
    def unit(*idx):
        v = np.zeros(n)
        for i in idx:
            v[i] = 1.0
        return v
    terms = [(unit(s, t), jsa.pump.rms_bandwidth_omega), (unit(s), jsa.signal_filter.rms_bandwidth_omega)]
    if jsa.trigger_filter is not None:
        terms.append((unit(t), jsa.trigger_filter.rms_bandwidth_omega))
    return terms


class GaussianIntegral:
    """
    int exp(-z^T M z / 2 + i delay g^T z) d^n z by Gauss-Hermite quadrature.
    """

    def __init__(self, m: np.ndarray, g: Optional[np.ndarray] = None):
        eigvals, eigvecs = np.linalg.eigh(m)
        if np.any(eigvals <= 0):
            raise DomainError("joint spectral amplitude is not normalizable")
        n = m.shape[0]
        self.dimension = n
        self.jacobian = math.sqrt(2.0) ** n / math.sqrt(float(np.prod(eigvals)))
        if g is None:
            self.frequency = 0.0
        else:
            k = math.sqrt(2.0) * (eigvecs.T @ g) / np.sqrt(eigvals)
            self.frequency = float(np.linalg.norm(k))

    def evaluate(self, delays: np.ndarray, order: int) -> np.ndarray:
        x, w = hermite_rule(order)
        omega = np.outer(np.atleast_1d(delays) * self.frequency, x)
        phase_axis = np.cos(omega) @ w  # imaginary part cancels for symmetric nodes
        flat_axes = float(np.sum(w)) ** (self.dimension - 1)
        return self.jacobian * phase_axis * flat_axes


class HeraldedOverlap:
    # normalized two-source overlap Re I(delay) / (N_a N_b), prepared once per source pair

    def __init__(self, jsa_a: JointSpectralAmplitude, jsa_b: JointSpectralAmplitude):
        m4 = np.zeros((4, 4))
        s, sp, t, tp = 0, 1, 2, 3
        for jsa, pairs in ((jsa_a, ((s, t), (sp, t))), (jsa_b, ((sp, tp), (s, tp)))):
            for si, ti in pairs:
                for c, sigma in _amplitude_terms(jsa, si, ti, 4):
                    _add_term(m4, c, sigma)
        self.interference = GaussianIntegral(m4, np.array([1.0, -1.0, 0.0, 0.0]))
        self.norms = []
        for jsa in (jsa_a, jsa_b):
            m2 = np.zeros((2, 2))
            for _ in range(2):
                for c, sigma in _amplitude_terms(jsa, 0, 1, 2):
                    _add_term(m2, c, sigma)
            self.norms.append(GaussianIntegral(m2))

    def __call__(self, delays, order: int = 64, max_order: int = 1024, tolerance: float = 1e-6) -> np.ndarray:
        d = np.atleast_1d(np.asarray(delays, dtype=float))
        norm = self.norms[0].evaluate(np.zeros(1), order)[0] * self.norms[1].evaluate(np.zeros(1), order)[0]
        current = self.interference.evaluate(d, order) / norm
        n = order
        while n * 2 <= max_order:
            refined = self.interference.evaluate(d, 2 * n) / norm
            # overlap is compared on the probability scale P = (1 - overlap) / 2
            change = np.max(np.abs(refined - current) / np.maximum(1.0 - np.minimum(refined, 1.0), 1e-3))
            current, n = refined, 2 * n
            if change <= tolerance:
                return current
        raise ConvergenceError(f"overlap quadrature not converged at order {n}")


def coincidence_probability(jsa_a: JointSpectralAmplitude, jsa_b: JointSpectralAmplitude, delay,
                            settings: Optional[OracleSettings] = None):
    settings = settings or OracleSettings()
    overlap = HeraldedOverlap(jsa_a, jsa_b)
    p = 0.5 * (1.0 - settings.polarization_overlap * overlap(
        delay, settings.quadrature_order, settings.max_quadrature_order, settings.tolerance))
    return float(p[0]) if np.ndim(delay) == 0 else p


class SampledCurve:
    # delay -> value curve known on a grid; linear interpolation inside the grid
    def __init__(self, delays: Sequence[float], values: Sequence[float]):
        order = np.argsort(delays)
        self.delays = np.asarray(delays, dtype=float)[order]
        self.values = np.asarray(values, dtype=float)[order]

    @property
    def support(self) -> Tuple[float, float]:
        return float(self.delays[0]), float(self.delays[-1])

    def __call__(self, delays) -> np.ndarray:
        return np.interp(np.asarray(delays, dtype=float), self.delays, self.values)


def jitter_average(curve: Callable, sigma_J: float, nodes: int = 32,
                   support: Optional[Tuple[float, float]] = None) -> Callable:
    """
    Gaussian average over the pair-time offset, by Gauss-Hermite nodes.

    Grid-defined curves must extend COVERAGE_SIGMAS * sigma_J beyond every requested delay.
    """
    if sigma_J < 0:
        raise DomainError("sigma_J must be >= 0")
    if support is None:
        support = getattr(curve, "support", None)
    if sigma_J == 0:
        return curve
    x, w = hermite_rule(nodes)
    offsets = math.sqrt(2.0) * sigma_J * x
    weights = w / math.sqrt(math.pi)

    def averaged(delays):
        d = np.atleast_1d(np.asarray(delays, dtype=float))
        if support is not None:
            lo, hi = support
            if d.min() - COVERAGE_SIGMAS * sigma_J < lo or d.max() + COVERAGE_SIGMAS * sigma_J > hi:
                raise CoverageError(
                    f"curve support [{lo:.3e}, {hi:.3e}] s does not cover +-{COVERAGE_SIGMAS:g} sigma_J")
        values = np.asarray(curve((d[:, None] + offsets[None, :]).ravel()), dtype=float)
        out = values.reshape(d.size, offsets.size) @ weights
        return float(out[0]) if np.ndim(delays) == 0 else out

    averaged.support = None if support is None else (support[0] + COVERAGE_SIGMAS * sigma_J,
                                                    support[1] - COVERAGE_SIGMAS * sigma_J)
    return averaged


def default_delay_grid(params: DipParams, settings: OracleSettings) -> np.ndarray:
    half = settings.grid_half_width * dip_width(params)
    return np.linspace(-half, half, settings.grid_points)


def oracle_curve(params: DipParams, settings: OracleSettings) -> Callable:
    # jitter-averaged coincidence probability as a callable of delay
    jsa = jsa_from_params(params)
    overlap = HeraldedOverlap(jsa, jsa)
    eta = settings.polarization_overlap

    def bare(delays):
        return 0.5 * (1.0 - eta * overlap(delays, settings.quadrature_order,
                                          settings.max_quadrature_order, settings.tolerance))

    return jitter_average(bare, params.sigma_J, settings.jitter_nodes)


def oracle_dip(params: DipParams, settings: Optional[OracleSettings] = None, verbose: bool = False) -> DipModel:
    return oracle_fit(params, settings, verbose).model


def oracle_fit(params: DipParams, settings: Optional[OracleSettings] = None, verbose: bool = False):
    settings = settings or OracleSettings()
    grid = np.asarray(settings.delay_grid, dtype=float) if settings.delay_grid else default_delay_grid(params, settings)
    if verbose:
        print(f"[ORACLE] {grid.size} delays, order {settings.quadrature_order}, {settings.jitter_nodes} jitter nodes")
    values = oracle_curve(params, settings)(grid)
    fit = fit_gaussian_dip(grid, values)
    w = fit.model.rms_width
    # a flat curve has no width to cover
    dip_present = abs(fit.amplitude) > 1e-6
    if dip_present and (grid.min() > -4.0 * w + fit.delay_offset or grid.max() < 4.0 * w + fit.delay_offset):
        raise CoverageError(f"delay grid does not span +-4 widths (w={w:.3e} s)")
    if fit.residual_rms > RESIDUAL_LIMIT * fit.model.baseline:
        raise FitError(f"oracle dip is not gaussian within tolerance (residual {fit.residual_rms:.2e})",
                       residuals=values - fit.model.curve(grid, fit.delay_offset))
    if verbose:
        print(f"[ORACLE] V={fit.visibility:.4f} D={fit.amplitude:.4f} w={w * 1e12:.4f} ps")
    return fit


class DivergenceRow(BaseModel):
    sigma_S_ratio: float
    jitter_product: float
    trigger: str
    v_oracle: float
    v_analytic: float
    w_oracle: float
    w_analytic: float
    relative_error: float
    within: bool


class DivergenceReport(BaseModel):
    tolerance: float
    rows: List[DivergenceRow] = Field(default_factory=list)

    @property
    def failures(self) -> List[DivergenceRow]:
        return [r for r in self.rows if not r.within]

    @property
    def ok(self) -> bool:
        return not self.failures

    def lines(self) -> List[str]:
        out = [f"{'S/p':>6} {'J*p':>5} {'T':>10} {'V_oracle':>9} {'V_closed':>9} {'rel.err':>9}  ok"]
        for r in self.rows:
            out.append(f"{r.sigma_S_ratio:6.3f} {r.jitter_product:5.2f} {r.trigger:>10} "
                       f"{r.v_oracle:9.5f} {r.v_analytic:9.5f} {r.relative_error:9.2e}  {'yes' if r.within else 'NO'}")
        return out


GRID_SIGNAL_RATIOS = (0.05, 0.1, 0.3)
GRID_JITTER_PRODUCTS = (0.0, 1.0, 3.4)
GRID_TRIGGER_FACTORS = (2.0, 10.0, None)


def compare_with_analytic(sigma_p: float, settings: Optional[OracleSettings] = None,
                          signal_ratios=GRID_SIGNAL_RATIOS, jitter_products=GRID_JITTER_PRODUCTS,
                          trigger_factors=GRID_TRIGGER_FACTORS, tolerance: float = 0.02,
                          strict: bool = False, verbose: bool = False) -> DivergenceReport:
    # oracle visibility against the closed form on a parameter grid; failures are reported, not absorbed
    settings = settings or OracleSettings()
    report = DivergenceReport(tolerance=tolerance)
    for ratio in signal_ratios:
        for jp in jitter_products:
            for tf in trigger_factors:
                s = ratio * sigma_p
                params = DipParams(sigma_p=sigma_p, sigma_S=s, sigma_T=None if tf is None else tf * s,
                                   sigma_J=jp / sigma_p)
                fit = oracle_fit(params, settings)
                v_eq = visibility(params)
                err = abs(fit.visibility / v_eq - 1.0)
                report.rows.append(DivergenceRow(
                    sigma_S_ratio=ratio, jitter_product=jp,
                    trigger="unfiltered" if tf is None else f"{tf:g}*S",
                    v_oracle=fit.visibility, v_analytic=v_eq,
                    w_oracle=fit.model.rms_width, w_analytic=dip_width(params),
                    relative_error=err, within=err <= tolerance,
                ))
    if verbose:
        print(f"[ORACLE] divergence grid: {len(report.rows) - len(report.failures)}/{len(report.rows)} within "
              f"{tolerance:.0%}")
    if strict and not report.ok:
        raise DivergenceError(f"{len(report.failures)} grid cells disagree with the closed form", report=report)
    return report
