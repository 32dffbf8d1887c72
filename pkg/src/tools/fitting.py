"""
Gaussian dip fitting shared by the quadrature oracle and the counting simulation.

Model: C(delay) = B * (1 - A * exp(-(delay - delay0)^2 / 2 w^2)), V = A / (2 - A).
"""
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares
from tenacity import Retrying, stop_after_attempt, retry_if_exception_type

from ..errors import FitError, StatisticsError
from ..state import DipModel, FitResult, ScanResult

MIN_POINTS = 7
START_WIDTH_FACTORS = (1.0, 0.5, 2.0)
BOOTSTRAP_SEED = 20240


def fit_retry():
    # retry wrapper for fits that fail to converge from the first starting point
    return Retrying(
        stop=stop_after_attempt(len(START_WIDTH_FACTORS)),
        retry=retry_if_exception_type(FitError),
        reraise=True,
    )


def dip_curve(x, baseline, amplitude, offset, width):
    return baseline * (1.0 - amplitude * np.exp(-(x - offset) ** 2 / (2.0 * width ** 2)))


def _width_bounds(x: np.ndarray):
    span = float(x.max() - x.min())
    step = float(np.min(np.diff(np.unique(x)))) if len(np.unique(x)) > 1 else span
    # the scan must cover +-2 widths, so w stays below a quarter of the span
    return step / 20.0, span / 4.0


def _initial_guess(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    order = np.argsort(x)
    xs, ys = x[order], y[order]
    edge = max(2, len(xs) // 6)
    baseline = max(float(np.mean(np.r_[ys[:edge], ys[-edge:]])), 1e-300)
    i_min = int(np.argmin(ys))
    amplitude = float(np.clip(1.0 - ys[i_min] / baseline, 0.0, 0.99))
    half = baseline * (1.0 - 0.5 * amplitude)
    below = xs[ys < half]
    lo, hi = _width_bounds(x)
    width = (below.max() - below.min()) / 2.3548 if below.size >= 2 else 4.0 * lo
    return np.array([baseline, amplitude, xs[i_min], float(np.clip(width, 2 * lo, 0.9 * hi))])


def _solve(x, y, sigma, p0, attempt: int) -> np.ndarray:
    # parameters rescaled to order one: time in units of the widest allowed width,
    # counts in units of the starting baseline
    lo_w, hi_w = _width_bounds(x)
    t0 = hi_w
    start = np.array(p0, dtype=float)
    start[3] = float(np.clip(start[3] * START_WIDTH_FACTORS[attempt - 1], lo_w * 1.01, hi_w * 0.99))
    start[1] = float(np.clip(start[1], -0.99, 0.99))
    start[2] = float(np.clip(start[2], x.min(), x.max()))
    b0 = max(start[0], float(np.max(np.abs(y))), 1e-300)
    xs = x / t0
    q0 = np.array([start[0] / b0, start[1], start[2] / t0, start[3] / t0])
    lower = [0.0, -1.0, x.min() / t0, lo_w / t0]
    upper = [np.inf, 1.0, x.max() / t0, hi_w / t0]

    def residual(q):
        return (b0 * dip_curve(xs, *q) - y) / sigma

    sol = least_squares(residual, q0, bounds=(lower, upper), method="trf", jac="3-point",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=5000)
    if sol.status <= 0 or not np.all(np.isfinite(sol.x)):
        raise FitError(f"dip fit did not converge: {sol.message}", residuals=sol.fun)
    b, a, off, w = sol.x
    return np.array([b * b0, a, off * t0, w * t0])


def fit_gaussian_dip(delays: Sequence[float], values: Sequence[float],
                     sigma: Optional[Sequence[float]] = None,
                     p0: Optional[Sequence[float]] = None) -> FitResult:
    x = np.asarray(delays, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size < MIN_POINTS:
        raise StatisticsError(f"need at least {MIN_POINTS} delay points, got {x.size}")
    if not np.any(y > 0):
        raise StatisticsError("all values are zero")
    s = np.ones_like(y) if sigma is None else np.asarray(sigma, dtype=float)
    start = _initial_guess(x, y) if p0 is None else np.asarray(p0, dtype=float)
    for attempt in fit_retry():
        with attempt:
            q = _solve(x, y, s, start, attempt.retry_state.attempt_number)
    baseline, amplitude, offset, width = (float(v) for v in q)
    resid = y - dip_curve(x, *q)
    return FitResult(
        model=DipModel(baseline=baseline, depth=float(np.clip(amplitude, 0.0, 1.0)), rms_width=width),
        amplitude=amplitude,
        delay_offset=offset,
        visibility=amplitude / (2.0 - amplitude),
        residual_rms=float(np.sqrt(np.mean(resid ** 2))),
    )


def poisson_sigma(counts: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(counts, 1.0))


def fit_dip(scan: ScanResult, n_bootstrap: int = 200, bootstrap_seed: int = BOOTSTRAP_SEED) -> FitResult:
    """
    Poisson-weighted fit of a delay scan with a block bootstrap for the uncertainties.

    Blocks are resampled with replacement within each delay point; with a single
    block per point the counts are resampled parametrically from the fitted model.
    """
    if len(scan.points) < MIN_POINTS:
        raise StatisticsError(f"need at least {MIN_POINTS} delay points, got {len(scan.points)}")
    x, y = scan.arrays()
    if y.sum() <= 0:
        raise StatisticsError("scan has zero total counts")
    best = fit_gaussian_dip(x, y, sigma=poisson_sigma(y))
    if n_bootstrap <= 0:
        return best
    start = [best.model.baseline, best.amplitude, best.delay_offset, best.model.rms_width]
    blocks = scan.block_matrix()
    rng = np.random.default_rng(bootstrap_seed)
    vis, widths = [], []
    for _ in range(n_bootstrap):
        if blocks.ndim == 2 and blocks.shape[1] >= 2:
            idx = rng.integers(0, blocks.shape[1], size=blocks.shape)
            yb = np.take_along_axis(blocks, idx, axis=1).sum(axis=1)
        else:
            yb = rng.poisson(dip_curve(x, *start)).astype(float)
        if yb.sum() <= 0:
            continue
        try:
            fb = fit_gaussian_dip(x, yb, sigma=poisson_sigma(yb), p0=start)
        except FitError:
            continue
        vis.append(fb.visibility)
        widths.append(fb.model.rms_width)
    if len(vis) < max(2, n_bootstrap // 2):
        raise FitError(f"only {len(vis)} of {n_bootstrap} bootstrap fits converged")
    return best.model_copy(update={
        "visibility_sigma": float(np.std(vis, ddof=1)),
        "width_sigma": float(np.std(widths, ddof=1)),
        "n_bootstrap": len(vis),
    })
