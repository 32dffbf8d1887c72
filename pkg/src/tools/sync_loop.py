"""
Phase-domain simulation of the two-stage repetition-rate lock.

State (per lock stage): residual phase error phi at the phase detector (rad at
the active harmonic), PI integrator I and actuator output a:

    phi' = nu(t) - K_v a
    I'   = K_d phi
    a'   = w_a (K_p K_d phi + K_i I - a)

nu is the free-running frequency noise referred to the detector (white plus
random-walk frequency). The loop is type II; the actuator pole stands in for
the loop low-pass. Timing error is phi / (2 pi N f_rep).
"""
import math
from typing import Optional, Tuple

import numpy as np
from scipy import integrate, signal
from scipy.optimize import brentq

from ..errors import DomainError, LockTimeoutError, StabilityError, StatisticsError
from ..state import JitterSeries, LoopConfig

MIN_PHASE_MARGIN_DEG = 10.0
HANDOVER_DWELL_TIME_CONSTANTS = 10.0
RW_CORNER_HZ = 100.0
MIN_STAT_SAMPLES = 1000


def design_loop(config: LoopConfig) -> Tuple[float, float]:
    # PI gains placing unity gain at loop_bandwidth with the requested phase margin
    if config.proportional_gain is not None and config.integral_gain is not None:
        return config.proportional_gain, config.integral_gain
    wc = 2 * math.pi * config.loop_bandwidth
    wa = 2 * math.pi * config.actuator_bandwidth
    lag = math.atan(wc / wa) + 0.5 * wc * config.timestep
    lead = math.radians(config.phase_margin_deg) + lag
    if not 0 < lead < math.pi / 2:
        raise StabilityError(f"phase margin {config.phase_margin_deg} deg is not reachable with a PI filter")
    wz = wc / math.tan(lead)
    kp = wc * math.hypot(1.0, wc / wa) / (config.detector_gain * config.vco_gain * math.hypot(1.0, wz / wc))
    return kp, kp * wz


def open_loop(config: LoopConfig, freqs) -> np.ndarray:
    kp, ki = design_loop(config)
    s = 2j * math.pi * np.asarray(freqs, dtype=float)
    wa = 2 * math.pi * config.actuator_bandwidth
    delay = np.exp(-0.5 * s * config.timestep)
    return config.detector_gain * (kp + ki / s) * wa / (s + wa) * config.vco_gain / s * delay


def error_transfer(config: LoopConfig, freqs) -> np.ndarray:
    # free-running phase -> residual phase
    return 1.0 / (1.0 + open_loop(config, freqs))


def _phase_deg(config: LoopConfig, f: float) -> float:
    kp, ki = design_loop(config)
    w = 2 * math.pi * f
    wa = 2 * math.pi * config.actuator_bandwidth
    rad = -math.pi / 2 - math.atan2(ki, kp * w) - math.atan(w / wa) - 0.5 * w * config.timestep
    return math.degrees(rad)


def phase_margin(config: LoopConfig) -> float:
    nyquist = 0.5 / config.timestep
    fn = lambda lf: abs(open_loop(config, [math.exp(lf)])[0]) - 1.0
    lo, hi = math.log(1e-3 * config.loop_bandwidth), math.log(nyquist)
    if fn(lo) <= 0 or fn(hi) >= 0:
        raise StabilityError("open-loop gain has no unity crossing below the Nyquist frequency")
    fc = math.exp(brentq(fn, lo, hi, xtol=1e-12))
    return 180.0 + _phase_deg(config, fc)


def _check_stability(config: LoopConfig) -> None:
    pm = phase_margin(config)
    if pm < MIN_PHASE_MARGIN_DEG:
        raise StabilityError(f"phase margin {pm:.1f} deg below {MIN_PHASE_MARGIN_DEG:g} deg")


def residual_phase_variance(config: LoopConfig, noise: Optional[Tuple[float, float]] = None) -> float:
    # two-sided integral of S_nu(f) / w^2 * |E(f)|^2 up to the Nyquist frequency
    q_white, q_walk = config.free_run_noise if noise is None else noise
    nyquist = 0.5 / config.timestep

    def integrand(lf):
        f = math.exp(lf)
        w = 2 * math.pi * f
        s_nu = q_white + q_walk / w ** 2
        return 2.0 * s_nu / w ** 2 * abs(error_transfer(config, [f])[0]) ** 2 * f

    lo = math.log(1e-4 * config.loop_bandwidth)
    knots = [math.log(config.loop_bandwidth * k) for k in (0.1, 1.0, 10.0) if config.loop_bandwidth * k < nyquist]
    value, _ = integrate.quad(integrand, lo, math.log(nyquist), points=knots, limit=400, epsabs=0.0, epsrel=1e-10)
    return value


def timing_scale(config: LoopConfig, harmonic: Optional[int] = None) -> float:
    # seconds per radian of detector phase
    n = config.harmonic if harmonic is None else harmonic
    return 1.0 / (2 * math.pi * n * config.rep_rate)


def calibrate_noise(config: LoopConfig, target_rms: float, walk_corner_hz: float = RW_CORNER_HZ) -> LoopConfig:
    """
    Scale the free-running noise so the fine lock settles at target_rms timing jitter.

    The random-walk level is tied to the white level through the frequency at which
    both give equal frequency-noise density.
    """
    if target_rms < 0:
        raise DomainError("target jitter must be >= 0")
    ratio = (2 * math.pi * walk_corner_hz) ** 2
    per_unit = residual_phase_variance(config, (1.0, ratio))
    phase_rms = target_rms / timing_scale(config)
    q = phase_rms ** 2 / per_unit
    return config.model_copy(update={"free_run_noise": (q, q * ratio)})


def _stage_system(config: LoopConfig):
    kp, ki = design_loop(config)
    kd, kv = config.detector_gain, config.vco_gain
    wa = 2 * math.pi * config.actuator_bandwidth
    a = np.array([[0.0, 0.0, -kv], [kd, 0.0, 0.0], [wa * kp * kd, wa * ki, -wa]])
    b = np.array([[1.0], [0.0], [0.0]])
    c = np.array([[1.0, 0.0, 0.0]])
    d = np.zeros((1, 1))
    ad, bd, cd, dd, _ = signal.cont2discrete((a, b, c, d), config.timestep, method="zoh")
    return ad, bd, cd, dd, config.timestep


def _run_stage(config: LoopConfig, nu: np.ndarray, x0: np.ndarray) -> np.ndarray:
    # states (phi, I, a) for every sample
    if nu.size == 0:
        return np.zeros((0, 3))
    _, _, xout = signal.dlsim(_stage_system(config), nu.reshape(-1, 1), x0=x0)
    return np.atleast_2d(xout)


def frequency_noise(config: LoopConfig, n: int, seed: int) -> np.ndarray:
    # detector-referred frequency noise samples (rad/s), piecewise constant per step
    q_white, q_walk = config.free_run_noise
    rng = np.random.default_rng(seed)
    dt = config.timestep
    white = rng.standard_normal(n) * math.sqrt(q_white / dt)
    walk = np.cumsum(rng.standard_normal(n) * math.sqrt(q_walk * dt))
    return white + walk


def _handover_index(phi: np.ndarray, config: LoopConfig) -> Optional[int]:
    dwell = int(math.ceil(HANDOVER_DWELL_TIME_CONSTANTS / (2 * math.pi * config.loop_bandwidth * config.timestep)))
    below = (np.abs(phi) < config.handover_threshold).astype(np.int64)
    if below.size < dwell:
        return None
    runs = np.convolve(below, np.ones(dwell, dtype=np.int64), mode="valid")
    hits = np.flatnonzero(runs == dwell)
    return int(hits[0] + dwell) if hits.size else None


def simulate_lock(config: LoopConfig, duration: float, seed: int, verbose: bool = False) -> JitterSeries:
    if duration < 100.0 / config.loop_bandwidth:
        raise DomainError(f"duration must be at least {100.0 / config.loop_bandwidth:.3g} s")
    _check_stability(config)
    n = int(round(duration / config.timestep))
    nu = frequency_noise(config, n, seed)
    x0 = np.array([config.initial_phase, 0.0, 0.0])
    coarse = config.model_copy(update={"harmonic": 1})
    states = _run_stage(coarse, nu, x0)
    harmonics = np.ones(n, dtype=np.int64)
    handover_time = 0.0
    if config.harmonic != 1:
        k = _handover_index(states[:, 0], config)
        if k is None or k >= n:
            raise LockTimeoutError(f"coarse lock never held |phi| < {config.handover_threshold} rad "
                                   f"for {HANDOVER_DWELL_TIME_CONSTANTS:g} loop time constants")
        handover_time = k * config.timestep
        # same timing offset seen at the N-th harmonic
        start = states[k].copy()
        start[0] *= config.harmonic
        fine = _run_stage(config, nu[k:], start)
        states = np.vstack([states[:k], fine])
        harmonics[k:] = config.harmonic
        if verbose:
            print(f"[SYNC] handover to harmonic {config.harmonic} at {handover_time * 1e3:.3f} ms")
    timing = states[:, 0] / (2 * math.pi * harmonics * config.rep_rate)
    return JitterSeries(timestep=config.timestep, samples=timing, harmonics=harmonics,
                        lock_epochs=(0.0, handover_time))


def rms_jitter(series: JitterSeries, discard: float = 0.0) -> float:
    if discard >= series.duration:
        raise StatisticsError(f"discard {discard:g} s leaves no samples of a {series.duration:g} s series")
    start = int(math.ceil(discard / series.timestep - 1e-9))
    tail = np.asarray(series.samples[start:], dtype=float)
    if tail.size < MIN_STAT_SAMPLES:
        raise StatisticsError(f"only {tail.size} samples after discard, need {MIN_STAT_SAMPLES}")
    return float(np.sqrt(np.mean(tail ** 2)))


def jitter_psd(series: JitterSeries, discard: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    start = int(math.ceil(discard / series.timestep - 1e-9))
    tail = np.asarray(series.samples[start:], dtype=float)
    if tail.size < MIN_STAT_SAMPLES:
        raise StatisticsError(f"only {tail.size} samples after discard, need {MIN_STAT_SAMPLES}")
    return signal.welch(tail, fs=1.0 / series.timestep, nperseg=min(4096, tail.size))


def tone_response(config: LoopConfig, frequency: float, amplitude: float = 1e-3,
                  periods: int = 40) -> Tuple[float, float]:
    # inject phase A sin(wt) at the detector; returns (measured, analytic) |residual / injected|
    _check_stability(config)
    dt = config.timestep
    settle = max(periods / frequency, 40.0 / config.loop_bandwidth)
    n_settle = int(round(settle / dt))
    n_meas = int(round(periods / frequency / dt))
    t = np.arange(n_settle + n_meas + 1) * dt
    phase = amplitude * np.sin(2 * math.pi * frequency * t)
    nu = np.diff(phase) / dt
    phi = _run_stage(config, nu, np.zeros(3))[:, 0]
    # state k has seen the increments up to t[k]
    tail_t = t[:-1][n_settle:]
    tail = phi[n_settle:]
    ref = np.exp(-2j * math.pi * frequency * tail_t)
    measured = 2.0 * abs(np.mean(tail * ref)) / amplitude
    analytic = abs(error_transfer(config, [frequency])[0])
    return float(measured), float(analytic)


def combined_pair_jitter(sync_rms: float, gvm_rms: float) -> float:
    # independent gaussian contributions add in quadrature
    if sync_rms < 0 or gvm_rms < 0:
        raise DomainError("jitter contributions must be >= 0")
    return math.hypot(sync_rms, gvm_rms)


def gvm_from_totals(pair_rms: float, sync_rms: float) -> float:
    if pair_rms < sync_rms or sync_rms < 0:
        raise DomainError("pair jitter must be at least the synchronization jitter")
    return math.sqrt(pair_rms ** 2 - sync_rms ** 2)


def calibrated_loop(target_rms: float = 260e-15, **overrides) -> LoopConfig:
    return calibrate_noise(LoopConfig(**overrides), target_rms)
