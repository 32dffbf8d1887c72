"""
Event-level Monte Carlo of the delay-scan counting experiment.

Every delay point owns an independent random stream derived from (seed, point
index), so results do not depend on how many worker threads simulate the points.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Tuple

import numpy as np

from ..errors import DomainError
from ..state import ExperimentConfig, ScanPoint, ScanResult
from .analytic import scenario_visibility


def point_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _delay_paths(config: ExperimentConfig, set_delay: float, rng: np.random.Generator) -> np.ndarray:
    """
    Realized relative delay for every block and sub-step, shape (blocks, substeps).

    The draws are identical with and without compensation; only how the drift
    walk is re-centred differs.
    """
    k, m = config.blocks_per_point, config.drift_substeps
    setting_error = rng.uniform(-config.setting_accuracy, config.setting_accuracy)
    recenter = rng.uniform(-config.recenter_residual, config.recenter_residual, size=k)
    steps = rng.normal(0.0, config.drift_rate * math.sqrt(config.block_duration / m), size=(k, m))
    if config.compensate_drift:
        walk = recenter[:, None] + np.cumsum(steps, axis=1)
    else:
        walk = np.cumsum(steps.ravel()).reshape(k, m)
    return set_delay + setting_error + walk


def _simulate_point(config: ExperimentConfig, index: int, set_delay: float) -> ScanPoint:
    rng = point_rng(config.seed, index)
    paths = _delay_paths(config, set_delay, rng)
    envelope = config.dip.profile(paths).mean(axis=1)
    mean_rate = config.baseline_rate
    t = config.block_duration
    depth = config.dip.depth
    if config.scenario == "indistinguishable":
        counts = rng.poisson(mean_rate * t * (1.0 - depth * envelope))
    elif config.scenario == "orthogonal":
        counts = rng.poisson(np.full(envelope.shape, mean_rate * t))
    elif config.scenario == "unpolarized":
        counts = np.empty(envelope.shape, dtype=np.int64)
        for b, g in enumerate(envelope):
            # each candidate event carries an H/V pair; only matched pairs interfere
            n = rng.poisson(mean_rate * t)
            matched = rng.integers(0, 2, size=n) == rng.integers(0, 2, size=n)
            survive = np.where(matched, 1.0 - depth * g, 1.0)
            counts[b] = int(np.count_nonzero(rng.random(n) < survive))
    else:
        raise DomainError(f"scenario '{config.scenario}' is not simulated by the triggered model")
    return ScanPoint(set_delay=float(set_delay), realized_delays=paths.mean(axis=1).tolist(),
                     counts=[int(c) for c in counts])


def thermal_weights(a: np.ndarray, b: np.ndarray, overlap: np.ndarray) -> np.ndarray:
    # I_c * I_d for output ports c, d = (a +- m b) / sqrt(2), with the unmatched part of b incoherent
    total = np.abs(a) ** 2 + np.abs(b) ** 2
    cross = 2.0 * overlap * np.real(a * np.conj(b))
    return 0.25 * (total ** 2 - cross ** 2)


def thermal_amplitudes(rng: np.random.Generator, n: int, ratio: float) -> Tuple[np.ndarray, np.ndarray]:
    # circular complex gaussian amplitudes with mean intensities ratio : 1
    z = rng.standard_normal((4, n))
    a = math.sqrt(ratio / 2.0) * (z[0] + 1j * z[1])
    b = math.sqrt(0.5) * (z[2] + 1j * z[3])
    return a, b


def thermal_reference(ratio: float) -> float:
    # <I_c I_d> at zero mode overlap
    return 0.5 * (ratio ** 2 + 1.0 + ratio)


def _simulate_thermal_point(config: ExperimentConfig, index: int, set_delay: float, ratio: float) -> ScanPoint:
    rng = point_rng(config.seed, index)
    paths = _delay_paths(config, set_delay, rng)
    n = config.thermal_samples
    w = config.dip.rms_width
    counts = []
    for block in paths:
        a, b = thermal_amplitudes(rng, n, ratio)
        delays = np.resize(block, n)
        overlap = math.sqrt(config.dip.depth) * np.exp(-delays ** 2 / (4.0 * w ** 2))
        weight = float(np.mean(thermal_weights(a, b, overlap))) / thermal_reference(ratio)
        counts.append(int(rng.poisson(config.thermal_rate * config.block_duration * weight)))
    return ScanPoint(set_delay=float(set_delay), realized_delays=paths.mean(axis=1).tolist(), counts=counts)


def _metadata(config: ExperimentConfig, rate: float) -> dict:
    meta = {
        "seed": config.seed,
        "scenario": config.scenario,
        "dwell_per_point": config.dwell_per_point,
        "block_duration": config.block_duration,
        "blocks_per_point": config.blocks_per_point,
        "expected_baseline_rate": rate,
        "dip_depth": config.dip.depth,
        "dip_rms_width": config.dip.rms_width,
        "compensate_drift": config.compensate_drift,
        "inferred": ["pair_prob_a", "pair_prob_b", "trigger_efficiency", "signal_efficiency", "drift_rate"],
        "warnings": [],
    }
    if rate <= 0:
        meta["warnings"].append("degenerate statistics: expected count rate is zero")
    return meta


def _run_points(config: ExperimentConfig, fn, *extra) -> list:
    delays = config.delays
    if config.workers == 1:
        return [fn(config, i, d, *extra) for i, d in enumerate(delays)]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(lambda i: fn(config, i, delays[i], *extra), range(len(delays))))


def run_scan(config: ExperimentConfig, verbose: bool = False) -> ScanResult:
    if config.scenario == "thermal":
        return simulate_thermal(config, config.intensity_ratio, verbose=verbose)
    if verbose:
        print(f"[SCAN] {config.scenario}: {len(config.delays)} delays x {config.blocks_per_point} blocks, "
              f"seed {config.seed}")
    points = _run_points(config, _simulate_point)
    result = ScanResult(points=points, metadata=_metadata(config, config.baseline_rate))
    if verbose:
        print(f"[SCAN] total fourfold counts: {sum(p.total for p in points)}")
    return result


def simulate_thermal(config: ExperimentConfig, intensity_ratio: float, verbose: bool = False) -> ScanResult:
    if not intensity_ratio > 0:
        raise DomainError(f"intensity ratio must be positive, got {intensity_ratio}")
    if verbose:
        print(f"[SCAN] thermal r={intensity_ratio:g}: {len(config.delays)} delays x "
              f"{config.blocks_per_point} blocks x {config.thermal_samples} samples")
    points = _run_points(config, _simulate_thermal_point, intensity_ratio)
    meta = _metadata(config, config.thermal_rate)
    meta["intensity_ratio"] = intensity_ratio
    meta["expected_visibility"] = scenario_visibility("thermal", config.dip.depth, intensity_ratio)
    return ScanResult(points=points, metadata=meta)


def thermal_visibility_estimate(depth: float, ratio: float, samples: int, seed: int = 0,
                                batches: int = 20) -> Tuple[float, float]:
    # sample-mean visibility at zero delay with its standard error from batch means
    rng = np.random.default_rng(seed)
    a, b = thermal_amplitudes(rng, samples, ratio)
    far = thermal_weights(a, b, np.zeros(samples))
    near = thermal_weights(a, b, np.full(samples, math.sqrt(depth)))
    v = (far.mean() - near.mean()) / (far.mean() + near.mean())
    per_batch = [(f.mean() - c.mean()) / (f.mean() + c.mean())
                 for f, c in zip(np.array_split(far, batches), np.array_split(near, batches))]
    return float(v), float(np.std(per_batch, ddof=1) / math.sqrt(batches))


def dispersion_index(counts) -> float:
    c = np.asarray(counts, dtype=float)
    return float(c.var(ddof=1) / c.mean())
