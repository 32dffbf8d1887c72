import math
import operator
from typing import TypedDict, List, Optional, Annotated, Literal, Dict, Tuple, Any

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator, ConfigDict
from scipy.constants import c as SPEED_OF_LIGHT

NARROWBAND_LIMIT = 0.1

Scenario = Literal["indistinguishable", "orthogonal", "unpolarized", "thermal"]
Provenance = Literal["published", "inferred", "trivial", "user"]


class SpectralGaussian(BaseModel):
    # gaussian optical spectrum; wavelengths in m, bandwidths in rad/s
    model_config = ConfigDict(frozen=True)
    center_wavelength: float
    rms_bandwidth_omega: float = 0.0
    raw: Dict[str, float] = Field(default_factory=dict)

    @field_validator("center_wavelength")
    @classmethod
    def _positive_center(cls, v: float) -> float:
        if not v > 0 or not math.isfinite(v):
            raise ValueError("center wavelength must be positive")
        return v

    @field_validator("rms_bandwidth_omega")
    @classmethod
    def _non_negative_bandwidth(cls, v: float) -> float:
        if not v >= 0 or not math.isfinite(v):
            raise ValueError("r.m.s. bandwidth must be finite and >= 0")
        return v

    @model_validator(mode="after")
    def _narrowband(self):
        if self.rms_bandwidth_omega >= NARROWBAND_LIMIT * self.center_omega:
            raise ValueError("spectrum violates the narrowband assumption")
        return self

    @property
    def center_omega(self) -> float:
        return 2 * math.pi * SPEED_OF_LIGHT / self.center_wavelength


class PulseGaussian(BaseModel):
    model_config = ConfigDict(frozen=True)
    rms_duration: float
    rms_bandwidth_omega: float = 0.0

    @field_validator("rms_duration")
    @classmethod
    def _positive_duration(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("r.m.s. duration must be positive")
        return v

    @field_validator("rms_bandwidth_omega")
    @classmethod
    def _non_negative_bandwidth(cls, v: float) -> float:
        if not v >= 0:
            raise ValueError("r.m.s. bandwidth must be >= 0")
        return v


class DipParams(BaseModel):
    # sigma_T=None is the unfiltered trigger (sigma_T -> infinity)
    model_config = ConfigDict(frozen=True)
    sigma_p: float
    sigma_S: float
    sigma_T: Optional[float] = None
    sigma_J: float = 0.0

    @field_validator("sigma_T", mode="before")
    @classmethod
    def _unfiltered(cls, v):
        if v is None:
            return None
        if isinstance(v, str) and v.strip().lower() in ("unfiltered", "inf", "infinity", "none"):
            return None
        if isinstance(v, (int, float)) and math.isinf(v) and v > 0:
            return None
        return v

    @field_validator("sigma_p")
    @classmethod
    def _positive_pump(cls, v: float) -> float:
        if not v > 0 or not math.isfinite(v):
            raise ValueError("sigma_p must be positive")
        return v

    @field_validator("sigma_S", "sigma_J")
    @classmethod
    def _non_negative(cls, v: float) -> float:
        if not v >= 0 or not math.isfinite(v):
            raise ValueError("must be finite and >= 0")
        return v

    @field_validator("sigma_T")
    @classmethod
    def _trigger(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and (not v >= 0 or not math.isfinite(v)):
            raise ValueError("sigma_T must be >= 0 or 'unfiltered'")
        return v

    @property
    def trigger_unfiltered(self) -> bool:
        return self.sigma_T is None


class DipModel(BaseModel):
    # C(delay) = B * (1 - D * exp(-delay^2 / 2w^2))
    model_config = ConfigDict(frozen=True)
    baseline: float = 1.0
    depth: float
    rms_width: float

    @field_validator("baseline")
    @classmethod
    def _baseline(cls, v: float) -> float:
        if not v >= 0:
            raise ValueError("baseline must be >= 0")
        return v

    @field_validator("depth")
    @classmethod
    def _depth(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("depth must lie in [0, 1]")
        return v

    @field_validator("rms_width")
    @classmethod
    def _width(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("rms width must be positive")
        return v

    @property
    def visibility(self) -> float:
        return self.depth / (2.0 - self.depth)

    def profile(self, delays) -> np.ndarray:
        # unit-depth gaussian envelope exp(-delay^2 / 2w^2)
        d = np.asarray(delays, dtype=float)
        return np.exp(-d ** 2 / (2.0 * self.rms_width ** 2))

    def curve(self, delays, offset: float = 0.0) -> np.ndarray:
        d = np.asarray(delays, dtype=float) - offset
        return self.baseline * (1.0 - self.depth * self.profile(d))


class JointSpectralAmplitude(BaseModel):
    # f(ws, wt) = pump(ws + wt) * g_S(ws) * g_T(wt); trigger_filter None = unfiltered
    model_config = ConfigDict(frozen=True)
    pump: SpectralGaussian
    signal_filter: SpectralGaussian
    trigger_filter: Optional[SpectralGaussian] = None

    @model_validator(mode="after")
    def _degenerate(self):
        target = 2.0 * self.pump.center_wavelength
        for name, f in (("signal_filter", self.signal_filter), ("trigger_filter", self.trigger_filter)):
            if f is not None and abs(f.center_wavelength - target) > 1e-6 * target:
                raise ValueError(f"{name} must be centred at twice the pump wavelength")
        if self.pump.rms_bandwidth_omega <= 0:
            raise ValueError("pump bandwidth must be positive")
        if self.signal_filter.rms_bandwidth_omega <= 0:
            raise ValueError("signal filter must have a finite positive bandwidth")
        if self.trigger_filter is not None and self.trigger_filter.rms_bandwidth_omega <= 0:
            raise ValueError("trigger filter bandwidth must be positive (or unfiltered)")
        return self


class OracleSettings(BaseModel):
    quadrature_order: int = 64
    max_quadrature_order: int = 1024
    jitter_nodes: int = 32
    delay_grid: List[float] = Field(default_factory=list)
    grid_points: int = 41
    grid_half_width: float = 4.5  # in predicted widths, used when delay_grid is empty
    polarization_overlap: float = 1.0
    tolerance: float = 1e-6

    @field_validator("quadrature_order")
    @classmethod
    def _order(cls, v: int) -> int:
        if v < 16:
            raise ValueError("quadrature_order must be >= 16")
        return v

    @field_validator("jitter_nodes")
    @classmethod
    def _nodes(cls, v: int) -> int:
        if v < 8:
            raise ValueError("jitter_nodes must be >= 8")
        return v

    @field_validator("polarization_overlap")
    @classmethod
    def _overlap(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("polarization_overlap must lie in [0, 1]")
        return v


class ExperimentConfig(BaseModel):
    rep_rate: float = 76e6
    pair_prob_a: float = 0.01
    pair_prob_b: float = 0.01
    trigger_efficiency: float = 0.1
    signal_efficiency: float = 0.06
    scan_step: float = 300e-15
    scan_half_range: float = 4.5e-12
    dwell_per_point: float = 900.0
    block_duration: float = 60.0
    drift_rate: float = 10e-15  # s per sqrt(s)
    compensate_drift: bool = True
    setting_accuracy: float = 100e-15
    recenter_residual: float = 30e-15
    drift_substeps: int = 12
    scenario: Scenario = "indistinguishable"
    intensity_ratio: float = 1.0
    thermal_samples: int = 16384
    multi_pair: bool = False
    dip: DipModel
    seed: int = 1
    workers: int = 1

    @field_validator("pair_prob_a", "pair_prob_b", "trigger_efficiency", "signal_efficiency")
    @classmethod
    def _probability(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("probability must lie in [0, 1]")
        return v

    @field_validator("rep_rate", "scan_step", "block_duration")
    @classmethod
    def _positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("must be positive")
        return v

    @field_validator("scan_half_range", "drift_rate", "setting_accuracy", "recenter_residual")
    @classmethod
    def _non_negative(cls, v: float) -> float:
        if not v >= 0:
            raise ValueError("must be >= 0")
        return v

    @field_validator("dwell_per_point")
    @classmethod
    def _dwell(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("dwell per point must be positive")
        return v

    @field_validator("intensity_ratio")
    @classmethod
    def _ratio(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("intensity ratio must be positive")
        return v

    @field_validator("drift_substeps", "thermal_samples", "workers")
    @classmethod
    def _count(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("seed")
    @classmethod
    def _seed(cls, v: int) -> int:
        if not 0 <= v < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        return v

    @field_validator("multi_pair")
    @classmethod
    def _reserved(cls, v: bool) -> bool:
        if v:
            raise ValueError("multi-pair emission is reserved and not implemented")
        return v

    @model_validator(mode="after")
    def _blocks(self):
        ratio = self.dwell_per_point / self.block_duration
        if abs(ratio - round(ratio)) > 1e-9 * max(ratio, 1.0) or round(ratio) < 1:
            raise ValueError("dwell_per_point must be an integer multiple of block_duration")
        return self

    @property
    def blocks_per_point(self) -> int:
        return int(round(self.dwell_per_point / self.block_duration))

    @property
    def delays(self) -> np.ndarray:
        n = int(round(self.scan_half_range / self.scan_step))
        return np.arange(-n, n + 1, dtype=float) * self.scan_step

    @property
    def baseline_rate(self) -> float:
        # fourfold rate far from the dip (triggers monitored)
        return (self.rep_rate * self.pair_prob_a * self.pair_prob_b
                * self.trigger_efficiency ** 2 * self.signal_efficiency ** 2)

    @property
    def thermal_rate(self) -> float:
        # twofold rate with triggers ignored
        return self.rep_rate * self.pair_prob_a * self.pair_prob_b * self.signal_efficiency ** 2


class ScanPoint(BaseModel):
    set_delay: float
    realized_delays: List[float]
    counts: List[int]

    @field_validator("counts")
    @classmethod
    def _counts(cls, v: List[int]) -> List[int]:
        if any(c < 0 for c in v):
            raise ValueError("counts must be >= 0")
        return v

    @model_validator(mode="after")
    def _lengths(self):
        if len(self.realized_delays) != len(self.counts):
            raise ValueError("one realized delay per block is required")
        return self

    @property
    def total(self) -> int:
        return int(sum(self.counts))


class ScanResult(BaseModel):
    points: List[ScanPoint] = Field(default_factory=list)
    metadata: Dict[str, Any] = Field(default_factory=dict)

    def arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        # set delays and per-point totals
        x = np.array([p.set_delay for p in self.points], dtype=float)
        y = np.array([p.total for p in self.points], dtype=float)
        return x, y

    def block_matrix(self) -> np.ndarray:
        # counts as (points, blocks); requires equal block counts
        return np.array([p.counts for p in self.points], dtype=float)


class FitResult(BaseModel):
    model: DipModel
    amplitude: float
    delay_offset: float
    visibility: float
    visibility_sigma: float = 0.0
    width_sigma: float = 0.0
    residual_rms: float = 0.0
    n_bootstrap: int = 0

    @property
    def depth(self) -> float:
        # alternate convention (Cmax - Cmin) / Cmax
        return self.amplitude


class LoopConfig(BaseModel):
    rep_rate: float = 76e6
    harmonic: int = 9
    loop_bandwidth: float = 10e3
    detector_gain: float = 0.5
    vco_gain: float = 2 * math.pi * 5e3
    actuator_bandwidth: float = 50e3
    free_run_noise: Tuple[float, float] = (1.0, 0.0)
    timestep: float = 5e-7
    handover_threshold: float = 0.05
    phase_margin_deg: float = 60.0
    initial_phase: float = 1.0
    proportional_gain: Optional[float] = None
    integral_gain: Optional[float] = None

    @field_validator("harmonic")
    @classmethod
    def _harmonic(cls, v: int) -> int:
        if v < 1:
            raise ValueError("harmonic must be >= 1")
        return v

    @field_validator("rep_rate", "loop_bandwidth", "actuator_bandwidth", "timestep",
                     "detector_gain", "vco_gain", "handover_threshold")
    @classmethod
    def _positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("must be positive")
        return v

    @field_validator("free_run_noise")
    @classmethod
    def _noise(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if any(x < 0 for x in v):
            raise ValueError("noise PSD levels must be >= 0")
        return v

    @model_validator(mode="after")
    def _ordering(self):
        if not self.loop_bandwidth < self.actuator_bandwidth < self.rep_rate:
            raise ValueError("need loop_bandwidth < actuator_bandwidth < rep_rate")
        if not self.timestep < 1.0 / (20.0 * self.actuator_bandwidth):
            raise ValueError("timestep must be below 1/(20 * actuator_bandwidth)")
        return self


class JitterSeries(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)
    timestep: float
    samples: np.ndarray
    harmonics: np.ndarray
    lock_epochs: Tuple[float, float]

    @field_validator("samples")
    @classmethod
    def _finite(cls, v: np.ndarray) -> np.ndarray:
        if not np.all(np.isfinite(v)):
            raise ValueError("timing error samples must be finite")
        return v

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.timestep

    @property
    def duration(self) -> float:
        return len(self.samples) * self.timestep


class Preset(BaseModel):
    name: str
    description: str
    dip_params: DipParams
    experiment: ExperimentConfig
    loop: LoopConfig = Field(default_factory=LoopConfig)
    oracle: OracleSettings = Field(default_factory=OracleSettings)
    provenance: Dict[str, Provenance] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _tagged(self):
        missing = [k for k in numeric_fields(self.dip_params, self.experiment, self.loop) if k not in self.provenance]
        if missing:
            raise ValueError(f"fields without provenance tag: {', '.join(missing)}")
        return self


def numeric_fields(dip_params: DipParams, experiment: ExperimentConfig, loop: LoopConfig) -> List[str]:
    # dotted names of every numeric leaf in a preset
    names = []
    for prefix, obj in (("dip", dip_params), ("experiment", experiment),
                        ("loop", loop)):
        for key, value in obj.model_dump().items():
            if isinstance(value, bool):
                continue
            if isinstance(value, (int, float)) or key == "sigma_T":
                names.append(f"{prefix}.{key}")
            elif isinstance(value, dict) and key == "dip":
                names.extend(f"{prefix}.dip.{k}" for k in value)
            elif isinstance(value, (tuple, list)):
                names.append(f"{prefix}.{key}")
    return names


class RunManifest(BaseModel):
    command: str
    argv: List[str]
    preset: Optional[str] = None
    overrides: Dict[str, str] = Field(default_factory=dict)
    seed: int
    version: str
    outputs: List[str] = Field(default_factory=list)

    def to_text(self) -> str:
        import shlex
        lines = [
            f"command = {self.command}",
            f"argv = {shlex.join(self.argv)}",
            f"preset = {self.preset or ''}",
            f"seed = {self.seed}",
            f"version = {self.version}",
        ]
        lines += [f"override.{k} = {v}" for k, v in sorted(self.overrides.items())]
        lines += [f"output = {p}" for p in self.outputs]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunManifest":
        import shlex
        data: Dict[str, Any] = {"overrides": {}, "outputs": []}
        for raw in text.splitlines():
            if not raw.strip() or raw.lstrip().startswith("#"):
                continue
            key, _, value = raw.partition("=")
            key, value = key.strip(), value.strip()
            if key == "argv":
                data["argv"] = shlex.split(value)
            elif key.startswith("override."):
                data["overrides"][key[len("override."):]] = value
            elif key == "output":
                data["outputs"].append(value)
            elif key == "preset":
                data["preset"] = value or None
            else:
                data[key] = value
        return cls(**data)


def merge_lists(left: Optional[List], right: Optional[List]) -> List:
    # merge two lists, handling None values
    left = left or []
    right = right or []
    return left + right


class RunState(TypedDict):
    # shared state that flows through the command graph
    # input
    argv: List[str]
    # router output
    command: Optional[str]
    options: Optional[dict]
    preset: Optional[Preset]
    overrides: Optional[Dict[str, str]]
    seed: Optional[int]
    # command outputs
    analytic: Optional[dict]
    oracle: Optional[dict]
    sync: Optional[dict]
    divergence: Optional[Any]
    scan: Optional[ScanResult]
    fit: Optional[FitResult]
    jitter: Optional[JitterSeries]
    # report
    report_lines: Annotated[List[str], operator.add]
    outputs: Annotated[List[str], merge_lists]
    messages: Annotated[List[str], operator.add]
    exit_code: Optional[int]


def create_initial_state(argv: List[str]) -> RunState:
    # create initial state for a new command
    return RunState(
        argv=list(argv),
        command=None,
        options=None,
        preset=None,
        overrides=None,
        seed=None,
        analytic=None,
        oracle=None,
        sync=None,
        divergence=None,
        scan=None,
        fit=None,
        jitter=None,
        report_lines=[],
        outputs=[],
        messages=[],
        exit_code=None,
    )
