"""
Run configuration: `key = value` files, environment defaults and the preset registry.
"""
import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ValidationError

from .errors import ConfigError, HomLabError, ParseError, UsageError
from .state import (DipModel, DipParams, ExperimentConfig, LoopConfig, OracleSettings, Preset,
                    numeric_fields)
from .tools.analytic import dip_depth, dip_width, solve_filters
from .tools.sync_loop import calibrate_noise
from .tools.units import pump_spectrum

PROJECT_ROOT = Path(__file__).parent.parent
DEFAULT_SEED = 1
VERSION = "1.0.0"

# sections of a run configuration and the model each one validates against
SECTIONS = {
    "dip": DipParams,
    "experiment": ExperimentConfig,
    "loop": LoopConfig,
    "oracle": OracleSettings,
}
SEQUENCE_KEYS = {"loop.free_run_noise", "oracle.delay_grid"}

# published values from the fig3 measurement and its appendix
TARGET_VISIBILITY = 0.84
TARGET_WIDTH = 0.86e-12
PAIR_JITTER = 350e-15
SYNC_JITTER = 260e-15
THERMAL_RATIO = 2.0

PROVENANCE = {
    "dip.sigma_p": "published",
    "dip.sigma_S": "inferred",
    "dip.sigma_T": "inferred",
    "dip.sigma_J": "published",
    "experiment.rep_rate": "published",
    "experiment.pair_prob_a": "inferred",
    "experiment.pair_prob_b": "inferred",
    "experiment.trigger_efficiency": "inferred",
    "experiment.signal_efficiency": "inferred",
    "experiment.scan_step": "published",
    "experiment.scan_half_range": "inferred",
    "experiment.dwell_per_point": "published",
    "experiment.block_duration": "published",
    "experiment.drift_rate": "inferred",
    "experiment.setting_accuracy": "published",
    "experiment.recenter_residual": "inferred",
    "experiment.drift_substeps": "trivial",
    "experiment.intensity_ratio": "published",
    "experiment.thermal_samples": "trivial",
    "experiment.seed": "trivial",
    "experiment.workers": "trivial",
    "experiment.dip.baseline": "trivial",
    "experiment.dip.depth": "published",
    "experiment.dip.rms_width": "published",
    "loop.rep_rate": "published",
    "loop.harmonic": "published",
    "loop.loop_bandwidth": "published",
    "loop.detector_gain": "inferred",
    "loop.vco_gain": "inferred",
    "loop.actuator_bandwidth": "inferred",
    "loop.free_run_noise": "inferred",
    "loop.timestep": "trivial",
    "loop.handover_threshold": "inferred",
    "loop.phase_margin_deg": "inferred",
    "loop.initial_phase": "trivial",
}


def load_env() -> None:
    # load environment variables from project root .env
    load_dotenv(PROJECT_ROOT / ".env")


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"environment variable {name} must be an integer, got '{raw}'", key=name)


def default_seed() -> int:
    return _env_int("HOMLAB_SEED", DEFAULT_SEED)


def default_workers() -> int:
    return _env_int("HOMLAB_WORKERS", 1)


def known_keys() -> List[str]:
    keys = []
    for section, model in SECTIONS.items():
        for name in model.model_fields:
            if section == "experiment" and name == "dip":
                keys.extend(f"experiment.dip.{k}" for k in DipModel.model_fields)
            else:
                keys.append(f"{section}.{name}")
    return keys


def parse_config(text: str, base: Optional[Preset] = None) -> Dict[str, Any]:
    """
    Parse `key = value` lines into validated overrides.

    Blank lines and `#` comments are skipped. Every key must name a known field;
    the overrides are applied to `base` (fig3a by default) so every invariant of
    the target models is re-checked before they are returned.
    """
    allowed = set(known_keys())
    overrides: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got '{line}'", line=lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ParseError(f"empty key or value in '{line}'", line=lineno)
        if key not in allowed:
            raise ParseError(f"unknown key '{key}'", line=lineno)
        overrides[key] = _coerce(key, value)
    apply_overrides(base or get_preset("fig3a"), overrides)
    return overrides


def parse_assignments(items: List[str]) -> Dict[str, Any]:
    # --set key=value items share the config file grammar
    return parse_config("\n".join(items)) if items else {}


def _coerce(key: str, value: str) -> Any:
    if key in SEQUENCE_KEYS:
        return [v.strip() for v in value.split(",") if v.strip()]
    return value


def _config_error(err: ValidationError, section: str, keys: List[str]) -> ConfigError:
    first = err.errors()[0]
    loc = ".".join(str(p) for p in first["loc"] if not isinstance(p, int))
    key = f"{section}.{loc}" if loc else (keys[0] if keys else section)
    return ConfigError(first["msg"], key=key)


def validated(model: type, data: dict, section: str, keys: List[str]) -> BaseModel:
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise _config_error(e, section, keys) from None


def apply_overrides(preset: Preset, overrides: Dict[str, Any]) -> Preset:
    if not overrides:
        return preset
    current = {
        "dip": preset.dip_params.model_dump(),
        "experiment": preset.experiment.model_dump(),
        "loop": preset.loop.model_dump(),
        "oracle": preset.oracle.model_dump(),
    }
    touched: Dict[str, List[str]] = {}
    for key, value in overrides.items():
        section, _, field = key.partition(".")
        if section not in SECTIONS:
            raise ConfigError("unknown section", key=key)
        target = current[section]
        if field.startswith("dip."):
            target = target["dip"]
            field = field[len("dip."):]
        target[field] = value
        touched.setdefault(section, []).append(key)
    models = {s: validated(m, current[s], s, touched.get(s, [])) for s, m in SECTIONS.items()}
    provenance = dict(preset.provenance)
    # the simulated dip follows the filters unless it was set explicitly
    if touched.get("dip") and not any(k.startswith("experiment.dip.") for k in overrides):
        params = models["dip"]
        provenance.update({"experiment.dip.depth": "inferred", "experiment.dip.rms_width": "inferred"})
        try:
            dip = models["experiment"].dip.model_copy(update={"depth": dip_depth(params),
                                                              "rms_width": dip_width(params)})
        except HomLabError as e:
            raise ConfigError(str(e), key=touched["dip"][0]) from None
        models["experiment"] = models["experiment"].model_copy(update={"dip": dip})
    provenance.update({k: "user" for k in overrides})
    return preset.model_copy(update={
        "dip_params": models["dip"],
        "experiment": models["experiment"],
        "loop": models["loop"],
        "oracle": models["oracle"],
        "provenance": provenance,
    })


def load_config_file(path: str) -> Dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e.strerror}", key=str(path)) from None
    return parse_config(text)


def _tags(dip_params: DipParams, experiment: ExperimentConfig, loop: LoopConfig) -> Dict[str, str]:
    return {k: PROVENANCE.get(k, "trivial") for k in numeric_fields(dip_params, experiment, loop)}


@lru_cache(maxsize=1)
def published_dip_params() -> DipParams:
    # filter bandwidths recovered from the published visibility and width
    sigma_p = pump_spectrum().rms_bandwidth_omega
    sigma_S, sigma_T = solve_filters(TARGET_VISIBILITY, TARGET_WIDTH, sigma_p, PAIR_JITTER)
    return DipParams(sigma_p=sigma_p, sigma_S=sigma_S, sigma_T=sigma_T, sigma_J=PAIR_JITTER)


@lru_cache(maxsize=1)
def calibrated_loop_config() -> LoopConfig:
    return calibrate_noise(LoopConfig(), SYNC_JITTER)


def _build(name: str, description: str, **experiment) -> Preset:
    params = published_dip_params()
    dip = DipModel(depth=dip_depth(params), rms_width=dip_width(params))
    exp = ExperimentConfig(dip=dip, **experiment)
    loop = calibrated_loop_config()
    return Preset(name=name, description=description, dip_params=params, experiment=exp, loop=loop,
                  provenance=_tags(params, exp, loop))


@lru_cache(maxsize=1)
def _registry() -> Tuple[Preset, ...]:
    return (
        _build("fig3a", "indistinguishable heralded photons from independent sources",
               scenario="indistinguishable"),
        _build("fig3b", "orthogonal polarizations, no interference", scenario="orthogonal"),
        _build("fig3c", "unpolarized photons, half the pairs can interfere", scenario="unpolarized"),
        _build("fig3d", "untriggered thermal light with intensity ratio 2:1",
               scenario="thermal", intensity_ratio=THERMAL_RATIO),
    )


def list_presets() -> List[Preset]:
    return list(_registry())


def get_preset(name: str) -> Preset:
    for preset in _registry():
        if preset.name == name:
            return preset
    raise UsageError(f"unknown preset '{name}' (expected one of {', '.join(p.name for p in _registry())})")


def preset_rows(preset: Preset) -> List[Tuple[str, Any, str]]:
    # (key, value, provenance) for every numeric field
    values = {
        "dip": preset.dip_params.model_dump(),
        "experiment": preset.experiment.model_dump(),
        "loop": preset.loop.model_dump(),
    }
    rows = []
    for key in numeric_fields(preset.dip_params, preset.experiment, preset.loop):
        section, _, field = key.partition(".")
        value = values[section]
        for part in field.split("."):
            value = value[part]
        rows.append((key, "unfiltered" if value is None else value, preset.provenance[key]))
    return rows
