from .config import VERSION as __version__

from .state import (SpectralGaussian, PulseGaussian, DipParams, DipModel, JointSpectralAmplitude, OracleSettings,
                    ExperimentConfig, ScanResult, FitResult, LoopConfig, JitterSeries, Preset, RunManifest, RunState,
                    create_initial_state)
from .errors import HomLabError
from .config import parse_config, get_preset, list_presets
from .graph import build_graph, run_command

__all__ = [
    "SpectralGaussian",
    "PulseGaussian",
    "DipParams",
    "DipModel",
    "JointSpectralAmplitude",
    "OracleSettings",
    "ExperimentConfig",
    "ScanResult",
    "FitResult",
    "LoopConfig",
    "JitterSeries",
    "Preset",
    "RunManifest",
    "RunState",
    "create_initial_state",
    "HomLabError",
    "parse_config",
    "get_preset",
    "list_presets",
    "build_graph",
    "run_command",
]
