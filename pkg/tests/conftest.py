import pytest

from src.config import get_preset, published_dip_params
from src.state import DipModel, DipParams, ExperimentConfig
from src.tools.units import pump_spectrum

PS = 1e-12
FS = 1e-15


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch):
    # keep a developer's .env or shell from leaking into seeded runs
    monkeypatch.delenv("HOMLAB_SEED", raising=False)
    monkeypatch.delenv("HOMLAB_WORKERS", raising=False)


@pytest.fixture
def sigma_p() -> float:
    return pump_spectrum().rms_bandwidth_omega


@pytest.fixture
def preset_params() -> DipParams:
    return published_dip_params()


@pytest.fixture
def fig3a():
    return get_preset("fig3a")


@pytest.fixture
def small_experiment() -> ExperimentConfig:
    # coarse grid and short dwell for fast scan tests
    return ExperimentConfig(
        dip=DipModel(depth=0.913, rms_width=0.86 * PS),
        dwell_per_point=240.0,
        block_duration=60.0,
        scan_half_range=3.0 * PS,
        scan_step=300 * FS,
        seed=7,
    )
