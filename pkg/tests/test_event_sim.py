import numpy as np
import pytest
from pydantic import ValidationError

from src.config import get_preset
from src.errors import DomainError
from src.state import DipModel, ExperimentConfig
from src.tools.analytic import scenario_visibility
from src.tools.event_sim import dispersion_index, run_scan, simulate_thermal, thermal_visibility_estimate
from src.tools.fitting import fit_dip

PS = 1e-12
DIP = DipModel(depth=0.913, rms_width=0.86 * PS)


def test_protocol_shape(fig3a):
    scan = run_scan(fig3a.experiment)
    assert len(scan.points) == 31
    assert all(len(p.counts) == 15 for p in scan.points)
    assert scan.points[0].set_delay == pytest.approx(-4.5 * PS)
    assert scan.metadata["blocks_per_point"] == 15
    assert "signal_efficiency" in scan.metadata["inferred"]


def test_same_seed_same_scan(small_experiment):
    assert run_scan(small_experiment) == run_scan(small_experiment)


def test_thread_count_does_not_change_result(small_experiment):
    threaded = small_experiment.model_copy(update={"workers": 4})
    assert run_scan(small_experiment) == run_scan(threaded)


def test_different_seeds_differ(small_experiment):
    other = small_experiment.model_copy(update={"seed": 8})
    assert run_scan(small_experiment) != run_scan(other)


def test_dwell_must_be_block_multiple():
    with pytest.raises(ValidationError):
        ExperimentConfig(dip=DIP, dwell_per_point=90.0, block_duration=60.0)
    with pytest.raises(ValidationError):
        ExperimentConfig(dip=DIP, dwell_per_point=0.0)


def test_multi_pair_is_reserved():
    with pytest.raises(ValidationError):
        ExperimentConfig(dip=DIP, multi_pair=True)


def test_zero_rate_warns(small_experiment):
    scan = run_scan(small_experiment.model_copy(update={"pair_prob_a": 0.0}))
    assert scan.metadata["warnings"]
    assert sum(p.total for p in scan.points) == 0


def test_thermal_ratio_must_be_positive(small_experiment):
    with pytest.raises(DomainError):
        simulate_thermal(small_experiment, 0.0)


def test_poisson_dispersion():
    config = ExperimentConfig(dip=DIP, scan_half_range=0.0, dwell_per_point=600 * 60.0, seed=11)
    counts = run_scan(config).points[0].counts
    assert len(counts) == 600
    assert 0.8 <= dispersion_index(counts) <= 1.2


@pytest.mark.parametrize("depth,ratio,expected", [(1.0, 1.0, 0.20), (0.913, 1.0, 0.1795), (0.913, 2.0, 0.150)])
def test_thermal_sample_mean_converges(depth, ratio, expected):
    v, se = thermal_visibility_estimate(depth, ratio, 400_000, seed=5)
    assert abs(v - scenario_visibility("thermal", depth, ratio)) < 4 * se
    assert v == pytest.approx(expected, abs=0.01)


def test_drift_compensation_limits_width_inflation():
    bright = dict(dip=DIP, trigger_efficiency=1.0, signal_efficiency=1.0, seed=3)
    widths = {}
    for name, update in (("none", {"drift_rate": 0.0}), ("compensated", {}),
                         ("uncompensated", {"compensate_drift": False})):
        scan = run_scan(ExperimentConfig(**bright, **update))
        widths[name] = fit_dip(scan, n_bootstrap=0).model.rms_width
    assert widths["compensated"] / widths["none"] - 1.0 < 0.03
    assert widths["uncompensated"] > widths["compensated"]


@pytest.mark.slow
def test_visibility_error_shrinks_with_dwell():
    spread = {}
    for dwell in (60.0, 960.0):
        estimates = []
        for seed in range(40):
            config = ExperimentConfig(dip=DIP, signal_efficiency=0.2, dwell_per_point=dwell, seed=seed)
            estimates.append(fit_dip(run_scan(config), n_bootstrap=0).visibility)
        spread[dwell] = np.std(estimates, ddof=1)
    assert 2.4 < spread[60.0] / spread[960.0] < 6.7


@pytest.mark.slow
@pytest.mark.parametrize("name,expected", [
    ("fig3a", 0.84),
    ("fig3b", 0.0),
    ("fig3c", scenario_visibility("unpolarized", 2 * 0.84 / 1.84)),
    ("fig3d", scenario_visibility("thermal", 2 * 0.84 / 1.84, 2.0)),
])
def test_preset_scans_reproduce_predictions(name, expected):
    fit = fit_dip(run_scan(get_preset(name).experiment))
    assert abs(fit.visibility - expected) < 3 * fit.visibility_sigma


@pytest.mark.slow
def test_fig3a_uncertainty_regime(fig3a):
    fit = fit_dip(run_scan(fig3a.experiment))
    assert 0.02 <= fit.visibility_sigma <= 0.07
