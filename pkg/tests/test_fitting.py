import numpy as np
import pytest

from src.errors import StatisticsError
from src.state import ScanPoint, ScanResult
from src.tools.fitting import dip_curve, fit_dip, fit_gaussian_dip

PS = 1e-12


def _scan(delays, block_counts):
    return ScanResult(points=[ScanPoint(set_delay=float(d), realized_delays=[float(d)] * len(c), counts=list(c))
                              for d, c in zip(delays, block_counts)])


def test_noiseless_curve_recovers_parameters():
    x = np.linspace(-4.5 * PS, 4.5 * PS, 31)
    y = dip_curve(x, 1000.0, 0.913, 0.0, 0.86 * PS)
    fit = fit_gaussian_dip(x, y)
    assert fit.visibility == pytest.approx(0.913 / (2 - 0.913), rel=1e-6)
    assert fit.model.rms_width == pytest.approx(0.86 * PS, rel=1e-6)
    assert fit.delay_offset == pytest.approx(0.0, abs=1e-6 * PS)
    assert fit.depth == pytest.approx(0.913, rel=1e-6)


def test_recovers_offset_dip():
    x = np.linspace(-4.5 * PS, 4.5 * PS, 31)
    y = dip_curve(x, 250.0, 0.5, 0.4 * PS, 1.1 * PS)
    fit = fit_gaussian_dip(x, y)
    assert fit.delay_offset == pytest.approx(0.4 * PS, rel=1e-6)
    assert fit.model.baseline == pytest.approx(250.0, rel=1e-9)


def test_flat_data_gives_zero_amplitude():
    x = np.linspace(-4.5 * PS, 4.5 * PS, 31)
    fit = fit_gaussian_dip(x, np.full(x.size, 120.0))
    assert fit.amplitude == pytest.approx(0.0, abs=1e-6)


def test_too_few_points():
    with pytest.raises(StatisticsError):
        fit_gaussian_dip([0.0, 1.0, 2.0], [1.0, 0.5, 1.0])


def test_all_zero_counts():
    x = np.linspace(-1.0, 1.0, 9)
    with pytest.raises(StatisticsError):
        fit_gaussian_dip(x, np.zeros(9))
    with pytest.raises(StatisticsError):
        fit_dip(_scan(x, [[0, 0]] * 9))


def test_bootstrap_is_deterministic():
    rng = np.random.default_rng(3)
    x = np.linspace(-4.5 * PS, 4.5 * PS, 31)
    mean = dip_curve(x, 40.0, 0.9, 0.0, 0.86 * PS)
    blocks = rng.poisson(np.repeat(mean[:, None], 6, axis=1))
    scan = _scan(x, blocks.tolist())
    a = fit_dip(scan, n_bootstrap=50)
    b = fit_dip(scan, n_bootstrap=50)
    assert a == b
    assert a.n_bootstrap >= 25
    assert 0.0 < a.visibility_sigma < 0.2


def test_single_block_uses_parametric_bootstrap():
    rng = np.random.default_rng(4)
    x = np.linspace(-4.5 * PS, 4.5 * PS, 31)
    counts = rng.poisson(dip_curve(x, 200.0, 0.9, 0.0, 0.86 * PS))
    fit = fit_dip(_scan(x, [[int(c)] for c in counts]), n_bootstrap=40)
    assert fit.visibility_sigma > 0.0


def test_no_bootstrap_returns_point_estimate():
    x = np.linspace(-4.5 * PS, 4.5 * PS, 31)
    y = dip_curve(x, 300.0, 0.6, 0.0, 0.9 * PS).round()
    fit = fit_dip(_scan(x, [[int(v)] for v in y]), n_bootstrap=0)
    assert fit.n_bootstrap == 0
    assert fit.visibility_sigma == 0.0


@pytest.mark.parametrize("width_ps", [0.3, 0.86, 2.0])
def test_noiseless_poisson_weighted_fit(width_ps):
    x = np.arange(-15, 16) * 300e-15
    y = dip_curve(x, 1000.0, 0.913, 0.0, width_ps * PS)
    fit = fit_gaussian_dip(x, y, sigma=np.sqrt(y))
    assert fit.visibility == pytest.approx(0.913 / (2 - 0.913), rel=1e-6)
    assert fit.model.rms_width == pytest.approx(width_ps * PS, rel=1e-6)
    assert fit.residual_rms < 1e-6


def test_distant_start_still_converges():
    x = np.linspace(-4.5 * PS, 4.5 * PS, 31)
    y = dip_curve(x, 1000.0, 0.913, 0.2 * PS, 0.86 * PS)
    fit = fit_gaussian_dip(x, y, p0=[800.0, 0.3, -0.6 * PS, 1.6 * PS])
    assert fit.delay_offset == pytest.approx(0.2 * PS, rel=1e-6)
    assert fit.model.rms_width == pytest.approx(0.86 * PS, rel=1e-6)
