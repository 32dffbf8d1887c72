import math

import numpy as np
import pytest

from src.errors import DomainError, NarrowbandError
from src.state import PulseGaussian, SpectralGaussian
from src.tools.units import (FWHM_FACTOR, fwhm_from_rms, ir_pulses, ir_spectrum, pump_spectrum, rms_from_fwhm,
                             rms_nm_from_omega, rms_omega_from_nm, time_bandwidth_product)


def test_pump_bandwidth_conversion():
    assert rms_omega_from_nm(394.25, 0.8) == pytest.approx(9.70e12, rel=2e-3)


def test_ir_bandwidth_conversion():
    assert rms_omega_from_nm(788.5, 2.9) == pytest.approx(8.79e12, rel=2e-3)


def test_zero_bandwidth():
    assert rms_omega_from_nm(800.0, 0.0) == 0.0


@pytest.mark.parametrize("center", [0.0, -394.25])
def test_non_positive_center_rejected(center):
    with pytest.raises(DomainError):
        rms_omega_from_nm(center, 0.8)


def test_broadband_ratio_rejected():
    with pytest.raises(NarrowbandError):
        rms_omega_from_nm(800.0, 80.0)


def test_nm_round_trip():
    omega = rms_omega_from_nm(788.5, 0.29)
    assert rms_nm_from_omega(788.5, omega) == pytest.approx(0.29, rel=1e-12)


def test_fwhm_values():
    assert fwhm_from_rms(0.0) == 0.0
    assert fwhm_from_rms(1.0) == pytest.approx(2.35482, rel=1e-5)
    assert fwhm_from_rms(0.29) == pytest.approx(0.68, abs=0.005)
    assert rms_from_fwhm(FWHM_FACTOR) == pytest.approx(1.0)


def test_fwhm_negative_rejected():
    with pytest.raises(DomainError):
        fwhm_from_rms(-1.0)


def test_time_bandwidth_product():
    ir = PulseGaussian(rms_duration=49.3e-15, rms_bandwidth_omega=8.79e12)
    assert time_bandwidth_product(ir) == pytest.approx(0.433, abs=1e-3)
    assert time_bandwidth_product(PulseGaussian(rms_duration=1e-13)) == 0.0
    sigma = 3e12
    assert time_bandwidth_product(PulseGaussian(rms_duration=1 / (2 * sigma), rms_bandwidth_omega=sigma)) \
        == pytest.approx(0.5)


def test_source_presets_keep_raw_values():
    pump = pump_spectrum()
    assert pump.raw == {"rms_nm_master": 0.7, "rms_nm_slave": 0.9}
    assert pump.rms_bandwidth_omega == pytest.approx(rms_omega_from_nm(394.25, 0.8))
    assert ir_spectrum().center_wavelength == pytest.approx(788.5e-9)
    assert [p.rms_duration for p in ir_pulses()] == pytest.approx([49.3e-15, 46.8e-15])


def test_spectrum_model_rejects_broadband():
    center = 800e-9
    omega0 = 2 * math.pi * 299792458.0 / center
    with pytest.raises(ValueError):
        SpectralGaussian(center_wavelength=center, rms_bandwidth_omega=0.2 * omega0)


def test_bandwidth_conversion_scaling_on_random_inputs():
    rng = np.random.default_rng(5)
    for center, rms in zip(rng.uniform(300.0, 2000.0, 200), rng.uniform(0.01, 2.0, 200)):
        base = rms_omega_from_nm(center, rms)
        # linear in the bandwidth
        assert rms_omega_from_nm(center, 2.0 * rms) == pytest.approx(2.0 * base, rel=1e-12)
        assert rms_omega_from_nm(center, 0.5 * rms) == pytest.approx(0.5 * base, rel=1e-12)
        # 1 / lambda^2 at fixed relative bandwidth ratio
        assert rms_omega_from_nm(2.0 * center, rms) == pytest.approx(0.25 * base, rel=1e-12)
