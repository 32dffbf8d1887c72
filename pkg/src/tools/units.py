"""
Unit conversions for gaussian spectra and pulses.

Spectral widths are carried in rad/s everywhere inside the package; nanometres
only appear at the input/output boundary.
"""
import math
from typing import Dict

from scipy.constants import c as SPEED_OF_LIGHT

from ..errors import DomainError, NarrowbandError
from ..state import SpectralGaussian, PulseGaussian, NARROWBAND_LIMIT

FWHM_FACTOR = 2.0 * math.sqrt(2.0 * math.log(2.0))
NM = 1e-9
FS = 1e-15


def rms_omega_from_nm(center_nm: float, rms_nm: float) -> float:
    # sigma_omega = 2 pi c * d_lambda / lambda0^2
    if not center_nm > 0:
        raise DomainError(f"center wavelength must be positive, got {center_nm} nm")
    if rms_nm < 0:
        raise DomainError(f"r.m.s. bandwidth must be >= 0, got {rms_nm} nm")
    if rms_nm / center_nm >= NARROWBAND_LIMIT:
        raise NarrowbandError(
            f"bandwidth ratio {rms_nm / center_nm:.3g} breaks the narrowband assumption (< {NARROWBAND_LIMIT})")
    return 2.0 * math.pi * SPEED_OF_LIGHT * (rms_nm * NM) / (center_nm * NM) ** 2


def rms_nm_from_omega(center_nm: float, rms_omega: float) -> float:
    # inverse of rms_omega_from_nm, used to report inferred filters in nm
    if not center_nm > 0:
        raise DomainError(f"center wavelength must be positive, got {center_nm} nm")
    if rms_omega < 0:
        raise DomainError("r.m.s. bandwidth must be >= 0")
    return rms_omega * (center_nm * NM) ** 2 / (2.0 * math.pi * SPEED_OF_LIGHT) / NM


def fwhm_from_rms(rms: float) -> float:
    if rms < 0:
        raise DomainError(f"r.m.s. width must be >= 0, got {rms}")
    return FWHM_FACTOR * rms


def rms_from_fwhm(fwhm: float) -> float:
    if fwhm < 0:
        raise DomainError(f"FWHM must be >= 0, got {fwhm}")
    return fwhm / FWHM_FACTOR


def time_bandwidth_product(p: PulseGaussian) -> float:
    # transform-limited gaussian gives 1/2; reported, never enforced
    return p.rms_duration * p.rms_bandwidth_omega


def spectrum_from_nm(center_nm: float, rms_nm: float, raw: Dict[str, float] = None) -> SpectralGaussian:
    return SpectralGaussian(
        center_wavelength=center_nm * NM,
        rms_bandwidth_omega=rms_omega_from_nm(center_nm, rms_nm),
        raw=raw or {},
    )


def pulse_from_nm(center_nm: float, rms_nm: float, rms_fs: float) -> PulseGaussian:
    return PulseGaussian(rms_duration=rms_fs * FS, rms_bandwidth_omega=rms_omega_from_nm(center_nm, rms_nm))


# source values as quoted for the two lasers; the symmetric model uses the mean
PUMP_CENTER_NM = 394.25
PUMP_RMS_NM = (0.7, 0.9)
IR_CENTER_NM = 788.5
IR_RMS_NM = (2.9, 3.2)
IR_PULSE_FS = (49.3, 46.8)


def pump_spectrum() -> SpectralGaussian:
    a, b = PUMP_RMS_NM
    return spectrum_from_nm(PUMP_CENTER_NM, 0.5 * (a + b), raw={"rms_nm_master": a, "rms_nm_slave": b})


def ir_spectrum() -> SpectralGaussian:
    a, b = IR_RMS_NM
    return spectrum_from_nm(IR_CENTER_NM, 0.5 * (a + b), raw={"rms_nm_master": a, "rms_nm_slave": b})


def ir_pulses() -> tuple:
    return tuple(pulse_from_nm(IR_CENTER_NM, nm, fs) for nm, fs in zip(IR_RMS_NM, IR_PULSE_FS))
