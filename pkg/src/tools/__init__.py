from .units import rms_omega_from_nm, rms_nm_from_omega, fwhm_from_rms, rms_from_fwhm, time_bandwidth_product
from .analytic import visibility, dip_depth, dip_width, solve_filters, scenario_visibility, scenario_table
from .oracle import coincidence_probability, oracle_dip, oracle_fit, compare_with_analytic
from .event_sim import run_scan, simulate_thermal
from .fitting import fit_dip, fit_gaussian_dip
from .sync_loop import simulate_lock, rms_jitter, combined_pair_jitter, gvm_from_totals, calibrate_noise
from .reports import write_csv, read_scan_csv, render_plot

__all__ = [
    "rms_omega_from_nm",
    "rms_nm_from_omega",
    "fwhm_from_rms",
    "rms_from_fwhm",
    "time_bandwidth_product",
    "visibility",
    "dip_depth",
    "dip_width",
    "solve_filters",
    "scenario_visibility",
    "scenario_table",
    "coincidence_probability",
    "oracle_dip",
    "oracle_fit",
    "compare_with_analytic",
    "run_scan",
    "simulate_thermal",
    "fit_dip",
    "fit_gaussian_dip",
    "simulate_lock",
    "rms_jitter",
    "combined_pair_jitter",
    "gvm_from_totals",
    "calibrate_noise",
    "write_csv",
    "read_scan_csv",
    "render_plot",
]
