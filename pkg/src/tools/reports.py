"""
CSV, SVG and manifest output for scans, fits and lock simulations.
"""
from pathlib import Path
from typing import Optional

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from ..errors import ConfigError, OutputError
from ..state import FitResult, JitterSeries, RunManifest, ScanPoint, ScanResult

SCAN_COLUMNS = ["set_delay_s", "block_index", "realized_delay_s", "fourfold_counts"]
JITTER_COLUMNS = ["time_s", "harmonic", "timing_error_s"]
PSD_COLUMNS = ["frequency_hz", "psd_s2_per_hz"]
FLOAT_FORMAT = "%.17e"
SVG_SALT = "homlab"


def _write_frame(df: pd.DataFrame, path) -> str:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        raise OutputError(f"cannot write CSV: {e.strerror}", key=str(path)) from None
    return str(path)


def scan_frame(scan: ScanResult) -> pd.DataFrame:
    rows = [(p.set_delay, b, d, c)
            for p in scan.points
            for b, (d, c) in enumerate(zip(p.realized_delays, p.counts))]
    df = pd.DataFrame(rows, columns=SCAN_COLUMNS)
    return df.astype({"set_delay_s": float, "block_index": "int64", "realized_delay_s": float,
                      "fourfold_counts": "int64"})


def write_csv(scan: ScanResult, path) -> str:
    return _write_frame(scan_frame(scan), path)


def read_scan_csv(path) -> ScanResult:
    path = Path(path)
    try:
        df = pd.read_csv(path, dtype={"set_delay_s": float, "block_index": "int64",
                                      "realized_delay_s": float, "fourfold_counts": "int64"},
                         float_precision="round_trip")
    except FileNotFoundError:
        raise OutputError("no such file", key=str(path)) from None
    except (ValueError, pd.errors.ParserError) as e:
        raise ConfigError(f"malformed scan CSV: {e}", key=str(path)) from None
    if list(df.columns) != SCAN_COLUMNS:
        raise ConfigError(f"expected columns {', '.join(SCAN_COLUMNS)}", key=str(path))
    points = []
    # first appearance of each set delay fixes the point order
    for delay, group in df.groupby("set_delay_s", sort=False):
        group = group.sort_values("block_index")
        points.append(ScanPoint(set_delay=float(delay),
                                realized_delays=group["realized_delay_s"].tolist(),
                                counts=[int(c) for c in group["fourfold_counts"]]))
    return ScanResult(points=points, metadata={"source": str(path)})


def write_jitter_csv(series: JitterSeries, path) -> str:
    df = pd.DataFrame({
        "time_s": series.times,
        "harmonic": np.asarray(series.harmonics, dtype=np.int64),
        "timing_error_s": np.asarray(series.samples, dtype=float),
    }, columns=JITTER_COLUMNS)
    return _write_frame(df, path)


def write_psd_csv(freqs, psd, path) -> str:
    df = pd.DataFrame({"frequency_hz": np.asarray(freqs, dtype=float),
                       "psd_s2_per_hz": np.asarray(psd, dtype=float)}, columns=PSD_COLUMNS)
    return _write_frame(df, path)


def render_plot(scan: ScanResult, fit: FitResult, path, title: Optional[str] = None) -> str:
    """
    Counts versus set delay with Poisson error bars and the fitted dip.

    The SVG is self-contained and byte-stable for a given scan and fit.
    """
    x, y = scan.arrays()
    x_ps = x * 1e12
    plt.rcParams["svg.hashsalt"] = SVG_SALT
    plt.rcParams["svg.fonttype"] = "path"
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.errorbar(x_ps, y, yerr=np.sqrt(np.maximum(y, 1.0)), fmt="o", ms=3, capsize=2,
                color="black", label="fourfold counts")
    if x.size:
        fine = np.linspace(x.min(), x.max(), 400)
        ax.plot(fine * 1e12, fit.model.curve(fine, fit.delay_offset), color="tab:red", lw=1.5,
                label="gaussian fit")
    text = (f"V = {fit.visibility:.3f} ± {fit.visibility_sigma:.3f}\n"
            f"w = {fit.model.rms_width * 1e12:.3f} ± {fit.width_sigma * 1e12:.3f} ps")
    ax.text(0.03, 0.05, text, transform=ax.transAxes, va="bottom", ha="left",
            bbox={"facecolor": "white", "edgecolor": "0.7"})
    ax.set_xlabel("delay (ps)")
    ax.set_ylabel("fourfold coincidences per point")
    if title:
        ax.set_title(title)
    ax.set_ylim(bottom=0)
    ax.legend(loc="lower right", frameon=False)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    except OSError as e:
        raise OutputError(f"cannot write SVG: {e.strerror}", key=str(path)) from None
    finally:
        plt.close(fig)
    return str(path)


def write_manifest(manifest: RunManifest, path) -> str:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(manifest.to_text(), encoding="utf-8", newline="\n")
    except OSError as e:
        raise OutputError(f"cannot write manifest: {e.strerror}", key=str(path)) from None
    return str(path)


def read_manifest(path) -> RunManifest:
    path = Path(path)
    try:
        return RunManifest.from_text(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise OutputError(f"cannot read manifest: {e.strerror}", key=str(path)) from None
