from typing import List

from ..errors import UsageError
from ..state import FitResult, RunState
from ..tools.fitting import fit_dip
from ..tools.reports import read_scan_csv


def fit_lines(fit: FitResult) -> List[str]:
    return [
        f"V = {fit.visibility:.6f} +- {fit.visibility_sigma:.6f}",
        f"D = {fit.amplitude:.6f}",
        f"w = {fit.model.rms_width * 1e12:.6f} +- {fit.width_sigma * 1e12:.6f} ps",
        f"offset = {fit.delay_offset * 1e15:.2f} fs",
        f"baseline = {fit.model.baseline:.4f}",
        f"bootstrap resamples = {fit.n_bootstrap}",
    ]


def fit_node(state: RunState) -> dict:
    # refit an existing scan CSV
    opts = state["options"]
    path = opts.get("input") or opts.get("csv")
    if not path:
        raise UsageError("fit needs a scan CSV (positional argument or --csv)")
    scan = read_scan_csv(path)
    fit = fit_dip(scan, n_bootstrap=opts["bootstrap"])
    if not opts["quiet"]:
        print(f"[FIT] {path}: V={fit.visibility:.4f} +- {fit.visibility_sigma:.4f}")
    return {
        "scan": scan,
        "fit": fit,
        "report_lines": [f"input: {path}", *fit_lines(fit)],
        "messages": ["Fit: scan refitted"],
    }
