from ..state import RunState
from ..tools.event_sim import run_scan
from ..tools.fitting import fit_dip
from .fit import fit_lines


def scan_node(state: RunState) -> dict:
    # simulate the delay scan of the preset and fit it
    opts = state["options"]
    preset = state["preset"]
    verbose = not opts["quiet"]
    scan = run_scan(preset.experiment, verbose=verbose)
    fit = fit_dip(scan, n_bootstrap=opts["bootstrap"])
    if verbose:
        print(f"[FIT] V={fit.visibility:.4f} +- {fit.visibility_sigma:.4f}, "
              f"w={fit.model.rms_width * 1e12:.4f} ps")
    lines = [f"preset: {preset.name} scenario={preset.experiment.scenario} seed={preset.experiment.seed}"]
    lines += fit_lines(fit)
    lines += [f"warning: {w}" for w in scan.metadata.get("warnings", [])]
    return {
        "scan": scan,
        "fit": fit,
        "report_lines": lines,
        "messages": [f"Scan: {len(scan.points)} points"],
    }
