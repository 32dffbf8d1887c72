from ..state import RunState
from ..tools.analytic import dip_width, visibility
from ..tools.oracle import compare_with_analytic, oracle_fit


def oracle_node(state: RunState) -> dict:
    # quadrature oracle at the preset, then the divergence grid against the closed form
    opts = state["options"]
    preset = state["preset"]
    verbose = not opts["quiet"]
    fit = oracle_fit(preset.dip_params, preset.oracle, verbose=verbose)
    v_closed, w_closed = visibility(preset.dip_params), dip_width(preset.dip_params)
    lines = [
        f"preset: {preset.name}",
        f"oracle V = {fit.visibility:.6f} (closed form {v_closed:.6f})",
        f"oracle D = {fit.amplitude:.6f}",
        f"oracle w = {fit.model.rms_width * 1e12:.6f} ps (closed form {w_closed * 1e12:.6f} ps)",
    ]
    report = None
    if not opts.get("no_grid"):
        report = compare_with_analytic(preset.dip_params.sigma_p, preset.oracle, tolerance=opts["tolerance"],
                                       strict=opts.get("strict", False), verbose=verbose)
        lines += ["", *report.lines()]
        if not report.ok:
            lines.append(f"divergence: {len(report.failures)} of {len(report.rows)} cells outside "
                         f"{report.tolerance:.0%}")
    return {
        "oracle": {"visibility": fit.visibility, "depth": fit.amplitude, "width": fit.model.rms_width},
        "fit": fit,
        "divergence": report,
        "report_lines": lines,
        "messages": ["Oracle: quadrature evaluated"],
    }
