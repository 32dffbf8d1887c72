from pathlib import Path
from typing import List

from ..config import VERSION
from ..state import RunManifest, RunState
from ..tools.reports import render_plot, write_csv, write_jitter_csv, write_manifest, write_psd_csv


def _default_path(state: RunState, suffix: str) -> Path:
    opts = state["options"]
    return Path(opts["out_dir"]) / f"{state['command']}_{state['preset'].name}_seed{state['seed']}{suffix}"


def _write_outputs(state: RunState) -> List[str]:
    opts = state["options"]
    command = state["command"]
    written = []
    if command == "scan":
        csv_path = opts.get("csv") or _default_path(state, ".csv")
        svg_path = opts.get("svg") or Path(csv_path).with_suffix(".svg")
        written.append(write_csv(state["scan"], csv_path))
        written.append(render_plot(state["scan"], state["fit"], svg_path,
                                   title=f"{state['preset'].name}: {state['preset'].description}"))
    elif command == "sync":
        csv_path = opts.get("csv") or _default_path(state, ".csv")
        psd_path = Path(csv_path).with_name(Path(csv_path).stem + "_psd.csv")
        written.append(write_jitter_csv(state["jitter"], csv_path))
        freqs, psd = state["sync"]["psd"]
        written.append(write_psd_csv(freqs, psd, psd_path))
    elif command == "fit" and opts.get("svg"):
        written.append(render_plot(state["scan"], state["fit"], opts["svg"]))
    if written:
        manifest = RunManifest(
            command=command,
            argv=state["options"]["argv"],
            preset=state["preset"].name,
            overrides=state["overrides"] or {},
            seed=state["seed"],
            version=VERSION,
            outputs=written,
        )
        written.append(write_manifest(manifest, Path(written[0]).with_suffix(".manifest")))
    return written


def report_node(state: RunState) -> dict:
    # write files for the command and print the summary
    verbose = not state["options"]["quiet"]
    written = _write_outputs(state)
    for line in state.get("report_lines", []):
        print(line)
    if verbose:
        for path in written:
            print(f"[REPORT] wrote {path}")
    return {
        "outputs": written,
        "exit_code": 0,
        "messages": [f"Report: {len(written)} files"],
    }
