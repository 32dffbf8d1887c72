from ..config import PAIR_JITTER
from ..state import RunState
from ..tools.sync_loop import (combined_pair_jitter, gvm_from_totals, jitter_psd, phase_margin, rms_jitter,
                               simulate_lock)


def sync_node(state: RunState) -> dict:
    # run the two-stage lock and report the jitter budget
    opts = state["options"]
    preset = state["preset"]
    loop = preset.loop
    verbose = not opts["quiet"]
    pm = phase_margin(loop)
    if verbose:
        print(f"[SYNC] harmonic {loop.harmonic}, {loop.loop_bandwidth / 1e3:g} kHz loop, "
              f"phase margin {pm:.1f} deg")
    series = simulate_lock(loop, opts["duration"], state["seed"], verbose=verbose)
    sync_rms = rms_jitter(series, opts["discard"])
    freqs, psd = jitter_psd(series, opts["discard"])
    gvm = gvm_from_totals(PAIR_JITTER, sync_rms) if sync_rms <= PAIR_JITTER else 0.0
    lines = [
        f"preset: {preset.name} seed={state['seed']}",
        f"phase margin = {pm:.2f} deg",
        f"handover at {series.lock_epochs[1] * 1e3:.4f} ms",
        f"sync r.m.s. jitter = {sync_rms * 1e15:.2f} fs",
        f"gvm spread (from {PAIR_JITTER * 1e15:.0f} fs total) = {gvm * 1e15:.2f} fs",
        f"combined pair jitter = {combined_pair_jitter(sync_rms, gvm) * 1e15:.2f} fs",
    ]
    return {
        "jitter": series,
        "sync": {"sync_rms": sync_rms, "psd": (freqs, psd), "phase_margin": pm},
        "report_lines": lines,
        "messages": ["Sync: lock simulated"],
    }
