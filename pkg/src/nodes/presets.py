from ..config import list_presets, preset_rows
from ..state import RunState


def _format(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (list, tuple)):
        return ", ".join(_format(v) for v in value)
    return str(value)


def presets_node(state: RunState) -> dict:
    # every preset field with its provenance tag
    lines = []
    for preset in list_presets():
        lines.append(f"[{preset.name}] {preset.description} (scenario={preset.experiment.scenario})")
        lines += [f"  {key:<32} {_format(value):>24}  {tag}" for key, value, tag in preset_rows(preset)]
        lines.append("")
    return {"report_lines": lines, "messages": ["Presets: listed"]}
