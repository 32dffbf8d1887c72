from .router import CommandRouter, router_node, build_parser, COMMANDS
from .analytic import analytic_node
from .oracle import oracle_node
from .scan import scan_node
from .sync import sync_node
from .fit import fit_node
from .presets import presets_node
from .report import report_node

__all__ = [
    "CommandRouter",
    "router_node",
    "build_parser",
    "COMMANDS",
    "analytic_node",
    "oracle_node",
    "scan_node",
    "sync_node",
    "fit_node",
    "presets_node",
    "report_node",
]
