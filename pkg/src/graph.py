"""
LangGraph construction for the homlab command pipeline
"""
import sys
from typing import List, Optional

from langgraph.graph import StateGraph, END

from .errors import HomLabError
from .state import RunState, create_initial_state
from .nodes import (COMMANDS, CommandRouter, analytic_node, fit_node, oracle_node, presets_node, report_node,
                    scan_node, sync_node)

COMMAND_NODES = {
    "analytic": analytic_node,
    "oracle": oracle_node,
    "scan": scan_node,
    "sync": sync_node,
    "fit": fit_node,
    "presets": presets_node,
}


def route_after_router(state: RunState) -> str:
    # subcommand selects the single worker node
    command = state.get("command")
    return command if command in COMMANDS else "presets"


def build_graph(seed: Optional[int] = None, workers: Optional[int] = None):
    # build the command graph
    workflow = StateGraph(RunState)
    workflow.add_node("router", CommandRouter(seed, workers))
    # node ids carry a suffix so they do not clash with the state channels of the same name
    for name, node in COMMAND_NODES.items():
        workflow.add_node(f"{name}_node", node)
    workflow.add_node("report", report_node)
    workflow.set_entry_point("router")
    workflow.add_conditional_edges("router", route_after_router, {name: f"{name}_node" for name in COMMAND_NODES})
    # every command ends in the report node
    for name in COMMAND_NODES:
        workflow.add_edge(f"{name}_node", "report")
    workflow.add_edge("report", END)
    return workflow.compile()


def run_command(argv: List[str], graph=None) -> int:
    """
    Run one CLI invocation through the graph and return its exit code.

    0 on success, 2 for validation errors, 3 for numerical failures; errors go to
    standard error as `error[<code>]: <message>`.
    """
    graph = graph or build_graph()
    try:
        final_state = graph.invoke(create_initial_state(argv))
    except HomLabError as e:
        print(f"error[{e.code}]: {e}", file=sys.stderr)
        return e.exit_code
    except SystemExit as e:
        # argparse --help
        return int(e.code or 0)
    return final_state.get("exit_code") or 0
