import sys

from .config import load_env
from .graph import build_graph, run_command

"""
Main entry point for the homlab command line
Usage: python -m src.main <analytic|oracle|scan|sync|fit|presets> [options]
"""


def main(argv=None) -> int:
    # load environment variables from project root .env
    load_env()
    argv = sys.argv[1:] if argv is None else argv
    return run_command(argv, build_graph())


if __name__ == "__main__":
    sys.exit(main())
