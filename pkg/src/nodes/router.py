import argparse
from typing import List, Optional

from ..config import apply_overrides, default_seed, default_workers, get_preset, load_config_file, parse_assignments
from ..errors import UsageError
from ..state import RunState
from ..tools.reports import read_manifest

COMMANDS = ("analytic", "oracle", "scan", "sync", "fit", "presets")

CONFIG_HELP = """
configuration keys (SI units): dip.sigma_p, dip.sigma_S, dip.sigma_T (rad/s, 'unfiltered' allowed),
dip.sigma_J (s); experiment.* (rep_rate Hz, scan_step s, dwell_per_point s, block_duration s,
drift_rate s/sqrt(s), pair_prob_a, ..., experiment.dip.depth, experiment.dip.rms_width s);
loop.* (loop_bandwidth Hz, harmonic, free_run_noise = white, walk); oracle.* (quadrature_order, ...)
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--preset", default="fig3a", help="named preset (see 'presets')")
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="inline configuration override (repeatable)")
    common.add_argument("--seed", type=int, help="random seed (default: $HOMLAB_SEED or 1)")
    common.add_argument("--workers", type=int, help="worker threads (default: $HOMLAB_WORKERS or 1)")
    common.add_argument("--out-dir", default="out", help="directory for generated files")
    common.add_argument("--csv", help="CSV output path")
    common.add_argument("--svg", help="SVG output path")
    common.add_argument("--manifest", help="replay the command recorded in a run manifest")
    common.add_argument("--quiet", action="store_true", help="suppress progress lines")

    parser = _Parser(prog="homlab", description="Two-source HOM dip simulation toolkit",
                     epilog=CONFIG_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    analytic = sub.add_parser("analytic", parents=[common], help="closed-form visibility, depth and width")
    analytic.add_argument("--visibility", type=float, help="target visibility for the filter inversion")
    analytic.add_argument("--width", type=float, help="target r.m.s. dip width (s) for the filter inversion")
    analytic.add_argument("--method", choices=("exact", "newton"), default="exact")
    oracle = sub.add_parser("oracle", parents=[common], help="quadrature oracle and divergence grid")
    oracle.add_argument("--no-grid", action="store_true", help="skip the parameter-grid comparison")
    oracle.add_argument("--strict", action="store_true", help="fail when a grid cell diverges")
    oracle.add_argument("--tolerance", type=float, default=0.02)
    scan = sub.add_parser("scan", parents=[common], help="Monte Carlo delay scan with fit")
    scan.add_argument("--bootstrap", type=int, default=200)
    sync = sub.add_parser("sync", parents=[common], help="two-stage lock simulation")
    sync.add_argument("--duration", type=float, default=0.04)
    sync.add_argument("--discard", type=float, default=0.005)
    fit = sub.add_parser("fit", parents=[common], help="refit a scan CSV")
    fit.add_argument("input", nargs="?", help="scan CSV to fit")
    fit.add_argument("--bootstrap", type=int, default=200)
    sub.add_parser("presets", parents=[common], help="list presets with provenance tags")
    return parser


def parse_argv(argv: List[str]) -> argparse.Namespace:
    args = build_parser().parse_args(argv)
    if args.command is None:
        raise UsageError(f"missing subcommand (expected one of {', '.join(COMMANDS)})")
    return args


def _replay_argv(argv: List[str], args: argparse.Namespace) -> List[str]:
    # recorded argv, its seed, then any flags given alongside --manifest
    manifest = read_manifest(args.manifest)
    extra, skip = [], False
    for i, a in enumerate(argv):
        if skip:
            skip = False
        elif i == 0 and a in COMMANDS:
            continue
        elif a == "--manifest":
            skip = True
        elif not a.startswith("--manifest="):
            extra.append(a)
    return list(manifest.argv) + ["--seed", str(manifest.seed)] + extra


def router_node(state: RunState, seed: Optional[int] = None, workers: Optional[int] = None) -> dict:
    # parse argv, resolve preset, config file, overrides and seed
    argv = list(state["argv"])
    args = parse_argv(argv)
    if args.manifest:
        argv = _replay_argv(argv, args)
        args = parse_argv(argv)
    overrides = {}
    if args.config:
        overrides.update(load_config_file(args.config))
    overrides.update(parse_assignments(args.set))
    preset = apply_overrides(get_preset(args.preset), overrides)
    run_seed = args.seed if args.seed is not None else (default_seed() if seed is None else seed)
    n_workers = args.workers if args.workers is not None else (default_workers() if workers is None else workers)
    if n_workers < 1:
        raise UsageError("--workers must be >= 1")
    experiment = preset.experiment.model_copy(update={"seed": run_seed, "workers": n_workers})
    if not 0 <= run_seed < 2 ** 64:
        raise UsageError("seed must be an unsigned 64-bit integer")
    preset = preset.model_copy(update={"experiment": experiment})
    options = vars(args)
    options["argv"] = argv
    if not args.quiet:
        print(f"[ROUTER] {args.command} preset={preset.name} seed={run_seed} overrides={len(overrides)}")
    return {
        "argv": argv,
        "command": args.command,
        "options": options,
        "preset": preset,
        "overrides": {k: ", ".join(v) if isinstance(v, list) else v for k, v in overrides.items()},
        "seed": run_seed,
        "messages": [f"Router: {args.command}"],
    }


class CommandRouter:
    # router node class wrapper; env defaults are resolved once per graph
    def __init__(self, seed: Optional[int] = None, workers: Optional[int] = None):
        self.seed = seed
        self.workers = workers
        self.name = "router"

    def __call__(self, state: RunState) -> dict:
        return router_node(state, self.seed, self.workers)
