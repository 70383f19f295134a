"""Command-line entry point: ``lorentz-flow SUBCOMMAND [options]``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .config import ConfigError, OutputSpec, example_config, load_config
from .run import run

SUBCOMMANDS = {
    "geodesic": ("geodesic",),
    "flow": ("level", "curves"),
    "scan": ("scan",),
    "frames": ("frames",),
    "envelope": ("envelope",),
}
DEFAULT_OUTPUTS = {
    "geodesic": [OutputSpec("geodesic", "csv", "geodesic.csv")],
    "flow": [OutputSpec("level", "csv", "level.csv"), OutputSpec("curves", "csv", "curves.csv")],
    "scan": [OutputSpec("scan", "csv", "scan.csv")],
    "frames": [OutputSpec("frames", "csv", "frames.csv")],
    "envelope": [OutputSpec("envelope", "csv", "envelope.csv")],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lorentz-flow",
                                     description="Lorentzian geodesic flows between hyperplanes and hypersurfaces.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "geodesic": "sample the geodesic between two hyperplanes",
        "flow": "level surfaces and flow curves of an induced flow",
        "scan": "singularity report of an induced flow",
        "frames": "parallel frame transport / interpolation along a segment",
        "envelope": "envelope of the tangent-plane family of a surface",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="PATH", help="YAML experiment file (default: built-in example)")
        p.add_argument("--out", metavar="DIR", default=".", help="output directory (default: .)")
        p.add_argument("--grid", metavar="N", type=int, help="override u samples per axis")
        p.add_argument("--tsamples", metavar="N", type=int, help="override number of t samples")
        p.add_argument("--seed", metavar="N", type=int, help="seed for randomized demos")
        p.add_argument("--slice", action="store_true", help="planar slice u2 = 0 with (r, z, t) columns")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else example_config()
        cfg = cfg.with_overrides(args.grid, args.tsamples, args.slice, args.seed)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    kinds = SUBCOMMANDS[args.command]
    if not any(o.what in kinds for o in cfg.outputs):
        cfg = replace(cfg, outputs=tuple(cfg.outputs) + tuple(DEFAULT_OUTPUTS[args.command]))
    report = run(cfg, args.out, only=kinds)
    json.dump(report.to_dict(), sys.stdout, indent=1, sort_keys=True)
    sys.stdout.write("\n")
    for o in report.outputs:
        if o.status != "ok":
            print(f"error: {o.path}: {o.message}", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
