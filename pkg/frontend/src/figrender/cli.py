"""Command line entry points: render one spec, or every shipped spec."""

import argparse
import glob
import os
import sys

from .render import render
from .specs import SpecError, load_spec

SHIPPED_SPEC_DIR = os.path.join(os.path.dirname(__file__), "figures")


def _cmd_render(args):
    spec = load_spec(args.spec)
    results_dir = args.results_dir or os.path.dirname(
        os.path.abspath(args.spec))
    png, svg = render(spec, results_dir, out_dir=args.out)
    print(png)
    print(svg)


def _cmd_render_all(args):
    spec_dir = args.specs or SHIPPED_SPEC_DIR
    paths = sorted(glob.glob(os.path.join(spec_dir, "*.json")))
    if not paths:
        raise SpecError(f"no figure specs found in {spec_dir}")
    for path in paths:
        spec = load_spec(path)
        png, svg = render(spec, args.results_dir, out_dir=args.out)
        print(png)
        print(svg)
    print(f"rendered {len(paths)} figures")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="figrender",
        description="Render experiment result CSVs to figures")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render a single figure spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--results-dir", dest="results_dir")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("render-all",
                       help="render every shipped spec against a results "
                            "directory")
    p.add_argument("results_dir")
    p.add_argument("--specs", help="alternate spec directory")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_render_all)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except SpecError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
