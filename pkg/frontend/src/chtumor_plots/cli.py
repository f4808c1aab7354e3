"""chtumor-plot: render figures from a chtumor run directory.

    chtumor-plot --run DIR --figs energy,mass,fields --out DIR --format png

--figs all selects every figure type (energy, mass, convergence, fields,
amplification). Inputs are never modified.
"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURES, render
from .reader import PlotDataError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chtumor-plot", description=__doc__)
    parser.add_argument("--run", required=True, help="input run directory")
    parser.add_argument("--figs", default="all",
                        help=f"comma-separated figure list or 'all' ({', '.join(FIGURES)})")
    parser.add_argument("--out", required=True, help="output directory for figures")
    parser.add_argument("--format", default="png", choices=("png", "svg"))
    parser.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    figs = "all" if args.figs.strip() == "all" else [f.strip() for f in args.figs.split(",") if f.strip()]
    try:
        paths = render(args.run, figs, args.out, args.format)
    except PlotDataError as err:
        print(f"plot error: {err}", file=sys.stderr)
        return 1
    if not args.quiet:
        for p in paths:
            print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
