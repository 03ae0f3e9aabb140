"""Command-line entry points: plot-trial and render-tables."""

import argparse
import sys

from .figures import plot_trial
from .tables import render_tables


def plot_trial_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-trial",
        description="Render a trial trace CSV to PNG and SVG figures",
    )
    parser.add_argument("trace", help="trace CSV emitted by the simulator")
    parser.add_argument("out", help="output path or basename (writes .png and .svg)")
    args = parser.parse_args(argv)
    try:
        png_path, svg_path = plot_trial(args.trace, args.out)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {png_path} and {svg_path}")
    return 0


def render_tables_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render-tables",
        description="Render summary.csv as markdown tables, one per network",
    )
    parser.add_argument("summary", help="summary.csv emitted by the sweep")
    parser.add_argument("out", help="output markdown path")
    args = parser.parse_args(argv)
    try:
        path = render_tables(args.summary, args.out)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(plot_trial_main())
