"""Command-line entry point: one figure per invocation.

Exit codes mirror the lab CLI: 0 success, 2 bad arguments or an input
whose schema does not fit the requested kind, 3 file-system trouble.
"""

from __future__ import annotations

import argparse
import sys

from . import KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render a decoherence-lab CSV artifact as a figure.",
    )
    parser.add_argument(
        "--kind",
        required=True,
        choices=KINDS,
        help="which figure to draw",
    )
    parser.add_argument(
        "--in",
        dest="input_csv",
        required=True,
        metavar="CSV",
        help="input table written by the lab CLI",
    )
    parser.add_argument(
        "--out",
        required=True,
        metavar="IMG",
        help="image file to write (format from the extension)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(input_csv=args.input_csv, kind=args.kind, output=args.out)
    except FileNotFoundError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"argument error: {exc}", file=sys.stderr)
        return 2
    try:
        render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
