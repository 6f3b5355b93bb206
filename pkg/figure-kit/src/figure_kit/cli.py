"""Command-line entry point.

    figure-kit render --kind risk_curves --in runs/risk.csv --out risk.png
    figure-kit validate --schema tv runs/tv.csv
"""

from __future__ import annotations

import argparse
import json
import sys

from figure_kit.render import KIND_SCHEMAS, FigureSpec, render
from figure_kit.schemas import SCHEMAS, validate_schema
from figure_kit.style import load_style


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figure-kit", description="Render figures from experiment CSV outputs."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    rend = sub.add_parser("render", help="render one figure from CSV inputs")
    rend.add_argument("--kind", required=True, choices=sorted(KIND_SCHEMAS))
    rend.add_argument("--in", dest="inputs", nargs="+", required=True,
                      metavar="CSV", help="input CSV file(s)")
    rend.add_argument("--out", required=True, help="output PNG path")
    rend.add_argument("--style", default=None, help="JSON style overrides")

    val = sub.add_parser("validate", help="check a CSV against a named schema")
    val.add_argument("--schema", required=True, choices=sorted(SCHEMAS))
    val.add_argument("csv", help="CSV file to check")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.command == "render":
        spec = FigureSpec(
            kind=args.kind,
            inputs=tuple(args.inputs),
            output=args.out,
            style=load_style(args.style),
        )
        print(render(spec))
        return 0

    report = validate_schema(args.csv, args.schema)
    print(json.dumps({"ok": report.ok, "problems": report.problems}))
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
