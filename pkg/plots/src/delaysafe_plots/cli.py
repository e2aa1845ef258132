"""Command-line front end for rendering comparison panels from trajectory CSVs."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import RunArtifact, SchemaError, render


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delaysafe-plot",
        description="Render comparison panels from delaysafe trajectory CSVs "
        "(image format chosen by the output extension).",
    )
    parser.add_argument("csvs", nargs="+", help="trajectory CSV file(s), one per run")
    parser.add_argument("--labels", nargs="*", default=None,
                        help="one label per CSV (default: file stems)")
    parser.add_argument("--out", required=True, help="output image path")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    labels = args.labels
    if labels is None:
        labels = [Path(p).stem for p in args.csvs]
    if len(labels) != len(args.csvs):
        print(f"error: {len(args.csvs)} CSVs but {len(labels)} labels", file=sys.stderr)
        return 1
    artifacts = [RunArtifact(Path(p), label) for p, label in zip(args.csvs, labels)]
    try:
        out = render(artifacts, args.out)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
