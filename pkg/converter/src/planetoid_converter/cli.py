"""Command line: converter --in DIR --name {cora|citeseer|pubmed} --out DIR."""

from __future__ import annotations

import argparse
import sys

from .convert import DATASET_NAMES, ConverterError, convert


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="converter",
        description="Convert an upstream Planetoid bundle to a portable dataset directory.",
    )
    parser.add_argument("--in", dest="input_dir", required=True, help="directory with ind.{name}.* files")
    parser.add_argument("--name", required=True, choices=DATASET_NAMES)
    parser.add_argument("--out", dest="output_dir", required=True, help="output dataset directory")
    args = parser.parse_args(argv)
    try:
        out = convert(args.input_dir, args.name, args.output_dir)
    except ConverterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
