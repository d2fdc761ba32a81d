"""figgen command line: ``figgen render --recipe ID --in DIR --out DIR``."""

from __future__ import annotations

import argparse
import sys

from .recipes import RECIPES, SchemaError, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="figgen",
                                     description="Render figures from topolink outputs")
    sub = parser.add_subparsers(dest="command", required=True)
    rendercmd = sub.add_parser("render", help="render one recipe")
    rendercmd.add_argument("--recipe", required=True, choices=sorted(RECIPES),
                           help="figure id")
    rendercmd.add_argument("--in", dest="in_dir", required=True,
                           help="directory holding the CSV/JSON outputs")
    rendercmd.add_argument("--out", dest="out_dir", required=True,
                           help="directory for the rendered image")
    listcmd = sub.add_parser("list", help="list available recipes")  # noqa: F841
    args = parser.parse_args(argv)

    if args.command == "list":
        for fid, recipe in sorted(RECIPES.items()):
            print(f"{fid}: {recipe.description} <- {recipe.input_glob}")
        return 0
    try:
        out = render(args.recipe, args.in_dir, args.out_dir)
    except SchemaError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
