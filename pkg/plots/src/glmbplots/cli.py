"""Entry point: plot <figure-kind> <inputs...> -o <file>.

Exit codes: 0 written, 2 usage or schema error.
"""

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, render
from .schemas import SchemaError


def main(argv=None):
    parser = argparse.ArgumentParser(prog="plot", description=__doc__)
    parser.add_argument("kind", choices=FIGURE_KINDS, help="figure kind")
    parser.add_argument("inputs", nargs="+", help="run output files (CSV/JSON)")
    parser.add_argument("-o", "--output", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(args.kind, tuple(args.inputs), args.output)
        out = render(spec)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
