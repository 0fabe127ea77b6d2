"""figplots command line: render panel specs to SVG."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from figplots.panels import load_panel_specs, render


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="figplots")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render every panel in a YAML spec file")
    p.add_argument("--spec", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        specs = load_panel_specs(args.spec)
        for spec in specs:
            print(render(spec, args.out))
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
