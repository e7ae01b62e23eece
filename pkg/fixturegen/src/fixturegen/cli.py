"""Command line entry point: ``fixturegen <specs.json> <outdir>``."""

from __future__ import annotations

import argparse
import sys

from .generate import generate, load_specs
from .scf import ScfConvergenceError


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fixturegen",
        description="Generate FCIDUMP fixtures plus metadata sidecars.")
    parser.add_argument("specs", help="JSON file with a list of fixture specs")
    parser.add_argument("outdir", help="output directory")
    args = parser.parse_args(argv)

    try:
        specs = load_specs(args.specs)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot read specs: {exc}", file=sys.stderr)
        return 2

    failures = 0
    for spec in specs:
        try:
            fcidump_path, _ = generate(spec, args.outdir)
        except ScfConvergenceError as exc:
            print(f"error: {spec.basename}: {exc}", file=sys.stderr)
            failures += 1
            continue
        print(f"wrote {fcidump_path}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
