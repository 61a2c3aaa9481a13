"""Command line: saltplots render --job job.json"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .io import PlotInputError
from .render import render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="saltplots",
        description="Render figure panels from saltsim CSV/JSON outputs",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    rend = sub.add_parser("render")
    rend.add_argument("--job", required=True, help="panel job JSON file")
    args = parser.parse_args(argv)

    job_path = Path(args.job)
    try:
        job = json.loads(job_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read job {job_path}: {exc}", file=sys.stderr)
        return 1
    try:
        report = render(job)
    except PlotInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {report['output']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
