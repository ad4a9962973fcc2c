"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .config import DESIGNS, WORKLOAD_CLASSES, ConfigError, load_config
from .metrics import emit_csv, emit_json
from .runner import run, sweep
from .workload import TraceFormatError


def _parser():
    p = argparse.ArgumentParser(prog="dcachesim",
                                description="Trace-driven DRAM cache simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one simulation")
    r.add_argument("--config", required=True, help="config file path")
    r.add_argument("--design", choices=DESIGNS)
    r.add_argument("--workload", choices=WORKLOAD_CLASSES)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="output file (default: stdout)")
    r.add_argument("--format", choices=("json", "csv"))

    s = sub.add_parser("sweep", help="run a design x workload grid")
    s.add_argument("--config", required=True)
    s.add_argument("--designs", required=True, help="comma-separated designs")
    s.add_argument("--workloads", required=True, help="comma-separated classes")
    s.add_argument("--out")
    s.add_argument("--format", choices=("json", "csv"))
    return p


def _write(text: str, path: str | None) -> int:
    if not path:
        sys.stdout.write(text)
        return 0
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"error: cannot write {path}: {exc}", file=sys.stderr)
        return 3
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = str(args.seed)
        overrides["workload.seed"] = str(args.seed)

    try:
        cfg = load_config(args.config, overrides)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2

    fmt = args.format or cfg["output"]["format"]
    out = args.out or cfg["output"]["path"] or None

    try:
        if args.command == "run":
            doc = run(cfg, args.design, args.workload)
            text = emit_json(doc) if fmt == "json" else emit_csv([doc])
        else:
            designs = [d.strip() for d in args.designs.split(",") if d.strip()]
            workloads = [w.strip() for w in args.workloads.split(",") if w.strip()]
            bad = [d for d in designs if d not in DESIGNS]
            bad += [w for w in workloads if w not in WORKLOAD_CLASSES]
            if bad or not designs or not workloads:
                for b in bad:
                    print(f"config error: unknown sweep element {b!r}", file=sys.stderr)
                if not designs or not workloads:
                    print("config error: sweep needs designs and workloads",
                          file=sys.stderr)
                return 2
            docs = sweep(cfg, designs, workloads)
            text = emit_json({"schema": 1, "sweep": docs}) if fmt == "json" else emit_csv(docs)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    except (TraceFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    return _write(text, out)


if __name__ == "__main__":
    sys.exit(main())
