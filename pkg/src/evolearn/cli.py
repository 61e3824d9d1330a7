"""Command line entry point: ``evolearn {run,grid,plot,verify}``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .experiment import ConfigError, evolution_config, load_config, plot_run, run_grid, run_single

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evolearn", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="JSON config; missing keys take the defaults")
        sp.add_argument("--out", type=Path, required=True, help="output directory")
        sp.add_argument("--seed", type=int, help="run seed (run) or base seed (grid)")

    run = sub.add_parser("run", help="one evolution run")
    common(run)
    run.add_argument("--task", choices=("point_nav", "rotation"))
    run.add_argument("--brain-mode", choices=("asexual", "sexual"))
    run.add_argument("--inheritance", choices=("darwinian", "lamarckian"))

    grid = sub.add_parser("grid", help="task x brain mode x inheritance sweep")
    common(grid)
    grid.add_argument("--workers", type=int, default=1)

    plot = sub.add_parser("plot", help="re-render figures of a finished run")
    plot.add_argument("run_dir", type=Path)

    verify = sub.add_parser("verify", help="run the acceptance checks")
    verify.add_argument("--quick", action="store_true", help="skip the multi-minute checks")

    sub.add_parser("defaults", help="print the default configuration")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    try:
        if args.command == "defaults":
            print(json.dumps(load_config(), indent=1))
            return EXIT_OK
        if args.command == "run":
            ev = {k: v for k, v in (("task", args.task), ("brain_mode", args.brain_mode),
                                    ("inheritance", args.inheritance), ("seed", args.seed)) if v is not None}
            cfg = load_config(args.config, {"evolution": ev} if ev else None)
            _check_writable(args.out)
            if (args.out / "DONE").exists():
                raise ConfigError(f"{args.out} already holds a completed run")
            config = evolution_config(cfg)
        elif args.command == "grid":
            cfg = load_config(args.config, {"grid": {"base_seed": args.seed}} if args.seed is not None else None)
            _check_writable(args.out)
            if args.workers < 1:
                raise ConfigError("--workers must be >= 1")
        elif args.command == "plot":
            if not (args.run_dir / "generations.csv").exists():
                raise ConfigError(f"{args.run_dir} has no generations.csv")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "run":
            run_single(config, args.out, int(cfg["checkpoint_every"]))
            print(args.out)
        elif args.command == "grid":
            summary = run_grid(cfg, args.out, workers=args.workers)
            print(json.dumps(summary, indent=1, sort_keys=True))
        elif args.command == "plot":
            for path in plot_run(args.run_dir):
                print(path)
        elif args.command == "verify":
            from .acceptance import run_all

            results = run_all(quick=args.quick)
            for r in results:
                print(r.line())
            return EXIT_OK if all(r.passed for r in results) else EXIT_RUNTIME
    except Exception as exc:
        logging.getLogger("evolearn").debug("failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _check_writable(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {path} is not writable: {exc}") from exc


if __name__ == "__main__":
    sys.exit(main())
