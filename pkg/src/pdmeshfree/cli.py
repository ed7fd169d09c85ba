"""Command line entry point: ``pdmeshfree run`` and ``pdmeshfree sweep``.

Settings come from an INI file (all sections are merged), then
``PDMESHFREE_*`` environment variables, then flags. Exit codes: 0 on
success, 2 for invalid input, 3 for numerical failures.
"""

import argparse
import logging
import sys
from pathlib import Path

from .errors import PDError
from .runner import (config_matrix, load_run_config, read_config, run, sweep, write_diagnostics,
                     write_report)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("pdmeshfree")


def build_parser():
    p = argparse.ArgumentParser(prog="pdmeshfree", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "solve one refinement ladder"),
                            ("sweep", "run the cross product of list-valued keys")):
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", type=Path, help="INI file with key = value settings")
        s.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        s.add_argument("--seed", type=int)
        s.add_argument("--benchmark")
        s.add_argument("--formulation")
        s.add_argument("--order")
        s.add_argument("--grid")
        s.add_argument("--delta")
        s.add_argument("--levels", type=int)
        s.add_argument("--nu", type=float)
        s.add_argument("--dump-weights", action="store_true")
        s.add_argument("--dump-fields", action="store_true")
        s.add_argument("--plot", action="store_true", help="also render PNG figures")
    return p


def _overrides(args):
    keys = ("seed", "benchmark", "formulation", "order", "grid", "delta", "levels", "nu")
    out = {k: getattr(args, k) for k in keys if getattr(args, k) is not None}
    for flag in ("dump_weights", "dump_fields", "plot"):
        if getattr(args, flag):
            out[flag] = "true"
    out["out"] = str(args.out)
    return out


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        raw = read_config(args.config, _overrides(args))
        if args.command == "run":
            cfg = load_run_config(raw)
            results = [run(cfg)]
            report = results[0].report
        else:
            configs = config_matrix(raw)
            report, results = sweep(configs)
            cfg = configs[0]
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        write_report(out / "report.csv", report)
        write_diagnostics(out / "diagnostics.json", results)
        if cfg.plot:
            from .plotting import plot_convergence
            plot_convergence(report, out / "convergence.png", title=cfg.benchmark)
    except PDError as exc:
        print(f"pdmeshfree: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"pdmeshfree: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for r in report.rows:
        rate = "" if r.rate != r.rate else f" rate={r.rate:.3f}"
        print(f"{r.case} {r.formulation} n={r.order} L{r.level} h={r.h:.4g} "
              f"rms={r.rms:.4e}{rate} {r.status}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
