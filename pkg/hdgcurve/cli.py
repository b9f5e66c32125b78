from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import List, Optional

from rich.logging import RichHandler
from rich.panel import Panel

from hdgcurve import __version__
from hdgcurve.config_files import ConfigError, load_run_config
from hdgcurve.geometry import GeometryError
from hdgcurve.hdg import ConvergenceFailure
from hdgcurve.run_loop import console, run_adaptive, run_audit, run_convergence, run_solve

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_NO_CONVERGENCE = 2
EXIT_GEOMETRY = 3


def _as_path(p: str) -> Path:
    return Path(p).expanduser().resolve()


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hdgcurve", description="HDG for semi-linear problems on curved domains")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log every Picard step and post-processing sweep")
    sub = parser.add_subparsers(dest="cmd", required=True)

    converge = sub.add_parser("converge", help="Convergence study with EOC table on uniformly refined meshes")
    audit = sub.add_parser("audit", help="Check the boundary-face assumptions level by level")
    adapt = sub.add_parser("adapt", help="Adaptive solve -> estimate -> mark -> refine loop")
    solve = sub.add_parser("solve", help="Single solve; writes PREFIX.vtk, PREFIX.mesh and PREFIX.csv")
    for p in (converge, audit, adapt, solve):
        p.add_argument("--config", required=True, help="key = value config file")
        p.add_argument("--out-dir", default=None, help="Directory for run artifacts (overrides out_dir)")
    solve.add_argument("--out", required=True, help="Output prefix for the field, mesh and per-element files")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)

    try:
        config = load_run_config(_as_path(args.config), out_dir=args.out_dir)
        if args.cmd == "converge":
            run_convergence(config)
        elif args.cmd == "adapt":
            run_adaptive(config)
        elif args.cmd == "audit":
            run_audit(config)
        else:
            run_solve(config, _as_path(args.out))
    except ConvergenceFailure as e:
        console.print(Panel.fit(f"{type(e).__name__}: {e}", title="no convergence", border_style="red"))
        return EXIT_NO_CONVERGENCE
    except GeometryError as e:
        console.print(Panel.fit(f"{type(e).__name__}: {e}", title="geometry error", border_style="red"))
        return EXIT_GEOMETRY
    except ConfigError as e:
        console.print(Panel.fit(str(e), title="config error", border_style="red"))
        return EXIT_FAILURE
    except Exception as e:
        logging.getLogger(__name__).debug("unhandled failure", exc_info=True)
        console.print(Panel.fit(f"{type(e).__name__}: {e}", title="error", border_style="red"))
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
