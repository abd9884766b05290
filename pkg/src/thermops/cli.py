"""Command-line harness.

Subcommands:

* ``validate``     scenario diagnostics (fingerprint, blocks, spectrum checks)
* ``second-laws``  first-order transformation-law residual sweep
* ``ergotropy``    closed-form vs brute-force work extraction sweep
* ``accept``       the eight-criterion release battery

Exit codes: 0 success, 1 a criterion or slope failed, 2 usage or validation
error.  Reports go to stdout unless ``--out`` is given; with ``--out`` the
report path also renders figures next to the delimited file (disable with
``--no-figures``).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .acceptance import run_acceptance
from .numerics import ValidationError
from .report import FORMATS, emit
from .runner import run_ergotropy, run_second_laws
from .scenario import BUNDLED_NAMES, load_bundled, load_scenario, validate_scenario


def _parse_seeds(text: str):
    try:
        seeds = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers: {text!r}")
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    if any(s < 0 for s in seeds):
        raise argparse.ArgumentTypeError("seeds must be non-negative")
    return seeds


def _parse_epsilons(text: str):
    try:
        eps = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"epsilons must be comma-separated numbers: {text!r}")
    if not eps:
        raise argparse.ArgumentTypeError("empty epsilon list")
    if any(not 0.0 <= e <= 1.0 for e in eps):
        raise argparse.ArgumentTypeError("epsilons must lie in [0, 1]")
    return eps


def _resolve_scenario(ref: str):
    """Accept either a path to a scenario file or a bundled scenario name."""
    path = Path(ref)
    if path.exists():
        return load_scenario(path)
    if ref in BUNDLED_NAMES:
        return load_bundled(ref)
    raise ValidationError(
        f"{ref!r} is neither a scenario file nor a bundled name "
        f"(bundled: {', '.join(BUNDLED_NAMES)})")


def _add_report_args(sub, with_figures: bool = True):
    sub.add_argument("--out", type=Path, default=None,
                     help="write the report here instead of stdout")
    sub.add_argument("--format", choices=FORMATS, default="table",
                     help="table (tab-separated, one header line) or machine (JSON)")
    if with_figures:
        sub.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True,
                         help="render figures next to --out (default: on)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermops",
        description="Thermal-operation channel laws, scaling sweeps, and work extraction.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("validate", help="check a scenario file and print diagnostics")
    p.add_argument("--scenario", required=True,
                   help="scenario file path or bundled scenario name")
    p.set_defaults(func=cmd_validate)

    p = subs.add_parser("second-laws",
                        help="residuals of the first-order transformation laws")
    p.add_argument("--scenario", required=True,
                   help="scenario file path or bundled scenario name")
    p.add_argument("--seeds", type=_parse_seeds, default=None,
                   help="comma-separated seed override (default: scenario seeds)")
    p.add_argument("--epsilons", type=_parse_epsilons, default=None,
                   help="comma-separated epsilon override (default: scenario grid)")
    p.add_argument("--law-form", choices=("derived", "literal"), default="derived",
                   help="which first-order assembly to test (default: derived)")
    _add_report_args(p)
    p.set_defaults(func=cmd_second_laws)

    p = subs.add_parser("ergotropy",
                        help="closed-form vs brute-force extraction sweep")
    p.add_argument("--scenario", required=True,
                   help="scenario file path or bundled scenario name")
    p.add_argument("--seeds", type=_parse_seeds, default=None,
                   help="comma-separated seed override (default: scenario seeds)")
    p.add_argument("--epsilons", type=_parse_epsilons, default=None,
                   help="comma-separated epsilon override (default: scenario grid)")
    p.add_argument("--restarts", type=int, default=32,
                   help="independent optimizer starts per grid point (default: 32)")
    _add_report_args(p)
    p.set_defaults(func=cmd_ergotropy)

    p = subs.add_parser("accept", help="run the eight release criteria")
    p.add_argument("--scenarios", type=Path, default=None,
                   help="scenario directory (default: the bundled set)")
    _add_report_args(p, with_figures=False)
    p.set_defaults(func=cmd_accept)

    return parser


def _emit_with_figures(record, args, render) -> None:
    path = emit(record, args.out, args.format)
    if path is not None:
        print(f"wrote {path}", file=sys.stderr)
        if getattr(args, "figures", False):
            rendered = render(record, path)
            for fig_path in rendered if isinstance(rendered, list) else [rendered]:
                print(f"wrote {fig_path}", file=sys.stderr)
    print(f"completed in {record.elapsed_seconds:.2f}s", file=sys.stderr)


def cmd_validate(args) -> int:
    scenario = _resolve_scenario(args.scenario)
    diagnostics = validate_scenario(scenario)
    for line in diagnostics.lines():
        print(line)
    return 0 if diagnostics.bohr_ok else 2


def cmd_second_laws(args) -> int:
    scenario = _resolve_scenario(args.scenario)
    record = run_second_laws(scenario, seeds=args.seeds, epsilons=args.epsilons,
                             law_form=args.law_form)
    from .figures import render_second_laws_figures  # deferred: pulls in matplotlib
    _emit_with_figures(record, args, render_second_laws_figures)
    ok = record.summary["slopes_ok"] and record.summary["zero_epsilon_ok"]
    return 0 if ok else 1


def cmd_ergotropy(args) -> int:
    if args.restarts < 1:
        raise ValidationError("--restarts must be at least 1")
    scenario = _resolve_scenario(args.scenario)
    record = run_ergotropy(scenario, seeds=args.seeds, epsilons=args.epsilons,
                           restarts=args.restarts)
    from .figures import render_ergotropy_figure  # deferred: pulls in matplotlib
    _emit_with_figures(record, args, render_ergotropy_figure)
    flagged = record.summary["gap_slope_flagged_seeds"]
    if flagged:
        print(f"note: gap slope below {record.summary['min_slope_required']:g} "
              f"for seeds {', '.join(flagged)} (flagged, not fatal)", file=sys.stderr)
    return 0


def cmd_accept(args) -> int:
    run = run_acceptance(scenario_dir=args.scenarios, progress=print)
    print(run.lines()[-1])
    if args.out is not None:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        if args.format == "machine":
            path.write_text(run.canonical_json() + "\n")
        else:
            path.write_text("\n".join(run.lines()) + "\n")
        print(f"wrote {path}", file=sys.stderr)
    print(f"completed in {run.elapsed_seconds:.2f}s", file=sys.stderr)
    return run.exit_code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
