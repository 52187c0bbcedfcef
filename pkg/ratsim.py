#!/usr/bin/env python3
# ratsim.py
# Command-line entry point: simulate, reproduce, matrices, validate

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional

from tqdm import tqdm

import settings
from errors import RatsimError, ScenarioError
from parsers.scenario_parser import load_defaults, load_scenario, parse_scenario
from reports.emitters import discrepancy_lines, emit_matrices, emit_report, emit_timeline
from sim.mission import run
from trust.core import TrustComponent

logger = logging.getLogger("ratsim")

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_INFEASIBLE = 2


@dataclass
class SimulationOutcome:
    """Everything one simulation produces, as plain strings so it crosses process boundaries."""

    path: str
    timeline_csv: str = ""
    report_text: str = ""
    report_json: str = ""
    paper_check: Optional[List[str]] = None
    cost_sources: Optional[dict] = None
    feasible: bool = True
    errors: Optional[List[str]] = None


def simulate_file(path: str, seed: Optional[int] = None) -> SimulationOutcome:
    """Load, run and render one scenario file."""
    try:
        scenario = load_scenario(path)
        if seed is not None:
            scenario = replace(scenario, seed=seed)
        timeline, report = run(scenario)
    except ScenarioError as exc:
        return SimulationOutcome(path, errors=[str(exc)] + [str(d) for d in exc.diagnostics])
    except RatsimError as exc:
        return SimulationOutcome(path, errors=[str(exc)])
    text, json_doc = emit_report(report)
    return SimulationOutcome(
        path=path,
        timeline_csv=emit_timeline(timeline),
        report_text=text,
        report_json=json_doc,
        paper_check=discrepancy_lines(report),
        cost_sources=report.cost_sources,
        feasible=report.budget is None or report.budget.feasible,
    )


def _output_path(base: Optional[str], source: str, suffix: str, batch: bool) -> Optional[Path]:
    if base is None:
        return None
    if not batch:
        return Path(base)
    folder = Path(base)
    folder.mkdir(parents=True, exist_ok=True)
    return folder / f"{Path(source).stem}{suffix}"


def _publish(outcome: SimulationOutcome, args, batch: bool) -> int:
    if outcome.errors:
        print(f"{outcome.path}:", file=sys.stderr)
        for line in outcome.errors:
            print(f"  {line}", file=sys.stderr)
        return EXIT_DIAGNOSTICS

    if batch:
        print(f"== {outcome.path}")
    print(outcome.report_text, end="")
    timeline_path = _output_path(args.timeline, outcome.path, ".csv", batch)
    if timeline_path:
        timeline_path.write_text(outcome.timeline_csv, encoding="utf-8")
    report_path = _output_path(args.report, outcome.path, ".json", batch)
    if report_path:
        report_path.write_text(outcome.report_json + "\n", encoding="utf-8")

    if args.paper_check:
        print("\nPublished-figure check")
        sources = ", ".join(f"{n} {k}" for k, n in sorted(outcome.cost_sources.items()))
        print(f"  crossing costs: {sources or 'none'}")
        if outcome.paper_check:
            for line in outcome.paper_check:
                print(f"  MISMATCH {line}")
        else:
            print("  every published figure matches")

    if args.strict_budget and not outcome.feasible:
        return EXIT_INFEASIBLE
    return EXIT_OK


def simulate(args) -> int:
    files = list(args.files)
    batch = len(files) > 1
    if not batch:
        return _publish(simulate_file(files[0], args.seed), args, batch=False)

    outcomes = {}
    workers = min(settings.WORKERS, len(files))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(simulate_file, path, args.seed): path for path in files}
        for future in tqdm(as_completed(futures), total=len(futures), desc="Simulating", unit="scenario"):
            outcomes[futures[future]] = future.result()
    # Report in command-line order regardless of completion order
    return max(_publish(outcomes[path], args, batch=True) for path in files)


def reproduce(args) -> int:
    path = settings.scenario_path(args.name)
    if not path.exists():
        print(f"built-in scenario {args.name} not found at {path}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    args.files = [str(path)]
    return simulate(args)


def matrices(args) -> int:
    try:
        if args.scenario:
            survival = load_scenario(args.scenario).matrices
        else:
            defaults = load_defaults()
            if defaults is None:
                print(f"no defaults file at {settings.defaults_path()}", file=sys.stderr)
                return EXIT_DIAGNOSTICS
            result = parse_scenario(_probe_scenario(defaults), defaults=defaults)
            if not result.ok:
                for diagnostic in result.diagnostics:
                    print(diagnostic, file=sys.stderr)
                return EXIT_DIAGNOSTICS
            survival = result.scenario.matrices
    except ScenarioError as exc:
        print(exc, file=sys.stderr)
        for diagnostic in exc.diagnostics:
            print(f"  {diagnostic}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    components = [TrustComponent.parse(c) for c in args.component] if args.component else None
    print(emit_matrices(survival, components), end="")
    return EXIT_OK


def _probe_scenario(defaults) -> str:
    """Smallest mission that loads every default RAT, used to materialize the matrices."""
    first = defaults.named("rat")[0].arg
    return f"[mission]\nname = defaults\nduration = 1\ninitial_rat = {first}\n"


def validate(args) -> int:
    try:
        data = Path(args.file).read_bytes()
    except OSError as exc:
        print(f"cannot read {args.file}: {exc.strerror}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    result = parse_scenario(data)
    for diagnostic in result.diagnostics:
        print(f"{args.file}:{diagnostic}", file=sys.stderr)
    if not result.ok:
        return EXIT_DIAGNOSTICS
    scenario = result.scenario
    print(f"{args.file}: ok ({len(scenario.profiles)} RATs, {len(scenario.events)} events, "
          f"{scenario.duration:g} min)")
    return EXIT_OK


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="Override the scenario seed")
    parser.add_argument("--timeline", help="Write the timeline CSV here (a directory in batch mode)")
    parser.add_argument("--report", help="Write the JSON report here (a directory in batch mode)")
    parser.add_argument("--paper-check", action="store_true",
                        help="Compare against the scenario's [published] figures")
    parser.add_argument("--strict-budget", action="store_true",
                        help="Exit with status 2 when the power budget is infeasible")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ratsim",
        description="Zero-Trust trust-state simulator for multi-RAT UAV missions.",
    )
    ap.add_argument("-v", "--verbose", action="count", default=0, help="More logging (-vv for debug)")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p_sim = sub.add_parser("simulate", help="Run one or more scenario files.")
    p_sim.add_argument("files", nargs="+", help="Scenario files")
    _add_run_options(p_sim)
    p_sim.set_defaults(func=simulate)

    p_rep = sub.add_parser("reproduce", help="Run a built-in scenario.")
    p_rep.add_argument("name", choices=settings.BUILTIN_SCENARIOS)
    _add_run_options(p_rep)
    p_rep.set_defaults(func=reproduce)

    p_mat = sub.add_parser("matrices", help="Dump the active survival matrices.")
    p_mat.add_argument("--component", action="append", choices=[c.value for c in TrustComponent],
                       help="Limit to one component (repeatable)")
    p_mat.add_argument("--scenario", help="Show the matrices after this scenario's overrides")
    p_mat.set_defaults(func=matrices)

    p_val = sub.add_parser("validate", help="Parse and check a scenario without running it.")
    p_val.add_argument("file")
    p_val.set_defaults(func=validate)
    return ap


def configure_logging(verbosity: int = 0) -> None:
    level = {0: settings.LOG_LEVEL, 1: "INFO"}.get(verbosity, "DEBUG")
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    return args.func(args) or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
