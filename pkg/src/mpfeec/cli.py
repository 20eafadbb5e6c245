"""Command line entry point: ``mpfeec run | validate | fixtures``."""
from __future__ import annotations

import logging
import os
import sys
from pathlib import Path

import click

from . import scenario as scn
from .errors import ScenarioError
from .suites import SUITE_FUNCS, run_suites

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _setup_logging():
    level = os.environ.get("MPFEEC_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _set_threads(n):
    if n is None:
        return
    import numba

    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def run_scenario(path, overrides=None):
    """Load a scenario, apply overrides, run its suites and write the report.

    Returns (report, exit code); the report is None when the scenario is invalid.
    """
    overrides = dict(overrides or {})
    try:
        sc = scn.load(path)
        suites = overrides.pop("suites", None) or sc.suites
        level = overrides.pop("level", None)
        seed = overrides.pop("seed", None)
        out = overrides.pop("out", None)
        _set_threads(overrides.pop("threads", None))
        sc = scn.from_dict({**sc.to_dict(), **{k: v for k, v in overrides.items() if v is not None}})
        bad = set(suites) - set(SUITE_FUNCS)
        if bad:
            raise ScenarioError(f"unknown suites {sorted(bad)}")
    except ScenarioError as exc:
        logging.getLogger("mpfeec").error("%s", exc)
        return None, EXIT_USAGE
    report = run_suites(sc, suites, level, seed)
    report.write(Path(out or sc.output))
    return report, EXIT_OK if report.passed else EXIT_FAIL


def _summary(report):
    for c in report.checks:
        click.echo(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<45} {c.value:.3e}  (tol {c.tol:.1e})"
                   + (f"  {c.detail}" if c.detail and not c.passed else ""))
    n_fail = sum(not c.passed for c in report.checks)
    click.echo(f"{report.scenario}: {len(report.checks)} checks, {n_fail} failed")


@click.group()
def main():
    """Multipatch spline de Rham sequences: verification suites."""
    _setup_logging()


@main.command()
@click.argument("scenario")
@click.option("--suite", "suites", multiple=True, type=click.Choice(scn.SUITES),
              help="Suite to run (repeatable); default: the scenario's list.")
@click.option("--level", type=int, default=None, help="Refinement level for the single-level suites.")
@click.option("--threads", type=int, default=None, help="Numba thread count.")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Report directory.")
@click.option("--seed", type=int, default=None, help="Random seed.")
def run(scenario, suites, level, threads, out, seed):
    """Run the suites of SCENARIO (a TOML file or a built-in fixture name)."""
    report, code = run_scenario(scenario, {"suites": list(suites) or None, "level": level,
                                           "threads": threads, "out": out, "seed": seed})
    if report is not None:
        _summary(report)
    sys.exit(code)


@main.command()
@click.argument("scenario")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Report directory.")
def validate(scenario, out):
    """Check the geometry and nestedness assumptions of SCENARIO."""
    report, code = run_scenario(scenario, {"suites": ["validate"], "out": out})
    if report is not None:
        _summary(report)
    sys.exit(code)


@main.command()
def fixtures():
    """List the built-in scenarios."""
    for name in scn.fixture_names():
        sc = scn.load(name)
        click.echo(f"{name:<28} {sc.bc_mode:<14} {sc.description}")


if __name__ == "__main__":  # pragma: no cover
    main()
