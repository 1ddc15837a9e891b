"""Command-line entry point: ``meshroute <subcommand>``."""
from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .errors import ConsistencyError, MeshRouteError
from .harness import ScenarioConfig, emit_results, run_realization, sweep_density, sweep_incompleteness
from .localization import DEFAULT_DENSITY_GRID, calibrate_hop_length

EXIT_CONSISTENCY = 3
EXIT_ERROR = 2


def _floats(text):
    if text is None:
        return None
    return tuple(float(v) for v in text.split(",") if v.strip())


def _scenario_options(f):
    opts = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     help="JSON file mirroring ScenarioConfig; flags override it."),
        click.option("--n-nodes", type=int),
        click.option("--n-gateways", type=int),
        click.option("--radio-range", type=float),
        click.option("--density", type=float, help="Density for single-density runs."),
        click.option("--density-control", type=click.Choice(["region", "nodes"])),
        click.option("--region-side", type=float, help="Side length when density scales N."),
        click.option("--missing-fraction", type=float, help="Blocked fraction for run-one."),
        click.option("--densities", help="Comma-separated density grid."),
        click.option("--missing-fractions", help="Comma-separated blocked-edge fractions."),
        click.option("--runs", type=int, help="Monte-Carlo realizations per grid point."),
        click.option("--base-seed", type=int),
        click.option("--workers", type=int),
        click.option("--methods", help="Comma-separated subset of bound,sota,proposed."),
        click.option("--lambda-nn", type=float, help="Nuclear-norm weight."),
        click.option("--zeta", type=float, help="Discrete regularizer weight."),
        click.option("--max-iters", type=int, help="Completion iteration cap."),
        click.option("--tolerance", type=float, help="Completion stopping tolerance."),
        click.option("--loc-tolerance", type=float, help="Localization feasibility tolerance."),
        click.option("--loc-max-iter", type=int),
        click.option("--loc-init", type=click.Choice(["multilateration", "centroid"])),
        click.option("--flood-budget", type=int, help="Hop budget of a local flood."),
        click.option("--k-fallback", type=int),
        click.option("--max-passes", type=int),
        click.option("--link-recovery/--no-link-recovery", default=None),
        click.option("--random-delay/--no-random-delay", default=None),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


def _build_config(kw) -> ScenarioConfig:
    base = {}
    if kw.get("config_path"):
        base = json.loads(Path(kw["config_path"]).read_text())
    proto = base.setdefault("protocol", {})
    comp = proto.setdefault("completion", {})
    loc = proto.setdefault("localization", {})

    def put(target, key, value):
        if value is not None:
            target[key] = value

    for key in ("n_nodes", "n_gateways", "radio_range", "density", "density_control",
                "region_side", "missing_fraction", "runs", "base_seed", "workers"):
        put(base, key, kw.get(key))
    put(base, "densities", _floats(kw.get("densities")))
    put(base, "missing_fractions", _floats(kw.get("missing_fractions")))
    if kw.get("methods"):
        base["methods"] = tuple(m.strip() for m in kw["methods"].split(","))
    put(comp, "lambda_nn", kw.get("lambda_nn"))
    put(comp, "zeta", kw.get("zeta"))
    put(comp, "max_iters", kw.get("max_iters"))
    put(comp, "tolerance", kw.get("tolerance"))
    put(loc, "tolerance", kw.get("loc_tolerance"))
    put(loc, "max_iter", kw.get("loc_max_iter"))
    put(loc, "init", kw.get("loc_init"))
    for key in ("flood_budget", "k_fallback", "max_passes", "link_recovery", "random_delay"):
        put(proto, key, kw.get(key))
    return ScenarioConfig.from_dict(base)


def _guard(fn):
    """Map library errors to exit codes instead of tracebacks."""
    def wrapper(*a, **kw):
        try:
            return fn(*a, **kw)
        except ConsistencyError as exc:
            click.echo(f"consistency error: {exc}", err=True)
            sys.exit(EXIT_CONSISTENCY)
        except MeshRouteError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_ERROR)
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
@click.option("-v", "--verbose", count=True)
def main(verbose):
    """Mesh routing experiments: calibration, sweeps and single runs."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--output", "-o", type=click.Path(dir_okay=False), required=True)
@click.option("--densities", help="Comma-separated density grid.")
@click.option("--samples", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--radio-range", type=float, default=1.0, show_default=True)
@click.option("--region-side", type=float, default=10.0, show_default=True)
@_guard
def calibrate(output, densities, samples, seed, radio_range, region_side):
    """Regenerate the hop-length table (density -> metres per hop)."""
    grid = _floats(densities) or DEFAULT_DENSITY_GRID
    model = calibrate_hop_length(grid, radio_range, samples, seed, region_side * radio_range)
    model.to_csv(output)
    click.echo(f"wrote {output} ({len(model.densities)} densities)")


def _sweep_command(name, runner, x_axis, help_text):
    @main.command(name, help=help_text)
    @_scenario_options
    @click.option("--output", "-o", type=click.Path(dir_okay=False), required=True)
    @click.option("--plot-data/--no-plot-data", default=True, show_default=True)
    @_guard
    def cmd(output, plot_data, **kw):
        cfg = _build_config(kw)
        result = runner(cfg)
        for path in emit_results(result, output, "csv", plot_data, x_axis):
            click.echo(f"wrote {path}")
    return cmd


_sweep_command("sweep-density", sweep_density, "density",
               "Average hops over the density grid for each missing fraction.")
_sweep_command("sweep-incompleteness", sweep_incompleteness, "missing_fraction",
               "Average hops over the missing-fraction grid at one density.")


@main.command("run-one")
@_scenario_options
@click.option("--seed", type=int, required=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False),
              help="Write per-method metrics as CSV instead of printing JSON.")
@_guard
def run_one(seed, output, **kw):
    """Single realization; prints per-method metrics."""
    cfg = _build_config(kw)
    m = run_realization(cfg, seed)
    if output:
        with open(output, "w") as fh:
            fh.write("seed,density,missing_fraction,method,avg_hops,avg_hops_own,unreachable,messages\n")
            for name, mm in m.methods.items():
                fh.write(f"{seed},{m.density!r},{m.missing_fraction!r},{name},{mm.avg_hops!r},"
                         f"{mm.avg_hops_own!r},{mm.unreachable},{mm.messages}\n")
        click.echo(f"wrote {output}")
        return
    doc = {
        "seed": m.seed,
        "density": m.density,
        "missing_fraction": m.missing_fraction,
        "methods": {k: vars(v) for k, v in m.methods.items()},
        "completion_iterations": m.completion_iterations,
        "completion_converged": m.completion_converged,
        "localization_error": m.localization_error,
        "local_messages": m.local_messages,
        "reflood_messages": m.reflood_messages,
    }
    click.echo(json.dumps(doc, indent=2))


if __name__ == "__main__":  # pragma: no cover
    main()
