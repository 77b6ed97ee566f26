"""
Graph_Process_Lab.py - Main Entry Point
Command line for graph generation, expansion certificates, hitting-time
simulations, structure/tightness experiments and probability sweeps.

Exit codes: 0 success / certified / gates held, 1 refuted / gates failed /
invariant violated, 2 usage or input error, 3 unknown.
stdout carries only the graph file, certificate or report; diagnostics go to stderr.
"""

import functools
import sys
from pathlib import Path

import click

from experiment_harness import (ExperimentConfig, InvariantViolation, check_acceptance,
                                load_graph_source, report_to_csv, run_hitting_experiment,
                                run_structure_experiment, run_tightness_experiment, sweep_probability,
                                sweep_report, write_report, SWEEP_EXPECTATIONS, SWEEP_PROPERTIES)
from graph_core import load_graph, write_graph
from lab_logging import configure_logging, log_main
from lab_utils import CONFIG_FILE, LabError, load_config
from spectral_expansion import ExpansionProperty, Verdict, certify as certify_graph, local_size_bound

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_UNKNOWN = 3


def _parse_seed(ctx, param, value):
    if value is None:
        return None
    try:
        return int(value, 0)
    except ValueError:
        raise click.BadParameter(f"'{value}' is not an integer (decimal or 0x hex)") from None


def common_options(f):
    """--seed --out --format --threads --config on every subcommand"""
    options = [
        click.option("--seed", callback=_parse_seed, default=None,
                     help="Base seed, decimal or 0x hex (default from config: 0xC0FFEE)."),
        click.option("--out", type=click.Path(dir_okay=False), default=None,
                     help="Write output to this file instead of stdout."),
        click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json",
                     show_default=True),
        click.option("--threads", type=click.IntRange(min=1), default=None,
                     help="Worker processes (default from config)."),
        click.option("--config", "config_path", type=click.Path(dir_okay=False), default=CONFIG_FILE,
                     show_default=True),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def guarded(f):
    """Map lab exceptions onto exit codes"""
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            code = f(*args, **kwargs)
        except InvariantViolation as e:
            click.echo(f"❌ invariant violated: {e}", err=True)
            log_main(f"INVARIANT VIOLATION: {e}")
            sys.exit(EXIT_FAILED)
        except (LabError, ValueError, OSError) as e:
            click.echo(f"❌ {e}", err=True)
            sys.exit(EXIT_USAGE)
        sys.exit(code or EXIT_OK)
    return wrapper


def _setup(config_path: str, seed, threads) -> tuple:
    config = load_config(config_path)
    configure_logging(config["log_folder"], config["log_retention_days"])
    seed = config["default_seed"] if seed is None else seed
    threads = config["threads"] if threads is None else threads
    return config, seed, threads


def _emit(data, out):
    if isinstance(data, str):
        data = data.encode("utf-8")
    if out:
        Path(out).write_bytes(data)
        click.echo(f"✅ wrote {out}", err=True)
    else:
        click.echo(data, nl=False)


def _emit_report(report, fmt: str, out):
    _emit(report_to_csv(report) if fmt == "csv" else write_report(report), out)


def _acceptance_code(report, config: dict) -> int:
    failed = 0
    for name, observed, threshold, passed in check_acceptance(report, config["acceptance"]):
        mark = "✅" if passed else "❌"
        click.echo(f"{mark} {name}: {observed:.4f} (gate {threshold})", err=True)
        failed += not passed
    return EXIT_FAILED if failed else EXIT_OK


@click.group()
def cli():
    """Random graph processes on regular graphs."""


@cli.command()
@click.option("--type", "kind", required=True,
              type=click.Choice(["hypercube", "complete", "cycle", "product", "rrg", "tightness"]))
@click.option("--dim", type=int, help="hypercube dimension")
@click.option("--n", type=int, help="vertex count (complete, cycle, rrg, tightness)")
@click.option("--d", type=int, help="degree (rrg, tightness)")
@click.option("--factors", help="product factors, e.g. K3,C4,Q2")
@click.option("--lambda-ceiling", type=float, default=None, help="tightness: bound on H's spectral radius")
@common_options
@guarded
def gen(kind, dim, n, d, factors, lambda_ceiling, seed, out, fmt, threads, config_path):
    """Generate a graph and write it in the canonical file format."""
    config, seed, _ = _setup(config_path, seed, threads)
    source = {"type": kind}
    if kind == "hypercube":
        source["dim"] = dim
    elif kind in ("complete", "cycle"):
        source["n"] = n
    elif kind == "product":
        if not factors:
            raise click.UsageError("--factors is required for --type product")
        source["factors"] = factors.split(",")
        source["vertex_cap"] = config["vertex_cap"]
    else:
        source.update(n=n, d=d, seed=seed)
        if kind == "tightness":
            source["max_retries"] = config["construction_max_retries"]
            source["lambda_ceiling"] = lambda_ceiling
            source["lambda_factor"] = config["lambda_ceiling_factor"]
    missing = [key for key, value in source.items() if value is None and key != "lambda_ceiling"]
    if missing:
        raise click.UsageError(f"--type {kind} needs --{missing[0]}")

    G = load_graph_source(source)
    log_main(f"gen {source}: n={G.n} m={G.m}")
    _emit(write_graph(G), out)
    return EXIT_OK


@cli.command()
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--property", "prop", required=True, type=click.Choice(["p1", "p2"]))
@click.option("--c", type=float, default=None, help="P1 constant")
@click.option("--epsilon", type=float, default=None, help="P2 epsilon")
@click.option("--size-bound", type=int, default=None, help="P2 size bound S")
@click.option("--C", "size_constant", type=float, default=1.0, show_default=True,
              help="P2 size bound as floor(C d ln n) when --size-bound is absent")
@click.option("--max-size", type=int, default=None, help="brute force size limit (default from config)")
@click.option("--method", "methods", multiple=True, type=click.Choice(["harper", "spectral", "brute"]),
              help="strategies in order (repeatable); default harper, spectral, brute")
@common_options
@guarded
def certify(graph_path, prop, c, epsilon, size_bound, size_constant, max_size, methods,
            seed, out, fmt, threads, config_path):
    """Certify or refute an expansion property."""
    config, seed, _ = _setup(config_path, seed, threads)
    G = load_graph(graph_path)
    if prop == "p1":
        if c is None:
            raise click.UsageError("--property p1 needs --c")
        expansion = ExpansionProperty.p1(c)
    else:
        if epsilon is None:
            raise click.UsageError("--property p2 needs --epsilon")
        if size_bound is None:
            if G.degree_uniform is None:
                raise click.UsageError("--size-bound is required on irregular graphs")
            size_bound = local_size_bound(size_constant, G.degree_uniform, G.n)
        expansion = ExpansionProperty.p2(epsilon, size_bound)

    certificate = certify_graph(
        G, expansion,
        strategy_order=methods or ("harper", "spectral", "brute"),
        max_size=max_size if max_size is not None else config["brute_force_max_size"],
        tol=config["eigen_tolerance"],
        budget=config["brute_force_budget"],
    )
    click.echo(f"{prop}: {certificate.verdict.value}", err=True)
    _emit(certificate.to_json(), out)
    return {Verdict.CERTIFIED: EXIT_OK, Verdict.REFUTED: EXIT_FAILED}.get(certificate.verdict, EXIT_UNKNOWN)


@cli.command()
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--k", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--trials", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--exhaustive/--no-exhaustive", default=None, help="all m! orderings (default: when m <= 8)")
@click.option("--accept", is_flag=True, help="exit 1 unless the calibration gate holds")
@common_options
@guarded
def sim(graph_path, k, trials, exhaustive, accept, seed, out, fmt, threads, config_path):
    """Hitting times of minimum degree k and k-connectivity."""
    config, seed, threads = _setup(config_path, seed, threads)
    experiment = ExperimentConfig({"path": graph_path}, k=k, trials=trials, base_seed=seed,
                                  workers=threads, exhaustive=exhaustive)
    report = run_hitting_experiment(experiment)
    equal = report.aggregates["equal"]
    probability = report.aggregates.get("equal_probability", f"{equal['rate']:.4f}")
    click.echo(f"P(tau_{k} = tau_{k}c) = {probability} ({equal['successes']}/{equal['trials']})", err=True)
    _emit_report(report, fmt, out)
    return _acceptance_code(report, config) if accept else EXIT_OK


@cli.command()
@click.argument("kind", type=click.Choice(["structure", "tightness"]))
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--k", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--trials", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--phi", type=float, default=None, help="structure: phi (default ln n)")
@click.option("--C", "size_constant", type=float, default=1.0, show_default=True,
              help="structure: gap window constant")
@click.option("--p", "p_override", type=float, default=None, help="override the threshold probability")
@click.option("--process-trials", type=click.IntRange(min=1), default=None,
              help="tightness: edge-process trials (default --trials)")
@click.option("--reference/--no-reference", default=False,
              help="tightness: also run the process on a random regular graph")
@click.option("--accept", is_flag=True, help="exit 1 unless the calibration gates hold")
@common_options
@guarded
def exp(kind, graph_path, k, trials, phi, size_constant, p_override, process_trials, reference, accept,
        seed, out, fmt, threads, config_path):
    """Structure or tightness experiment suites."""
    config, seed, threads = _setup(config_path, seed, threads)
    experiment = ExperimentConfig({"path": graph_path}, k=k, trials=trials, base_seed=seed, phi=phi,
                                  C=size_constant, workers=threads, p_override=p_override,
                                  process_trials=process_trials, compare_reference=reference)
    if kind == "structure":
        report = run_structure_experiment(experiment)
    else:
        report = run_tightness_experiment(experiment)
    _emit_report(report, fmt, out)
    return _acceptance_code(report, config) if accept else EXIT_OK


@cli.command()
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--property", "properties", multiple=True, required=True, type=click.Choice(SWEEP_PROPERTIES))
@click.option("--pmin", type=click.FloatRange(0, 1), required=True)
@click.option("--pmax", type=click.FloatRange(0, 1), required=True)
@click.option("--step", type=click.FloatRange(min=0, min_open=True), required=True)
@click.option("--trials", type=click.IntRange(min=1), default=300, show_default=True)
@click.option("--k", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--accept", "expect", type=click.Choice(SWEEP_EXPECTATIONS), default=None,
              help="exit 1 unless the threshold ratio meets the gate for separated or coincident thresholds")
@common_options
@guarded
def sweep(graph_path, properties, pmin, pmax, step, trials, k, expect, seed, out, fmt, threads, config_path):
    """Coupled percolation sweep over [pmin, pmax]."""
    config, seed, threads = _setup(config_path, seed, threads)
    if pmax < pmin:
        raise click.UsageError("--pmax must not be below --pmin")
    points = int(round((pmax - pmin) / step)) + 1
    grid = tuple(sorted({round(min(pmax, pmin + i * step), 12) for i in range(points)}))
    experiment = ExperimentConfig({"path": graph_path}, k=k, trials=trials, base_seed=seed,
                                  p_grid=grid, workers=threads)
    table = sweep_probability(experiment, properties)
    report = sweep_report(experiment, table, properties, expect)
    if "separation" in report.aggregates:
        click.echo(f"p_half(connected) / p_half(min_degree_ge_k) = {report.aggregates['separation']:.4f}",
                   err=True)
    _emit_report(report, fmt, out)
    return _acceptance_code(report, config) if expect else EXIT_OK


def dispatch(argv=None) -> int:
    """Run the CLI on argv and return its exit code"""
    try:
        cli.main(args=argv, prog_name="Graph_Process_Lab.py", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_OK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(dispatch())
