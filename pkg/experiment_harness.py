"""
experiment_harness.py - Monte Carlo Experiment Module

Deterministic, optionally parallel experiment suites and their persisted reports:

  hitting     tau_k vs tau_kc on random edge processes (exhaustive when m <= 8)
  structure   core / distance / component-gap checks at the minimum-degree threshold
  tightness   construction threshold: min degree vs connectivity, cut gadgets,
              tau_1 < tau_conn on the process, optional random regular reference
  sweep       coupled percolation sweep over a probability grid with an isotonic column

Trial t always uses the stream split_seed(base_seed, t), so a report depends only
on (graph, config) and never on the worker count or the order workers finish.
"""

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats
from scipy.optimize import isotonic_regression
from scipy.sparse import csgraph

from graph_core import (DEFAULT_LAMBDA_FACTOR, ConstructionSpec, Graph, GraphError, cartesian_product, complete_graph,
                        cycle_graph, edges_to_csr, factor_from_token, hypercube, load_graph,
                        random_regular, tightness_construction, validate_construction)
from lab_logging import log_experiment, log_operation_performance
from lab_utils import DEFAULT_SEED, LabError, format_probability, split_seed
from percolation_process import (PercolationSample, all_orderings, construction_threshold_p,
                                 expected_isolated_vertices, expected_low_degree_vertices,
                                 gadget_cut_probability_bound, hitting_times, is_k_connected,
                                 mindeg_threshold_p, percolation_masks, process_permutation, union_masks)
from structure_checks import component_gap_check, core_structure_check, low_degree_distance_check

REPORT_FORMAT_VERSION = 1
REPORT_KINDS = ("hitting", "structure", "tightness", "sweep")
SWEEP_PROPERTIES = ("min_degree_ge_k", "connected", "k_connected")
SWEEP_EXPECTATIONS = ("separated", "coincident")
SWEEP_CSV_HEADER = ("p", "property", "successes", "trials", "phat", "ci_lo", "ci_hi", "isotonic")
CHI2_MAX_EDGES = 16
CONFIDENCE = 0.95


class ExperimentError(LabError, ValueError):
    """Invalid experiment configuration or a host lacking a required property"""


class InvariantViolation(LabError, RuntimeError):
    """A deterministic relation failed on a recorded trial"""


class ReportFormatError(LabError, ValueError):
    """Report bytes with the wrong schema or format version"""


# ---------------- Configuration ---------------- #

@dataclass(frozen=True)
class ExperimentConfig:
    """
    graph_source is a generator description ({"type": "hypercube", "dim": 10}) or a
    file ({"path": "q10.g"}). workers only affects scheduling and is left out
    of the report echo.
    """
    graph_source: dict
    k: int = 1
    trials: int = 200
    base_seed: int = DEFAULT_SEED
    phi: float | None = None
    C: float = 1.0
    epsilon: float = 0.5
    p_grid: tuple = ()
    workers: int = 1
    p_override: float | None = None
    exhaustive: bool | None = None
    process_trials: int | None = None
    compare_reference: bool = False

    def validate(self):
        if self.trials < 1:
            raise ExperimentError(f"trials must be positive, got {self.trials}")
        if self.k < 1:
            raise ExperimentError(f"k must be positive, got {self.k}")
        if self.C <= 0:
            raise ExperimentError(f"C must be positive, got {self.C}")
        if self.workers < 1:
            raise ExperimentError(f"workers must be positive, got {self.workers}")
        if self.process_trials is not None and self.process_trials < 1:
            raise ExperimentError(f"process_trials must be positive, got {self.process_trials}")
        if self.p_override is not None and not 0 <= self.p_override <= 1:
            raise ExperimentError(f"p override must lie in [0, 1], got {self.p_override}")
        grid = list(self.p_grid)
        if any(not 0 <= p <= 1 for p in grid):
            raise ExperimentError("p_grid values must lie in [0, 1]")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ExperimentError("p_grid must be strictly increasing")

    def echo(self) -> dict:
        config = asdict(self)
        config.pop("workers")
        config["p_grid"] = list(self.p_grid)
        return config


def load_graph_source(source: dict) -> Graph:
    """Build or load the host graph a config names"""
    source = dict(source)
    if "path" in source:
        return load_graph(source["path"])

    kind = source.pop("type", None)
    try:
        if kind == "hypercube":
            return hypercube(int(source["dim"]))
        if kind == "complete":
            return complete_graph(int(source["n"]))
        if kind == "cycle":
            return cycle_graph(int(source["n"]))
        if kind == "product":
            factors = [factor_from_token(t) for t in source["factors"]]
            return cartesian_product(factors, int(source.get("vertex_cap", 1 << 22)))
        if kind == "rrg":
            return random_regular(int(source["n"]), int(source["d"]), int(source.get("seed", DEFAULT_SEED)))
        if kind == "tightness":
            spec = ConstructionSpec(
                int(source["d"]), int(source["n"]),
                lambda_ceiling=source.get("lambda_ceiling"),
                max_retries=int(source.get("max_retries", 50)),
                seed=int(source.get("seed", DEFAULT_SEED)),
                lambda_factor=float(source.get("lambda_factor", DEFAULT_LAMBDA_FACTOR)),
            )
            return tightness_construction(spec)
    except KeyError as e:
        raise ExperimentError(f"graph source '{kind}' is missing parameter {e}") from None
    raise ExperimentError(f"unknown graph source {source!r}")


# ---------------- Reports ---------------- #

def _canonical(value):
    """JSON-ready copy with floats rounded to 15 significant digits"""
    if value is None or isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(format_probability(float(value)))
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_canonical(v) for v in value]
    raise ReportFormatError(f"cannot serialize {type(value).__name__} in a report")


@dataclass(frozen=True)
class Report:
    kind: str
    config: dict
    records: list
    aggregates: dict
    format_version: int = REPORT_FORMAT_VERSION

    def __post_init__(self):
        if self.kind not in REPORT_KINDS:
            raise ReportFormatError(f"unknown report kind '{self.kind}'")
        object.__setattr__(self, "config", _canonical(self.config))
        object.__setattr__(self, "records", _canonical(self.records))
        object.__setattr__(self, "aggregates", _canonical(self.aggregates))

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "kind": self.kind,
            "config": self.config,
            "records": self.records,
            "aggregates": self.aggregates,
        }


def write_report(report: Report) -> bytes:
    return (json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n").encode("utf-8")


def read_report(data) -> Report:
    try:
        document = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ReportFormatError(f"report is not valid JSON: {e}") from None
    expected = {"format_version", "kind", "config", "records", "aggregates"}
    if not isinstance(document, dict) or set(document) != expected:
        raise ReportFormatError(f"report must have exactly the keys {sorted(expected)}")
    if document["format_version"] != REPORT_FORMAT_VERSION:
        raise ReportFormatError(
            f"report format version {document['format_version']} is not {REPORT_FORMAT_VERSION}")
    if not isinstance(document["records"], list) or not isinstance(document["aggregates"], dict) \
            or not isinstance(document["config"], dict):
        raise ReportFormatError("records must be a list, config and aggregates objects")
    return Report(document["kind"], document["config"], document["records"], document["aggregates"])


def report_to_csv(report: Report) -> str:
    """Sweep reports use the fixed sweep header; other kinds flatten their records"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if report.kind == "sweep":
        columns = list(SWEEP_CSV_HEADER)
    else:
        columns = sorted({key for record in report.records for key in record})
    writer.writerow(columns)
    for record in report.records:
        writer.writerow([_csv_cell(record.get(c)) for c in columns])
    return buffer.getvalue()


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return format_probability(value)
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    return value


# ---------------- Statistics ---------------- #

def wilson_interval(successes: int, trials: int, confidence: float = CONFIDENCE) -> tuple:
    if trials < 1 or not 0 <= successes <= trials:
        raise ExperimentError(f"need 0 <= successes <= trials and trials >= 1, got {successes}/{trials}")
    ci = stats.binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def clopper_pearson_interval(successes: int, trials: int, confidence: float = CONFIDENCE) -> tuple:
    if trials < 1 or not 0 <= successes <= trials:
        raise ExperimentError(f"need 0 <= successes <= trials and trials >= 1, got {successes}/{trials}")
    ci = stats.binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="exact")
    return float(ci.low), float(ci.high)


def _rate(successes: int, trials: int) -> dict:
    lo, hi = wilson_interval(successes, trials)
    return {"successes": successes, "trials": trials, "rate": successes / trials, "ci": [lo, hi]}


def coupling_chi2_test(G: Graph, p1: float, p2: float, draws: int, seed: int, alpha: float = 1e-3) -> dict:
    """
    Two-sample chi-squared test of union_sample(p1, p2) against percolate(1-(1-p1)(1-p2))

    Cells are the 2^m edge subsets (m <= 16); empty cells are dropped.
    """
    if not 1 <= G.m <= CHI2_MAX_EDGES:
        raise ExperimentError(f"coupling test needs 1 <= m <= {CHI2_MAX_EDGES}, got m={G.m}")
    p = 1.0 - (1.0 - p1) * (1.0 - p2)
    weights = 1 << np.arange(G.m, dtype=np.int64)
    direct = percolation_masks(G, p, split_seed(seed, 0), draws) @ weights
    sprinkled = union_masks(G, p1, p2, split_seed(seed, 1), draws) @ weights

    table = np.vstack([np.bincount(direct, minlength=1 << G.m),
                       np.bincount(sprinkled, minlength=1 << G.m)])
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2:
        return {"statistic": 0.0, "pvalue": 1.0, "dof": 0, "cells": int(table.shape[1]), "reject": False}
    result = stats.chi2_contingency(table, correction=False)
    return {
        "statistic": float(result.statistic),
        "pvalue": float(result.pvalue),
        "dof": int(result.dof),
        "cells": int(table.shape[1]),
        "reject": bool(result.pvalue < alpha),
    }


# ---------------- Trial plumbing ---------------- #

def _run_chunk(trial_fn, args, start: int, stop: int) -> list:
    return [trial_fn(*args, t) for t in range(start, stop)]


def _run_trials(trial_fn, args: tuple, trials: int, workers: int) -> list:
    """Results of trial_fn(*args, t) for t in range(trials), stored by trial index"""
    if workers <= 1 or trials <= 1:
        return _run_chunk(trial_fn, args, 0, trials)

    bounds = np.linspace(0, trials, min(workers, trials) + 1).astype(int).tolist()
    results = [None] * trials
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(_run_chunk, trial_fn, args, a, b): (a, b) for a, b in zip(bounds, bounds[1:])}
        for future, (a, b) in futures.items():
            results[a:b] = future.result()
    return results


def _regular_degree(G: Graph) -> int:
    if G.degree_uniform is None:
        raise ExperimentError("experiment needs a regular host graph")
    return G.degree_uniform


# ---------------- Hitting times ---------------- #

def _hitting_record(trace, k: int, index: int) -> dict:
    times = hitting_times(trace, k, assume_host_k_connected=True)
    tau_k, tau_kc = times.tau_k, times.tau_kc
    if tau_k > tau_kc:
        raise InvariantViolation(f"trial {index}: tau_{k}={tau_k} exceeds tau_{k}c={tau_kc}")
    return {"trial": index, "seed": trace.seed, "tau_k": tau_k, "tau_kc": tau_kc, "equal": tau_k == tau_kc}


def _hitting_trial(G: Graph, k: int, base_seed: int, t: int) -> dict:
    return _hitting_record(process_permutation(G, split_seed(base_seed, t)), k, t)


def run_hitting_experiment(config: ExperimentConfig, G: Graph | None = None) -> Report:
    """
    Record (tau_k, tau_kc) per trial and the fraction of trials where they coincide

    Exhaustive mode (automatic when m <= 8) walks all m! orderings instead and
    reports the exact probability as a fraction.
    """
    config.validate()
    G = G if G is not None else load_graph_source(config.graph_source)
    if not is_k_connected(G, config.k):
        raise ExperimentError(f"host graph is not {config.k}-connected")

    exhaustive = config.exhaustive if config.exhaustive is not None else G.m <= 8
    start = time.time()
    log_experiment("hitting", f"START n={G.n} m={G.m} k={config.k} "
                              f"{'exhaustive' if exhaustive else f'trials={config.trials}'}")

    if exhaustive:
        records = [_hitting_record(trace, config.k, i) for i, trace in enumerate(all_orderings(G))]
    else:
        records = _run_trials(_hitting_trial, (G, config.k, config.base_seed), config.trials, config.workers)

    equal = sum(1 for r in records if r["equal"])
    gaps = np.array([r["tau_kc"] - r["tau_k"] for r in records])
    aggregates = {
        "equal": _rate(equal, len(records)),
        "tau_k_mean": float(np.mean([r["tau_k"] for r in records])),
        "tau_kc_mean": float(np.mean([r["tau_kc"] for r in records])),
        "gap_max": int(gaps.max()),
        "exhaustive": exhaustive,
    }
    if exhaustive:
        aggregates["equal_probability"] = Fraction(equal, len(records))

    echo = {**config.echo(), "exhaustive": exhaustive}
    log_experiment("hitting", f"END equal={equal}/{len(records)}")
    log_operation_performance("run_hitting_experiment", f"n={G.n} k={config.k}", time.time() - start)
    return Report("hitting", echo, records, aggregates)


# ---------------- Structure checks ---------------- #

def _structure_trial(G: Graph, k: int, p: float, C: float, base_seed: int, t: int) -> dict:
    seed = split_seed(base_seed, t)
    rng = np.random.default_rng(seed)
    sample = PercolationSample(G, np.flatnonzero(rng.random(G.m) < p), p, seed)
    K = sorted(rng.choice(G.n, size=int(rng.integers(0, k + 1)), replace=False).tolist())

    core = core_structure_check(G, sample, k)
    distance = low_degree_distance_check(G, sample, k)
    gap = component_gap_check(G, sample, K, C, k)
    if core.passed and not distance.passed:
        raise InvariantViolation(f"trial {t}: core check passed but distance check failed")
    return {
        "trial": t,
        "seed": seed,
        "retained": sample.size,
        "core_pass": core.passed,
        "failure_reason": core.failure_reason.value if core.failure_reason else None,
        "outsiders": len(core.outsiders),
        "distance_pass": distance.passed,
        "gap_pass": gap.passed,
        "removed": K,
        "gap_violations": len(gap.violations),
    }


def run_structure_experiment(config: ExperimentConfig, G: Graph | None = None) -> Report:
    """Core, distance and gap checks on G_p at p = mindeg_threshold_p(n, d, phi)"""
    config.validate()
    G = G if G is not None else load_graph_source(config.graph_source)
    d = _regular_degree(G)
    phi = config.phi if config.phi is not None else math.log(G.n)
    threshold = mindeg_threshold_p(G.n, d, phi)
    p = config.p_override if config.p_override is not None else threshold.p

    start = time.time()
    log_experiment("structure", f"START n={G.n} d={d} k={config.k} p={format_probability(p)} "
                                f"dp={threshold.dp:.4f} trials={config.trials}")
    records = _run_trials(_structure_trial, (G, config.k, p, config.C, config.base_seed),
                          config.trials, config.workers)

    trials = len(records)
    aggregates = {
        "p": p,
        "dp": d * p,
        "phi": phi,
        "expected_low_degree_vertices": expected_low_degree_vertices(G.n, d, p, config.k),
        "mean_outsiders": float(np.mean([r["outsiders"] for r in records])),
        "core": _rate(sum(r["core_pass"] for r in records), trials),
        "distance": _rate(sum(r["distance_pass"] for r in records), trials),
        "gap": _rate(sum(r["gap_pass"] for r in records), trials),
    }
    log_experiment("structure", f"END core={aggregates['core']['successes']} "
                                f"distance={aggregates['distance']['successes']} "
                                f"gap={aggregates['gap']['successes']} of {trials}")
    log_operation_performance("run_structure_experiment", f"n={G.n} k={config.k}", time.time() - start)
    return Report("structure", {**config.echo(), "phi": phi}, records, aggregates)


# ---------------- Tightness construction ---------------- #

def _attachment_edges(G: Graph, layout) -> np.ndarray:
    """(hubs, d-d1) canonical indices of each hub's attachment edges"""
    return np.array([[G.edge_index[e] for e in layout.hub_edges(v)] for v in range(layout.hubs)],
                    dtype=np.int64)


def _tightness_percolation_trial(G: Graph, attachments: np.ndarray, p: float, base_seed: int, t: int) -> dict:
    seed = split_seed(base_seed, t)
    kept = np.random.default_rng(seed).random(G.m) < p
    ends = G.edge_array[kept]
    degrees = np.bincount(ends.ravel(), minlength=G.n)
    components, _ = csgraph.connected_components(edges_to_csr(G.n, ends), directed=False)
    cut = int(np.count_nonzero(~kept[attachments].any(axis=1)))
    return {
        "phase": "percolation",
        "trial": t,
        "seed": seed,
        "min_degree_ge_1": bool(degrees.min() >= 1),
        "connected": components == 1,
        "isolated": int(np.count_nonzero(degrees == 0)),
        "cut_gadgets": cut,
    }


def _tightness_process_trial(G: Graph, phase: str, offset: int, base_seed: int, t: int) -> dict:
    seed = split_seed(base_seed, offset + t)
    times = hitting_times(process_permutation(G, seed), 1)
    tau_1, tau_conn = times.tau_k, times.tau_kc
    if tau_1 > tau_conn:
        raise InvariantViolation(f"{phase} trial {t}: tau_1={tau_1} exceeds tau_conn={tau_conn}")
    return {"phase": phase, "trial": t, "seed": seed, "tau_1": tau_1, "tau_conn": tau_conn,
            "strict": tau_1 < tau_conn}


def _process_aggregates(records: list) -> dict:
    gaps = [r["tau_conn"] - r["tau_1"] for r in records]
    histogram = {}
    for gap in gaps:
        histogram[gap] = histogram.get(gap, 0) + 1
    return {
        "strict": _rate(sum(r["strict"] for r in records), len(records)),
        "gap_mean": float(np.mean(gaps)),
        "gap_histogram": dict(sorted(histogram.items())),
    }


def run_tightness_experiment(config: ExperimentConfig, G: Graph | None = None) -> Report:
    """
    Percolation at construction_threshold_p and the edge process on the construction

    The percolation phase uses trials 0..T-1, the process phase T..T+P-1 and the
    reference random regular graph (when requested) T+P..T+2P-1 of the seed
    split, with stream T+2P generating the reference itself, so no two phases
    share a stream.
    """
    config.validate()
    G = G if G is not None else load_graph_source(config.graph_source)
    try:
        layout = validate_construction(G)
    except GraphError as e:
        raise ExperimentError(f"graph is not a tightness construction: {e}") from None

    d, n = layout.d, G.n
    p = config.p_override if config.p_override is not None else construction_threshold_p(n, d)
    process_trials = config.process_trials or config.trials
    start = time.time()
    log_experiment("tightness", f"START n={n} d={d} d1={layout.d1} p={format_probability(p)} "
                                f"trials={config.trials} process_trials={process_trials}")

    attachments = _attachment_edges(G, layout)
    percolation = _run_trials(_tightness_percolation_trial, (G, attachments, p, config.base_seed),
                              config.trials, config.workers)
    process = _run_trials(_tightness_process_trial, (G, "process", config.trials, config.base_seed),
                          process_trials, config.workers)

    trials = len(percolation)
    isolated = np.array([r["isolated"] for r in percolation], dtype=float)
    aggregates = {
        "p": p,
        "d1": layout.d1,
        "hubs": layout.hubs,
        "min_degree_ge_1": _rate(sum(r["min_degree_ge_1"] for r in percolation), trials),
        "connected": _rate(sum(r["connected"] for r in percolation), trials),
        "some_gadget_cut": _rate(sum(r["cut_gadgets"] >= 1 for r in percolation), trials),
        "isolated_mean": float(isolated.mean()),
        "isolated_sem": float(isolated.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
        "expected_isolated": expected_isolated_vertices(n, d, p),
        "no_cut_probability": gadget_cut_probability_bound(n, d, layout.d1, p),
        "process": _process_aggregates(process),
    }

    records = percolation + process
    if config.compare_reference:
        reference = random_regular(n, d, seed=split_seed(config.base_seed, config.trials + 2 * process_trials))
        offset = config.trials + process_trials
        reference_records = _run_trials(_tightness_process_trial,
                                        (reference, "reference", offset, config.base_seed),
                                        process_trials, config.workers)
        aggregates["reference"] = _process_aggregates(reference_records)
        records += reference_records

    log_experiment("tightness", f"END connected={aggregates['connected']['successes']}/{trials} "
                                f"strict={aggregates['process']['strict']['successes']}/{process_trials}")
    log_operation_performance("run_tightness_experiment", f"n={n} d={d}", time.time() - start)
    echo = {**config.echo(), "process_trials": process_trials}
    return Report("tightness", echo, records, aggregates)


# ---------------- Probability sweeps ---------------- #

@dataclass(frozen=True)
class SweepRow:
    p: float
    property: str
    successes: int
    trials: int
    phat: float
    ci_lo: float
    ci_hi: float
    isotonic: float


@dataclass(frozen=True)
class SweepTable:
    rows: tuple = field(default_factory=tuple)

    def column(self, prop: str) -> list:
        return sorted((r for r in self.rows if r.property == prop), key=lambda r: r.p)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(SWEEP_CSV_HEADER)
        for r in self.rows:
            writer.writerow([format_probability(r.p), r.property, r.successes, r.trials,
                             format_probability(r.phat), format_probability(r.ci_lo),
                             format_probability(r.ci_hi), format_probability(r.isotonic)])
        return buffer.getvalue()


def _holds(G: Graph, kept: np.ndarray, prop: str, k: int) -> bool:
    ends = G.edge_array[kept]
    if prop == "min_degree_ge_k":
        return bool(np.bincount(ends.ravel(), minlength=G.n).min() >= k) if G.n else True
    if prop == "connected":
        components, _ = csgraph.connected_components(edges_to_csr(G.n, ends), directed=False)
        return components == 1
    return is_k_connected(G.edge_subgraph(np.flatnonzero(kept)), k)


def _sweep_trial(G: Graph, grid: tuple, properties: tuple, k: int, base_seed: int, t: int) -> list:
    """Success flags [property][grid index] from one coupled set of uniforms"""
    uniforms = np.random.default_rng(split_seed(base_seed, t)).random(G.m)
    return [[_holds(G, uniforms < p, prop, k) for p in grid] for prop in properties]


def sweep_probability(config: ExperimentConfig, properties, G: Graph | None = None) -> SweepTable:
    """
    Success counts of each property over config.p_grid

    Trial t draws one uniform per edge and evaluates every grid point on the same
    draws, so each trial's success is monotone in p.
    """
    config.validate()
    properties = (properties,) if isinstance(properties, str) else tuple(properties)
    if not properties or any(prop not in SWEEP_PROPERTIES for prop in properties):
        raise ExperimentError(f"properties must be drawn from {SWEEP_PROPERTIES}, got {properties}")
    if not config.p_grid:
        raise ExperimentError("sweep needs a non-empty p_grid")
    G = G if G is not None else load_graph_source(config.graph_source)
    grid = tuple(float(p) for p in config.p_grid)

    start = time.time()
    log_experiment("sweep", f"START n={G.n} properties={list(properties)} points={len(grid)} "
                            f"trials={config.trials}")
    outcomes = np.array(_run_trials(_sweep_trial, (G, grid, properties, config.k, config.base_seed),
                                    config.trials, config.workers), dtype=bool)

    rows = []
    for i, prop in enumerate(properties):
        successes = outcomes[:, i, :].sum(axis=0)
        phat = successes / config.trials
        fitted = isotonic_regression(phat).x
        for p, s, ph, iso in zip(grid, successes.tolist(), phat.tolist(), fitted.tolist()):
            lo, hi = wilson_interval(s, config.trials)
            rows.append(SweepRow(p, prop, s, config.trials, ph, lo, hi, iso))

    log_experiment("sweep", f"END {len(rows)} rows")
    log_operation_performance("sweep_probability", f"n={G.n} points={len(grid)}", time.time() - start)
    return SweepTable(tuple(rows))


def estimate_half_threshold(table: SweepTable, prop: str, level: float = 0.5) -> float:
    """Linear interpolation of the isotonic column at level"""
    column = table.column(prop)
    values = [r.isotonic for r in column]
    if len(values) < 2 or not min(values) <= level <= max(values) or min(values) == max(values):
        raise ExperimentError(f"level {level} is not bracketed by the '{prop}' column")
    for row in column:
        if row.isotonic == level:
            return row.p
    for a, b in zip(column, column[1:]):
        if a.isotonic < level < b.isotonic:
            return a.p + (level - a.isotonic) * (b.p - a.p) / (b.isotonic - a.isotonic)
    raise ExperimentError(f"level {level} is not bracketed by the '{prop}' column")


def threshold_separation(table: SweepTable, numerator: str = "connected",
                         denominator: str = "min_degree_ge_k") -> float:
    """Ratio of the half thresholds of two properties"""
    return estimate_half_threshold(table, numerator) / estimate_half_threshold(table, denominator)


def sweep_report(config: ExperimentConfig, table: SweepTable, properties, expect: str | None = None) -> Report:
    """
    Sweep rows plus the half thresholds and their ratio

    expect ('separated' or 'coincident') is echoed for the acceptance gates.
    """
    properties = (properties,) if isinstance(properties, str) else tuple(properties)
    if expect is not None and expect not in SWEEP_EXPECTATIONS:
        raise ExperimentError(f"expect must be one of {SWEEP_EXPECTATIONS}, got {expect!r}")
    aggregates = {}
    for prop in properties:
        try:
            aggregates[f"p_half_{prop}"] = estimate_half_threshold(table, prop)
        except ExperimentError:
            aggregates[f"p_half_{prop}"] = None
    numerator = aggregates.get("p_half_connected")
    denominator = aggregates.get("p_half_min_degree_ge_k")
    if numerator is not None and denominator is not None and denominator > 0:
        aggregates["separation"] = numerator / denominator
    echo = {**config.echo(), "properties": list(properties)}
    if expect is not None:
        echo["expect"] = expect
    return Report("sweep", echo, [asdict(r) for r in table.rows], aggregates)


# ---------------- Acceptance gates ---------------- #

def check_acceptance(report: Report, gates: dict) -> list:
    """
    Compare report aggregates to the calibration gates

    Returns (name, observed, threshold, passed) tuples; an empty list means the
    report kind has no gates.
    """
    a = report.aggregates
    k = report.config.get("k", 1)
    results = []
    if report.kind == "hitting":
        gate = gates["hitting_k1"] if k == 1 else gates["hitting_k2"]
        results.append(("equal_fraction", a["equal"]["rate"], gate, a["equal"]["rate"] >= gate))
    elif report.kind == "structure":
        gate = gates["structure_k1"] if k == 1 else gates["structure_k2"]
        for name in ("core", "distance", "gap"):
            results.append((f"{name}_rate", a[name]["rate"], gate, a[name]["rate"] >= gate))
    elif report.kind == "tightness":
        strict = a["process"]["strict"]["rate"]
        gate = gates["tightness_separation"]
        results.append(("strict_fraction", strict, gate, strict >= gate))
        if "reference" in a:
            ref = a["reference"]["strict"]["rate"]
            gate = gates["reference_separation_max"]
            results.append(("reference_strict_fraction", ref, gate, ref <= gate))
    elif report.kind == "sweep" and report.config.get("expect"):
        # a missing ratio (threshold not bracketed) fails either gate
        ratio = a.get("separation")
        observed = math.nan if ratio is None else ratio
        if report.config["expect"] == "separated":
            gate = gates["threshold_ratio_min"]
            results.append(("threshold_ratio", observed, gate, ratio is not None and ratio >= gate))
        else:
            gate = gates["threshold_ratio_max_product"]
            results.append(("threshold_ratio", observed, gate, ratio is not None and ratio <= gate))
    return results
