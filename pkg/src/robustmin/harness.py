"""Experiment runner, rank-sum statistics and CSV/JSON output.

Every run gets its own ledger and a seed hashed from
``(base_seed, instance, heuristic, run_index)``, so runs are independent
jobs and the written files never depend on worker count or job order.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .comparators import DescentParams, PsoParams, dd_restart_search, pso_search
from .core import EvaluationLedger, RngStream, stable_seed
from .leh import leh_search, make_calculator
from .testbed import REGISTRY, make_problem, reference_worst_case

log = logging.getLogger(__name__)

LEH_HEURISTICS = ("rnd", "ga", "vor")
COMPARATORS = ("pso", "ddre")
HEURISTICS = LEH_HEURISTICS + COMPARATORS

RUN_COLUMNS = [
    "instance", "problem", "dim", "heuristic", "run_index", "seed",
    "reported_value", "post_value", "best_point",
    "candidates_visited", "evaluations_used", "stop_reason",
]
SUMMARY_COLUMNS = [
    "instance", "heuristic", "mean", "sd", "median", "q1", "q3",
    "mean_candidates", "mean_evaluations", "best_flag",
]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def instance_label(problem: str, dim: int) -> str:
    return f"{problem}_{dim}d"


@dataclass
class ExperimentConfig:
    problems: list[tuple[str, int]]
    heuristics: list[str]
    heuristic_params: dict[str, dict] = field(default_factory=dict)
    runs: int = 50
    budget: int = 10_000
    inner_samples: int = 100
    num_initial: int = 1
    post_samples: int = 100_000
    base_seed: int = 0
    output_dir: str = "results"
    workers: int = 1
    trace: bool = False
    alpha: float = 0.05

    def validate(self) -> None:
        for name, value in [("runs", self.runs), ("budget", self.budget),
                            ("inner_samples", self.inner_samples),
                            ("num_initial", self.num_initial),
                            ("post_samples", self.post_samples), ("workers", self.workers)]:
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if not 0 <= self.base_seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not self.problems:
            raise ConfigError("no problem instances given")
        if not self.heuristics:
            raise ConfigError("no heuristics given")
        for name, dim in self.problems:
            if name not in REGISTRY:
                raise ConfigError(
                    f"unknown problem {name!r}; choose from {', '.join(sorted(REGISTRY))}")
            if not REGISTRY[name].supports(dim):
                raise ConfigError(f"{name} does not support dim={dim}")
        for h in self.heuristics:
            if h not in HEURISTICS:
                raise ConfigError(f"unknown heuristic {h!r}; choose from {', '.join(HEURISTICS)}")
            if h == "vor" and any(dim != 2 for _, dim in self.problems):
                raise ConfigError("heuristic 'vor' needs every instance to be 2-D")
        for h, params in self.heuristic_params.items():
            if h not in HEURISTICS:
                raise ConfigError(f"parameters given for unknown heuristic {h!r}")
            try:
                _build(h, params, make_problem(*self.problems[0]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad parameters for {h}: {exc}") from None
        if self.trace and any(dim != 2 for _, dim in self.problems):
            raise ConfigError("--trace is only available for 2-D instances")

    def seed_for(self, problem: str, dim: int, heuristic: str, run_index: int) -> int:
        return stable_seed(self.base_seed, instance_label(problem, dim), heuristic, run_index)


@dataclass
class RunRecord:
    problem: str
    dim: int
    heuristic: str
    run_index: int
    seed: int
    reported_value: float
    post_value: float
    best_point: np.ndarray
    candidates_visited: int
    evaluations_used: int
    stop_reason: str
    wall_time: float
    trace: list | None = field(default=None, repr=False)
    history: np.ndarray | None = field(default=None, repr=False)
    values: np.ndarray | None = field(default=None, repr=False)

    @property
    def instance(self) -> str:
        return instance_label(self.problem, self.dim)


@dataclass
class SummaryStats:
    instance: str
    heuristic: str
    mean: float
    sd: float
    median: float
    q1: float
    q3: float
    mean_candidates: float
    mean_evaluations: float
    best_flag: bool
    p_value: float = 1.0  # rank-sum p against the best-mean heuristic


def _build(heuristic: str, params: dict, problem):
    """Search callable for ``heuristic``; validates ``params`` eagerly."""
    params = dict(params)
    if heuristic in LEH_HEURISTICS:
        calc = make_calculator(heuristic, **params)
        return lambda prob, ledger, rng, cfg: leh_search(
            prob, ledger, rng, calc, cfg.num_initial, cfg.inner_samples)
    if heuristic == "pso":
        pso = PsoParams(**params)
        return lambda prob, ledger, rng, cfg: pso_search(prob, ledger, rng, pso, cfg.inner_samples)
    descent = DescentParams(**params)
    if problem is not None:
        descent.resolved(problem)
    return lambda prob, ledger, rng, cfg: dd_restart_search(
        prob, ledger, rng, descent, cfg.inner_samples)


def run_one(config: ExperimentConfig, problem_name: str, dim: int, heuristic: str,
            run_index: int) -> RunRecord:
    """Execute a single seeded run and post-process its reported optimum."""
    problem = make_problem(problem_name, dim)
    search = _build(heuristic, config.heuristic_params.get(heuristic, {}), problem)
    seed = config.seed_for(problem_name, dim, heuristic, run_index)
    root = RngStream(seed)
    ledger = EvaluationLedger(config.budget, dim)
    start = time.monotonic()
    outcome = search(problem, ledger, root.substream("search"), config)
    wall = time.monotonic() - start
    best = np.asarray(outcome.best_point, dtype=float)
    post = reference_worst_case(problem, best, config.post_samples, root.substream("post"))
    record = RunRecord(
        problem=problem_name, dim=dim, heuristic=heuristic, run_index=run_index, seed=seed,
        reported_value=float(outcome.best_value), post_value=post, best_point=best,
        candidates_visited=outcome.candidates_visited,
        evaluations_used=outcome.evaluations_used, stop_reason=outcome.stop_reason,
        wall_time=wall,
    )
    if config.trace:
        record.trace = outcome.trace
        record.history = np.array(ledger.history)
        record.values = np.array(ledger.values)
    return record


def _run_job(args):
    return run_one(*args)


def _jobs(config: ExperimentConfig):
    return [(config, name, dim, h, i)
            for (name, dim), h, i in itertools.product(
                config.problems, config.heuristics, range(config.runs))]


def _sort_key(r: RunRecord):
    return (r.instance, r.heuristic, r.run_index)


def run_experiment(config: ExperimentConfig) -> list[RunRecord]:
    """Run every (instance, heuristic, run) job, sorted for output."""
    config.validate()
    jobs = _jobs(config)
    log.info("%d runs on %d worker(s), %s kernels", len(jobs), config.workers, kernels.BACKEND)
    records = []
    if config.workers == 1:
        for job in jobs:
            records.append(_run_job(job))
            log.debug("done %s %s #%d", records[-1].instance, job[3], job[4])
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_run_job, jobs))
    return sorted(records, key=_sort_key)


def _exact_tail_counts(doubled_ranks, na):
    """Counts of size-``na`` subsets by sum of doubled ranks."""
    total = int(sum(doubled_ranks))
    counts = np.zeros((na + 1, total + 1), dtype=float)
    counts[0, 0] = 1.0
    for r in doubled_ranks:
        r = int(r)
        for k in range(na, 0, -1):
            counts[k, r:] += counts[k - 1, : total + 1 - r]
    return counts[na]


def wilcoxon_rank_sum(a, b, alpha: float = 0.05):
    """Two-sided Wilcoxon rank-sum (Mann-Whitney) test.

    Uses midranks for ties. When either sample has fewer than 8 values the
    null distribution is enumerated exactly over the observed midranks;
    otherwise the tie-corrected normal approximation with continuity
    correction is used. Returns ``(U, p, reject)`` with ``U`` the
    Mann-Whitney statistic of ``a``.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    na, nb = len(a), len(b)
    if na == 0 or nb == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([a, b])
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(len(pooled))
    sorted_vals = pooled[order]
    _, first, counts = np.unique(sorted_vals, return_index=True, return_counts=True)
    mid = first + (counts + 1) / 2.0
    ranks[order] = np.repeat(mid, counts)
    u = float(ranks[:na].sum() - na * (na + 1) / 2)
    mean_u = na * nb / 2.0

    if min(na, nb) < 8:
        doubled = np.rint(2 * ranks).astype(int)
        dist = _exact_tail_counts(doubled, na)
        dist /= dist.sum()
        observed = int(round(2 * ranks[:na].sum()))
        centre = na * (na + nb + 1)  # doubled mean rank sum
        dev = abs(observed - centre)
        sums = np.arange(len(dist))
        p = float(dist[np.abs(sums - centre) >= dev].sum())
    else:
        n = na + nb
        tie_term = float(np.sum(counts**3 - counts)) / (n * (n - 1))
        var_u = na * nb / 12.0 * ((n + 1) - tie_term)
        if var_u <= 0:
            p = 1.0
        else:
            z = max(abs(u - mean_u) - 0.5, 0.0) / math.sqrt(var_u)
            p = math.erfc(z / math.sqrt(2))
    p = min(1.0, p)
    return u, p, p < alpha


def summarise(records: list[RunRecord], alpha: float = 0.05) -> list[SummaryStats]:
    """Per (instance, heuristic) statistics of ``post_value``; ``best_flag``
    marks the lowest-mean heuristic and every heuristic whose two-sided
    rank-sum test against it does not reject."""
    groups: dict[tuple[str, str], list[RunRecord]] = {}
    for r in sorted(records, key=_sort_key):
        groups.setdefault((r.instance, r.heuristic), []).append(r)
    stats = []
    for instance in sorted({k[0] for k in groups}):
        rows = {h: rs for (i, h), rs in groups.items() if i == instance}
        samples = {h: np.array([r.post_value for r in rs]) for h, rs in rows.items()}
        best = min(samples, key=lambda h: (float(np.mean(samples[h])), h))
        for h in sorted(rows):
            vals = samples[h]
            if h == best:
                p, flag = 1.0, True
            else:
                _, p, reject = wilcoxon_rank_sum(vals, samples[best], alpha)
                flag = not reject
            q1, median, q3 = np.percentile(vals, [25, 50, 75])
            stats.append(SummaryStats(
                instance=instance, heuristic=h,
                mean=float(np.mean(vals)),
                sd=float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
                median=float(median), q1=float(q1), q3=float(q3),
                mean_candidates=float(np.mean([r.candidates_visited for r in rows[h]])),
                mean_evaluations=float(np.mean([r.evaluations_used for r in rows[h]])),
                best_flag=flag, p_value=p,
            ))
    return stats


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.ndarray):
        return " ".join(repr(float(v)) for v in x)
    return str(x)


def _write_csv(path: Path, header, rows):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def prepare_output_dir(path) -> Path:
    """Create ``path`` if needed and check it is writable."""
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")
    return out


def emit_outputs(records: list[RunRecord], stats: list[SummaryStats],
                 config: ExperimentConfig) -> list[Path]:
    """Write runs.csv, timings.csv, summary.csv, boxplot_<instance>.csv,
    optional traces and manifest.json. Returns the written paths.

    Wall times go to timings.csv so that runs.csv is byte-identical for
    identical configs.
    """
    if not records:
        raise ValueError("no records to write")
    out = prepare_output_dir(config.output_dir)
    records = sorted(records, key=_sort_key)
    written = []

    path = out / "runs.csv"
    _write_csv(path, RUN_COLUMNS, [
        [r.instance, r.problem, r.dim, r.heuristic, r.run_index, r.seed, r.reported_value,
         r.post_value, r.best_point, r.candidates_visited, r.evaluations_used, r.stop_reason]
        for r in records])
    written.append(path)

    path = out / "timings.csv"
    _write_csv(path, ["instance", "heuristic", "run_index", "wall_time"],
               [[r.instance, r.heuristic, r.run_index, r.wall_time] for r in records])
    written.append(path)

    path = out / "summary.csv"
    _write_csv(path, SUMMARY_COLUMNS,
               [[getattr(s, c) for c in SUMMARY_COLUMNS] for s in stats])
    written.append(path)

    for instance in sorted({r.instance for r in records}):
        mine = [r for r in records if r.instance == instance]
        heuristics = sorted({r.heuristic for r in mine})
        path = out / f"boxplot_{instance}.csv"
        _write_csv(path, ["heuristic", "run_index", "post_value"],
                   [[r.heuristic, r.run_index, r.post_value]
                    for h in heuristics for r in mine if r.heuristic == h])
        written.append(path)

    if config.trace:
        for r in records:
            if r.history is None:
                continue
            stem = f"{r.instance}_{r.heuristic}_{r.run_index}"
            path = out / f"trace_points_{stem}.csv"
            _write_csv(path, ["index", "x", "y", "value"],
                       [[i, p[0], p[1], v] for i, (p, v) in enumerate(zip(r.history, r.values))])
            written.append(path)
            path = out / f"trace_path_{stem}.csv"
            _write_csv(path, ["step", "x", "y", "radius", "estimate", "tau", "curtailed",
                              "evaluations"],
                       [[k, t.candidate[0], t.candidate[1], t.radius, t.estimate, t.tau,
                         t.curtailed, t.evaluations] for k, t in enumerate(r.trace)])
            written.append(path)

    manifest = {
        "config": {k: v for k, v in asdict(config).items() if k != "output_dir"},
        "statistics": {
            "test": "wilcoxon rank-sum, two-sided, each heuristic against the lowest mean",
            "alpha": config.alpha,
            "exact_below": 8,
        },
        "seeds": [{"instance": r.instance, "heuristic": r.heuristic,
                   "run_index": r.run_index, "seed": r.seed} for r in records],
    }
    path = out / "manifest.json"
    try:
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    written.append(path)
    return written
