"""Experiment orchestration: configs, seed fan-out, execution, persistence, reports.

An experiment is a grid of cells (function x algorithm), each repeated
``runs_per_cell`` times. Every run gets its own seeds from a keyed hash of
``(master_seed, function id, algorithm id, run index, purpose)``, so results
do not depend on the order or the process in which runs execute.

Output layout::

    <output_dir>/manifest.json
    <output_dir>/summary.json
    <output_dir>/curves/<function>/<algorithm>/run_000.csv
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from concurrent.futures.process import BrokenProcessPool
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ldseds import __version__, lds, objectives, stats, stream, swarm
from ldseds.errors import ConfigError, DegenerateStatistic, InvalidArgument

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

SEED_PURPOSES = ("stream", "permutation", "aux")


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class FunctionSpec:
    id: str
    dim: int
    shift_seed: int = 1
    rot_seed: int = 2


@dataclass(frozen=True)
class AlgorithmSpec:
    """One column of the comparison: an engine fed by one sampler construction."""

    id: str
    engine: str = "pso"
    construction: str = "random"
    generator: str | None = None
    point_file: str | None = None
    schedule: dict = field(default_factory=dict)

    def make_schedule(self, horizon: int):
        try:
            if self.engine == "pso":
                return swarm.PsoSchedule(horizon, **_tuples(self.schedule))
            return swarm.ClpsoSchedule(horizon, **_tuples(self.schedule))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"algorithm {self.id!r}: bad schedule override: {exc}") from None


def _tuples(d):
    return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}


@dataclass(frozen=True)
class ExperimentConfig:
    functions: tuple
    algorithms: tuple
    n_particles: int
    horizon: int
    runs_per_cell: int = 60
    tolerances: tuple = (0.05, 0.01)
    master_seed: int = 0
    output_dir: str = "results"
    jobs: int = 1
    alpha: float = 0.05
    vmax_fraction: float = 0.2

    def __post_init__(self):
        if not self.functions:
            raise ConfigError("config lists no functions")
        if not self.algorithms:
            raise ConfigError("config lists no algorithms")
        if self.n_particles < 1:
            raise ConfigError("n_particles must be >= 1")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.runs_per_cell < 1:
            raise ConfigError("runs_per_cell must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be nonnegative")
        for tol in self.tolerances:
            if not 0.0 < tol < 1.0:
                raise ConfigError(f"tolerance {tol} outside (0, 1)")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha {self.alpha} outside (0, 1)")
        for kind, items in (("function", self.functions), ("algorithm", self.algorithms)):
            ids = [x.id for x in items]
            dup = {i for i in ids if ids.count(i) > 1}
            if dup:
                raise ConfigError(f"duplicate {kind} ids: {sorted(dup)}")
        for f in self.functions:
            if f.id not in objectives.FUNCTIONS:
                raise ConfigError(f"unknown function id {f.id!r}; known: {sorted(objectives.FUNCTIONS)}")
            if f.dim < 1:
                raise ConfigError(f"function {f.id!r}: dim must be >= 1")
        for a in self.algorithms:
            _check_algorithm(a, self.n_particles)

    @classmethod
    def from_dict(cls, raw: dict, base_dir=None) -> "ExperimentConfig":
        raw = dict(raw)
        default_dim = raw.pop("dim", None)
        try:
            funcs = []
            for f in raw.pop("functions", []):
                f = dict(f)
                f.setdefault("dim", default_dim)
                if f["dim"] is None:
                    raise ConfigError(f"function {f.get('id')!r} has no dim and no top-level dim is set")
                funcs.append(FunctionSpec(**f))
            algs = []
            for a in raw.pop("algorithms", []):
                a = dict(a)
                if a.get("point_file") and base_dir is not None:
                    a["point_file"] = str((Path(base_dir) / a["point_file"]).resolve())
                algs.append(AlgorithmSpec(**a))
            if "tolerances" in raw:
                raw["tolerances"] = tuple(raw["tolerances"])
            return cls(functions=tuple(funcs), algorithms=tuple(algs), **raw)
        except TypeError as exc:
            raise ConfigError(f"malformed config: {exc}") from None

    @classmethod
    def from_toml(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            raw = tomllib.loads(path.read_text())
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(raw, base_dir=path.parent)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tolerances"] = list(self.tolerances)
        return d

    def function(self, fid) -> FunctionSpec:
        return next(f for f in self.functions if f.id == fid)

    def algorithm(self, aid) -> AlgorithmSpec:
        return next(a for a in self.algorithms if a.id == aid)


def _check_algorithm(a: AlgorithmSpec, n_particles: int):
    try:
        stream.Mode(a.engine)
        construction = stream.Construction(a.construction)
        if construction is not stream.Construction.RANDOM:
            if a.generator is None:
                raise ConfigError(f"algorithm {a.id!r}: {a.construction} construction needs a generator")
            gid = lds.GeneratorId(a.generator)
            if gid is lds.GeneratorId.EXTERNAL and not a.point_file:
                raise ConfigError(f"algorithm {a.id!r}: external generator needs point_file")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"algorithm {a.id!r}: {exc}") from None
    if a.engine == "clpso" and n_particles < 3:
        raise ConfigError(f"algorithm {a.id!r}: CLPSO needs n_particles >= 3")
    a.make_schedule(2)


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_toml(path)


# ---------------------------------------------------------------------------
# seeds


def derive_seed(master_seed: int, function_id: str, algorithm_id: str, run: int, purpose: str) -> int:
    """63-bit seed from a keyed hash of the run's labels."""
    msg = "\x1f".join([str(master_seed), function_id, algorithm_id, str(run), purpose]).encode()
    digest = hashlib.blake2b(msg, digest_size=8, person=b"ldseds-seed").digest()
    return int.from_bytes(digest, "little") >> 1


def run_seeds(config: ExperimentConfig, function_id: str, algorithm_id: str, run: int) -> dict:
    return {p: derive_seed(config.master_seed, function_id, algorithm_id, run, p) for p in SEED_PURPOSES}


# ---------------------------------------------------------------------------
# execution


def execute_run(config: ExperimentConfig, function_id: str, algorithm_id: str, run: int,
                seeds: dict | None = None) -> swarm.RunRecord:
    """Run one replicate. Given the manifest's seeds this reproduces its curve exactly."""
    f = config.function(function_id)
    a = config.algorithm(algorithm_id)
    seeds = seeds or run_seeds(config, function_id, algorithm_id, run)
    objective = objectives.make_registered(f.id, f.dim, f.shift_seed, f.rot_seed)
    space = swarm.SearchSpace.box(objectives.LOWER, objectives.UPPER, f.dim, config.vmax_fraction)
    point_set = lds.load_point_set(a.point_file) if a.point_file else None
    eps = stream.build_stream(
        a.construction, config.n_particles, f.dim, config.horizon, a.engine,
        generator_id=a.generator, seed=seeds["stream"],
        permutation_seed=seeds["permutation"], point_set=point_set,
    )
    return swarm.run_optimizer(a.engine, a.make_schedule(config.horizon), space, objective, eps,
                               aux_seed=seeds["aux"])


def _work(args):
    config, fid, aid, run, seeds = args
    out = {"function": fid, "algorithm": aid, "run": run, "seeds": seeds}
    try:
        rec = execute_run(config, fid, aid, run, seeds)
    except Exception as exc:  # one bad run must not take down the experiment
        out.update(status="failed", error=f"{type(exc).__name__}: {exc}",
                   traceback=traceback.format_exc(limit=4), curve=None,
                   evaluations=None, wall_time=None)
        for attr in ("particle", "iteration"):
            if getattr(exc, attr, None) is not None:
                out[attr] = int(getattr(exc, attr))
        return out
    out.update(status="ok", error=None, curve=rec.curve, evaluations=int(rec.evaluations),
               wall_time=rec.wall_time)
    return out


def curve_path(root, function_id, algorithm_id, run) -> Path:
    return Path(root) / "curves" / function_id / algorithm_id / f"run_{run:03d}.csv"


def format_curve(curve) -> str:
    buf = io.StringIO()
    buf.write("iteration,best_fitness\n")
    for g, v in enumerate(np.asarray(curve, dtype=float)):
        buf.write(f"{g},{float(v)!r}\n")
    return buf.getvalue()


def read_curve(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["iteration", "best_fitness"]:
        raise InvalidArgument(f"{path}: not a curve file")
    return np.array([float(r[1]) for r in rows[1:]])


@dataclass
class ResultSet:
    """Manifest plus curves keyed by ``(function, algorithm, run)``; failed runs map to None."""

    config: ExperimentConfig
    manifest: dict
    curves: dict
    root: Path | None = None
    summaries: dict = field(default_factory=dict)

    @property
    def failures(self) -> list:
        return [r for r in self.manifest["runs"] if r["status"] != "ok"]

    def cell_curves(self, function_id, algorithm_id):
        return [self.curves.get((function_id, algorithm_id, r)) for r in range(self.config.runs_per_cell)]


def run_experiment(config: ExperimentConfig, output_dir=None, jobs: int | None = None) -> ResultSet:
    """Execute every run of every cell and persist curves, manifest and summary.

    Runs that raise are recorded as failed in the manifest with their seeds
    and the error; the rest of the grid still executes.
    """
    root = Path(output_dir or config.output_dir)
    jobs = jobs or config.jobs
    tasks = [
        (config, f.id, a.id, r, run_seeds(config, f.id, a.id, r))
        for f in config.functions for a in config.algorithms for r in range(config.runs_per_cell)
    ]
    if jobs == 1:
        results = [_work(t) for t in tasks]
    else:
        results = _run_parallel(tasks, jobs)

    curves, entries = {}, []
    for res in results:
        key = (res["function"], res["algorithm"], res["run"])
        entry = {k: v for k, v in res.items() if k != "curve"}
        if res["status"] == "ok":
            path = curve_path(root, *key)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(format_curve(res["curve"]))
            entry["curve_file"] = str(path.relative_to(root))
            curves[key] = np.asarray(res["curve"])
        else:
            log.warning("run %s failed: %s", key, res["error"])
            curves[key] = None
        entries.append(entry)

    manifest = {"version": __version__, "config": config.to_dict(), "runs": entries}
    root.mkdir(parents=True, exist_ok=True)
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    rs = ResultSet(config, manifest, curves, root)
    rs.summaries = {tol: summarize(rs, tol) for tol in config.tolerances}
    write_summary(rs, root / "summary.json")
    return rs


def _run_parallel(tasks, jobs):
    results = [None] * len(tasks)
    crash = None
    try:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_work, t) for t in tasks]
            for i, fut in enumerate(futures):
                try:
                    results[i] = fut.result()
                except BrokenProcessPool as exc:
                    crash = exc
    except BrokenProcessPool as exc:
        crash = exc
    return [res if res is not None else _crashed(t, crash) for t, res in zip(tasks, results)]


def _crashed(task, exc):
    _, fid, aid, run, seeds = task
    return {"function": fid, "algorithm": aid, "run": run, "seeds": seeds, "status": "failed",
            "error": f"worker crashed: {exc}", "curve": None, "evaluations": None, "wall_time": None}


def load_results(path) -> ResultSet:
    root = Path(path)
    try:
        manifest = json.loads((root / "manifest.json").read_text())
    except OSError as exc:
        raise InvalidArgument(f"{root}: no manifest.json ({exc.strerror})") from None
    config = ExperimentConfig.from_dict(manifest["config"])
    curves = {}
    for entry in manifest["runs"]:
        key = (entry["function"], entry["algorithm"], entry["run"])
        curves[key] = read_curve(root / entry["curve_file"]) if entry["status"] == "ok" else None
    return ResultSet(config, manifest, curves, root)


def replay(result_set: ResultSet, function_id, algorithm_id, run) -> np.ndarray:
    """Recompute one curve from the manifest's config echo and seed tuple."""
    entry = next(e for e in result_set.manifest["runs"]
                 if (e["function"], e["algorithm"], e["run"]) == (function_id, algorithm_id, run))
    return execute_run(result_set.config, function_id, algorithm_id, run, entry["seeds"]).curve


# ---------------------------------------------------------------------------
# summaries and reports


@dataclass(frozen=True)
class CellSummary:
    function: str
    algorithm: str
    cs: int | None  # on the mean curve
    mean_run_cs: float | None  # mean over runs that reached the tolerance
    runs_failed_to_converge: int
    runs_aborted: int


def cell_summaries(result_set: ResultSet, eps_tol: float) -> list:
    cfg = result_set.config
    out = []
    for f in cfg.functions:
        z_star = objectives.FUNCTIONS[f.id][0]
        for a in cfg.algorithms:
            curves = result_set.cell_curves(f.id, a.id)
            ok = [c for c in curves if c is not None]
            aborted = len(curves) - len(ok)
            if aborted or not ok:
                out.append(CellSummary(f.id, a.id, None, None, 0, aborted))
                continue
            # curve[0] is the initial swarm; iteration g sits at curve[g]
            mean_curve = np.mean(ok, axis=0)
            cs = stats.convergence_speed(mean_curve[1:], z_star, eps_tol).cs
            per_run = [stats.convergence_speed(c[1:], z_star, eps_tol).cs for c in ok]
            hits = [c for c in per_run if c is not None]
            out.append(CellSummary(f.id, a.id, cs, float(np.mean(hits)) if hits else None,
                                   len(per_run) - len(hits), 0))
    return out


def summarize(result_set: ResultSet, eps_tol: float) -> stats.RankTable:
    """CS of each cell's mean curve, ranked per function."""
    cfg = result_set.config
    if not result_set.curves:
        raise InvalidArgument("result set is empty")
    cells = {(c.function, c.algorithm): c.cs for c in cell_summaries(result_set, eps_tol)}
    metric = [[cells[(f.id, a.id)] for a in cfg.algorithms] for f in cfg.functions]
    return stats.RankTable.from_metric(metric, [f.id for f in cfg.functions],
                                       [a.id for a in cfg.algorithms])


def write_summary(result_set: ResultSet, path):
    tables = {}
    for tol in result_set.config.tolerances:
        table = result_set.summaries.get(tol) or summarize(result_set, tol)
        tables[repr(tol)] = {
            "functions": list(table.row_labels),
            "algorithms": list(table.col_labels),
            "cs": [list(r) for r in table.metric],
            "ranks": table.ranks.tolist(),
            "avg_ranks": table.avg_ranks.tolist(),
            "cells": [asdict(c) for c in cell_summaries(result_set, tol)],
        }
    Path(path).write_text(json.dumps({"tolerances": tables}, indent=2) + "\n")


@dataclass(frozen=True)
class RenderedReport:
    text: str
    csv: str
    json: str


def _fmt_cs(v, r):
    return f"{'-' if v is None else v}({r:g})"


def rank_report(table: stats.RankTable, alpha: float = 0.05):
    """Friedman and Nemenyi tests on a rank table, plus CS(rank) renderings.

    Returns
    -------
    (TestReport, RenderedReport)
    """
    try:
        report = stats.significance_report(table, alpha)
    except DegenerateStatistic as exc:
        raise DegenerateStatistic(
            f"Friedman statistic undefined for {table.m} functions x {table.k} algorithms "
            f"(avg ranks {np.round(table.avg_ranks, 4).tolist()}): {exc}"
        ) from exc
    rows = table.row_labels or tuple(f"F{i + 1}" for i in range(table.m))
    cols = table.col_labels or tuple(f"A{j + 1}" for j in range(table.k))
    avg_rank_rank = stats.ranks_with_ties(table.avg_ranks)

    body = [[_fmt_cs(v, r) for v, r in zip(metric_row, rank_row)]
            for metric_row, rank_row in zip(table.metric, table.ranks)]
    avg_cells = [f"{r:.2f}({rr:g})" for r, rr in zip(table.avg_ranks, avg_rank_rank)]

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["function", *cols])
    for label, cells in zip(rows, body):
        w.writerow([label, *cells])
    w.writerow(["AvgR", *avg_cells])
    w.writerow(["tau_F", f"{report.tau_f:.3f}"])
    csv_text = buf.getvalue()

    lw = max(len("tau_F"), *(len(r) for r in rows))
    cw = max(10, *(len(c) for c in cols), *(len(c) for r in body for c in r))
    lines = [f"{'':<{lw}}  " + "  ".join(f"{c:>{cw}}" for c in cols)]
    for label, cells in zip(rows, body):
        lines.append(f"{label:<{lw}}  " + "  ".join(f"{c:>{cw}}" for c in cells))
    lines.append(f"{'AvgR':<{lw}}  " + "  ".join(f"{c:>{cw}}" for c in avg_cells))
    lines.append(f"{'tau_F':<{lw}}  {report.tau_f:.3f}")
    verdict = "significant" if report.significant else "not significant"
    lines.append(f"chi_F^2 = {report.chi_f:.3f}, tau_c = {report.tau_critical:.3f} "
                 f"(alpha = {alpha:g}, df = {table.k - 1}, {(table.k - 1) * (table.m - 1)}): {verdict}")
    if report.cd is not None:
        lines.append(f"Nemenyi CD = {report.cd:.3f}")
        for i in range(table.k):
            for j in range(i + 1, table.k):
                if report.pairwise_significant[i, j]:
                    lines.append(f"  {cols[i]} vs {cols[j]}: |dR| = "
                                 f"{abs(table.avg_ranks[i] - table.avg_ranks[j]):.3f}")
    text = "\n".join(lines) + "\n"

    payload = {
        "functions": list(rows), "algorithms": list(cols),
        "cs": [list(r) for r in table.metric], "ranks": table.ranks.tolist(),
        "avg_ranks": table.avg_ranks.tolist(),
        "chi_f": report.chi_f, "tau_f": report.tau_f, "tau_critical": report.tau_critical,
        "alpha": alpha, "significant": report.significant, "cd": report.cd,
        "pairwise_significant": report.pairwise_significant.tolist(),
    }
    return report, RenderedReport(text, csv_text, json.dumps(payload, indent=2) + "\n")


@dataclass(frozen=True)
class SamplerSpec:
    label: str
    construction: str
    generator: str | None = None


def dispersion_report(samplers, n: int, d: int, g: int, probe_count: int, seeds,
                      mode: str = "pso", probe_seed: int = 7) -> list:
    """Monte Carlo dispersion of each sampler's flattened expanded sample set.

    Returns one dict per (sampler, seed) with the estimate and its probe provenance.
    """
    rows = []
    for spec in samplers:
        spec = spec if isinstance(spec, SamplerSpec) else SamplerSpec(*spec)
        for seed in seeds:
            eps = stream.build_stream(spec.construction, n, d, g, mode, generator_id=spec.generator,
                                      seed=seed, permutation_seed=seed)
            flat = eps.flatten()
            est = lds.dispersion_mc(flat, probe_count, probe_seed)
            rows.append({"sampler": spec.label, "construction": spec.construction,
                         "generator": spec.generator, "seed": seed, "n": n, "total_dim": flat.shape[1],
                         "dispersion": est.value, "probe_count": est.probe_count,
                         "probe_seed": est.probe_seed})
    return rows
