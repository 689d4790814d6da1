"""Command-line front end: experiment orchestration over (variant,
replication) grids, deterministic output layout, variant comparison, and
task-constant auditing.

Subcommands:
    run        Execute variants x replications and write the CSV tree.
    compare    Rank-sum tests with Holm correction over summary files.
    dump-task  Print a task's constants, including derived normalization.

The config file (``--config``) is INI-style: flat ``key = value`` pairs
in ``[task]``, ``[run]``, ``[scheduler]`` and ``[output]`` sections, with
every key mirrored by a command-line flag; flags win over the file, the
file wins over built-in defaults.  The CLI adds no randomness of its own:
replication k always runs with seed ``base_seed + k``, so any single run
can be reproduced in isolation.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from qdpool import engine, metrics
from qdpool.tasks import TASK_NAMES, make_task


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


@dataclass
class ExperimentConfig:
    """A validated experiment: one task, a list of variants, and shared
    run parameters."""

    task_name: str = "rastrigin_multi"
    dim: int = 100
    resolution: int = 100
    sigma0: float | None = None
    variants: list[str] = field(default_factory=lambda: list(engine.VARIANT_NAMES))
    replications: int = 20
    base_seed: int = 1
    generations: int = 20_000
    slots: int = 12
    batch: int = 50
    init_samples: int = 100
    zeta: float = 0.05
    window: int = 50
    stats_granularity: str = "instance"
    metrics_every: int = 10
    out_dir: str = "results"
    threads: int | None = None


_FILE_SCHEMA = {
    "task": {"name": str, "dim": int, "resolution": int, "sigma0": float},
    "run": {
        "variant": str,
        "generations": int,
        "slots": int,
        "batch": int,
        "init": int,
        "replications": int,
        "seed": int,
        "metrics_every": int,
        "threads": int,
    },
    "scheduler": {"zeta": float, "window": int, "stats_granularity": str},
    "output": {"dir": str},
}

_KEY_TO_FIELD = {
    ("task", "name"): "task_name",
    ("task", "dim"): "dim",
    ("task", "resolution"): "resolution",
    ("task", "sigma0"): "sigma0",
    ("run", "variant"): "variants",
    ("run", "generations"): "generations",
    ("run", "slots"): "slots",
    ("run", "batch"): "batch",
    ("run", "init"): "init_samples",
    ("run", "replications"): "replications",
    ("run", "seed"): "base_seed",
    ("run", "metrics_every"): "metrics_every",
    ("run", "threads"): "threads",
    ("scheduler", "zeta"): "zeta",
    ("scheduler", "window"): "window",
    ("scheduler", "stats_granularity"): "stats_granularity",
    ("output", "dir"): "out_dir",
}


def _read_config_file(path: str) -> dict:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config: cannot read file {path!r}")
    values: dict = {}
    for section in parser.sections():
        if section not in _FILE_SCHEMA:
            raise ConfigError(f"config: unknown section [{section}]")
        for key, raw in parser[section].items():
            if key not in _FILE_SCHEMA[section]:
                raise ConfigError(f"config: unknown key {key!r} in section [{section}]")
            field_name = _KEY_TO_FIELD[(section, key)]
            caster = _FILE_SCHEMA[section][key]
            try:
                value = [v.strip() for v in raw.split(",")] if field_name == "variants" else caster(raw)
            except ValueError as exc:
                raise ConfigError(f"{field_name}: cannot parse {raw!r}") from exc
            values[field_name] = value
    return values


def parse_config(flags: dict, config_path: str | None = None) -> ExperimentConfig:
    """Merges built-in defaults, an optional config file, and explicit
    flags (``None`` flag values mean "not given") into a validated
    :class:`ExperimentConfig`.

    Raises:
        ConfigError: Naming the offending field.
    """
    cfg = ExperimentConfig()
    merged: dict = {}
    if config_path is not None:
        merged.update(_read_config_file(config_path))
    for key, value in flags.items():
        if value is not None:
            merged[key] = value
    for key, value in merged.items():
        setattr(cfg, key, value)

    if cfg.threads is None:
        try:
            cfg.threads = int(os.environ.get("QD_THREADS", "1"))
        except ValueError as exc:
            raise ConfigError(f"threads: cannot parse QD_THREADS={os.environ['QD_THREADS']!r}") from exc

    if cfg.task_name not in TASK_NAMES:
        raise ConfigError(f"task: unknown task {cfg.task_name!r}, expected one of {TASK_NAMES}")
    if isinstance(cfg.variants, str):
        cfg.variants = [cfg.variants]
    for variant in cfg.variants:
        if variant not in engine.VARIANT_NAMES:
            raise ConfigError(
                f"variant: unknown variant {variant!r}, expected one of {engine.VARIANT_NAMES}"
            )
    positive = (
        "dim",
        "resolution",
        "replications",
        "generations",
        "slots",
        "batch",
        "init_samples",
        "window",
        "metrics_every",
        "threads",
    )
    for name in positive:
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name}: must be at least 1")
    if cfg.dim < 2:
        raise ConfigError("dim: must be at least 2")
    if cfg.zeta < 0:
        raise ConfigError("zeta: must be non-negative")
    if cfg.sigma0 is not None and cfg.sigma0 <= 0:
        raise ConfigError("sigma0: must be positive")
    if cfg.stats_granularity not in ("instance", "kind"):
        raise ConfigError("stats_granularity: must be 'instance' or 'kind'")
    return cfg


SUMMARY_HEADER = (
    "task",
    "variant",
    "rep",
    "seed",
    "generations",
    "evaluations",
    "archive_size",
    "best_fitness",
    "qd_score",
)


def run_experiment(cfg: ExperimentConfig, echo=print) -> int:
    """Runs every (variant, replication) pair and writes the output tree.

    Layout: ``<out>/<task>/<variant>/rep<k>/{metrics,archive,emitter_mix}
    .csv`` plus per-variant ``aggregate.csv`` and a global
    ``summary.csv``.  Returns a process exit status.
    """
    task = make_task(cfg.task_name, dim=cfg.dim, resolution=cfg.resolution, sigma0=cfg.sigma0)
    out_root = Path(cfg.out_dir)
    summary_rows = []
    try:
        for variant in cfg.variants:
            series_by_rep = []
            for rep in range(cfg.replications):
                seed = cfg.base_seed + rep
                run_config = engine.RunConfig(
                    task=task,
                    variant=variant,
                    generations=cfg.generations,
                    slots=cfg.slots,
                    batch_per_emitter=cfg.batch,
                    init_samples=cfg.init_samples,
                    seed=seed,
                    zeta=cfg.zeta,
                    window=cfg.window,
                    stats_granularity=cfg.stats_granularity,
                    metrics_every=cfg.metrics_every,
                    threads=cfg.threads,
                )
                result = engine.run(run_config)
                rep_dir = out_root / cfg.task_name / variant / f"rep{rep}"
                rep_dir.mkdir(parents=True, exist_ok=True)
                metrics.write_metrics_csv(result.records, rep_dir / "metrics.csv")
                result.archive.write_csv(rep_dir / "archive.csv")
                metrics.write_emitter_mix_csv(result.kind_series, rep_dir / "emitter_mix.csv")
                series_by_rep.append(result.records)
                final = result.final_record
                summary_rows.append(
                    [
                        cfg.task_name,
                        variant,
                        rep,
                        seed,
                        final.generation,
                        final.evaluations,
                        final.archive_size,
                        repr(float(final.best_fitness_norm)),
                        repr(float(final.qd_score)),
                    ]
                )
                echo(
                    f"{cfg.task_name}/{variant}/rep{rep}: size={final.archive_size} "
                    f"best={final.best_fitness_norm:.4f} qd={final.qd_score:.2f} "
                    f"({result.wall_time:.1f}s)"
                )
            metrics.write_aggregate_csv(
                series_by_rep, out_root / cfg.task_name / variant / "aggregate.csv"
            )
        out_root.mkdir(parents=True, exist_ok=True)
        with open(out_root / "summary.csv", "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(SUMMARY_HEADER)
            writer.writerows(summary_rows)
    except OSError as exc:
        echo(f"error: cannot write run outputs: {exc}", file=sys.stderr)
        return 1
    return 0


def compare_summaries(paths, metric="qd_score", task_filter=None, alpha=0.05, echo=print) -> int:
    """Pairwise rank-sum comparison of variants found in summary files,
    Holm-corrected within each task's family of comparisons."""
    groups: dict[tuple[str, str], list[float]] = {}
    for path in paths:
        with open(path, newline="") as f:
            for row in csv.DictReader(f):
                if metric not in row:
                    echo(f"error: {path} has no column {metric!r}", file=sys.stderr)
                    return 2
                if task_filter is not None and row["task"] != task_filter:
                    continue
                groups.setdefault((row["task"], row["variant"]), []).append(float(row[metric]))
    if not groups:
        echo("error: no matching rows in summary files", file=sys.stderr)
        return 2

    tasks = sorted({task for task, _ in groups})
    echo(f"metric: {metric}, alpha: {alpha}")
    status = 0
    for task in tasks:
        variants = sorted(v for t, v in groups if t == task)
        pairs = [(a, b) for i, a in enumerate(variants) for b in variants[i + 1 :]]
        if not pairs:
            continue
        rows = []
        p_values = []
        for a, b in pairs:
            try:
                stat, p = metrics.rank_sum_compare(groups[(task, a)], groups[(task, b)])
            except metrics.InsufficientDataError as exc:
                echo(f"error: {task}: {a} vs {b}: {exc}", file=sys.stderr)
                return 2
            med_a = float(sorted(groups[(task, a)])[len(groups[(task, a)]) // 2])
            med_b = float(sorted(groups[(task, b)])[len(groups[(task, b)]) // 2])
            rows.append((a, b, med_a, med_b, stat, p))
            p_values.append(p)
        adjusted = metrics.holm_adjust(p_values)
        echo(f"\ntask: {task}")
        header = f"{'variant a':>22} {'variant b':>22} {'median a':>12} {'median b':>12} {'W':>8} {'p':>10} {'p(holm)':>10}  verdict"
        echo(header)
        for (a, b, med_a, med_b, stat, p), p_adj in zip(rows, adjusted):
            verdict = "different" if p_adj < alpha else "equivalent"
            echo(
                f"{a:>22} {b:>22} {med_a:>12.4f} {med_b:>12.4f} {stat:>8.1f} "
                f"{p:>10.4g} {p_adj:>10.4g}  {verdict}"
            )
    return status


def dump_task(name: str, dim: int, resolution: int, sigma0: float | None, echo=print) -> int:
    """Prints one task's constants as ``key: value`` lines for audit."""
    task = make_task(name, dim=dim, resolution=resolution, sigma0=sigma0)
    echo(f"name: {task.name}")
    echo(f"dim: {task.dim}")
    echo(f"genotype_lower: {float(task.lower[0])!r}")
    echo(f"genotype_upper: {float(task.upper[0])!r}")
    echo(f"sigma0: {float(task.sigma0)!r}")
    echo(f"bd_lower: {[float(v) for v in task.bd_lower]!r}")
    echo(f"bd_upper: {[float(v) for v in task.bd_upper]!r}")
    echo(f"grid_resolution: {[int(v) for v in task.grid_resolution]!r}")
    echo(f"grid_cells: {task.grid().total_cells}")
    echo(f"fitness_worst_raw: {float(task.fitness_worst_raw)!r}")
    echo(f"fitness_best_raw: {float(task.fitness_best_raw)!r}")
    if task.name.startswith("rastrigin"):
        from qdpool.tasks import rastrigin_per_dim_max

        echo(f"rastrigin_per_dim_max: {rastrigin_per_dim_max()!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdpool",
        description="Quality-diversity benchmark runner (emitter pools over a grid archive)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run variants x replications and write CSVs")
    run_p.add_argument("--config", help="INI config file; flags override its values")
    run_p.add_argument("--task", dest="task_name", choices=TASK_NAMES)
    run_p.add_argument(
        "--variant",
        dest="variants",
        action="append",
        choices=engine.VARIANT_NAMES,
        help="repeatable; default is all six variants",
    )
    run_p.add_argument("--generations", type=int)
    run_p.add_argument("--slots", type=int)
    run_p.add_argument("--batch", type=int)
    run_p.add_argument("--init-samples", dest="init_samples", type=int)
    run_p.add_argument("--replications", type=int)
    run_p.add_argument("--seed", dest="base_seed", type=int)
    run_p.add_argument("--zeta", type=float)
    run_p.add_argument("--window", type=int)
    run_p.add_argument("--stats-granularity", dest="stats_granularity", choices=("instance", "kind"))
    run_p.add_argument("--dim", type=int)
    run_p.add_argument("--resolution", type=int)
    run_p.add_argument("--sigma0", type=float)
    run_p.add_argument("--out", dest="out_dir")
    run_p.add_argument("--threads", type=int, help="evaluation threads (QD_THREADS fallback)")
    run_p.add_argument("--metrics-every", dest="metrics_every", type=int)

    cmp_p = sub.add_parser("compare", help="rank-sum tests over summary.csv files")
    cmp_p.add_argument("summaries", nargs="+", help="summary.csv paths")
    cmp_p.add_argument("--metric", default="qd_score", choices=("qd_score", "best_fitness", "archive_size"))
    cmp_p.add_argument("--task", default=None, help="restrict to one task")
    cmp_p.add_argument("--alpha", type=float, default=0.05)

    dump_p = sub.add_parser("dump-task", help="print task constants")
    dump_p.add_argument("--task", required=True, choices=TASK_NAMES)
    dump_p.add_argument("--dim", type=int, default=100)
    dump_p.add_argument("--resolution", type=int, default=100)
    dump_p.add_argument("--sigma0", type=float, default=None)

    return parser


_RUN_FLAG_FIELDS = (
    "task_name",
    "variants",
    "generations",
    "slots",
    "batch",
    "init_samples",
    "replications",
    "base_seed",
    "zeta",
    "window",
    "stats_granularity",
    "dim",
    "resolution",
    "sigma0",
    "out_dir",
    "threads",
    "metrics_every",
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            flags = {name: getattr(args, name) for name in _RUN_FLAG_FIELDS}
            cfg = parse_config(flags, args.config)
            return run_experiment(cfg)
        if args.command == "compare":
            return compare_summaries(args.summaries, args.metric, args.task, args.alpha)
        if args.command == "dump-task":
            return dump_task(args.task, args.dim, args.resolution, args.sigma0)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
