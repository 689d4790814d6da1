"""
One engine run, end to end
==========================

Runs the UCB-scheduled emitter pool on a 10-D multimodal Rastrigin task
and prints the metric series the benchmark CLI would write to CSV.
"""

from qdpool import RunConfig, make_task, run

task = make_task("rastrigin_multi", dim=10, resolution=20)
config = RunConfig(
    task=task,
    variant="me-map-elites-ucb",
    generations=300,
    slots=8,
    batch_per_emitter=20,
    init_samples=50,
    seed=5,
    metrics_every=50,
)
result = run(config)

print(f"{'gen':>5} {'evals':>8} {'size':>5} {'best':>7} {'qd':>8}   opt/dir/imp/rand")
for record in result.records:
    counts = "/".join(str(c) for c in record.kind_counts)
    print(
        f"{record.generation:>5} {record.evaluations:>8} {record.archive_size:>5} "
        f"{record.best_fitness_norm:>7.4f} {record.qd_score:>8.2f}   {counts}"
    )

print(f"\nwall time: {result.wall_time:.2f}s "
      f"({result.evaluations / result.wall_time:,.0f} evaluations/s)")
