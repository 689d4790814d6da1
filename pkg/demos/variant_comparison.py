"""
Comparing two variants statistically
====================================

Runs two algorithm variants for a few replications each, then compares
final QD-scores with the rank-sum test and Holm-corrected p-values.
Desk-scale settings; expect noisy medians but a working pipeline.
"""

import statistics

from qdpool import RunConfig, holm_adjust, make_task, rank_sum_compare, run

task = make_task("rastrigin_multi", dim=10, resolution=20)
variants = ("me-map-elites-ucb", "map-elites", "cma-me-imp")
replications = 4

scores = {}
for variant in variants:
    finals = []
    for rep in range(replications):
        config = RunConfig(task=task, variant=variant, generations=150, slots=8,
                           batch_per_emitter=20, init_samples=50, seed=100 + rep)
        finals.append(run(config).final_record.qd_score)
    scores[variant] = finals
    print(f"{variant:>20}: median qd {statistics.median(finals):7.2f}  {['%.1f' % f for f in finals]}")

# all pairwise comparisons, Holm-corrected as one family
pairs = [(a, b) for i, a in enumerate(variants) for b in variants[i + 1:]]
raw_p = []
stats = []
for a, b in pairs:
    w, p = rank_sum_compare(scores[a], scores[b])
    stats.append(w)
    raw_p.append(p)
adjusted = holm_adjust(raw_p)

print("\npairwise rank-sum on final QD-score:")
for (a, b), w, p, p_adj in zip(pairs, stats, raw_p, adjusted):
    print(f"  {a} vs {b}: W={w:.1f} p={p:.4f} p_holm={p_adj:.4f}")
