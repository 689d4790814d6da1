"""
A tour of the four emitter kinds
================================

Each emitter turns archive state into a batch of candidates plus a
per-sample reward signal. This script activates one instance of each kind
on a small Rastrigin task and prints what it produces.
"""

import numpy as np

from qdpool import (
    Archive,
    Elite,
    EMITTER_CLASSES,
    cell_indices,
    evaluate_batch,
    make_task,
)

rng = np.random.default_rng(11)
task = make_task("rastrigin_multi", dim=6, resolution=10)
archive = Archive(task.grid())

# seed the archive with a handful of random solutions
seeds = rng.uniform(task.lower, task.upper, (30, task.dim))
raw, norm, bd = evaluate_batch(seeds, task)
for i, cell in enumerate(cell_indices(bd, task.grid())):
    archive.offer_candidate(int(cell), seeds[i], bd[i], raw[i], norm[i])
print(f"seeded archive with {len(archive)} elites\n")

for kind, cls in EMITTER_CLASSES.items():
    emitter = cls(emitter_id=0, batch_size=8)
    emitter.activate(archive, task, rng)
    genotypes = emitter.generate_samples(archive, task, rng)
    raw, norm, bd = evaluate_batch(genotypes, task)

    # offer to the archive exactly like the engine does, collecting results
    results = []
    for i, cell in enumerate(cell_indices(bd, task.grid())):
        results.append(archive.offer_candidate(int(cell), genotypes[i], bd[i], raw[i], norm[i]))
    rewards = emitter.batch_rewards(bd, norm, results)
    added = sum(r.added for r in results)

    print(f"{kind.name}: batch of {len(genotypes)}, {added} added")
    print(f"  rewards: {np.array2string(np.asarray(rewards), precision=3)}")
    terminated = emitter.finish_generation(rewards, any_added=added > 0)
    print(f"  terminated after this generation: {terminated}\n")
