# DirectGCN as a plain node classifier on Zachary's karate club.
#
# Labels are Louvain communities, split 10/10/80 per class. Five seeds.
#
# Run with:  python3 demos/karate_benchmark.py

import numpy as np

from protgram.nodebench import BENCH_CONFIG, karate_club, run_benchmark

ds = karate_club()
print(f"{ds.num_nodes} nodes, {ds.num_edges} edges, {ds.num_classes} classes")
print("class sizes:", np.bincount(ds.labels).tolist())

res = run_benchmark(ds, BENCH_CONFIG, repeats=5)
for metric, (mean, std) in res.summary().items():
    print(f"{metric:>15}: {mean:.3f} ± {std:.3f}")

# %% Majority baseline for comparison

test = ds.test_mask
majority = np.bincount(ds.labels[ds.train_mask]).argmax()
print(f"majority baseline accuracy: {np.mean(ds.labels[test] == majority):.3f}")

# %% Loss traces
# Eval-mode loss (dropout off), recorded after every update.

for seed, trace in enumerate(res.eval_losses):
    t = np.asarray(trace)
    print(f"seed {seed}: loss {t[0]:.3f} -> {t[50]:.3f} (epoch 50) -> {t[-1] + 0.0:.2e}")
