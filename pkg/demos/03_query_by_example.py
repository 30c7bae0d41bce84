# %% [markdown]
# Query-by-Example on the synthetic benchmark
#
# 24 plays in 3 classes, each seen from one of 8 camera views, with its own
# rate warp, noise and shuffled player order.  Every play is classified by the
# labels of its two most similar neighbours among the other 23.

# %%
import time

import numpy as np

from trajmatch.retrieval import Dataset, DatasetItem, MatchConfig, leave_one_out, scene_graph
from trajmatch.synth import standard_benchmark

cfg = MatchConfig(method="icm")
t0 = time.perf_counter()
items = standard_benchmark(seed=0)
ds = Dataset([DatasetItem(it.id, it.label, scene_graph(it.scene, cfg)) for it in items])
conf, acc, pred, S = leave_one_out(ds, cfg, k=2)
print(f"accuracy {acc:.3f} in {time.perf_counter() - t0:.1f}s")

# %%
print("confusion (rows: truth)")
print(" " * 12 + "".join(f"{l:>12}" for l in conf.labels))
for label, row in zip(conf.labels, conf.rows):
    print(f"{label:>12}" + "".join(f"{v:>12.3f}" for v in row))

# %%
# mean log similarity between classes; diagonal blocks should dominate
labels = np.array(ds.labels)
for a in conf.labels:
    cells = [np.nanmean(S[np.ix_(labels == a, labels == b)]) for b in conf.labels]
    print(f"{a:>12}" + "".join(f"{v:>12.1f}" for v in cells))

# %%
# partial observation: one player removed from every query
partial = [scene_graph(it.scene, cfg) for it in standard_benchmark(seed=0, drop_entities=1)]
_, acc_partial, _, _ = leave_one_out(ds, cfg, k=2, queries=partial)
print(f"with one player missing: accuracy {acc_partial:.3f}")

# %%
# the same run from the shell:
#   trajmatch synth --preset benchmark --seed 0 --out bench | trajmatch classify - --k 2 > result.json
