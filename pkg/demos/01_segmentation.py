# %% [markdown]
# Curvature and joint segmentation
#
# Two players run side by side and turn together at frame 35.  The turn shows
# up as a spike in spatio-temporal curvature, and summing the curvature of the
# whole group makes the spike stand out from per-trajectory noise.

# %%
import numpy as np

from trajmatch.segmentation import SegmentationConfig, aggregated_curvature, segment_scene
from trajmatch.synth import PerturbConfig, PlaySpec, Role, generate_play
from trajmatch.traj import curvature, normalize_scene, spatiotemporal_curvature

# %%
# sanity check first: a unit circle traced at unit speed has curvature 1/2
t = np.arange(0, 2 * np.pi, 0.01)
k = spatiotemporal_curvature(np.cos(t), np.sin(t), dt=0.01)
print("circle curvature, interior:", k[1:-1].min().round(6), "to", k[1:-1].max().round(6))

# %%
play = PlaySpec("turn", (
    Role("a", ((0, 0, 0), (35, 28, 0), (60, 28, 20))),
    Role("b", ((0, 0, 6), (35, 28, 6), (60, 28, 26))),
), frame_span=60)
scene = normalize_scene(generate_play(play, PerturbConfig(noise_sigma=0.001, seed=0)))

members = scene.trajectory_ids()
agg, first = aggregated_curvature(scene, members)
one = curvature(scene.trajectory_map()[members[0]])
print("single trajectory peak at frame", int(np.argmax(one)), "value", one.max().round(4))
print("aggregated peak at frame", first + int(np.argmax(agg)), "value", agg.max().round(4))

# %%
# one cluster, since both players do the same thing
motions, clusters = segment_scene(scene, seg_cfg=SegmentationConfig(k=1), return_clusters=True)
print("cut points:", clusters[0].cut_points)
for m in motions:
    print(f"  motion {m.interval}  {len(m.segments)} segments x {m.segments.shape[1]} samples"
          f"  centroid {m.centroid.round(3)}")

# %%
# the default cluster count follows the number of entities; with two entities
# here that gives 3 groups for 6 landmark trajectories
motions = segment_scene(scene)
print(len(motions), "atomic motions with default settings:", sorted({m.interval for m in motions}))
