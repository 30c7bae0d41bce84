import numpy as np
import pytest

from trajmatch.traj import EntityTrack, Scene, Trajectory


def line_traj(pid, start, end, frames):
    frames = np.asarray(frames)
    t = (frames - frames[0]) / (frames[-1] - frames[0])
    xy = np.asarray(start) + t[:, None] * (np.asarray(end) - np.asarray(start))
    return Trajectory(pid, frames, xy)


def corner_traj(pid, origin, heading, corner, span, speed=0.8, turn=np.pi / 2):
    """Constant-speed path turning by ``turn`` at frame ``corner``."""
    f = np.arange(span + 1, dtype=float)
    d0 = np.array([np.cos(heading), np.sin(heading)])
    d1 = np.array([np.cos(heading + turn), np.sin(heading + turn)])
    a = np.minimum(f, corner)[:, None] * d0
    b = np.maximum(f - corner, 0)[:, None] * d1
    return Trajectory(pid, f.astype(int), np.asarray(origin) + speed * (a + b))


def scene_of(*tracks):
    return Scene(tuple(EntityTrack(eid, tuple(ts)) for eid, ts in tracks))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
