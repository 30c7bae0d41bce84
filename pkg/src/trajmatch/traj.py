"""Trajectory containers, normalization, resampling and spatio-temporal curvature."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Hashable, Sequence

import numpy as np

DEFAULT_L_ATOM = 16


@dataclass(frozen=True)
class Trajectory:
    """Samples of one landmark point: integer frames and x/y coordinates."""

    point_id: Hashable
    frames: np.ndarray
    xy: np.ndarray

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.int64).reshape(-1)
        xy = np.asarray(self.xy, dtype=float).reshape(-1, 2)
        if len(frames) != len(xy):
            raise ValueError("frames and xy have different lengths")
        if len(frames) < 2:
            raise ValueError("a trajectory needs at least 2 samples")
        if np.any(np.diff(frames) <= 0):
            raise ValueError("frames must be strictly increasing")
        frames.setflags(write=False)
        xy.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "xy", xy)

    @classmethod
    def from_samples(cls, point_id, samples: Sequence[tuple[int, float, float]]) -> "Trajectory":
        arr = np.asarray(samples, dtype=float).reshape(-1, 3)
        return cls(point_id, arr[:, 0].astype(np.int64), arr[:, 1:])

    @property
    def span(self) -> tuple[int, int]:
        return int(self.frames[0]), int(self.frames[-1])

    def __len__(self):
        return len(self.frames)


@dataclass(frozen=True)
class EntityTrack:
    entity_id: Hashable
    trajectories: tuple[Trajectory, ...]

    def __post_init__(self):
        trajs = tuple(self.trajectories)
        if not trajs:
            raise ValueError("an entity track needs at least one trajectory")
        object.__setattr__(self, "trajectories", trajs)


@dataclass(frozen=True)
class Scene:
    tracks: tuple[EntityTrack, ...]
    normalized: bool = False
    frame_range: tuple[int, int] = field(init=False)

    def __post_init__(self):
        tracks = tuple(self.tracks)
        if not tracks:
            raise ValueError("a scene needs at least one entity track")
        object.__setattr__(self, "tracks", tracks)
        first = min(t.frames[0] for t in self.trajectories())
        last = max(t.frames[-1] for t in self.trajectories())
        object.__setattr__(self, "frame_range", (int(first), int(last)))

    def trajectories(self) -> list[Trajectory]:
        return [t for track in self.tracks for t in track.trajectories]

    def trajectory_ids(self) -> list[tuple]:
        return [(track.entity_id, t.point_id) for track in self.tracks for t in track.trajectories]

    def trajectory_map(self) -> dict[tuple, Trajectory]:
        return {(track.entity_id, t.point_id): t for track in self.tracks for t in track.trajectories}

    @property
    def n_entities(self) -> int:
        return len(self.tracks)

    def map_xy(self, fn, normalized: bool | None = None) -> "Scene":
        """Return a copy with ``fn`` applied to every (n, 2) coordinate array."""
        tracks = [
            EntityTrack(tr.entity_id, tuple(Trajectory(t.point_id, t.frames, fn(t.xy)) for t in tr.trajectories))
            for tr in self.tracks
        ]
        return Scene(tuple(tracks), self.normalized if normalized is None else normalized)

    def without_entities(self, entity_ids) -> "Scene":
        drop = set(entity_ids)
        return replace(self, tracks=tuple(t for t in self.tracks if t.entity_id not in drop))


@dataclass(frozen=True)
class AtomicMotion:
    """A jointly segmented bundle of equal-length trajectory segments.

    ``segments`` has shape (P, L, 2).  ``interval`` is the (start, end) frame
    pair; ``members`` names the trajectories the segments came from.
    """

    segments: np.ndarray
    interval: tuple[int, int]
    members: tuple = ()
    cluster: int = 0
    centroid: np.ndarray = field(init=False)

    def __post_init__(self):
        seg = np.asarray(self.segments, dtype=float)
        if seg.ndim == 2:
            seg = seg[None]
        if seg.ndim != 3 or seg.shape[0] == 0 or seg.shape[2] != 2:
            raise ValueError("segments must have shape (P, L, 2) with P >= 1")
        s, e = (int(v) for v in self.interval)
        if not s < e:
            raise ValueError(f"invalid interval {self.interval!r}")
        seg.setflags(write=False)
        object.__setattr__(self, "segments", seg)
        object.__setattr__(self, "interval", (s, e))
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "centroid", centroid(seg))


def centroid(motion) -> np.ndarray:
    """Mean over all samples of all segments; accepts an AtomicMotion or an array."""
    seg = motion.segments if isinstance(motion, AtomicMotion) else np.asarray(motion, dtype=float)
    pts = seg.reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("centroid of an empty motion")
    return pts.mean(axis=0)


def normalize_scene(scene: Scene) -> Scene:
    """Shift the minimum coordinates to the origin and divide by the larger extent.

    A single isotropic divisor keeps the aspect ratio, so orientation
    measures computed later are not distorted.
    """
    pts = np.concatenate([t.xy for t in scene.trajectories()])
    lo = pts.min(axis=0)
    extent = (pts.max(axis=0) - lo).max()
    if extent <= 0:
        raise ValueError("zero-extent scene")
    return scene.map_xy(lambda xy: (xy - lo) / extent, normalized=True)


def resample_uniform(traj: Trajectory, L: int) -> np.ndarray:
    """Linearly interpolate ``traj`` at ``L`` equally spaced times over its frame span."""
    if L < 2:
        raise ValueError("L must be at least 2")
    return _interp_xy(traj.frames, traj.xy, np.linspace(traj.frames[0], traj.frames[-1], L))


def resample_between(traj: Trajectory, start: float, end: float, L: int) -> np.ndarray:
    """Resample the part of ``traj`` between two times (clipped to its span)."""
    if L < 2:
        raise ValueError("L must be at least 2")
    return _interp_xy(traj.frames, traj.xy, np.linspace(start, end, L))


def frame_grid(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Positions at every integer frame of the trajectory's span."""
    frames = np.arange(traj.frames[0], traj.frames[-1] + 1)
    return frames, _interp_xy(traj.frames, traj.xy, frames)


def _interp_xy(frames, xy, t):
    t = np.asarray(t, dtype=float)
    out = np.column_stack([np.interp(t, frames, xy[:, 0]), np.interp(t, frames, xy[:, 1])])
    # pin the exact endpoints, np.interp can be off by an ulp on a float grid
    if len(t) and t[0] == frames[0]:
        out[0] = xy[0]
    if len(t) and t[-1] == frames[-1]:
        out[-1] = xy[-1]
    return out


def _derivatives(v: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    d1 = np.gradient(v, dt, edge_order=2)
    d2 = np.empty_like(v)
    d2[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / dt**2
    d2[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / dt**2
    d2[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / dt**2
    return d1, d2


def spatiotemporal_curvature(x, y, dt: float = 1.0) -> np.ndarray:
    """Curvature of a uniformly sampled planar path with time as third axis.

    kappa = sqrt(y''^2 + x''^2 + (x'y'' - x''y')^2) / (x'^2 + y'^2 + 1)^(3/2),
    using central differences inside and one-sided second-order stencils at
    the two ends.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    if len(x) < 5:
        raise ValueError("curvature needs at least 5 samples")
    x1, x2 = _derivatives(x, dt)
    y1, y2 = _derivatives(y, dt)
    num = np.sqrt(y2**2 + x2**2 + (x1 * y2 - x2 * y1) ** 2)
    return num / np.sqrt(x1**2 + y1**2 + 1.0) ** 3


def curvature(traj: Trajectory) -> np.ndarray:
    """Per-frame curvature of ``traj`` on its integer frame grid."""
    _, xy = frame_grid(traj)
    if len(xy) < 5:
        raise ValueError("curvature needs a span of at least 5 frames")
    return spatiotemporal_curvature(xy[:, 0], xy[:, 1], 1.0)
