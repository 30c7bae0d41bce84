"""Synthetic multi-entity plays standing in for tracked football data.

A play is a set of roles, each a piecewise-linear waypoint path carried by
a few landmark points.  A generated scene applies, in order: a planar
affine view, a monotone rate warp of time, Gaussian observation noise and
optionally an entity shuffle.  Scenes are returned in raw (un-normalized)
coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .traj import EntityTrack, Scene, Trajectory

# landmark offsets around a role path, in field units
JITTER = np.array([[0.0, 0.0], [0.6, 0.3], [-0.4, 0.5], [0.2, -0.6], [-0.5, -0.3]])


@dataclass(frozen=True)
class Role:
    name: str
    waypoints: tuple  # ((frame, x, y), ...)
    landmarks: int = 3

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=float)
        if wp.ndim != 2 or wp.shape[1] != 3 or len(wp) < 2:
            raise ValueError(f"role {self.name!r} needs at least two (frame, x, y) waypoints")
        if np.any(np.diff(wp[:, 0]) <= 0):
            raise ValueError(f"waypoint frames of role {self.name!r} must increase")
        if not 1 <= self.landmarks <= len(JITTER):
            raise ValueError(f"landmarks per role must be in [1, {len(JITTER)}]")

    def position(self, t) -> np.ndarray:
        wp = np.asarray(self.waypoints, dtype=float)
        return np.column_stack([np.interp(t, wp[:, 0], wp[:, 1]), np.interp(t, wp[:, 0], wp[:, 2])])


@dataclass(frozen=True)
class PlaySpec:
    name: str
    roles: tuple[Role, ...]
    frame_span: int

    def __post_init__(self):
        if not self.roles:
            raise ValueError("a play needs at least one role")


@dataclass(frozen=True)
class View:
    rotation: float = 0.0  # radians
    scale: float = 1.0
    shear: float = 0.0
    translation: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("view scale must be positive")

    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        rot = np.array([[c, -s], [s, c]])
        shear = np.array([[1.0, self.shear], [0.0, 1.0]])
        return self.scale * rot @ shear

    def apply(self, xy: np.ndarray) -> np.ndarray:
        return xy @ self.matrix().T + np.asarray(self.translation)


@dataclass(frozen=True)
class RateWarp:
    """Monotone piecewise-linear map from play time to observed frame.

    ``knots`` are (play_time, frame) pairs; the first and last must map the
    span endpoints onto themselves.
    """

    knots: tuple = ()

    def check(self, span: int):
        if not self.knots:
            return
        k = np.asarray(self.knots, dtype=float)
        if k[0, 0] != 0 or k[0, 1] != 0 or k[-1, 0] != span or k[-1, 1] != span:
            raise ValueError("rate warp must fix both span endpoints")
        if np.any(np.diff(k[:, 0]) <= 0) or np.any(np.diff(k[:, 1]) <= 0):
            raise ValueError("rate warp must be strictly increasing")

    def play_time(self, frames) -> np.ndarray:
        """Inverse map: the play time observed at each output frame."""
        frames = np.asarray(frames, dtype=float)
        if not self.knots:
            return frames
        k = np.asarray(self.knots, dtype=float)
        return np.interp(frames, k[:, 1], k[:, 0])

    @classmethod
    def random(cls, rng, span: int, n_pieces: int = 3, max_slope_ratio: float = 1.15) -> "RateWarp":
        """Random warp whose piece slopes stay within ``max_slope_ratio`` of 1."""
        cuts = np.sort(rng.uniform(0.2, 0.8, size=n_pieces - 1)) * span
        times = np.concatenate([[0.0], cuts, [float(span)]])
        slopes = np.exp(rng.uniform(-math.log(max_slope_ratio), math.log(max_slope_ratio), size=n_pieces))
        frames = np.concatenate([[0.0], np.cumsum(slopes * np.diff(times))])
        frames *= span / frames[-1]
        frames[-1] = span
        return cls(tuple(zip(times.tolist(), frames.tolist())))


@dataclass(frozen=True)
class PerturbConfig:
    view: View = field(default_factory=View)
    rate_warp: RateWarp = field(default_factory=RateWarp)
    noise_sigma: float = 0.0  # in normalized units (fraction of the scene extent)
    shuffle_entities: bool = False
    drop_entities: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")


def generate_play(spec: PlaySpec, perturb: PerturbConfig = PerturbConfig()) -> Scene:
    """Render a play into a Scene with one entity per role."""
    perturb.rate_warp.check(spec.frame_span)
    rng = np.random.default_rng(perturb.seed)
    frames = np.arange(spec.frame_span + 1)
    t = perturb.rate_warp.play_time(frames)

    paths = []
    for role in spec.roles:
        base = role.position(t)
        paths.append([perturb.view.apply(base + JITTER[j]) for j in range(role.landmarks)])

    if perturb.noise_sigma > 0:
        pts = np.concatenate([p for role_paths in paths for p in role_paths])
        extent = float((pts.max(axis=0) - pts.min(axis=0)).max())
        sd = perturb.noise_sigma * extent
        paths = [[p + rng.normal(0.0, sd, size=p.shape) for p in role_paths] for role_paths in paths]

    tracks = [
        EntityTrack(role.name, tuple(Trajectory(f"{role.name}.{j}", frames, p) for j, p in enumerate(role_paths)))
        for role, role_paths in zip(spec.roles, paths)
    ]
    if perturb.shuffle_entities:
        tracks = [tracks[i] for i in rng.permutation(len(tracks))]
    if perturb.drop_entities:
        if perturb.drop_entities >= len(tracks):
            raise ValueError("cannot drop every entity")
        keep = np.sort(rng.choice(len(tracks), size=len(tracks) - perturb.drop_entities, replace=False))
        tracks = [tracks[i] for i in keep]
    return Scene(tuple(tracks))


# -- preset plays ----------------------------------------------------------

SPAN = 40
MID = 25.0


def _mirror(waypoints):
    return tuple((f, 2 * MID - x, y) for f, x, y in waypoints)


def _drop_back() -> PlaySpec:
    # two play-wide breaks at frames 12 and 24: the QB finishes the drop and
    # sets, receivers break inside then curl back, the back flares right
    # and the tight end crosses to the left sideline
    roles = (
        Role("qb", ((0, 25, -1), (12, 25, -9), (24, 30, -11), (40, 27, -10))),
        Role("rb", ((0, 25, -6), (12, 38, -9), (24, 46, 2), (40, 44, 8))),
        Role("wr_left", ((0, 4, 0), (12, 8, 9), (24, 4, 18), (40, 11, 10))),
        Role("wr_right", ((0, 46, 0), (12, 42, 9), (24, 46, 18), (40, 39, 10))),
        Role("te", ((0, 33, 0), (12, 30, 10), (24, 12, 14), (40, 4, 16))),
    )
    return PlaySpec("drop_back", roles, SPAN)


def _wide_left() -> PlaySpec:
    # handoff, the back sweeps left and turns upfield behind two lead
    # blockers; the QB fakes a bootleg to the right
    roles = (
        Role("qb", ((0, 25, -1), (8, 22, -4), (18, 32, -6), (40, 44, -5))),
        Role("rb", ((0, 25, -6), (16, 9, -4), (40, 5, 14))),
        Role("wr_left", ((0, 4, 0), (12, 8, 6), (40, 2, 16))),
        Role("wr_right", ((0, 46, 0), (24, 40, 12), (40, 30, 14))),
        Role("te", ((0, 17, 0), (18, 6, 2), (40, 4, 12))),
    )
    return PlaySpec("wide_left", roles, SPAN)


def _wide_right() -> PlaySpec:
    left = _wide_left()
    roles = tuple(Role(r.name, _mirror(r.waypoints), r.landmarks) for r in left.roles)
    swap = {"wr_left": "wr_right", "wr_right": "wr_left"}
    roles = tuple(Role(swap.get(r.name, r.name), r.waypoints, r.landmarks) for r in roles)
    return PlaySpec("wide_right", roles, SPAN)


PRESET_PLAYS = {"drop_back": _drop_back, "wide_left": _wide_left, "wide_right": _wide_right}

# rotations {0, +-15, +-30} deg x scales {0.8, 1, 1.25}, mild shear
STANDARD_VIEWS = (
    View(math.radians(0), 1.0, 0.0, (0.0, 0.0)),
    View(math.radians(15), 0.8, 0.05, (5.0, -3.0)),
    View(math.radians(-15), 1.25, -0.05, (-4.0, 2.0)),
    View(math.radians(30), 1.0, 0.1, (2.0, 7.0)),
    View(math.radians(-30), 0.8, -0.1, (-6.0, -1.0)),
    View(math.radians(15), 1.25, 0.0, (3.0, 3.0)),
    View(math.radians(-15), 1.0, 0.1, (0.0, -5.0)),
    View(math.radians(0), 0.8, -0.1, (8.0, 1.0)),
)

BENCHMARK_NOISE = 0.005


@dataclass(frozen=True)
class BenchmarkItem:
    id: str
    label: str
    scene: Scene
    perturb: PerturbConfig


def standard_benchmark(seed: int = 0, drop_entities: int = 0, noise_sigma: float = BENCHMARK_NOISE,
                       per_class: int = 8) -> list[BenchmarkItem]:
    """Three play classes, ``per_class`` sequences each, one standard view per sequence.

    Every sequence gets its own random rate warp, observation noise and
    entity shuffle; all randomness derives from ``seed``.
    """
    children = np.random.SeedSequence(seed).spawn(len(PRESET_PLAYS) * per_class)
    items = []
    n = 0
    for label, make in PRESET_PLAYS.items():
        spec = make()
        for v in range(per_class):
            rng = np.random.default_rng(children[n])
            perturb = PerturbConfig(
                view=STANDARD_VIEWS[v % len(STANDARD_VIEWS)],
                rate_warp=RateWarp.random(rng, spec.frame_span),
                noise_sigma=noise_sigma,
                shuffle_entities=True,
                drop_entities=drop_entities,
                seed=int(rng.integers(2**31)),
            )
            items.append(BenchmarkItem(f"{label}_{v:02d}", label, generate_play(spec, perturb), perturb))
            n += 1
    return items
