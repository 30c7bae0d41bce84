"""Event graphs, node/pairwise potentials and the joint matching energy."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .relations import SIMULTANEOUS, classify_intervals, spatial_distance, spatial_orientation
from .traj import AtomicMotion

SIGMA_FLOOR = 1e-3


@dataclass(frozen=True)
class SigmaConfig:
    """Gaussian noise deviations for node, temporal-edge and spatial-edge residuals."""

    node: float = 0.05
    temporal: float = 5.0
    spatial: float = 0.1

    def __post_init__(self):
        if min(self.node, self.temporal, self.spatial) <= 0:
            raise ValueError("all sigmas must be positive")

    def scaled(self, factor: float) -> "SigmaConfig":
        return SigmaConfig(self.node * factor, self.temporal * factor, self.spatial * factor)


@dataclass(frozen=True)
class EventGraph:
    """Complete graph over atomic motions.

    ``temporal[i, j]`` holds the compact temporal measure and
    ``simultaneous[i, j]`` its type; ``spatial[i, j]`` holds
    (distance, orientation).  The diagonal holds each motion's relation with
    itself, which is what a many-to-one mapping compares against.
    """

    nodes: tuple[AtomicMotion, ...]
    temporal: np.ndarray
    simultaneous: np.ndarray
    spatial: np.ndarray
    sigmas: SigmaConfig = SigmaConfig()
    frame_range: tuple[int, int] | None = None
    node_sigma: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.nodes)

    @property
    def intervals(self) -> list[tuple[int, int]]:
        return [m.interval for m in self.nodes]

    @property
    def frame_span(self) -> int:
        if self.frame_range is not None:
            return self.frame_range[1] - self.frame_range[0]
        ivs = self.intervals
        return max(e for _, e in ivs) - min(s for s, _ in ivs)

    def edges(self):
        """Yield (i, j, temporal, is_simultaneous, spatial) for every i < j."""
        for i in range(len(self)):
            for j in range(i + 1, len(self)):
                yield i, j, self.temporal[i, j], bool(self.simultaneous[i, j]), self.spatial[i, j]

    def segment_array(self) -> tuple[np.ndarray, np.ndarray]:
        """Stack node segments into (M, P_max, L, 2) with a (M, P_max) validity mask."""
        pmax = max(m.segments.shape[0] for m in self.nodes)
        L = self.nodes[0].segments.shape[1]
        arr = np.zeros((len(self), pmax, L, 2))
        mask = np.zeros((len(self), pmax), dtype=bool)
        for i, m in enumerate(self.nodes):
            arr[i, : len(m.segments)] = m.segments
            mask[i, : len(m.segments)] = True
        return arr, mask

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {"interval": list(m.interval), "centroid": [float(v) for v in m.centroid],
                 "n_segments": int(m.segments.shape[0])}
                for m in self.nodes
            ],
            "edges": [
                {"i": i, "j": j, "type": "temporal",
                 "compact": "simultaneous" if sim else "sequential", "measure": float(t)}
                for i, j, t, sim, _ in self.edges()
            ] + [
                {"i": i, "j": j, "type": "spatial", "measure": [float(v) for v in s]}
                for i, j, _, _, s in self.edges()
            ],
            "sigmas": {"node": self.sigmas.node, "temporal": self.sigmas.temporal,
                       "spatial": self.sigmas.spatial},
        }


def build_graph(motions, sigmas: SigmaConfig | None = None, frame_range=None) -> EventGraph:
    """Build a complete event graph with nodes in input order."""
    motions = tuple(motions)
    if not motions:
        raise ValueError("need at least one atomic motion")
    n = len(motions)
    temporal = np.zeros((n, n))
    simultaneous = np.ones((n, n), dtype=bool)
    spatial = np.zeros((n, n, 2))
    for i in range(n):
        spatial[i, i] = (0.0, spatial_orientation(motions[i].centroid, motions[i].centroid))
        for j in range(i + 1, n):
            rel = classify_intervals(motions[i].interval, motions[j].interval)
            temporal[i, j] = temporal[j, i] = rel.measure
            simultaneous[i, j] = simultaneous[j, i] = rel.compact == SIMULTANEOUS
            ci, cj = motions[i].centroid, motions[j].centroid
            spatial[i, j] = spatial[j, i] = (spatial_distance(ci, cj), spatial_orientation(ci, cj))
    return EventGraph(motions, temporal, simultaneous, spatial, sigmas or SigmaConfig(), frame_range)


def segment_correspondence(z_segments, y_segments) -> tuple[float, list[tuple[int, int]]]:
    """Minimum total squared distance between two segment sets under a one-to-one pairing.

    Returns the summed squared residual (no 1/(2 sigma^2) factor) and the
    pairs (p, q).  Segments left over when P != Q cost nothing.
    """
    z = np.asarray(z_segments, dtype=float)
    y = np.asarray(y_segments, dtype=float)
    cost = ((z[:, None] - y[None, :]) ** 2).sum(axis=(2, 3))
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum()), [(int(p), int(q)) for p, q in zip(rows, cols)]


def node_potential(z_motion: AtomicMotion, y_motion: AtomicMotion, sigma: float):
    """Node energy of observing ``z_motion`` as model motion ``y_motion``."""
    ss, pairs = segment_correspondence(z_motion.segments, y_motion.segments)
    return ss / (2.0 * sigma**2), pairs


def pairwise_potential(z_edge, y_edge, sigma: float, mismatch_penalty: float = 0.0) -> float:
    """Quadratic edge energy; ``mismatch_penalty`` is added for temporal type mismatches."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    r = np.atleast_1d(np.asarray(z_edge, dtype=float) - np.asarray(y_edge, dtype=float))
    return float(r @ r) / (2.0 * sigma**2) + mismatch_penalty


def node_residuals(Z: EventGraph, Y: EventGraph) -> tuple[np.ndarray, np.ndarray]:
    """Squared-residual sums ss[i, j] of z_i against y_j, and matched sample counts."""
    zs, zmask = Z.segment_array()
    ys, ymask = Y.segment_array()
    if zs.shape[2] != ys.shape[2]:
        raise ValueError("graphs use different segment lengths")
    # (N, Pz, M, Py) per-segment squared distances
    cost = ((zs[:, :, None, None] - ys[None, None]) ** 2).sum(axis=(4, 5))
    N, M = len(Z), len(Y)
    ss = np.empty((N, M))
    counts = np.empty((N, M), dtype=int)
    L = zs.shape[2]
    for i in range(N):
        pz = int(zmask[i].sum())
        for j in range(M):
            py = int(ymask[j].sum())
            c = cost[i, :pz, j, :py]
            rows, cols = linear_sum_assignment(c)
            ss[i, j] = c[rows, cols].sum()
            counts[i, j] = len(rows) * L
    return ss, counts


def _edge_tensors(Z: EventGraph, Y: EventGraph):
    """Raw squared temporal and spatial residuals, shape (N, N, M, M), and type mismatch."""
    t_res = (Z.temporal[:, :, None, None] - Y.temporal[None, None]) ** 2
    s_res = ((Z.spatial[:, :, None, None, :] - Y.spatial[None, None]) ** 2).sum(axis=-1)
    mismatch = Z.simultaneous[:, :, None, None] != Y.simultaneous[None, None]
    return t_res, s_res, mismatch


def estimate_sigmas(Z: EventGraph, Y: EventGraph, floor: float = SIGMA_FLOOR) -> SigmaConfig:
    """Unsupervised sigmas: RMS residuals of each z node against its nearest y node.

    Edge sigmas use the edge residuals under that same nearest-node mapping.
    """
    ss, counts = node_residuals(Z, Y)
    return _sigmas_from_residuals(Z, Y, ss, counts, floor)


def _sigmas_from_residuals(Z, Y, ss, counts, floor=SIGMA_FLOOR) -> SigmaConfig:
    nearest = np.argmin(ss / counts, axis=1)
    rows = np.arange(len(Z))
    node = np.sqrt(ss[rows, nearest].sum() / counts[rows, nearest].sum())
    iu, ju = np.triu_indices(len(Z), 1)
    if len(iu):
        a, b = nearest[iu], nearest[ju]
        t_res = Z.temporal[iu, ju] - Y.temporal[a, b]
        s_res = ((Z.spatial[iu, ju] - Y.spatial[a, b]) ** 2).sum(axis=-1)
        temporal = np.sqrt(np.mean(t_res**2))
        spatial = np.sqrt(np.mean(s_res))
    else:
        temporal = spatial = 0.0
    return SigmaConfig(max(float(node), floor), max(float(temporal), floor), max(float(spatial), floor))


@dataclass
class PotentialTables:
    """Precomputed energies for matching N observed nodes onto M model nodes.

    ``unary[i, a]`` is the node energy of x_i = a (prior included) and
    ``pair[i, k, a, b]`` the total edge energy of (x_i, x_k) = (a, b); the
    pair tensor is symmetric under (i, k, a, b) -> (k, i, b, a) and zero
    on i == k.
    """

    unary: np.ndarray
    pair: np.ndarray
    z_intervals: list | None = None
    frame_span: float | None = None
    sigmas: SigmaConfig | None = None
    mismatch_penalty: float = 0.0

    def __post_init__(self):
        self.unary = np.asarray(self.unary, dtype=float)
        self.pair = np.asarray(self.pair, dtype=float)
        N, M = self.unary.shape
        if self.pair.shape != (N, N, M, M):
            raise ValueError(f"pair table has shape {self.pair.shape}, expected {(N, N, M, M)}")

    @property
    def N(self) -> int:
        return self.unary.shape[0]

    @property
    def M(self) -> int:
        return self.unary.shape[1]

    @classmethod
    def from_random(cls, rng, N, M, scale=1.0, pair_scale=1.0):
        """Random symmetric instance, for testing inference routines."""
        unary = rng.uniform(0, scale, size=(N, M))
        pair = np.zeros((N, N, M, M))
        for i in range(N):
            for k in range(i + 1, N):
                block = rng.uniform(0, pair_scale, size=(M, M))
                pair[i, k] = block
                pair[k, i] = block.T
        return cls(unary, pair)

    def energy(self, x) -> float:
        """U for one mapping, summing pair terms over i < k."""
        x = np.asarray(x, dtype=int)
        if x.shape != (self.N,):
            raise ValueError(f"mapping must have length {self.N}")
        if np.any(x < 0) or np.any(x >= self.M):
            raise ValueError("mapping entries out of range")
        u = float(self.unary[np.arange(self.N), x].sum())
        for i in range(self.N):
            for k in range(i + 1, self.N):
                u += self.pair[i, k, x[i], x[k]]
        return u

    def energies(self, X: np.ndarray) -> np.ndarray:
        """Vectorized U over a (B, N) batch of mappings."""
        X = np.asarray(X, dtype=int)
        u = self.unary[np.arange(self.N), X].sum(axis=1)
        for i in range(self.N):
            for k in range(i + 1, self.N):
                u = u + self.pair[i, k, X[:, i], X[:, k]]
        return u

    def permuted(self, z_perm=None, y_perm=None) -> "PotentialTables":
        z_perm = np.arange(self.N) if z_perm is None else np.asarray(z_perm)
        y_perm = np.arange(self.M) if y_perm is None else np.asarray(y_perm)
        unary = self.unary[np.ix_(z_perm, y_perm)]
        pair = self.pair[np.ix_(z_perm, z_perm, y_perm, y_perm)]
        ivs = None if self.z_intervals is None else [self.z_intervals[i] for i in z_perm]
        return PotentialTables(unary, pair, ivs, self.frame_span, self.sigmas, self.mismatch_penalty)


def mismatch_penalty_for(t_quad: np.ndarray, mismatch: np.ndarray, valid: np.ndarray) -> float:
    """Twice the largest same-type temporal potential of the instance."""
    same = valid & ~mismatch
    pool = t_quad[same] if np.any(same) else t_quad[valid]
    return 2.0 * float(pool.max()) if pool.size else 0.0


def potential_tables(
    Z: EventGraph,
    Y: EventGraph,
    sigmas: SigmaConfig | str | None = None,
    prior_node: np.ndarray | None = None,
    prior_pair: np.ndarray | None = None,
) -> PotentialTables:
    """Tabulate every node and pair energy for matching Z onto Y.

    ``sigmas`` is a SigmaConfig, ``"graph"`` for the model graph's own
    sigmas, or None / ``"estimate"`` for the unsupervised estimate.  The
    optional priors are energies over model nodes, shape (M,) and (M, M);
    they default to zero (uniform prior).
    """
    ss, counts = node_residuals(Z, Y)
    if sigmas is None or sigmas == "estimate":
        sigmas = _sigmas_from_residuals(Z, Y, ss, counts)
    elif sigmas == "graph":
        sigmas = Y.sigmas
    return _tables_from_parts(Z, Y, ss, sigmas, prior_node, prior_pair)


def _tables_from_parts(Z, Y, ss, sigmas, prior_node=None, prior_pair=None) -> PotentialTables:
    N, M = len(Z), len(Y)
    node_sigma = Y.node_sigma if Y.node_sigma is not None else np.full(M, sigmas.node)
    unary = ss / (2.0 * np.asarray(node_sigma)[None, :] ** 2)
    if prior_node is not None:
        unary = unary + np.asarray(prior_node, dtype=float)[None, :]

    t_res, s_res, mismatch = _edge_tensors(Z, Y)
    t_quad = t_res / (2.0 * sigmas.temporal**2)
    s_quad = s_res / (2.0 * sigmas.spatial**2)
    valid = ~np.eye(N, dtype=bool)[:, :, None, None] & np.ones((1, 1, M, M), dtype=bool)
    lam = mismatch_penalty_for(t_quad, mismatch, valid)
    pair = t_quad + s_quad + lam * mismatch
    if prior_pair is not None:
        pair = pair + np.asarray(prior_pair, dtype=float)[None, None]
    pair[np.arange(N), np.arange(N)] = 0.0
    return PotentialTables(unary, pair, Z.intervals, Z.frame_span, sigmas, lam)


def joint_energy(Z: EventGraph, X, Y: EventGraph, sigmas: SigmaConfig | str | None = None) -> float:
    """U(Z, X | Y) for a single mapping under the uniform prior."""
    x = np.asarray(X, dtype=int)
    if x.shape != (len(Z),):
        raise ValueError(f"mapping length {x.shape} does not match {len(Z)} observed nodes")
    return potential_tables(Z, Y, sigmas).energy(x)
