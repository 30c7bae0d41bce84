"""Joint segmentation of a scene's trajectories into atomic motions.

Trajectories are vectorized, embedded with Laplacian eigenmaps, grouped by
k-means, and each group is cut at the local maxima of its aggregated
curvature.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg
from scipy.signal import find_peaks
from scipy.spatial.distance import cdist, pdist, squareform

from .traj import DEFAULT_L_ATOM, AtomicMotion, Scene, curvature, resample_between, resample_uniform


@dataclass(frozen=True)
class EmbeddingConfig:
    feature_len: int = 32
    knn: int = 8
    heat_sigma: float | None = None  # None: median pairwise feature distance
    d: int = 3

    def __post_init__(self):
        if self.d < 1 or self.knn < 1 or self.feature_len < 4:
            raise ValueError("need d >= 1, knn >= 1 and feature_len >= 4")


@dataclass(frozen=True)
class SegmentationConfig:
    k: int | None = None  # None: chosen from the number of entities
    smooth_window: int = 5
    prominence: float | None = None  # None: 0.25 x max of the smoothed curvature
    prominence_fraction: float = 0.25
    min_segment: int = 8
    l_atom: int = DEFAULT_L_ATOM
    n_init: int = 10
    noise_floor: float = 1e-9  # smoothed curvature below this is treated as straight motion

    def __post_init__(self):
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.min_segment < 2:
            raise ValueError("min_segment must be >= 2")


@dataclass(frozen=True)
class MotionCluster:
    members: tuple
    cut_points: tuple[int, ...]


def default_k(n_entities: int) -> int:
    """Cluster count: 5 for a single entity, else entity count snapped to 3, 5 or 7."""
    if n_entities <= 1:
        return 5
    # ties go to the larger count
    return min((3, 5, 7), key=lambda c: (abs(c - n_entities), -c))


def trajectory_features(scene: Scene, cfg: EmbeddingConfig = EmbeddingConfig()) -> np.ndarray:
    """One row per trajectory: its resampled x coordinates followed by y."""
    rows = [resample_uniform(t, cfg.feature_len).T.reshape(-1) for t in scene.trajectories()]
    return np.vstack(rows)


def _stitch_components(W: np.ndarray, dist: np.ndarray) -> np.ndarray:
    """Join disconnected parts of an affinity graph by their nearest cross pair."""
    from scipy.sparse.csgraph import connected_components

    while True:
        n_comp, labels = connected_components(W > 0, directed=False)
        if n_comp == 1:
            return W
        inside = labels == labels[0]
        sub = dist[np.ix_(inside, ~inside)]
        i, j = np.unravel_index(np.argmin(sub), sub.shape)
        i = np.flatnonzero(inside)[i]
        j = np.flatnonzero(~inside)[j]
        # heat weight may underflow for far components; keep the edge alive
        W[i, j] = W[j, i] = max(W[i, j], 1e-12)


def laplacian_embedding(features: np.ndarray, cfg: EmbeddingConfig = EmbeddingConfig()) -> np.ndarray:
    """Laplacian eigenmap of the feature rows, returning a (T, d) matrix.

    Solves L v = lambda D v on a symmetric kNN graph with heat-kernel weights
    and drops the constant eigenvector.
    """
    X = np.asarray(features, dtype=float)
    T = len(X)
    if T < cfg.d + 1:
        raise ValueError(f"need at least d+1={cfg.d + 1} trajectories, got {T}")
    dist = squareform(pdist(X))
    sigma = cfg.heat_sigma
    if sigma is None:
        off = dist[np.triu_indices(T, 1)]
        sigma = float(np.median(off)) if len(off) else 1.0
    if sigma <= 0:
        sigma = 1.0

    knn = min(cfg.knn, T - 1)
    # stable sort so that tied distances pick neighbours by index
    order = np.argsort(dist, axis=1, kind="stable")
    mask = np.zeros((T, T), dtype=bool)
    rows = np.repeat(np.arange(T), knn)
    mask[rows, order[:, 1 : knn + 1].reshape(-1)] = True
    mask |= mask.T
    np.fill_diagonal(mask, False)

    W = np.where(mask, np.exp(-(dist**2) / sigma**2), 0.0)
    W = _stitch_components(W, dist)
    deg = W.sum(axis=1)
    # isolated-by-underflow rows get a tiny self degree to keep D positive definite
    deg = np.maximum(deg, 1e-12)
    L = np.diag(deg) - W
    _, vecs = linalg.eigh(L, np.diag(deg))
    emb = vecs[:, 1 : cfg.d + 1]
    # fix the eigenvector sign: largest-magnitude entry positive
    idx = np.argmax(np.abs(emb), axis=0)
    signs = np.sign(emb[idx, np.arange(emb.shape[1])])
    signs[signs == 0] = 1.0
    return emb * signs


def _kmeans_pp(X, k, rng):
    n = len(X)
    centers = [X[rng.integers(n)]]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers.append(X[idx])
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _lloyd(X, centers, max_iter=300):
    k = len(centers)
    labels = np.full(len(X), -1)
    for _ in range(max_iter):
        d2 = cdist(X, centers, "sqeuclidean")
        new = np.argmin(d2, axis=1)
        # refill empty clusters with the point farthest from its centre
        for c in range(k):
            if not np.any(new == c):
                far = np.argmax(d2[np.arange(len(X)), new])
                new[far] = c
                d2[far] = 0.0
        if np.array_equal(new, labels):
            break
        labels = new
        centers = np.array([X[labels == c].mean(axis=0) for c in range(k)])
    inertia = float(((X - centers[labels]) ** 2).sum())
    return labels, inertia


def cluster_motions(embedding: np.ndarray, cfg: SegmentationConfig, seed: int = 0) -> np.ndarray:
    """k-means with k-means++ seeding; labels are renumbered by first appearance."""
    X = np.asarray(embedding, dtype=float)
    k = cfg.k if cfg.k is not None else 5
    if len(X) < k:
        raise ValueError(f"cannot form {k} clusters from {len(X)} trajectories")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, cfg.n_init)):
        labels, inertia = _lloyd(X, _kmeans_pp(X, k, rng))
        if best is None or inertia < best[1] - 1e-12:
            best = (labels, inertia)
    labels = best[0]
    _, first = np.unique(labels, return_index=True)
    remap = {old: new for new, old in enumerate(labels[np.sort(first)])}
    return np.array([remap[v] for v in labels])


def aggregated_curvature(scene: Scene, cluster) -> tuple[np.ndarray, int]:
    """Per-frame sum of member curvatures over the shared frame span.

    Returns the summed sequence and the frame of its first element.
    """
    tmap = scene.trajectory_map()
    members = [tmap[m] for m in cluster]
    if not members:
        raise ValueError("empty cluster")
    start = max(t.frames[0] for t in members)
    end = min(t.frames[-1] for t in members)
    if end <= start:
        raise ValueError("cluster members share no frames")
    total = np.zeros(end - start + 1)
    for t in members:
        k = curvature(t)
        total += k[start - t.frames[0] : end - t.frames[0] + 1]
    return total, int(start)


def moving_average(seq, window: int) -> np.ndarray:
    """Centered moving average with edge padding.

    Computed by direct convolution rather than a running sum, so a flat
    plateau around an isolated spike stays exactly flat and its peak lands
    in the middle.
    """
    seq = np.asarray(seq, dtype=float)
    if window <= 1:
        return seq.copy()
    padded = np.pad(seq, (window // 2, window - 1 - window // 2), mode="edge")
    return np.convolve(padded, np.full(window, 1.0 / window), mode="valid")


def detect_cut_points(agg, cfg: SegmentationConfig = SegmentationConfig(), start_frame: int = 0) -> list[int]:
    """Frames of prominent local maxima of the smoothed aggregated curvature.

    Peaks are found on the smoothed sequence, located at the raw maximum
    within half a window, and kept greedily by decreasing prominence so that no two cuts,
    and no cut and a sequence end, are closer than ``min_segment`` frames.
    """
    agg = np.asarray(agg, dtype=float)
    n = len(agg)
    if n < 2 * cfg.smooth_window:
        raise ValueError("sequence shorter than twice the smoothing window")
    smooth = moving_average(agg, cfg.smooth_window)
    peak_max = smooth.max()
    if peak_max <= cfg.noise_floor:
        return []
    threshold = cfg.prominence if cfg.prominence is not None else cfg.prominence_fraction * peak_max
    peaks, props = find_peaks(smooth, prominence=max(threshold, 1e-300))
    kept: list[int] = []
    half = cfg.smooth_window // 2
    for idx in np.argsort(-props["prominences"], kind="stable"):
        p = int(peaks[idx])
        # smoothing flattens an isolated spike into a plateau; put the cut on
        # the raw maximum under it
        lo, hi = max(p - half, 0), min(p + half + 1, n)
        p = lo + int(np.argmax(agg[lo:hi]))
        if p < cfg.min_segment or p > n - 1 - cfg.min_segment:
            continue
        if all(abs(p - q) >= cfg.min_segment for q in kept):
            kept.append(p)
    return sorted(start_frame + p for p in kept)


def segment_scene(
    scene: Scene,
    emb_cfg: EmbeddingConfig = EmbeddingConfig(),
    seg_cfg: SegmentationConfig = SegmentationConfig(),
    seed: int = 0,
    return_clusters: bool = False,
):
    """Split a normalized scene into atomic motions.

    Trajectories are put in a content-defined order first, so the result does
    not depend on entity or landmark order in the input.  Each cluster is cut
    at its own cut points; a cluster without cuts yields one motion spanning
    its whole span.  Motions are returned sorted by (start, end, centroid).
    """
    if not scene.normalized:
        raise ValueError("segment_scene expects a normalized scene")
    ids = scene.trajectory_ids()
    feats = trajectory_features(scene, emb_cfg)
    order = np.lexsort(feats.T[::-1])
    ids = [ids[i] for i in order]
    feats = feats[order]

    k = seg_cfg.k if seg_cfg.k is not None else default_k(scene.n_entities)
    k = min(k, len(ids))
    if k == 1:
        labels = np.zeros(len(ids), dtype=int)
    else:
        emb = laplacian_embedding(feats, replace(emb_cfg, d=min(emb_cfg.d, len(ids) - 1)))
        labels = cluster_motions(emb, replace(seg_cfg, k=k), seed)

    tmap = scene.trajectory_map()
    motions: list[AtomicMotion] = []
    clusters: list[MotionCluster] = []
    for c in range(labels.max() + 1):
        members = [ids[i] for i in np.flatnonzero(labels == c)]
        cuts: list[int] = []
        try:
            agg, f0 = aggregated_curvature(scene, members)
            if len(agg) >= 2 * seg_cfg.smooth_window:
                cuts = detect_cut_points(agg, seg_cfg, f0)
        except ValueError:
            pass
        clusters.append(MotionCluster(tuple(members), tuple(cuts)))
        lo = min(tmap[m].frames[0] for m in members)
        hi = max(tmap[m].frames[-1] for m in members)
        bounds = [lo, *cuts, hi]
        for s, e in zip(bounds[:-1], bounds[1:]):
            segs, used = [], []
            for m in members:
                t = tmap[m]
                a, b = max(s, t.frames[0]), min(e, t.frames[-1])
                if b > a:
                    segs.append(resample_between(t, a, b, seg_cfg.l_atom))
                    used.append(m)
            if segs:
                motions.append(AtomicMotion(np.stack(segs), (int(s), int(e)), tuple(used), c))

    motions.sort(key=lambda m: (m.interval[0], m.interval[1], m.centroid[0], m.centroid[1]))
    if return_clusters:
        return motions, clusters
    return motions
