"""Query-by-Example over a set of scenes: similarity matrices and k-NN votes."""

from __future__ import annotations

import logging
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .inference import similarity
from .model import EventGraph, SigmaConfig, _sigmas_from_residuals, _tables_from_parts, build_graph, node_residuals
from .segmentation import EmbeddingConfig, SegmentationConfig, segment_scene
from .traj import Scene, normalize_scene

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetItem:
    id: str
    label: str | None
    graph: EventGraph
    source: str | None = None


@dataclass
class Dataset:
    items: list[DatasetItem]

    def __post_init__(self):
        ids = [it.id for it in self.items]
        if len(set(ids)) != len(ids):
            raise ValueError("dataset ids must be unique")

    def __len__(self):
        return len(self.items)

    @property
    def labels(self) -> list:
        return [it.label for it in self.items]

    @property
    def ids(self) -> list:
        return [it.id for it in self.items]


@dataclass(frozen=True)
class MatchConfig:
    """Settings for turning scenes into graphs and graphs into similarities.

    ``sigma_mode`` picks the noise deviations: ``"query"`` pools the
    unsupervised estimate over every candidate of a query (so a row of the
    similarity matrix shares one scale), ``"pair"`` estimates per pair and
    ``"fixed"`` uses ``sigmas``.
    """

    method: str = "icm"
    sigma_mode: str = "query"
    sigmas: SigmaConfig = SigmaConfig()
    neighborhood: str = "dense"
    theta: float | None = None
    max_sweeps: int = 50
    max_iters: int = 200
    tol: float = 1e-8
    budget: int = 10**7
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    seed: int = 0

    def method_kwargs(self) -> dict:
        if self.method == "icm":
            return {"max_sweeps": self.max_sweeps, "neighborhood": self.neighborhood, "theta": self.theta}
        if self.method == "meanfield":
            return {"max_iters": self.max_iters, "tol": self.tol}
        if self.method == "exact":
            return {"budget": self.budget}
        raise ValueError(f"unknown method {self.method!r}")


@dataclass
class ConfusionMatrix:
    labels: list
    rows: np.ndarray

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "rows": [[float(v) for v in r] for r in self.rows]}


def scene_graph(scene: Scene, cfg: MatchConfig = MatchConfig()) -> EventGraph:
    """Normalize, segment and build the event graph of one scene."""
    norm = scene if scene.normalized else normalize_scene(scene)
    motions = segment_scene(norm, cfg.embedding, cfg.segmentation, cfg.seed)
    return build_graph(motions, cfg.sigmas, norm.frame_range)


def pooled_sigmas(query: EventGraph, candidates, floor: float = 1e-3):
    """Median over candidates of the per-pair unsupervised sigma estimates.

    Returns the pooled SigmaConfig and the node residual tables so they are
    not recomputed.
    """
    parts, estimates = [], []
    for y in candidates:
        ss, counts = node_residuals(query, y)
        parts.append(ss)
        estimates.append(_sigmas_from_residuals(query, y, ss, counts, floor))
    arr = np.array([[s.node, s.temporal, s.spatial] for s in estimates])
    med = np.median(arr, axis=0)
    return SigmaConfig(*(max(float(v), floor) for v in med)), parts


def similarity_row(query: EventGraph, candidates, cfg: MatchConfig = MatchConfig()) -> np.ndarray:
    """log p(query | candidate) for every candidate; NaN where inference failed."""
    candidates = list(candidates)
    out = np.full(len(candidates), np.nan)
    if cfg.sigma_mode == "query":
        sig, residuals = pooled_sigmas(query, candidates)
    else:
        residuals = [node_residuals(query, y)[0] for y in candidates]
    kwargs = cfg.method_kwargs()
    for j, y in enumerate(candidates):
        if cfg.sigma_mode == "pair":
            sig = _sigmas_from_residuals(query, y, *node_residuals(query, y))
        elif cfg.sigma_mode == "fixed":
            sig = cfg.sigmas
        elif cfg.sigma_mode != "query":
            raise ValueError(f"unknown sigma_mode {cfg.sigma_mode!r}")
        tables = _tables_from_parts(query, y, residuals[j], sig)
        try:
            out[j] = similarity(tables, method=cfg.method, **kwargs).log_similarity
        except ValueError as exc:
            log.warning("similarity failed for candidate %d: %s", j, exc)
    return out


def _row_task(args):
    i, queries, models, cfg = args
    others = [j for j in range(len(models)) if j != i]
    row = np.full(len(models), np.nan)
    row[others] = similarity_row(queries[i], [models[j] for j in others], cfg)
    return row


def similarity_matrix(dataset: Dataset, cfg: MatchConfig = MatchConfig(), queries=None,
                      jobs: int | None = 1) -> np.ndarray:
    """S[i, j] = log p(Z_i | Y_j) with item i as observation and j as model.

    The diagonal is NaN.  ``queries`` optionally replaces the observation
    graphs (e.g. partially observed versions of the same items).  Rows are
    computed independently, so the result does not depend on ``jobs``.
    """
    if len(dataset) < 2:
        raise ValueError("need at least two items")
    models = [it.graph for it in dataset.items]
    obs = models if queries is None else list(queries)
    if len(obs) != len(models):
        raise ValueError("queries must align with dataset items")
    tasks = [(i, obs, models, cfg) for i in range(len(models))]
    jobs = jobs or os.cpu_count() or 1
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_row_task, tasks))
    else:
        rows = [_row_task(t) for t in tasks]
    return np.vstack(rows)


def knn_classify(query_row, labels, k: int = 2):
    """Majority label of the k most similar labelled candidates.

    A tie between labels goes to the tied label owning the single most
    similar member.  NaN entries and unlabelled candidates are ignored.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    row = np.asarray(query_row, dtype=float)
    cand = [j for j in range(len(row)) if labels[j] is not None and not np.isnan(row[j])]
    if not cand:
        raise ValueError("no labelled candidates")
    if len(cand) < k:
        raise ValueError(f"need at least k={k} labelled candidates")
    # stable order: higher similarity first, then lower index
    cand.sort(key=lambda j: (-row[j], j))
    top = cand[:k]
    votes = Counter(labels[j] for j in top)
    best = max(votes.values())
    for j in top:
        if votes[labels[j]] == best:
            return labels[j]


def rank_candidates(query_row, ids, k: int | None = None) -> list[tuple]:
    """(id, similarity) pairs sorted from most to least similar."""
    row = np.asarray(query_row, dtype=float)
    order = sorted((j for j in range(len(row)) if not np.isnan(row[j])), key=lambda j: (-row[j], j))
    ranked = [(ids[j], float(row[j])) for j in order]
    return ranked if k is None else ranked[:k]


def confusion_from_predictions(truth, predicted, labels=None) -> ConfusionMatrix:
    labels = sorted(set(truth)) if labels is None else list(labels)
    index = {l: i for i, l in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)))
    for t, p in zip(truth, predicted):
        if p in index:
            counts[index[t], index[p]] += 1
    totals = counts.sum(axis=1, keepdims=True)
    rows = np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)
    return ConfusionMatrix(labels, rows)


def leave_one_out(dataset: Dataset, cfg: MatchConfig = MatchConfig(), k: int = 2, queries=None,
                  jobs: int | None = 1, matrix: np.ndarray | None = None):
    """Classify every item against all the others with the k-NN rule.

    Returns (confusion, accuracy, predictions, matrix).
    """
    labels = dataset.labels
    counts = Counter(l for l in labels if l is not None)
    short = [l for l, c in counts.items() if c < k + 1]
    if short:
        raise ValueError(f"labels {sorted(short)} have fewer than k+1={k + 1} items")
    S = similarity_matrix(dataset, cfg, queries, jobs) if matrix is None else np.asarray(matrix, dtype=float)
    truth, predicted = [], []
    for i, label in enumerate(labels):
        if label is None:
            continue
        row = S[i].copy()
        row[i] = np.nan
        truth.append(label)
        predicted.append(knn_classify(row, labels, k))
    accuracy = float(np.mean([t == p for t, p in zip(truth, predicted)]))
    return confusion_from_predictions(truth, predicted, sorted(counts)), accuracy, predicted, S
