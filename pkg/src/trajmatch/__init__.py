"""Semantic similarity between multi-entity trajectory scenes."""

__version__ = "0.1.0"

from .inference import (
    BudgetExceeded,
    SimilarityReport,
    exact_log_similarity,
    icm_match,
    meanfield_similarity,
    posterior_optimality,
    similarity,
)
from .model import EventGraph, PotentialTables, SigmaConfig, build_graph, potential_tables
from .relations import classify_intervals
from .retrieval import Dataset, DatasetItem, MatchConfig, knn_classify, leave_one_out, scene_graph, similarity_matrix
from .segmentation import EmbeddingConfig, SegmentationConfig, segment_scene
from .traj import AtomicMotion, EntityTrack, Scene, Trajectory, curvature, normalize_scene, spatiotemporal_curvature

__all__ = [
    "AtomicMotion", "BudgetExceeded", "Dataset", "DatasetItem", "EmbeddingConfig", "EntityTrack", "EventGraph",
    "MatchConfig", "PotentialTables", "Scene", "SegmentationConfig", "SigmaConfig", "SimilarityReport",
    "Trajectory", "build_graph", "classify_intervals", "curvature", "exact_log_similarity", "icm_match",
    "knn_classify", "leave_one_out", "meanfield_similarity", "normalize_scene", "posterior_optimality",
    "potential_tables", "scene_graph", "segment_scene", "similarity", "similarity_matrix",
    "spatiotemporal_curvature",
]
