"""Command-line front end: segment, match, oracle, classify, query, synth.

JSON goes to stdout (or ``--output``); human-readable notes go to stderr.
Exit codes: 0 ok, 2 input error, 3 exact-inference budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .inference import BudgetExceeded, similarity
from .io import InputError, dumps, motions_to_json, read_manifest, read_scene_csv, write_manifest, write_scene_csv
from .model import SigmaConfig, build_graph, potential_tables
from .retrieval import Dataset, DatasetItem, MatchConfig, knn_classify, leave_one_out, rank_candidates, similarity_row
from .segmentation import EmbeddingConfig, SegmentationConfig, segment_scene
from .synth import BENCHMARK_NOISE, standard_benchmark
from .traj import normalize_scene

log = logging.getLogger("trajmatch")

EXIT_INPUT = 2
EXIT_BUDGET = 3

DEFAULTS = {
    "seed": 0,
    # segmentation
    "clusters": None,
    "d": 3,
    "knn": 8,
    "feature_len": 32,
    "heat_sigma": None,
    "smooth_window": 5,
    "prominence": None,
    "min_segment": 8,
    "l_atom": 16,
    # matching
    "method": "icm",
    "sigma_mode": "query",
    "sigma_node": 0.05,
    "sigma_temporal": 5.0,
    "sigma_spatial": 0.1,
    "neighborhood": "dense",
    "theta": None,
    "max_sweeps": 50,
    "max_iters": 200,
    "tol": 1e-8,
    "budget": 10**7,
    # retrieval
    "neighbors": 2,
    "top": 5,
    # synth
    "preset": "benchmark",
    "noise": BENCHMARK_NOISE,
    "drop_entities": 0,
}

SEGMENT_KEYS = ["seed", "clusters", "d", "knn", "feature_len", "heat_sigma", "smooth_window", "prominence",
                "min_segment", "l_atom"]
MATCH_KEYS = SEGMENT_KEYS + ["method", "sigma_mode", "sigma_node", "sigma_temporal", "sigma_spatial",
                             "neighborhood", "theta", "max_sweeps", "max_iters", "tol", "budget"]
COMMAND_KEYS = {
    "segment": SEGMENT_KEYS,
    "match": MATCH_KEYS,
    "oracle": [k for k in MATCH_KEYS if k not in ("method", "neighborhood", "theta", "max_sweeps",
                                                   "max_iters", "tol")],
    "classify": MATCH_KEYS + ["neighbors"],
    "query": MATCH_KEYS + ["top"],
    "synth": ["seed", "preset", "noise", "drop_entities"],
}


def _add_segment_flags(p):
    g = p.add_argument_group("segmentation")
    g.add_argument("--clusters", type=int, help="k-means cluster count (default: from entity count)")
    g.add_argument("--d", type=int, help="embedding dimension (default 3)")
    g.add_argument("--knn", type=int, help="affinity graph neighbours (default 8)")
    g.add_argument("--feature-len", type=int, help="resample length of embedding features (default 32)")
    g.add_argument("--heat-sigma", type=float, help="heat kernel width (default: median distance)")
    g.add_argument("--smooth-window", type=int, help="curvature smoothing window (default 5)")
    g.add_argument("--prominence", type=float, help="absolute peak prominence (default: 0.25 x max)")
    g.add_argument("--min-segment", type=int, help="minimum frames per atomic motion (default 8)")
    g.add_argument("--l-atom", type=int, help="samples per atomic-motion segment (default 16)")


def _add_match_flags(p, method=True):
    _add_segment_flags(p)
    g = p.add_argument_group("matching")
    if method:
        g.add_argument("--method", choices=["exact", "meanfield", "icm"], help="inference method (default icm)")
        g.add_argument("--neighborhood", choices=["dense", "sparse"], help="ICM neighbourhood (default dense)")
        g.add_argument("--theta", type=float, help="sparse neighbourhood threshold in frames")
        g.add_argument("--max-sweeps", type=int, help="ICM sweep limit (default 50)")
        g.add_argument("--max-iters", type=int, help="mean-field iteration limit (default 200)")
        g.add_argument("--tol", type=float, help="mean-field tolerance (default 1e-8)")
    g.add_argument("--sigma-mode", choices=["query", "pair", "fixed"], help="noise deviation source")
    g.add_argument("--sigma-node", type=float, help="fixed node sigma")
    g.add_argument("--sigma-temporal", type=float, help="fixed temporal sigma")
    g.add_argument("--sigma-spatial", type=float, help="fixed spatial sigma")
    g.add_argument("--budget", type=int, help="exact enumeration budget (default 1e7)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="master random seed (default 0)")
    common.add_argument("--config", type=Path, help="JSON file of defaults; flags override it")
    common.add_argument("-o", "--output", type=Path, help="write JSON here instead of stdout")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="trajmatch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", parents=[common], help="split a trajectory CSV into atomic motions")
    p.add_argument("input", type=Path)
    _add_segment_flags(p)
    p.add_argument("--k", dest="clusters", type=int, help="alias of --clusters")

    p = sub.add_parser("match", parents=[common], help="similarity of a query scene to a model scene")
    p.add_argument("query", type=Path)
    p.add_argument("model", type=Path)
    _add_match_flags(p)

    p = sub.add_parser("oracle", parents=[common], help="exact log similarity by enumeration")
    p.add_argument("query", type=Path)
    p.add_argument("model", type=Path)
    _add_match_flags(p, method=False)

    p = sub.add_parser("classify", parents=[common], help="leave-one-out k-NN over a manifest")
    p.add_argument("manifest", help="label<TAB>path lines, or '-' for stdin")
    _add_match_flags(p)
    p.add_argument("--k", dest="neighbors", type=int, help="neighbours voting (default 2)")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")

    p = sub.add_parser("query", parents=[common], help="rank manifest items by similarity to one scene")
    p.add_argument("query", type=Path)
    p.add_argument("manifest", help="label<TAB>path lines, or '-' for stdin")
    _add_match_flags(p)
    p.add_argument("--k", dest="top", type=int, help="number of results (default 5)")

    p = sub.add_parser("synth", parents=[common], help="write a synthetic benchmark as CSV + manifest")
    p.add_argument("--preset", choices=["benchmark"])
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--noise", type=float, help="noise sigma in normalized units (default 0.005)")
    p.add_argument("--drop-entities", type=int, help="remove n random entities from every scene")
    return parser


def effective_config(args) -> dict:
    """Defaults, then the --config file, then explicit flags."""
    cfg = dict(DEFAULTS)
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config: {exc}", args.config) from None
        if not isinstance(loaded, dict):
            raise InputError("config must be a JSON object", args.config)
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise InputError(f"unknown config keys {sorted(unknown)}", args.config)
        cfg.update(loaded)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return {k: cfg[k] for k in COMMAND_KEYS[args.command]}


def match_config(cfg: dict) -> MatchConfig:
    get = lambda key: cfg.get(key, DEFAULTS[key])  # noqa: E731
    return MatchConfig(
        method=get("method"),
        sigma_mode=get("sigma_mode"),
        sigmas=SigmaConfig(get("sigma_node"), get("sigma_temporal"), get("sigma_spatial")),
        neighborhood=get("neighborhood"),
        theta=get("theta"),
        max_sweeps=get("max_sweeps"),
        max_iters=get("max_iters"),
        tol=get("tol"),
        budget=get("budget"),
        embedding=EmbeddingConfig(get("feature_len"), get("knn"), get("heat_sigma"), get("d")),
        segmentation=SegmentationConfig(get("clusters"), get("smooth_window"), get("prominence"),
                                        min_segment=get("min_segment"), l_atom=get("l_atom")),
        seed=get("seed"),
    )


def _graph_of(path, mcfg: MatchConfig):
    scene = normalize_scene(read_scene_csv(path))
    motions = segment_scene(scene, mcfg.embedding, mcfg.segmentation, mcfg.seed)
    return build_graph(motions, mcfg.sigmas, scene.frame_range)


def _load_dataset(manifest, mcfg):
    stream = sys.stdin if manifest == "-" else None
    entries = read_manifest(manifest, stream)
    ids = [p.stem for _, p in entries]
    if len(set(ids)) != len(ids):
        ids = [str(p) for _, p in entries]
    items = [DatasetItem(i, label, _graph_of(p, mcfg), str(p)) for i, (label, p) in zip(ids, entries)]
    return Dataset(items)


def _report(query_graph, model_graph, mcfg: MatchConfig, method: str) -> dict:
    if mcfg.sigma_mode == "fixed":
        sig = mcfg.sigmas
        tables = potential_tables(query_graph, model_graph, sig)
    else:
        tables = potential_tables(query_graph, model_graph)
        sig = tables.sigmas
    kwargs = MatchConfig(method=method, neighborhood=mcfg.neighborhood, theta=mcfg.theta,
                         max_sweeps=mcfg.max_sweeps, max_iters=mcfg.max_iters, tol=mcfg.tol,
                         budget=mcfg.budget).method_kwargs()
    rep = similarity(tables, method=method, **kwargs).to_dict()
    rep.update(n_observed=tables.N, n_model=tables.M,
               sigmas={"node": sig.node, "temporal": sig.temporal, "spatial": sig.spatial})
    return rep


def cmd_segment(args, cfg):
    mcfg = match_config(cfg)
    scene = normalize_scene(read_scene_csv(args.input))
    motions = segment_scene(scene, mcfg.embedding, mcfg.segmentation, mcfg.seed)
    log.info("%d atomic motions from %d trajectories", len(motions), len(scene.trajectories()))
    return {"config": cfg, "frame_range": list(scene.frame_range), "motions": motions_to_json(motions)}


def cmd_match(args, cfg):
    mcfg = match_config(cfg)
    out = _report(_graph_of(args.query, mcfg), _graph_of(args.model, mcfg), mcfg, cfg["method"])
    out["config"] = cfg
    return out


def cmd_oracle(args, cfg):
    mcfg = match_config(cfg)
    out = _report(_graph_of(args.query, mcfg), _graph_of(args.model, mcfg), mcfg, "exact")
    out["config"] = cfg
    return out


def cmd_classify(args, cfg):
    mcfg = match_config(cfg)
    ds = _load_dataset(args.manifest, mcfg)
    jobs = args.jobs or os.cpu_count() or 1
    conf, acc, pred, S = leave_one_out(ds, mcfg, k=cfg["neighbors"], jobs=jobs)
    log.info("accuracy %.3f over %d items", acc, len(ds))
    return {
        "config": cfg,
        "ids": ds.ids,
        "labels": ds.labels,
        "predictions": pred,
        "matrix": S,
        "confusion": conf.to_dict(),
        "accuracy": acc,
    }


def cmd_query(args, cfg):
    mcfg = match_config(cfg)
    ds = _load_dataset(args.manifest, mcfg)
    row = similarity_row(_graph_of(args.query, mcfg), [it.graph for it in ds.items], mcfg)
    ranked = rank_candidates(row, ds.ids, cfg["top"])
    labels = dict(zip(ds.ids, ds.labels))
    out = {"config": cfg, "results": [{"id": i, "label": labels[i], "log_similarity": s} for i, s in ranked]}
    if any(l is not None for l in ds.labels):
        out["predicted_label"] = knn_classify(row, ds.labels, min(cfg["top"], len(ds), 2))
    return out


def cmd_synth(args, cfg):
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    items = standard_benchmark(cfg["seed"], drop_entities=cfg["drop_entities"], noise_sigma=cfg["noise"])
    entries = []
    for it in items:
        path = (out_dir / f"{it.id}.csv").resolve()
        write_scene_csv(it.scene, path)
        entries.append((it.label, path))
    write_manifest(entries, out_dir / "manifest.tsv")
    log.info("wrote %d scenes to %s", len(items), out_dir)
    return "".join(f"{label}\t{path}\n" for label, path in entries)


COMMANDS = {
    "segment": cmd_segment,
    "match": cmd_match,
    "oracle": cmd_oracle,
    "classify": cmd_classify,
    "query": cmd_query,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = effective_config(args)
        result = COMMANDS[args.command](args, cfg)
    except BudgetExceeded as exc:
        print(f"error: {exc}; try --method icm", file=sys.stderr)
        return EXIT_BUDGET
    except (InputError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = result if isinstance(result, str) else dumps(result)
    if args.output is not None:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
