"""Trajectory CSV, manifest TSV and JSON helpers."""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from pathlib import Path

import numpy as np

from .traj import EntityTrack, Scene, Trajectory

CSV_HEADER = ["entity_id", "point_id", "frame", "x", "y"]


class InputError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f", line {line}"
            where += ": "
        super().__init__(where + message)


def read_scene_csv(path) -> Scene:
    """Load a scene from ``entity_id,point_id,frame,x,y`` rows (any order)."""
    path = Path(path)
    samples: dict = defaultdict(lambda: defaultdict(list))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CSV_HEADER:
            raise InputError(f"expected header {','.join(CSV_HEADER)}", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5:
                raise InputError(f"expected 5 fields, got {len(row)}", path, lineno)
            ent, pid, frame, x, y = (c.strip() for c in row)
            try:
                f = int(frame)
                xv, yv = float(x), float(y)
            except ValueError:
                raise InputError(f"bad number in row {row!r}", path, lineno) from None
            if not (math.isfinite(xv) and math.isfinite(yv)):
                raise InputError("non-finite coordinate", path, lineno)
            samples[ent][pid].append((f, xv, yv, lineno))
    if not samples:
        raise InputError("no samples", path)

    tracks = []
    for ent in sorted(samples):
        trajs = []
        for pid in sorted(samples[ent]):
            rows = sorted(samples[ent][pid])
            frames = [r[0] for r in rows]
            for a, b in zip(rows[:-1], rows[1:]):
                if a[0] == b[0]:
                    raise InputError(f"duplicate frame {b[0]} for point {ent}/{pid}", path, b[3])
            if len(frames) < 2:
                raise InputError(f"point {ent}/{pid} has fewer than 2 samples", path, rows[0][3])
            trajs.append(Trajectory(pid, frames, [(r[1], r[2]) for r in rows]))
        tracks.append(EntityTrack(ent, tuple(trajs)))
    return Scene(tuple(tracks))


def write_scene_csv(scene: Scene, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for track in scene.tracks:
            for t in track.trajectories:
                for f, (x, y) in zip(t.frames, t.xy):
                    w.writerow([track.entity_id, t.point_id, int(f), repr(float(x)), repr(float(y))])


def read_manifest(path, stream=None) -> list[tuple[str | None, Path]]:
    """Parse ``label<TAB>path`` lines; relative paths resolve against the manifest's folder.

    An empty label means unlabelled.  Pass ``stream`` to read from an open file.
    """
    base = Path.cwd() if stream is not None else Path(path).resolve().parent
    fh = stream if stream is not None else open(path)
    entries = []
    try:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[1].strip():
                raise InputError("expected 'label<TAB>path'", path, lineno)
            label, item = parts[0].strip() or None, Path(parts[1].strip())
            entries.append((label, item if item.is_absolute() else base / item))
    finally:
        if stream is None:
            fh.close()
    if not entries:
        raise InputError("empty manifest", path)
    return entries


def write_manifest(entries, path) -> None:
    with open(path, "w") as fh:
        for label, item in entries:
            fh.write(f"{label or ''}\t{item}\n")


def motions_to_json(motions) -> list[dict]:
    return [
        {
            "cluster": int(m.cluster),
            "interval": [int(m.interval[0]), int(m.interval[1])],
            "centroid": [float(v) for v in m.centroid],
            "members": ["/".join(str(p) for p in mem) for mem in m.members],
            "segments": [[[float(v) for v in pt] for pt in seg] for seg in m.segments],
        }
        for m in motions
    ]


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v + 0.0 if math.isfinite(v) else None  # no -0.0 in output
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, NaN/inf as null."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"
