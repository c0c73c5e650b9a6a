"""On-disk formats: pair datasets, model checkpoints, embeddings, reports.

Every file carries the hash of the config that produced it. All writers
are deterministic: keys are sorted and floats are written with ``repr`` so
identical inputs give identical bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .errors import CheckpointMismatch, DataMismatch, GeoFourierError
from .geometry import from_geojson, to_geojson
from .tasks import LabeledPairSet, PairSample
from .training import RunConfig

DATASET_FORMAT = "geofourier-pairs"
DATASET_VERSION = 1
CHECKPOINT_MAGIC = b"P2VM"
CHECKPOINT_VERSION = 1
EMBEDDING_MAGIC = b"P2VE"
EMBEDDING_VERSION = 1


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# ----------------------------------------------------------------- datasets


def write_dataset(path, ds: LabeledPairSet, cfg: RunConfig) -> None:
    """JSON lines: a header record, then one record per pair in generation order."""
    header = {
        "format": DATASET_FORMAT,
        "version": DATASET_VERSION,
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "task": ds.task,
        "pair_type": ds.pair_type,
        "classes": list(ds.classes),
        "count": len(ds),
    }
    lines = [_dumps({"meta": header})]
    for i, (s, split) in enumerate(zip(ds.samples, ds.splits)):
        label = s.label(ds.task)
        lines.append(_dumps({
            "index": i,
            "g_a": to_geojson(s.g_a),
            "g_b": to_geojson(s.g_b),
            "label": label,
            "split": split,
        }))
    Path(path).write_text("\n".join(lines) + "\n")


def read_dataset(path) -> Tuple[LabeledPairSet, Dict]:
    """Returns the pair set and the header record."""
    path = Path(path)
    if not path.exists():
        raise DataMismatch(f"dataset file not found: {path}")
    lines = path.read_text().splitlines()
    if not lines:
        raise DataMismatch(f"{path}: empty dataset file")
    try:
        header = json.loads(lines[0])["meta"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataMismatch(f"{path}:1: missing dataset header") from exc
    if header.get("format") != DATASET_FORMAT:
        raise DataMismatch(f"{path}: not a pair dataset")
    task = header["task"]
    key = {"topo": "topo_label", "direction": "dir_label", "distance": "dist_label"}[task]
    samples: List[PairSample] = []
    splits: List[str] = []
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            g_a, g_b = from_geojson(rec["g_a"]), from_geojson(rec["g_b"])
            samples.append(PairSample(g_a, g_b, **{key: rec["label"]}))
            splits.append(rec["split"])
        except (json.JSONDecodeError, KeyError, TypeError, GeoFourierError) as exc:
            raise DataMismatch(f"{path}:{n}: bad record ({exc})") from exc
    if len(samples) != header.get("count", len(samples)):
        raise DataMismatch(f"{path}: header announces {header['count']} pairs, found {len(samples)}")
    ds = LabeledPairSet(task, header["pair_type"], tuple(header["classes"]), samples, splits, header)
    return ds, header


# -------------------------------------------------------------- checkpoints


def write_checkpoint(path, params: Dict[str, np.ndarray], cfg: RunConfig, grid_id: str) -> None:
    """Magic, version u32, header length u32, JSON header, then f64 arrays in header order."""
    names = sorted(params)
    header = {
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "grid_id": grid_id,
        "params": [[k, list(params[k].shape)] for k in names],
    }
    blob = _dumps(header).encode()
    body = b"".join(np.ascontiguousarray(params[k], dtype="<f8").tobytes() for k in names)
    Path(path).write_bytes(CHECKPOINT_MAGIC + struct.pack("<II", CHECKPOINT_VERSION, len(blob)) + blob + body)


def read_checkpoint(path) -> Tuple[Dict[str, np.ndarray], Dict]:
    path = Path(path)
    if not path.exists():
        raise CheckpointMismatch(f"checkpoint not found: {path}")
    data = path.read_bytes()
    if data[:4] != CHECKPOINT_MAGIC:
        raise CheckpointMismatch(f"{path}: not a model checkpoint (bad magic)")
    version, n = struct.unpack("<II", data[4:12])
    if version != CHECKPOINT_VERSION:
        raise CheckpointMismatch(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(data[12:12 + n].decode())
    offset = 12 + n
    params = {}
    for name, shape in header["params"]:
        size = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(data, dtype="<f8", count=size, offset=offset).reshape(shape)
        params[name] = arr.astype(float)
        offset += 8 * size
    if offset != len(data):
        raise CheckpointMismatch(f"{path}: trailing or missing parameter bytes")
    return params, header


def check_compatible(ckpt_header: Dict, dataset_header: Dict) -> None:
    """The checkpoint must share grid and embedding width with the dataset's config."""
    a, b = ckpt_header["config"], dataset_header["config"]
    for key in ("f_min", "f_max", "w_axis", "d"):
        if a[key] != b[key]:
            raise CheckpointMismatch(f"checkpoint {key}={a[key]} but dataset was made with {key}={b[key]}")
    if (a["task"], a["pair_type"]) != (dataset_header["task"], dataset_header["pair_type"]):
        raise CheckpointMismatch(
            f"checkpoint trained for {a['task']}/{a['pair_type']}, dataset holds "
            f"{dataset_header['task']}/{dataset_header['pair_type']}"
        )


# --------------------------------------------------------------- embeddings


def embeddings_csv(rows: np.ndarray, config_hash: str, prefix: str = "e") -> str:
    lines = [f"# config_hash={config_hash}", ",".join(["index"] + [f"{prefix}{j}" for j in range(rows.shape[1])])]
    for i, row in enumerate(rows):
        lines.append(",".join([str(i)] + [repr(float(x)) for x in row]))
    return "\n".join(lines) + "\n"


def embeddings_bytes(rows: np.ndarray, config_hash: str) -> bytes:
    """Magic, version u32, rows u32, cols u32, 16-byte config hash, f64 row-major."""
    rows = np.ascontiguousarray(rows, dtype="<f8")
    head = EMBEDDING_MAGIC + struct.pack("<III", EMBEDDING_VERSION, rows.shape[0], rows.shape[1])
    return head + config_hash.encode()[:16].ljust(16, b"\0") + rows.tobytes()


def embeddings_from_bytes(data: bytes) -> Tuple[np.ndarray, str]:
    if data[:4] != EMBEDDING_MAGIC:
        raise DataMismatch("not an embeddings file (bad magic)")
    version, n, d = struct.unpack("<III", data[4:16])
    if version != EMBEDDING_VERSION:
        raise DataMismatch(f"unsupported embeddings version {version}")
    h = data[16:32].rstrip(b"\0").decode()
    return np.frombuffer(data[32:], dtype="<f8").reshape(n, d).copy(), h


# ------------------------------------------------------------------ reports


def write_report(path, report: Dict) -> None:
    Path(path).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")


def metrics_table(rows: Iterable[Tuple[str, Dict[str, float]]], keys: Optional[List[str]] = None) -> str:
    rows = list(rows)
    if not rows:
        return ""
    keys = keys or sorted(rows[0][1])
    width = max(len(name) for name, _ in rows)
    out = [" ".join([f"{'':<{width}}"] + [f"{k:>12}" for k in keys])]
    for name, vals in rows:
        out.append(" ".join([f"{name:<{width}}"] + [f"{vals.get(k, float('nan')):>12.4f}" for k in keys]))
    return "\n".join(out)
