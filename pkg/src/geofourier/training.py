"""Run configuration, feature caching, the training loop and evaluation."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from .autodiff import Tape, Var
from .errors import ConfigError, DataMismatch, DivergedTraining
from .frequency_grid import FrequencyGrid, default_grid
from .fusion import (
    VARIANTS,
    AdamWState,
    EncoderShape,
    Params,
    adamw_step,
    as_vars,
    encode_batch,
    extract_features,
    head_forward,
    init_encoder,
    init_head,
    predicted_distance,
)
from .spectral import encode_spectrum
from .tasks import PAIR_TYPES, TASKS, LabeledPairSet, class_names, metrics


@dataclass(frozen=True)
class RunConfig:
    f_min: float = 0.1
    f_max: float = 1.0
    w_axis: int = 10
    d: int = 32
    hidden_mag: Optional[int] = None
    hidden_phase: Optional[int] = None
    hidden_final: int = 64
    hidden_head: int = 64
    task: str = "topo"
    pair_type: str = "point-polygon"
    per_class: int = 500
    seed: int = 0
    runs: int = 5
    lr: float = 1e-4
    weight_decay: float = 1e-8
    batch_size: int = 128
    epochs: int = 20
    variant: str = "learned"

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {', '.join(TASKS)}")
        if self.pair_type not in PAIR_TYPES:
            raise ConfigError(f"unknown pair type {self.pair_type!r}; expected one of {', '.join(PAIR_TYPES)}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {', '.join(VARIANTS)}")
        class_names(self.task, self.pair_type)
        for name in ("w_axis", "d", "hidden_final", "hidden_head", "per_class", "runs", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        if not (self.lr > 0 and self.weight_decay >= 0):
            raise ConfigError("lr must be positive and weight_decay non-negative")

    @classmethod
    def from_dict(cls, data: Dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def to_dict(self) -> Dict:
        return asdict(self)

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def grid(self) -> FrequencyGrid:
        return default_grid(self.f_min, self.f_max, self.w_axis)

    def encoder_shape(self) -> EncoderShape:
        n = len(self.grid())
        return EncoderShape(n, self.d, self.hidden_mag, self.hidden_phase, self.hidden_final)


def geometry_features(geoms, grid: FrequencyGrid) -> Tuple[np.ndarray, np.ndarray]:
    """Stacked (z, phi) rows for a sequence of geometries."""
    feats = [extract_features(encode_spectrum(g, grid)) for g in geoms]
    if not feats:
        n = len(grid)
        return np.zeros((0, n)), np.zeros((0, n))
    return np.stack([f.z for f in feats]), np.stack([f.phi for f in feats])


@dataclass
class PairFeatures:
    za: np.ndarray
    pa: np.ndarray
    zb: np.ndarray
    pb: np.ndarray
    labels: np.ndarray

    def take(self, idx: np.ndarray) -> "PairFeatures":
        return PairFeatures(self.za[idx], self.pa[idx], self.zb[idx], self.pb[idx], self.labels[idx])

    def __len__(self) -> int:
        return len(self.labels)


def pair_features(ds: LabeledPairSet, grid: FrequencyGrid) -> PairFeatures:
    za, pa = geometry_features([s.g_a for s in ds.samples], grid)
    zb, pb = geometry_features([s.g_b for s in ds.samples], grid)
    return PairFeatures(za, pa, zb, pb, ds.labels())


def init_model(cfg: RunConfig, seed: int) -> Params:
    params = init_encoder(cfg.encoder_shape(), seed)
    if cfg.task != "distance":
        n_classes = len(class_names(cfg.task, cfg.pair_type))
        params.update(init_head(cfg.d, n_classes, cfg.hidden_head, seed))
    return params


def forward_loss(tape: Tape, batch: PairFeatures, p: Dict[str, Var], task: str, variant: str):
    """Returns (loss, output) where output is logits or predicted distances."""
    va = encode_batch(tape, batch.za, batch.pa, p, variant)
    vb = encode_batch(tape, batch.zb, batch.pb, p, variant)
    if task == "distance":
        out = predicted_distance(tape, va, vb)
        return tape.mse(out, batch.labels), out
    out = head_forward(tape, va, vb, p)
    return tape.cross_entropy(out, batch.labels), out


def loss_and_grads(params: Params, batch: PairFeatures, task: str, variant: str):
    tape = Tape()
    p = as_vars(params)
    loss, _ = forward_loss(tape, batch, p, task, variant)
    tape.backward(loss)
    grads = {k: (v.grad if v.grad is not None else np.zeros_like(v.data)) for k, v in p.items()}
    return float(loss.data), grads


def predict(params: Params, feats: PairFeatures, task: str, variant: str, chunk: int = 1024) -> np.ndarray:
    outs = []
    p = as_vars(params)
    for start in range(0, len(feats), chunk):
        batch = feats.take(np.arange(start, min(start + chunk, len(feats))))
        _, out = forward_loss(Tape(), batch, p, task, variant)
        outs.append(out.data)
    if not outs:
        return np.zeros(0)
    out = np.concatenate(outs)
    return out if task == "distance" else np.argmax(out, axis=1)


def evaluate(params: Params, feats: PairFeatures, cfg: RunConfig) -> Dict[str, float]:
    preds = predict(params, feats, cfg.task, cfg.variant)
    n_classes = len(class_names(cfg.task, cfg.pair_type)) or None
    return metrics(preds, feats.labels, cfg.task, n_classes)


@dataclass
class TrainResult:
    params: Params
    history: List[Dict]
    test: Dict[str, float]


def check_dataset(ds: LabeledPairSet, cfg: RunConfig) -> None:
    if ds.task != cfg.task or ds.pair_type != cfg.pair_type:
        raise DataMismatch(
            f"dataset holds {ds.task}/{ds.pair_type} pairs but the config asks for {cfg.task}/{cfg.pair_type}"
        )


def train(cfg: RunConfig, ds: LabeledPairSet, seed: int, feats: Optional[PairFeatures] = None,
          log=None) -> TrainResult:
    """Train encoder and head jointly with AdamW; minibatches shuffled per epoch."""
    check_dataset(ds, cfg)
    feats = pair_features(ds, cfg.grid()) if feats is None else feats
    train_set = feats.take(ds.indices("train"))
    val_set = feats.take(ds.indices("val"))
    test_set = feats.take(ds.indices("test"))
    if len(train_set) == 0:
        raise DataMismatch("dataset has no training pairs")
    params = init_model(cfg, seed)
    state = AdamWState.zeros(params)
    rng = np.random.default_rng([seed, 2])
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(train_set))
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = train_set.take(order[start:start + cfg.batch_size])
            loss, grads = loss_and_grads(params, batch, cfg.task, cfg.variant)
            if not math.isfinite(loss):
                raise DivergedTraining(f"loss became {loss} at epoch {epoch + 1}, step {state.step + 1}")
            params, state = adamw_step(params, grads, state, cfg.lr, cfg.weight_decay)
            losses.append(loss)
        row = {"epoch": epoch + 1, "train_loss": float(np.mean(losses))}
        if len(val_set):
            row.update({f"val_{k}": v for k, v in evaluate(params, val_set, cfg).items()})
        history.append(row)
        if log is not None:
            log(row)
    test = evaluate(params, test_set, cfg) if len(test_set) else {}
    return TrainResult(params, history, test)
