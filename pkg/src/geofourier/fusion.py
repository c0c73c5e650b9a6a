"""Magnitude/phase features, the learned fusion encoder, task heads and AdamW.

Parameters live in a flat ``dict`` of numpy arrays keyed ``"<block>.<name>"``
(for example ``"h_z.w1"``), which keeps checkpointing and the optimizer
trivial. Forward passes run on a ``Tape`` so gradients come from
``autodiff``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from .autodiff import Tape, Var
from .errors import ShapeMismatch
from .spectral import ComplexSpectrum

Params = Dict[str, np.ndarray]

VARIANTS = ("learned", "concat", "mag", "phase")


@dataclass(frozen=True)
class FeatureVectors:
    z: np.ndarray
    phi: np.ndarray


def extract_features(spec) -> FeatureVectors:
    """Magnitude and phase in (-pi, pi] (atan2 convention; atan2(0, 0) = 0)."""
    vals = spec.values if isinstance(spec, ComplexSpectrum) else np.asarray(spec, dtype=complex)
    if not np.all(np.isfinite(vals)):
        raise ValueError("spectrum contains non-finite values")
    phi = np.arctan2(vals.imag, vals.real)
    # a negative-zero imaginary part gives -pi; the half-open range wants +pi
    phi[phi == -np.pi] = np.pi
    return FeatureVectors(np.hypot(vals.real, vals.imag), phi)


@dataclass(frozen=True)
class EncoderShape:
    n_freq: int
    d: int = 32
    hidden_mag: Optional[int] = None
    hidden_phase: Optional[int] = None
    hidden_final: int = 64

    @property
    def h_mag(self) -> int:
        return self.hidden_mag or self.n_freq

    @property
    def h_phase(self) -> int:
        return self.hidden_phase or self.n_freq


def _init_linear(rng: np.random.Generator, n_in: int, n_out: int) -> Tuple[np.ndarray, np.ndarray]:
    # fan-in uniform, same bound for weights and bias
    bound = 1.0 / np.sqrt(n_in)
    w = rng.uniform(-bound, bound, size=(n_in, n_out))
    b = rng.uniform(-bound, bound, size=(n_out,))
    return w, b


def init_mlp(rng: np.random.Generator, prefix: str, n_in: int, n_hidden: int, n_out: int) -> Params:
    w1, b1 = _init_linear(rng, n_in, n_hidden)
    w2, b2 = _init_linear(rng, n_hidden, n_out)
    return {f"{prefix}.w1": w1, f"{prefix}.b1": b1, f"{prefix}.w2": w2, f"{prefix}.b2": b2}


def init_encoder(shape: EncoderShape, seed: int) -> Params:
    rng = np.random.default_rng([seed, 0])
    w = shape.n_freq
    params: Params = {}
    params.update(init_mlp(rng, "h_z", w, shape.h_mag, w))
    params.update(init_mlp(rng, "h_phi", w, shape.h_phase, w))
    params.update(init_mlp(rng, "h_final", 2 * w, shape.hidden_final, shape.d))
    return params


def init_head(d: int, n_classes: int, hidden: int, seed: int) -> Params:
    rng = np.random.default_rng([seed, 1])
    return init_mlp(rng, "head", 2 * d, hidden, n_classes)


def zero_like(params: Params) -> Params:
    return {k: np.zeros_like(v) for k, v in params.items()}


def as_vars(params: Params) -> Dict[str, Var]:
    return {k: Var(v, name=k) for k, v in params.items()}


def mlp_forward(tape: Tape, x: Var, p: Dict[str, Var], prefix: str) -> Var:
    """Linear -> ReLU -> Linear."""
    h = tape.relu(tape.linear(x, p[f"{prefix}.w1"], p[f"{prefix}.b1"]))
    return tape.linear(h, p[f"{prefix}.w2"], p[f"{prefix}.b2"])


def encode_batch(tape: Tape, z: np.ndarray, phi: np.ndarray, p: Dict[str, Var], variant: str = "learned") -> Var:
    """Embeddings for a batch of feature rows, shape (B, d).

    Variants: ``learned`` (full fusion), ``concat`` (h_z and h_phi bypassed),
    ``mag`` (phase path zeroed), ``phase`` (magnitude path zeroed).
    """
    z = np.atleast_2d(z)
    phi = np.atleast_2d(phi)
    n_freq = p["h_z.w1"].shape[0]
    if z.shape != phi.shape or z.shape[1] != n_freq:
        raise ShapeMismatch(f"features {z.shape}/{phi.shape} vs encoder width {n_freq}")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    zv, pv = Var(z), Var(phi)
    if variant == "concat":
        z_star, phi_star = zv, pv
    else:
        z_star = mlp_forward(tape, zv, p, "h_z") if variant != "phase" else Var(np.zeros_like(z))
        phi_star = mlp_forward(tape, pv, p, "h_phi") if variant != "mag" else Var(np.zeros_like(phi))
    return mlp_forward(tape, tape.concat(z_star, phi_star), p, "h_final")


def fuse(features: FeatureVectors, params: Params, variant: str = "learned") -> np.ndarray:
    """Embedding of a single geometry (or a batch if features are 2-D)."""
    single = np.ndim(features.z) == 1
    out = encode_batch(Tape(), features.z, features.phi, as_vars(params), variant).data
    return out[0] if single else out


def head_forward(tape: Tape, va: Var, vb: Var, p: Dict[str, Var]) -> Var:
    if va.shape != vb.shape:
        raise ShapeMismatch(f"embedding shapes differ: {va.shape} vs {vb.shape}")
    if va.shape[1] * 2 != p["head.w1"].shape[0]:
        raise ShapeMismatch("embedding width does not match the head")
    return mlp_forward(tape, tape.concat(va, vb), p, "head")


def predicted_distance(tape: Tape, va: Var, vb: Var) -> Var:
    return tape.row_norm(tape.sub(va, vb))


# ---------------------------------------------------------------------- AdamW


@dataclass
class AdamWState:
    step: int
    m: Params
    v: Params

    @classmethod
    def zeros(cls, params: Params) -> "AdamWState":
        return cls(0, zero_like(params), zero_like(params))


def adamw_step(
    params: Params,
    grads: Params,
    state: AdamWState,
    lr: float = 1e-4,
    wd: float = 1e-8,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Tuple[Params, AdamWState]:
    """One AdamW update with decoupled weight decay; returns new params and state."""
    t = state.step + 1
    new_p, new_m, new_v = {}, {}, {}
    for k in sorted(params):
        p, g = params[k], grads[k]
        if g.shape != p.shape:
            raise ShapeMismatch(f"gradient for {k} has shape {g.shape}, expected {p.shape}")
        m = beta1 * state.m[k] + (1.0 - beta1) * g
        v = beta2 * state.v[k] + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        p = p - lr * wd * p
        new_p[k] = p - lr * m_hat / (np.sqrt(v_hat) + eps)
        new_m[k], new_v[k] = m, v
    return new_p, AdamWState(t, new_m, new_v)


def param_count(params: Params, blocks: Iterable[str] = ()) -> int:
    blocks = tuple(blocks)
    return sum(v.size for k, v in params.items() if not blocks or k.split(".")[0] in blocks)
