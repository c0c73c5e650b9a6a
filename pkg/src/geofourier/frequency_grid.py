"""Geometric-series frequency sampling and the half-plane evaluation grid."""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidRange, TooFew

DEFAULT_F_MIN = 0.1
DEFAULT_F_MAX = 1.0
DEFAULT_W_AXIS = 10


def geometric_frequencies(f_min: float, f_max: float, w_axis: int) -> np.ndarray:
    """``w_axis`` frequencies from f_min to f_max with a constant step ratio.

    >>> geometric_frequencies(0.1, 1.0, 10)[[0, -1]]
    array([0.1, 1. ])
    """
    if not (0 < f_min < f_max):
        raise InvalidRange(f"need 0 < f_min < f_max, got f_min={f_min}, f_max={f_max}")
    if int(w_axis) != w_axis or w_axis < 2:
        raise TooFew(f"need at least 2 frequencies per axis, got {w_axis}")
    w_axis = int(w_axis)
    ratio = (f_max / f_min) ** (1.0 / (w_axis - 1))
    freqs = f_min * ratio ** np.arange(w_axis, dtype=float)
    freqs[0], freqs[-1] = f_min, f_max
    return freqs


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Ordered (u, v) samples, u-major.

    In ``"half"`` mode u runs over the positive frequencies only and v over
    the signed frequencies plus zero, so no sample's mirror (-u, -v) is
    present. ``"full"`` mode uses the signed-plus-zero set on both axes and
    exists for diagnostics.
    """

    u: np.ndarray
    v: np.ndarray
    freqs: np.ndarray
    mode: str = "half"
    grid_id: str = field(init=False)

    def __post_init__(self):
        for name in ("u", "v", "freqs"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        h = hashlib.sha256()
        h.update(self.mode.encode())
        h.update(np.ascontiguousarray(self.u).astype("<f8").tobytes())
        h.update(np.ascontiguousarray(self.v).astype("<f8").tobytes())
        object.__setattr__(self, "grid_id", h.hexdigest()[:16])

    def __len__(self) -> int:
        return len(self.u)

    def __eq__(self, other) -> bool:
        return isinstance(other, FrequencyGrid) and self.grid_id == other.grid_id

    def __hash__(self) -> int:
        return hash(self.grid_id)

    @property
    def samples(self) -> np.ndarray:
        return np.stack([self.u, self.v], axis=1)

    @property
    def f_min(self) -> float:
        return float(self.freqs[0])

    @property
    def f_max(self) -> float:
        return float(self.freqs[-1])

    @property
    def w_axis(self) -> int:
        return len(self.freqs)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("u,v\n")
        for u, v in zip(self.u, self.v):
            buf.write(f"{u!r},{v!r}\n")
        return buf.getvalue()


def build_grid(freqs: Sequence[float], mode: str = "half") -> FrequencyGrid:
    """Cartesian grid over the frequency list, u outer and v inner.

    Half mode: U = {f_0..f_{W-1}}, V = {-f_{W-1}..-f_0, 0, f_0..f_{W-1}}, giving
    W * (2W + 1) samples.
    """
    f = np.asarray(freqs, dtype=float)
    if f.ndim != 1 or len(f) == 0 or np.any(f <= 0) or np.any(np.diff(f) <= 0):
        raise InvalidRange("frequencies must be positive and strictly increasing")
    signed = np.concatenate([-f[::-1], [0.0], f])
    if mode == "half":
        us = f
    elif mode == "full":
        us = signed
    else:
        raise ValueError(f"unknown grid mode {mode!r}")
    uu, vv = np.meshgrid(us, signed, indexing="ij")
    return FrequencyGrid(uu.ravel(), vv.ravel(), f, mode)


def default_grid(
    f_min: float = DEFAULT_F_MIN,
    f_max: float = DEFAULT_F_MAX,
    w_axis: int = DEFAULT_W_AXIS,
    mode: str = "half",
) -> FrequencyGrid:
    return build_grid(geometric_frequencies(f_min, f_max, w_axis), mode)
