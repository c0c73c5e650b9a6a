"""A minimal tape-based reverse-mode differentiator over numpy arrays.

Only the handful of operations the encoder, heads and losses need are
provided. Every op records a closure on the active ``Tape``; ``backward``
replays the tape in reverse, accumulating gradients into each ``Var``.
"""

from __future__ import annotations

from typing import Callable, Dict, List, Optional

import numpy as np


class Var:
    __slots__ = ("data", "grad", "name")

    def __init__(self, data, name: Optional[str] = None):
        self.data = np.asarray(data, dtype=float)
        self.grad: Optional[np.ndarray] = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=float)
        else:
            self.grad = self.grad + g

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Var{label}(shape={self.data.shape})"


class Tape:
    """Records operations in execution order."""

    def __init__(self):
        self._ops: List[Callable[[], None]] = []

    def _record(self, fn: Callable[[], None]) -> None:
        self._ops.append(fn)

    # -- ops -----------------------------------------------------------------

    def linear(self, x: Var, w: Var, b: Var) -> Var:
        """x @ w + b for x of shape (B, n_in), w (n_in, n_out), b (n_out,)."""
        out = Var(x.data @ w.data + b.data)

        def back():
            g = out.grad
            if g is None:
                return
            w.accumulate(x.data.T @ g)
            b.accumulate(g.sum(axis=0))
            x.accumulate(g @ w.data.T)

        self._record(back)
        return out

    def relu(self, x: Var) -> Var:
        mask = x.data > 0
        out = Var(np.where(mask, x.data, 0.0))

        def back():
            if out.grad is not None:
                # subgradient at 0 is 0
                x.accumulate(out.grad * mask)

        self._record(back)
        return out

    def concat(self, a: Var, b: Var) -> Var:
        k = a.data.shape[1]
        out = Var(np.concatenate([a.data, b.data], axis=1))

        def back():
            if out.grad is not None:
                a.accumulate(out.grad[:, :k])
                b.accumulate(out.grad[:, k:])

        self._record(back)
        return out

    def sub(self, a: Var, b: Var) -> Var:
        out = Var(a.data - b.data)

        def back():
            if out.grad is not None:
                a.accumulate(out.grad)
                b.accumulate(-out.grad)

        self._record(back)
        return out

    def row_norm(self, x: Var) -> Var:
        """Euclidean norm of each row; gradient 0 where the row is zero."""
        n = np.sqrt(np.sum(x.data * x.data, axis=1))
        out = Var(n)

        def back():
            if out.grad is None:
                return
            safe = np.where(n > 0, n, 1.0)
            scale = np.where(n > 0, out.grad / safe, 0.0)
            x.accumulate(x.data * scale[:, None])

        self._record(back)
        return out

    def cross_entropy(self, logits: Var, labels: np.ndarray) -> Var:
        """Mean softmax cross-entropy, computed from a stable log-softmax."""
        labels = np.asarray(labels, dtype=int)
        z = logits.data - logits.data.max(axis=1, keepdims=True)
        logsumexp = np.log(np.sum(np.exp(z), axis=1, keepdims=True))
        logp = z - logsumexp
        n = len(labels)
        out = Var(-np.mean(logp[np.arange(n), labels]))

        def back():
            if out.grad is None:
                return
            p = np.exp(logp)
            p[np.arange(n), labels] -= 1.0
            logits.accumulate(out.grad * p / n)

        self._record(back)
        return out

    def mse(self, pred: Var, target: np.ndarray) -> Var:
        target = np.asarray(target, dtype=float)
        diff = pred.data - target
        out = Var(np.mean(diff * diff))

        def back():
            if out.grad is not None:
                pred.accumulate(out.grad * 2.0 * diff / diff.size)

        self._record(back)
        return out

    def scale(self, x: Var, c: float) -> Var:
        out = Var(c * x.data)

        def back():
            if out.grad is not None:
                x.accumulate(c * out.grad)

        self._record(back)
        return out

    # -- reverse pass ----------------------------------------------------------

    def backward(self, out: Var, grad=None) -> None:
        out.accumulate(np.ones_like(out.data) if grad is None else np.asarray(grad, dtype=float))
        for fn in reversed(self._ops):
            fn()


def backward(loss_grad, tape: Tape, out: Var, params: Dict[str, Var]) -> Dict[str, np.ndarray]:
    """Run the reverse pass from ``out`` seeded with ``loss_grad``.

    Returns a gradient array for every parameter (zeros where unused).
    """
    tape.backward(out, loss_grad)
    return {
        k: (p.grad if p.grad is not None else np.zeros_like(p.data)) for k, p in params.items()
    }
