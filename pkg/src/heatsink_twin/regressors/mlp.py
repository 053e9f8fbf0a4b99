"""Fully connected ReLU network trained with Adam on mean squared error.

All weights and biases live in one flat vector; the per-layer arrays are
views into it.  The numpy forward/backward/Adam functions are the reference
implementation; ``train_mlp`` runs the same recurrences in a compiled loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from ..errors import ShapeError, TrainingFailure

HIDDEN = (64, 32, 16)


def _layout(sizes):
    shapes, offset = [], 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        shapes.append(((fan_in, fan_out), offset))
        offset += fan_in * fan_out
        shapes.append(((fan_out,), offset))
        offset += fan_out
    return shapes, offset


@dataclass(eq=False)
class MlpModel:
    """Layer sizes d -> 64 -> 32 -> 16 -> m, ReLU hidden, linear output.

    ``target_mean`` / ``target_scale`` undo the internal target
    standardization at prediction time.
    """

    sizes: tuple
    params: np.ndarray
    target_mean: np.ndarray = None
    target_scale: np.ndarray = None
    loss_history: list = field(default_factory=list)

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        shapes, total = _layout(self.sizes)
        self.params = np.ascontiguousarray(self.params, dtype=float)
        if self.params.shape != (total,):
            raise ShapeError(f"expected {total} parameters for sizes {self.sizes}, "
                             f"got {self.params.shape}")
        m = self.sizes[-1]
        if self.target_mean is None:
            self.target_mean = np.zeros(m)
        if self.target_scale is None:
            self.target_scale = np.ones(m)

    @property
    def layers(self):
        """[(W, b), ...] as views into ``params``."""
        return _views(self.params, self.sizes)


def init_mlp(n_in: int, n_out: int, seed: int, hidden=HIDDEN) -> MlpModel:
    """He-normal weights (std sqrt(2 / fan_in)), zero biases."""
    sizes = (n_in, *hidden, n_out)
    rng = np.random.default_rng(seed)
    shapes, total = _layout(sizes)
    params = np.zeros(total)
    for shape, offset in shapes[::2]:
        fan_in = shape[0]
        params[offset:offset + fan_in * shape[1]] = \
            rng.standard_normal(fan_in * shape[1]) * np.sqrt(2.0 / fan_in)
    return MlpModel(sizes, params)


def _views(flat, sizes):
    shapes, _ = _layout(sizes)
    views = [flat[o:o + int(np.prod(s))].reshape(s) for s, o in shapes]
    return list(zip(views[::2], views[1::2]))


def _forward(layers, X):
    acts = [X]
    h = X
    last = len(layers) - 1
    for idx, (W, b) in enumerate(layers):
        h = h @ W
        h += b
        if idx < last:
            np.maximum(h, 0.0, out=h)
        acts.append(h)
    return acts


def _loss_grad(layers, grads, X, Y):
    # ReLU derivative read off the post-activation (z > 0 iff relu(z) > 0)
    acts = _forward(layers, X)
    diff = acts[-1] - Y
    loss = float(np.mean(diff * diff))
    delta = diff * (2.0 / diff.size)
    for idx in range(len(layers) - 1, -1, -1):
        gW, gb = grads[idx]
        np.dot(acts[idx].T, delta, out=gW)
        np.sum(delta, axis=0, out=gb)
        if idx:
            delta = delta @ layers[idx][0].T
            delta *= acts[idx] > 0
    return loss


def mlp_forward(model: MlpModel, X) -> np.ndarray:
    """Raw network output (standardized target units)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.sizes[0]:
        raise ShapeError(f"network expects {model.sizes[0]} inputs, got {X.shape[1]}")
    return _forward(model.layers, X)[-1]


def predict_mlp(model: MlpModel, X) -> np.ndarray:
    return mlp_forward(model, X) * model.target_scale + model.target_mean


def mse_loss(Y, Yhat) -> float:
    """Mean over all sample-target pairs of the squared error."""
    Y = np.asarray(Y, dtype=float)
    Yhat = np.asarray(Yhat, dtype=float)
    if Y.shape != Yhat.shape:
        raise ShapeError(f"shape mismatch {Y.shape} vs {Yhat.shape}")
    return float(np.mean((Y - Yhat) ** 2))


def mlp_backward(model: MlpModel, X, Y):
    """Loss and gradient of ``mse_loss(Y, mlp_forward(X))`` w.r.t. ``params``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != model.sizes[0] or Y.shape != (len(X), model.sizes[-1]):
        raise ShapeError(f"batch shapes {X.shape}, {Y.shape} do not fit sizes {model.sizes}")
    grad = np.empty_like(model.params)
    loss = _loss_grad(model.layers, _views(grad, model.sizes), X, Y)
    if not np.all(np.isfinite(grad)):
        raise TrainingFailure("non-finite gradient")
    return loss, grad


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: np.ndarray = None
    v: np.ndarray = None


def adam_step(state: AdamState, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """One bias-corrected Adam update; returns the new parameter vector."""
    if grad.shape != params.shape:
        raise ShapeError("gradient does not match parameters")
    if not np.all(np.isfinite(grad)):
        raise TrainingFailure("non-finite gradient")
    if state.m is None:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    state.t += 1
    state.m = state.beta1 * state.m + (1 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1 - state.beta2) * grad * grad
    m_hat = state.m / (1 - state.beta1 ** state.t)
    v_hat = state.v / (1 - state.beta2 ** state.t)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


@numba.njit(cache=True, fastmath=True)
def _adam_update(params, grad, m, v, t, lr, beta1, beta2, eps):
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    step = lr / c1
    for p in range(len(params)):
        g = grad[p]
        m[p] = beta1 * m[p] + (1.0 - beta1) * g
        v[p] = beta2 * v[p] + (1.0 - beta2) * g * g
        params[p] -= step * m[p] / (np.sqrt(v[p] / c2) + eps)


@numba.njit(cache=True)
def _train_loop(params, sizes, offsets, X, Z, orders, batch_size, lr, beta1, beta2, eps):
    # compiled twin of _loss_grad + adam_step over all epochs
    n_layers = len(sizes) - 1
    grad = np.zeros_like(params)
    m = np.zeros_like(params)
    v = np.zeros_like(params)
    n = X.shape[0]
    n_out = sizes[-1]
    history = np.zeros(orders.shape[0])
    t = 0
    for epoch in range(orders.shape[0]):
        total = 0.0
        for start in range(0, n, batch_size):
            idx = orders[epoch, start:start + batch_size]
            nb = len(idx)
            acts = [np.ascontiguousarray(X[idx])]
            for l in range(n_layers):
                W = params[offsets[2 * l]:offsets[2 * l + 1]].reshape((sizes[l], sizes[l + 1]))
                b = params[offsets[2 * l + 1]:offsets[2 * l + 2]]
                h = acts[l] @ W + b
                if l < n_layers - 1:
                    h = np.maximum(h, 0.0)
                acts.append(h)
            out = acts[n_layers]
            delta = np.empty_like(out)
            scale = 2.0 / (nb * n_out)
            for r in range(nb):
                for c in range(n_out):
                    d = out[r, c] - Z[idx[r], c]
                    total += d * d / n_out
                    delta[r, c] = d * scale
            for l in range(n_layers - 1, -1, -1):
                gW = grad[offsets[2 * l]:offsets[2 * l + 1]].reshape((sizes[l], sizes[l + 1]))
                gW[:, :] = acts[l].T @ delta
                gb = grad[offsets[2 * l + 1]:offsets[2 * l + 2]]
                gb[:] = 0.0
                for r in range(nb):
                    for c in range(delta.shape[1]):
                        gb[c] += delta[r, c]
                if l > 0:
                    W = params[offsets[2 * l]:offsets[2 * l + 1]].reshape((sizes[l], sizes[l + 1]))
                    delta = delta @ W.T
                    a = acts[l]
                    for r in range(nb):
                        for c in range(delta.shape[1]):
                            if a[r, c] <= 0.0:
                                delta[r, c] = 0.0
            t += 1
            _adam_update(params, grad, m, v, t, lr, beta1, beta2, eps)
        history[epoch] = total / n
    return history


def train_mlp(X, Y, epochs: int = 500, batch_size: int = 32, lr: float = 1e-3,
              seed: int = 0, hidden=HIDDEN) -> MlpModel:
    """Mini-batch Adam on standardized targets; inputs should already be in [0, 1]."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    mean = Y.mean(axis=0)
    scale = Y.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    Z = (Y - mean) / scale

    rng = np.random.default_rng(seed)
    model = init_mlp(X.shape[1], Y.shape[1], int(rng.integers(2**63)), hidden)
    model.target_mean, model.target_scale = mean, scale
    shapes, _ = _layout(model.sizes)
    offsets = np.array([o for _, o in shapes] + [len(model.params)], dtype=np.int64)
    orders = np.stack([rng.permutation(len(X)) for _ in range(epochs)]) if epochs else \
        np.zeros((0, len(X)), dtype=np.int64)
    history = _train_loop(model.params, np.array(model.sizes, dtype=np.int64), offsets,
                          np.ascontiguousarray(X), np.ascontiguousarray(Z), orders,
                          batch_size, lr, 0.9, 0.999, 1e-8)
    for epoch, loss in enumerate(history):
        if not np.isfinite(loss):
            raise TrainingFailure(f"training diverged at epoch {epoch + 1}")
    if not np.all(np.isfinite(model.params)):
        raise TrainingFailure("training produced non-finite weights")
    model.loss_history = [float(v) for v in history]
    return model
