"""Learnable parameters, initialization, primitive layers, and the
finite-difference gradient oracle that validates every analytic adjoint."""

from __future__ import annotations

import numpy as np

from .errors import NumericError, ShapeError
from .tensor import Tensor, matmul

LAYER_NORM_EPS = 1e-5


class Parameter:
    """A named learnable tensor with a persistent, same-shape gradient buffer.

    The gradient accumulates across backward passes until :meth:`zero_grad`;
    names must be unique within one model (enforced at model assembly).
    """

    def __init__(self, name: str, value: Tensor):
        self.name = name
        self.value = value
        self.value.ensure_grad()

    @property
    def grad(self) -> np.ndarray:
        return self.value.grad

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def zero_grad(self) -> None:
        self.value.zero_grad()

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.value.shape})"


def glorot_init(rows: int, cols: int, rng) -> Tensor:
    """Uniform init on (-b, b) with b = sqrt(6 / (rows + cols)).

    ``rng`` is a seed or a numpy Generator; the same seed always reproduces
    the same tensor bit for bit.
    """
    if rows < 1 or cols < 1:
        raise ShapeError(f"init needs positive dims, got {rows}x{cols}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    bound = np.sqrt(6.0 / (rows + cols))
    return Tensor(rng.uniform(-bound, bound, size=(rows, cols)))


def linear_forward(x: Tensor, w: Parameter) -> Tensor:
    """Bias-free projection x @ W.

    The backward pass accumulates x^T G into ``w.grad`` and propagates
    G W^T to the input, where G is the upstream gradient.
    """
    if x.cols != w.value.rows:
        raise ShapeError(f"linear mismatch: input {x.shape} x weight {w.value.shape}")
    return matmul(x, w.value)


def layer_norm_forward(x: Tensor, gain: Parameter, bias: Parameter,
                       eps: float = LAYER_NORM_EPS) -> Tensor:
    """Per-row normalization to zero mean / unit population variance,
    followed by an elementwise affine transform (gain, bias)."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    d = x.cols
    if gain.value.shape != (1, d) or bias.value.shape != (1, d):
        raise ShapeError(
            f"layer norm affine shapes {gain.value.shape}/{bias.value.shape} "
            f"do not match input width {d}")
    mean = x.data.mean(axis=1, keepdims=True)
    var = x.data.var(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x.data - mean) * inv_std
    out_data = x_hat * gain.value.data + bias.value.data

    def backward(g):
        d_bias = g.sum(axis=0, keepdims=True)
        d_gain = (g * x_hat).sum(axis=0, keepdims=True)
        d_hat = g * gain.value.data
        # Population-variance layer-norm backward, all reductions per row.
        m1 = d_hat.mean(axis=1, keepdims=True)
        m2 = (d_hat * x_hat).mean(axis=1, keepdims=True)
        d_x = (d_hat - m1 - x_hat * m2) * inv_std
        return d_x, d_gain, d_bias

    return Tensor(out_data, (x, gain.value, bias.value), backward)


def zero_grads(params: list[Parameter]) -> None:
    for p in params:
        p.zero_grad()


def grad_check(model_fn, params: list[Parameter], step: float = 1e-6,
               rng=0, max_elements: int = 1500, sample_size: int = 200) -> float:
    """Compare analytic gradients against central finite differences.

    ``model_fn`` must be a deterministic, argument-free callable returning a
    scalar (1x1) Tensor built from ``params``.  Checks every parameter
    element, or a seeded sample of at least ``sample_size`` elements when the
    model holds more than ``max_elements``.  Returns the maximum relative
    error max(|a - n| / max(|a|, |n|, 1e-8)) over the checked elements.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)

    zero_grads(params)
    loss = model_fn()
    loss.backward()
    analytic = {p.name: p.grad.copy() for p in params}
    for p in params:
        if not np.isfinite(analytic[p.name]).all():
            raise NumericError(f"analytic gradient of {p.name} is not finite")

    coords = [(p, i, j) for p in params
              for i in range(p.shape[0]) for j in range(p.shape[1])]
    if len(coords) > max_elements:
        take = max(sample_size, 1)
        idx = rng.choice(len(coords), size=min(take, len(coords)), replace=False)
        coords = [coords[k] for k in sorted(idx)]

    worst = 0.0
    for p, i, j in coords:
        original = p.value.data[i, j]
        p.value.data[i, j] = original + step
        f_plus = model_fn().item()
        p.value.data[i, j] = original - step
        f_minus = model_fn().item()
        p.value.data[i, j] = original
        numeric = (f_plus - f_minus) / (2.0 * step)
        if not (np.isfinite(numeric) and np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericError(f"numeric gradient of {p.name}[{i},{j}] is not finite")
        a = analytic[p.name][i, j]
        err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
        if err > worst:
            worst = err
    zero_grads(params)
    return worst
