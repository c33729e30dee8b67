"""Spatial self-attention over wind farms.

Each timestamp's farm vector is embedded to width d_m, then passed through a
stack of identical-shape layers: multi-head scaled dot-product self-attention
and a position-wise feed-forward block, each wrapped in a residual connection
followed by layer normalization.  Farms carry no positional encoding, so the
whole stack is equivariant under farm permutations.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .nn import Parameter, glorot_init, layer_norm_forward, linear_forward
from .tensor import (Tensor, add, hstack, matmul, relu, row, scale,
                     softmax_rows, transpose)


class MultiHeadParams:
    """Per-head query/key/value projections plus the output projection."""

    def __init__(self, prefix: str, d_m: int, h: int, rng):
        if d_m % h != 0:
            raise ShapeError(f"head count {h} does not divide model width {d_m}")
        self.h = h
        self.d_k = d_m // h
        self.wq = []
        self.wk = []
        self.wv = []
        for i in range(h):
            self.wq.append(Parameter(f"{prefix}.head{i}.wq", glorot_init(d_m, self.d_k, rng)))
            self.wk.append(Parameter(f"{prefix}.head{i}.wk", glorot_init(d_m, self.d_k, rng)))
            self.wv.append(Parameter(f"{prefix}.head{i}.wv", glorot_init(d_m, self.d_k, rng)))
        self.w0 = Parameter(f"{prefix}.w0", glorot_init(d_m, d_m, rng))

    def parameters(self) -> list[Parameter]:
        out = []
        for i in range(self.h):
            out += [self.wq[i], self.wk[i], self.wv[i]]
        out.append(self.w0)
        return out


class FfnParams:
    """Two bias-free linear maps with a ReLU between them."""

    def __init__(self, prefix: str, d_m: int, d_ffn: int, rng):
        self.w1 = Parameter(f"{prefix}.w1", glorot_init(d_m, d_ffn, rng))
        self.w2 = Parameter(f"{prefix}.w2", glorot_init(d_ffn, d_m, rng))

    def parameters(self) -> list[Parameter]:
        return [self.w1, self.w2]


class LayerNormParams:
    def __init__(self, prefix: str, d: int, rng=None):
        self.gain = Parameter(f"{prefix}.gain", Tensor(np.ones((1, d))))
        self.bias = Parameter(f"{prefix}.bias", Tensor(np.zeros((1, d))))

    def parameters(self) -> list[Parameter]:
        return [self.gain, self.bias]


class SpatialLayerParams:
    """One attention + feed-forward block with its two layer norms."""

    def __init__(self, prefix: str, d_m: int, h: int, d_ffn: int, rng):
        self.mha = MultiHeadParams(f"{prefix}.attn", d_m, h, rng)
        self.ffn = FfnParams(f"{prefix}.ffn", d_m, d_ffn, rng)
        self.ln1 = LayerNormParams(f"{prefix}.ln1", d_m)
        self.ln2 = LayerNormParams(f"{prefix}.ln2", d_m)

    def parameters(self) -> list[Parameter]:
        return (self.mha.parameters() + self.ffn.parameters()
                + self.ln1.parameters() + self.ln2.parameters())


class SpatialEncoderParams:
    """Shared farm embedding plus a stack of distinct layers."""

    def __init__(self, d_m: int, h: int, d_ffn: int, n_layers: int, rng):
        if n_layers < 1:
            raise ShapeError(f"spatial stack needs at least one layer, got {n_layers}")
        self.embed = Parameter("embed.wi", glorot_init(1, d_m, rng))
        self.layers = [SpatialLayerParams(f"spatial.{l}", d_m, h, d_ffn, rng)
                       for l in range(n_layers)]

    def parameters(self) -> list[Parameter]:
        out = [self.embed]
        for layer in self.layers:
            out += layer.parameters()
        return out


def embed_timestep(x_t: Tensor, embed: Parameter) -> Tensor:
    """Project one timestamp's farm column (N x 1) to N x d_m."""
    if x_t.cols != 1:
        raise ShapeError(f"timestep input must be a column, got {x_t.shape}")
    return linear_forward(x_t, embed)


def scaled_dot_attention(q: Tensor, k: Tensor, v: Tensor,
                         scale_dim: int | None = None) -> Tensor:
    """softmax(Q K^T / sqrt(d)) V with d defaulting to the width passed in.

    ``scale_dim`` overrides the scaling width; see multi_head_attention for
    the scale_by_dm reading.  Every output row is a convex combination of V's
    rows.
    """
    if q.cols != k.cols:
        raise ShapeError(f"query/key width mismatch: {q.shape} vs {k.shape}")
    if k.rows != v.rows:
        raise ShapeError(f"key/value row mismatch: {k.shape} vs {v.shape}")
    d = q.cols if scale_dim is None else scale_dim
    scores = scale(matmul(q, transpose(k)), 1.0 / np.sqrt(d))
    weights = softmax_rows(scores)
    return matmul(weights, v)


def attention_weights(q: Tensor, k: Tensor, scale_dim: int | None = None) -> np.ndarray:
    """The row-stochastic weight matrix of scaled_dot_attention, for inspection."""
    d = q.cols if scale_dim is None else scale_dim
    return softmax_rows(scale(matmul(q, transpose(k)), 1.0 / np.sqrt(d))).data


def multi_head_attention(i_t: Tensor, p: MultiHeadParams,
                         scale_by_dm: bool = False) -> Tensor:
    """Self-attention with h heads at width d_k, concatenated and projected.

    Queries, keys, and values are all the embedded farm matrix.  Heads scale
    scores by sqrt(d_k); ``scale_by_dm`` switches to sqrt(d_m) instead (the
    full-width reading of the scaling factor).
    """
    d_m = p.h * p.d_k
    if i_t.cols != d_m:
        raise ShapeError(f"attention input width {i_t.shape} does not match d_m={d_m}")
    scale_dim = d_m if scale_by_dm else None
    heads = []
    for i in range(p.h):
        q = linear_forward(i_t, p.wq[i])
        k = linear_forward(i_t, p.wk[i])
        v = linear_forward(i_t, p.wv[i])
        heads.append(scaled_dot_attention(q, k, v, scale_dim=scale_dim))
    return linear_forward(hstack(heads), p.w0)


def position_wise_ffn(x: Tensor, p: FfnParams) -> Tensor:
    """relu(x W1) W2, applied independently to every row."""
    return linear_forward(relu(linear_forward(x, p.w1)), p.w2)


def spatial_layer_forward(i_t: Tensor, p: SpatialLayerParams,
                          scale_by_dm: bool = False) -> Tensor:
    """Residual-then-normalize around attention, then around the FFN."""
    attn = layer_norm_forward(add(i_t, multi_head_attention(i_t, p.mha, scale_by_dm)),
                              p.ln1.gain, p.ln1.bias)
    return layer_norm_forward(add(attn, position_wise_ffn(attn, p.ffn)),
                              p.ln2.gain, p.ln2.bias)


def spatial_encode(xs: list[Tensor], p: SpatialEncoderParams, target: int,
                   scale_by_dm: bool = False) -> list[Tensor]:
    """Run the full stack on every timestamp and extract the target farm row.

    ``xs`` is the window as T column tensors (N x 1); the same layer
    parameters apply at every timestamp.  Returns T tensors of shape 1 x d_m.
    """
    n_farms = xs[0].rows
    if not 0 <= target < n_farms:
        raise IndexError(f"target farm {target} out of range for {n_farms} farms")
    out = []
    for x_t in xs:
        o_t = embed_timestep(x_t, p.embed)
        for layer in p.layers:
            o_t = spatial_layer_forward(o_t, layer, scale_by_dm)
        out.append(row(o_t, target))
    return out
