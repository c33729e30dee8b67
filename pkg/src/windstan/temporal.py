"""Temporal encoder-decoder over the target farm's spatial features.

A tanh recurrence encodes the T per-timestamp feature vectors into hidden
states h_1..h_T.  The decoder runs its own tanh recurrence seeded with h_T,
scores each encoder state with the bilinear (general) form, softmaxes the
scores into weights, averages the states into a context vector, and combines
context and decoder state into the next scalar prediction.  Decoding is
free-running: each step feeds back the previous prediction, in training and
inference alike.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .nn import Parameter, glorot_init
from .tensor import (Tensor, add, concat_cols, matmul, softmax_rows, tanh,
                     transpose, vstack)


class EncoderParams:
    """Input and recurrence weights of the encoder; h_0 is the zero state."""

    def __init__(self, d_m: int, d_e: int, rng):
        self.u_e = Parameter("encoder.ue", glorot_init(d_m, d_e, rng))
        self.w_e = Parameter("encoder.we", glorot_init(d_e, d_e, rng))
        self.d_e = d_e

    def parameters(self) -> list[Parameter]:
        return [self.u_e, self.w_e]


class DecoderParams:
    """Decoder recurrence, attention scoring, and output projections.

    ``w_score`` and ``w_c`` are absent when attention is disabled (the
    temporal-attention ablation keeps only the plain recurrence and the
    output projection).
    """

    def __init__(self, d_e: int, d_d: int, rng, attention: bool = True):
        self.u_d = Parameter("decoder.ud", glorot_init(1, d_d, rng))
        self.w_d = Parameter("decoder.wd", glorot_init(d_d, d_d, rng))
        if attention:
            self.w_score = Parameter("decoder.wscore", glorot_init(d_d, d_e, rng))
            self.w_c = Parameter("decoder.wc", glorot_init(d_e + d_d, d_d, rng))
        else:
            self.w_score = None
            self.w_c = None
        self.w_s = Parameter("decoder.ws", glorot_init(d_d, 1, rng))
        self.attention = attention

    def parameters(self) -> list[Parameter]:
        out = [self.u_d, self.w_d]
        if self.attention:
            out += [self.w_score, self.w_c]
        out.append(self.w_s)
        return out


def encoder_step(o: Tensor, h_prev: Tensor, p: EncoderParams) -> Tensor:
    """h_t = tanh(o U_E + h_prev W_E)."""
    if o.cols != p.u_e.value.rows:
        raise ShapeError(f"encoder input {o.shape} does not match U_E {p.u_e.value.shape}")
    return tanh(add(matmul(o, p.u_e.value), matmul(h_prev, p.w_e.value)))


def run_encoder(os: list[Tensor], p: EncoderParams) -> list[Tensor]:
    """Fold encoder_step over t = 1..T starting from the zero state."""
    h = Tensor(np.zeros((1, p.d_e)))
    states = []
    for o in os:
        h = encoder_step(o, h, p)
        states.append(h)
    return states


def global_attention(s_k: Tensor, states: Tensor, p: DecoderParams) -> tuple[Tensor, Tensor]:
    """Bilinear scores over all encoder states, softmaxed into weights.

    ``states`` stacks h_1..h_T as a T x d_e matrix.  Returns the 1 x T weight
    vector and the context c_k, the weight-averaged encoder state.
    """
    scores = matmul(matmul(s_k, p.w_score.value), transpose(states))
    weights = softmax_rows(scores)
    context = matmul(weights, states)
    return weights, context


def decoder_step(y_prev: Tensor, s_prev: Tensor, states: Tensor,
                 p: DecoderParams) -> tuple[Tensor, Tensor]:
    """One free-running decoder step.

    Updates the state with s_k = tanh(y_prev U_D + s_prev W_D), attends over
    the encoder states, combines [c_k; s_k] through W_C with a tanh, and
    projects to the scalar prediction.  Without attention the state passes
    straight to the output projection.
    """
    s_k = tanh(add(matmul(y_prev, p.u_d.value), matmul(s_prev, p.w_d.value)))
    if p.attention:
        _, context = global_attention(s_k, states, p)
        combined = tanh(matmul(concat_cols(context, s_k), p.w_c.value))
    else:
        combined = s_k
    y_k = matmul(combined, p.w_s.value)
    return y_k, s_k


def decode_horizon(states: list[Tensor], x_last: float, n_max: int,
                   p: DecoderParams) -> list[Tensor]:
    """Unroll the decoder n_max steps from (x_last, h_T), feeding back y.

    ``x_last`` is the most recent observed (scaled) target value; predictions
    come back as 1x1 tensors in scaled space, one per horizon.
    """
    if n_max < 1:
        raise ShapeError(f"horizon must be at least 1, got {n_max}")
    stacked = vstack(states)
    y = Tensor([[float(x_last)]])
    s = states[-1]
    out = []
    for _ in range(n_max):
        y, s = decoder_step(y, s, stacked, p)
        out.append(y)
    return out
