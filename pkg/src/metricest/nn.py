"""LSTM cell and masked bidirectional LSTM stack on top of the autodiff
engine. Gate weights are packed along the output axis in the order
input, forget, cell, output.
"""

import numpy as np

from . import autodiff as ad
from .errors import InvalidArgument

INIT_RANGE = 0.08


def init_param(rng: np.random.Generator, shape) -> ad.Tensor:
    data = rng.uniform(-INIT_RANGE, INIT_RANGE, size=shape)
    return ad.Tensor(data, requires_grad=True)


def lstm_param_shapes(input_dim: int, hidden_dim: int) -> dict:
    return {
        "W_x": (input_dim, 4 * hidden_dim),
        "W_h": (hidden_dim, 4 * hidden_dim),
        "b": (4 * hidden_dim,),
    }


def lstm_cell(x, h_prev, c_prev, weights, hidden_dim):
    """One LSTM step. ``weights`` maps W_x, W_h, b to tensors."""
    pre = ad.add(ad.add(ad.matmul(x, weights["W_x"]),
                        ad.matmul(h_prev, weights["W_h"])),
                 weights["b"])
    i = ad.sigmoid(ad.slice_cols(pre, 0, hidden_dim))
    f = ad.sigmoid(ad.slice_cols(pre, hidden_dim, 2 * hidden_dim))
    g = ad.tanh(ad.slice_cols(pre, 2 * hidden_dim, 3 * hidden_dim))
    o = ad.sigmoid(ad.slice_cols(pre, 3 * hidden_dim, 4 * hidden_dim))
    c = ad.add(ad.mul(f, c_prev), ad.mul(i, g))
    h = ad.mul(o, ad.tanh(c))
    return h, c


def _masked_step(x_t, h_prev, c_prev, mask_t, weights, hidden_dim):
    """LSTM step that carries the previous state through PAD positions."""
    h_new, c_new = lstm_cell(x_t, h_prev, c_prev, weights, hidden_dim)
    m = ad.Tensor(mask_t[:, None])
    keep = ad.Tensor(1.0 - mask_t[:, None])
    h = ad.add(ad.mul(h_new, m), ad.mul(h_prev, keep))
    c = ad.add(ad.mul(c_new, m), ad.mul(c_prev, keep))
    return h, c


def _run_direction(inputs, mask, weights, hidden_dim, reverse):
    batch = inputs[0].shape[0]
    h = ad.Tensor(np.zeros((batch, hidden_dim)))
    c = ad.Tensor(np.zeros((batch, hidden_dim)))
    steps = range(len(inputs) - 1, -1, -1) if reverse else range(len(inputs))
    outputs = [None] * len(inputs)
    for t in steps:
        h, c = _masked_step(inputs[t], h, c, mask[:, t], weights, hidden_dim)
        outputs[t] = h
    return outputs, h


def bilstm(inputs, mask, layer_weights, hidden_dim, interlayer_dropout=0.0,
           training=False, rng=None):
    """Masked bidirectional LSTM over a list of per-timestep input tensors.

    ``layer_weights`` is a list of {"fwd": weights, "bwd": weights} dicts,
    one per layer. Returns the final hidden state of every (layer,
    direction) pair, concatenated: shape (batch, 2 * layers * hidden).
    The forward direction's final state is taken at the last real position
    via mask carry-through; the backward direction's at the first.
    """
    mask = np.asarray(mask, dtype=np.float64)
    if mask.ndim != 2 or mask.shape[1] != len(inputs):
        raise InvalidArgument("mask shape does not match sequence length")
    if (mask.sum(axis=1) == 0).any():
        raise InvalidArgument("every sequence needs at least one real position")

    finals = []
    current = inputs
    for layer_idx, weights in enumerate(layer_weights):
        fwd_out, fwd_final = _run_direction(current, mask, weights["fwd"],
                                            hidden_dim, reverse=False)
        bwd_out, bwd_final = _run_direction(current, mask, weights["bwd"],
                                            hidden_dim, reverse=True)
        finals.extend([fwd_final, bwd_final])
        if layer_idx + 1 < len(layer_weights):
            nxt = []
            for f, b in zip(fwd_out, bwd_out):
                step = ad.concat([f, b], axis=1)
                if training and interlayer_dropout > 0:
                    step = ad.dropout(step, interlayer_dropout, training, rng)
                nxt.append(step)
            current = nxt
    return ad.concat(finals, axis=1)
