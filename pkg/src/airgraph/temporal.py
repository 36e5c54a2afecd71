"""Gated recurrence over the graph-convolution output, plus the readout.

One step: the convolution result and the node embedding are
concatenated into the step input c; an update gate q and a reset gate r
(both sigmoid) control how the candidate state (tanh) mixes with the
previous hidden state: h = (1 - q) * h_prev + q * h_cand. The readout
maps hidden state to one output per node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Value,
    add,
    add_bias,
    concat,
    hadamard,
    matmul,
    sigmoid,
    sub,
    tanh,
)


@dataclass
class GruParams:
    """Gate and candidate transforms, each (h + c_in, h) plus bias.

    Biases are zero-initialized, so the bias-free textbook form is the
    starting point.
    """

    w_update: Value
    b_update: Value
    w_reset: Value
    b_reset: Value
    w_cand: Value
    b_cand: Value

    @property
    def hidden(self) -> int:
        return self.w_update.data.shape[1]


@dataclass
class OutputHead:
    """Linear map from hidden state to a single output per node."""

    w: Value  # (h, 1)
    b: Value  # (1,)


def gru_step(zeta: Value, eps: Value, h_prev: Value, params: GruParams) -> Value:
    """One recurrence step over all nodes at once.

    c = [zeta, eps]; q = sigmoid([h_prev, c] W_q); r likewise;
    candidate = tanh([r * h_prev, c] W_c); h = (1-q)*h_prev + q*candidate.
    """
    c = concat([zeta, eps])
    hc = concat([h_prev, c])
    q = sigmoid(add_bias(matmul(hc, params.w_update), params.b_update))
    r = sigmoid(add_bias(matmul(hc, params.w_reset), params.b_reset))
    rc = concat([hadamard(r, h_prev), c])
    cand = tanh(add_bias(matmul(rc, params.w_cand), params.b_cand))
    ones = Value(np.ones_like(q.data))
    return add(hadamard(sub(ones, q), h_prev), hadamard(q, cand))


def readout(h: Value, head: OutputHead) -> Value:
    """Per-node scalar output, in normalized units."""
    return add_bias(matmul(h, head.w), head.b)
