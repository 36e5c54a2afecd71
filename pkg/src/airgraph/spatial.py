"""Directed message passing over a weighted edge list.

Each directed edge (i, j) carries a message built from the endpoint
embeddings and the edge weight; a node's convolution output is the net
flow, incoming messages minus outgoing messages, passed through a
linear layer. Two edge-weight channels (wind-derived and learned) can
be fused by concatenation through one more layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Value,
    add_bias,
    concat,
    gather_nodes,
    matmul,
    scatter_add,
    sub,
    tanh,
)

NODE_FEATURES = 8
NODE_EMBED_WIDTH = 1 + NODE_FEATURES  # previous PM2.5 plus features
EDGE_FEATURE_WIDTH = 1
MESSAGE_INPUT_WIDTH = 2 * NODE_EMBED_WIDTH + EDGE_FEATURE_WIDTH


@dataclass
class MpnnParams:
    """Message layer (tanh) and net-flow layer (identity), one layer each.

    phi_w is (2*9+1, h_e); omega_w is (h_e, h_e); biases match outputs.
    """

    phi_w: Value
    phi_b: Value
    omega_w: Value
    omega_b: Value

    @property
    def hidden(self) -> int:
        return self.phi_w.data.shape[1]


@dataclass
class FusionParams:
    """Combines two node embeddings of width h_e into one, with tanh."""

    psi_w: Value  # (2*h_e, h_e)
    psi_b: Value


def node_embed(x_prev: Value, s_t: Value) -> Value:
    """Per-node embedding: previous (predicted) PM2.5 column next to the
    current features, giving an (n, 9) matrix."""
    if x_prev.data.ndim != 2 or x_prev.data.shape[1] != 1:
        raise ValueError("x_prev must be a column vector (n, 1)")
    if s_t.data.ndim != 2 or s_t.data.shape[1] != NODE_FEATURES:
        raise ValueError(f"node features must be (n, {NODE_FEATURES})")
    return concat([x_prev, s_t])


def edge_messages(
    eps: Value, z_t: Value, src: np.ndarray, dst: np.ndarray, params: MpnnParams
) -> Value:
    """Message on each directed edge: tanh of a linear map over
    [source embedding, destination embedding, edge weight]."""
    if z_t.data.shape != (len(src), EDGE_FEATURE_WIDTH):
        raise ValueError(
            f"edge weights must be ({len(src)}, {EDGE_FEATURE_WIDTH}), "
            f"got {z_t.data.shape}"
        )
    eps_src = gather_nodes(eps, src)
    eps_dst = gather_nodes(eps, dst)
    stacked = concat([eps_src, eps_dst, z_t])
    return tanh(add_bias(matmul(stacked, params.phi_w), params.phi_b))


def aggregate_directed(
    m: Value, src: np.ndarray, dst: np.ndarray, n_nodes: int, params: MpnnParams
) -> Value:
    """Net per-node flow, inflow minus outflow, through the linear layer.

    Summing the pre-layer net flow over all nodes is zero by
    construction: every edge message appears once with each sign.
    """
    inflow = scatter_add(m, dst, n_nodes)
    outflow = scatter_add(m, src, n_nodes)
    net = sub(inflow, outflow)
    return add_bias(matmul(net, params.omega_w), params.omega_b)


def fuse_graphs(e_first: Value, e_second: Value, params: FusionParams) -> Value:
    """Blend two per-node embeddings by concatenation through one tanh layer."""
    if e_first.data.shape != e_second.data.shape:
        raise ValueError(
            f"embedding widths differ: {e_first.data.shape} vs {e_second.data.shape}"
        )
    stacked = concat([e_first, e_second])
    return tanh(add_bias(matmul(stacked, params.psi_w), params.psi_b))
