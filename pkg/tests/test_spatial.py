import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from airgraph.autodiff import Value
from airgraph.spatial import (
    MESSAGE_INPUT_WIDTH,
    FusionParams,
    MpnnParams,
    aggregate_directed,
    edge_messages,
    fuse_graphs,
    node_embed,
)
from oracles import (
    dense_aggregate,
    dense_fuse,
    dense_messages,
    random_symmetric_topology,
)


def random_mpnn(rng, hidden=4):
    return MpnnParams(
        phi_w=Value(rng.normal(scale=0.5, size=(MESSAGE_INPUT_WIDTH, hidden))),
        phi_b=Value(rng.normal(scale=0.1, size=hidden)),
        omega_w=Value(rng.normal(scale=0.5, size=(hidden, hidden))),
        omega_b=Value(rng.normal(scale=0.1, size=hidden)),
    )


def zero_mpnn(hidden=4):
    return MpnnParams(
        phi_w=Value(np.zeros((MESSAGE_INPUT_WIDTH, hidden))),
        phi_b=Value(np.zeros(hidden)),
        omega_w=Value(np.zeros((hidden, hidden))),
        omega_b=Value(np.zeros(hidden)),
    )


class TestNodeEmbed:
    def test_concatenates_prediction_with_features(self):
        out = node_embed(Value([[0.5]]), Value(np.zeros((1, 8))))
        assert_array_equal(out.data, [[0.5] + [0.0] * 8])

    def test_single_node_shape(self):
        out = node_embed(Value(np.ones((1, 1))), Value(np.ones((1, 8))))
        assert out.data.shape == (1, 9)

    def test_wrong_feature_width(self):
        with pytest.raises(ValueError):
            node_embed(Value(np.ones((2, 1))), Value(np.ones((2, 7))))


class TestEdgeMessages:
    def test_zero_parameters_give_zero_messages(self):
        rng = np.random.default_rng(0)
        eps = Value(rng.normal(size=(3, 9)))
        src = np.array([0, 1])
        dst = np.array([1, 0])
        z = Value(rng.normal(size=(2, 1)))
        m = edge_messages(eps, z, src, dst, zero_mpnn())
        assert_array_equal(m.data, np.zeros((2, 4)))

    def test_empty_edge_list(self):
        eps = Value(np.ones((3, 9)))
        m = edge_messages(
            eps, Value(np.zeros((0, 1))), np.zeros(0, np.intp), np.zeros(0, np.intp),
            zero_mpnn(),
        )
        assert m.data.shape == (0, 4)

    def test_matches_dense_reference_on_random_graph(self):
        rng = np.random.default_rng(7)
        src, dst = random_symmetric_topology(rng, 3, p_edge=0.9)
        params = random_mpnn(rng)
        eps_data = rng.normal(size=(3, 9))
        z_data = rng.normal(size=(len(src), 1))
        m = edge_messages(Value(eps_data), Value(z_data), src, dst, params)
        weights = {
            (int(i), int(j)): z_data[k, 0] for k, (i, j) in enumerate(zip(src, dst))
        }
        ref = dense_messages(eps_data, weights, params.phi_w.data, params.phi_b.data)
        for k, (i, j) in enumerate(zip(src, dst)):
            assert_allclose(m.data[k], ref[(int(i), int(j))], atol=1e-10)

    def test_edge_weight_length_mismatch(self):
        eps = Value(np.ones((3, 9)))
        with pytest.raises(ValueError):
            edge_messages(
                eps, Value(np.zeros((3, 1))), np.array([0, 1]), np.array([1, 0]),
                zero_mpnn(),
            )

    def test_zero_weight_equals_zeroed_weight_column(self):
        # the edge weight enters only through the last input column
        rng = np.random.default_rng(11)
        src, dst = random_symmetric_topology(rng, 4, p_edge=0.8)
        params = random_mpnn(rng)
        eps = Value(rng.normal(size=(4, 9)))
        z_zero = Value(np.zeros((len(src), 1)))
        m_zero = edge_messages(eps, z_zero, src, dst, params)

        ablated = MpnnParams(
            phi_w=Value(
                np.concatenate(
                    [params.phi_w.data[:-1], np.zeros((1, params.hidden))], axis=0
                )
            ),
            phi_b=params.phi_b,
            omega_w=params.omega_w,
            omega_b=params.omega_b,
        )
        z_random = Value(rng.normal(size=(len(src), 1)))
        m_ablated = edge_messages(eps, z_random, src, dst, ablated)
        assert_allclose(m_zero.data, m_ablated.data, atol=1e-12)


class TestAggregateDirected:
    def test_isolated_node_gets_bias(self):
        rng = np.random.default_rng(3)
        params = random_mpnn(rng)
        m = Value(np.zeros((0, 4)))
        out = aggregate_directed(m, np.zeros(0, np.intp), np.zeros(0, np.intp), 2, params)
        expected = np.tile(params.omega_b.data, (2, 1))
        assert_allclose(out.data, expected, atol=1e-12)

    def test_symmetric_messages_cancel(self):
        rng = np.random.default_rng(4)
        params = random_mpnn(rng)
        src = np.array([0, 1])
        dst = np.array([1, 0])
        row = rng.normal(size=4)
        m = Value(np.stack([row, row]))
        out = aggregate_directed(m, src, dst, 2, params)
        expected = np.tile(params.omega_b.data, (2, 1))
        assert_allclose(out.data, expected, atol=1e-12)

    def test_line_graph_matches_dense_reference(self):
        rng = np.random.default_rng(5)
        src = np.array([0, 1, 1, 2])
        dst = np.array([1, 0, 2, 1])
        params = random_mpnn(rng)
        m_data = rng.normal(size=(4, 4))
        out = aggregate_directed(Value(m_data), src, dst, 3, params)
        messages = {
            (int(i), int(j)): m_data[k] for k, (i, j) in enumerate(zip(src, dst))
        }
        ref = dense_aggregate(messages, 3, params.omega_w.data, params.omega_b.data)
        assert_allclose(out.data, ref, atol=1e-10)

    def test_net_flow_sums_to_zero(self):
        # every edge message appears once positive and once negative
        for seed in range(20):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(2, 9))
            src, dst = random_symmetric_topology(rng, n)
            m = rng.normal(size=(len(src), 5))
            inflow = np.zeros((n, 5))
            outflow = np.zeros((n, 5))
            np.add.at(inflow, dst, m)
            np.add.at(outflow, src, m)
            total = (inflow - outflow).sum(axis=0)
            assert_allclose(total, np.zeros(5), atol=1e-12)


class TestFuseGraphs:
    def zero_fusion(self, hidden=4):
        return FusionParams(
            psi_w=Value(np.zeros((2 * hidden, hidden))),
            psi_b=Value(np.zeros(hidden)),
        )

    def test_zero_everything_gives_zero(self):
        out = fuse_graphs(
            Value(np.zeros((3, 4))), Value(np.zeros((3, 4))), self.zero_fusion()
        )
        assert_array_equal(out.data, np.zeros((3, 4)))

    def test_block_selection_weights(self):
        rng = np.random.default_rng(6)
        hidden = 4
        e_wind = rng.normal(size=(3, hidden))
        e_other = rng.normal(size=(3, hidden))
        params = FusionParams(
            psi_w=Value(np.concatenate([np.eye(hidden), np.zeros((hidden, hidden))])),
            psi_b=Value(np.zeros(hidden)),
        )
        out = fuse_graphs(Value(e_wind), Value(e_other), params)
        assert_allclose(out.data, np.tanh(e_wind), atol=1e-12)

    def test_matches_dense_reference(self):
        rng = np.random.default_rng(8)
        hidden = 4
        params = FusionParams(
            psi_w=Value(rng.normal(size=(2 * hidden, hidden))),
            psi_b=Value(rng.normal(size=hidden)),
        )
        a = rng.normal(size=(5, hidden))
        b = rng.normal(size=(5, hidden))
        out = fuse_graphs(Value(a), Value(b), params)
        ref = dense_fuse(a, b, params.psi_w.data, params.psi_b.data)
        assert_allclose(out.data, ref, atol=1e-10)

    def test_width_mismatch(self):
        with pytest.raises(ValueError):
            fuse_graphs(
                Value(np.zeros((3, 4))), Value(np.zeros((3, 5))), self.zero_fusion()
            )


class TestPermutationEquivariance:
    def test_relabeling_nodes_permutes_output(self):
        # node i becomes perm[i]; outputs must follow the same relabeling
        rng = np.random.default_rng(12)
        n = 6
        src, dst = random_symmetric_topology(rng, n, p_edge=0.6)
        params = random_mpnn(rng)
        eps_data = rng.normal(size=(n, 9))
        z_data = rng.normal(size=(len(src), 1))

        def convolve(eps_arr, s, d, z_arr):
            m = edge_messages(Value(eps_arr), Value(z_arr), s, d, params)
            return aggregate_directed(m, s, d, n, params).data

        base = convolve(eps_data, src, dst, z_data)
        for _ in range(5):
            perm = rng.permutation(n)
            inv = np.argsort(perm)
            src_p = perm[src]
            dst_p = perm[dst]
            order = np.lexsort((dst_p, src_p))
            out = convolve(eps_data[inv], src_p[order], dst_p[order], z_data[order])
            assert_allclose(out[perm], base, atol=1e-10)


class TestSparseDenseEquivalence:
    def test_random_graphs_up_to_eight_nodes(self):
        for seed in range(30):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(2, 9))
            src, dst = random_symmetric_topology(rng, n)
            params = random_mpnn(rng, hidden=3)
            eps_data = rng.normal(size=(n, 9))
            z_data = rng.normal(size=(len(src), 1))
            m = edge_messages(Value(eps_data), Value(z_data), src, dst, params)
            agg = aggregate_directed(m, src, dst, n, params)
            weights = {
                (int(i), int(j)): z_data[k, 0]
                for k, (i, j) in enumerate(zip(src, dst))
            }
            ref_m = dense_messages(
                eps_data, weights, params.phi_w.data, params.phi_b.data
            )
            ref_e = dense_aggregate(ref_m, n, params.omega_w.data, params.omega_b.data)
            assert_allclose(agg.data, ref_e, atol=1e-10)
