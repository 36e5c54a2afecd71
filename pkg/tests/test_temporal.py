import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from airgraph.autodiff import Value, finite_diff_check, hadamard, scale, sub, sum_all
from airgraph.temporal import GruParams, OutputHead, gru_step, readout
from oracles import dense_readout, scalar_gru


def make_gru(hidden, c_in, rng=None, scale_=0.5):
    size = (hidden + c_in, hidden)
    if rng is None:
        draw = lambda: np.zeros(size)
    else:
        draw = lambda: rng.normal(scale=scale_, size=size)
    bias = lambda: np.zeros(hidden) if rng is None else rng.normal(scale=0.1, size=hidden)
    return GruParams(
        w_update=Value(draw()),
        b_update=Value(bias()),
        w_reset=Value(draw()),
        b_reset=Value(bias()),
        w_cand=Value(draw()),
        b_cand=Value(bias()),
    )


class TestGruStep:
    def test_all_zero_parameters_halve_previous_state(self):
        hidden, c_in = 3, 5
        params = make_gru(hidden, c_in)
        h_prev = np.array([[1.0, -2.0, 4.0], [0.5, 0.0, -1.0]])
        out = gru_step(
            Value(np.zeros((2, 4))), Value(np.zeros((2, 1))), Value(h_prev), params
        )
        assert_array_equal(out.data, 0.5 * h_prev)

    def test_zero_state_and_zero_parameters_stay_zero(self):
        params = make_gru(2, 3)
        out = gru_step(
            Value(np.zeros((1, 2))), Value(np.zeros((1, 1))), Value(np.zeros((1, 2))),
            params,
        )
        assert_array_equal(out.data, np.zeros((1, 2)))

    def test_matches_scalar_reference(self):
        rng = np.random.default_rng(21)
        hidden = 4
        zeta = rng.normal(size=(2, 3))
        eps = rng.normal(size=(2, 9))
        c_in = zeta.shape[1] + eps.shape[1]
        params = make_gru(hidden, c_in, rng)
        h_prev = rng.normal(size=(2, hidden))
        out = gru_step(Value(zeta), Value(eps), Value(h_prev), params)
        ref = scalar_gru(zeta, eps, h_prev, params)
        assert_allclose(out.data, ref, atol=1e-12)

    def test_width_mismatch(self):
        params = make_gru(3, 5)
        with pytest.raises(ValueError):
            gru_step(
                Value(np.zeros((2, 4))), Value(np.zeros((2, 4))),
                Value(np.zeros((2, 3))), params,
            )

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=40, deadline=None)
    def test_gates_open_and_update_is_convex(self, seed):
        rng = np.random.default_rng(seed)
        hidden = int(rng.integers(1, 6))
        rows = int(rng.integers(1, 8))
        zeta = rng.uniform(-2, 2, (rows, 3))
        eps = rng.uniform(-2, 2, (rows, 4))
        params = make_gru(hidden, 7, rng, scale_=0.8)
        h_prev = rng.uniform(-2, 2, (rows, hidden))

        hc = np.concatenate([h_prev, zeta, eps], axis=1)
        q = 1 / (1 + np.exp(-(hc @ params.w_update.data + params.b_update.data)))
        r = 1 / (1 + np.exp(-(hc @ params.w_reset.data + params.b_reset.data)))
        assert np.all((q > 0) & (q < 1))
        assert np.all((r > 0) & (r < 1))

        out = gru_step(Value(zeta), Value(eps), Value(h_prev), params).data
        rc = np.concatenate([r * h_prev, zeta, eps], axis=1)
        cand = np.tanh(rc @ params.w_cand.data + params.b_cand.data)
        assert np.all(np.abs(cand) < 1)
        lo = np.minimum(h_prev, cand) - 1e-12
        hi = np.maximum(h_prev, cand) + 1e-12
        assert np.all((out >= lo) & (out <= hi))


class TestReadout:
    def test_zero_head_gives_zero(self):
        head = OutputHead(w=Value(np.zeros((3, 1))), b=Value(np.zeros(1)))
        out = readout(Value(np.ones((4, 3))), head)
        assert_array_equal(out.data, np.zeros((4, 1)))

    def test_bias_only_head(self):
        head = OutputHead(w=Value(np.zeros((3, 1))), b=Value(np.array([2.5])))
        out = readout(Value(np.random.default_rng(0).normal(size=(4, 3))), head)
        assert_array_equal(out.data, np.full((4, 1), 2.5))

    def test_matches_dense_reference(self):
        rng = np.random.default_rng(22)
        head = OutputHead(w=Value(rng.normal(size=(5, 1))), b=Value(rng.normal(size=1)))
        h = rng.normal(size=(6, 5))
        out = readout(Value(h), head)
        assert_allclose(out.data[:, 0], dense_readout(h, head), atol=1e-10)


class TestGradients:
    def test_two_step_unroll_finite_difference(self):
        rng = np.random.default_rng(23)
        hidden = 3
        zeta = [rng.normal(size=(2, 2)) for _ in range(2)]
        eps = [rng.normal(size=(2, 9)) for _ in range(2)]
        params = make_gru(hidden, 11, rng)
        head = OutputHead(
            w=Value(rng.normal(scale=0.5, size=(hidden, 1))),
            b=Value(np.zeros(1)),
        )
        target = rng.normal(size=(2, 1))

        def f(plist):
            h = Value(np.zeros((2, hidden)))
            for t in range(2):
                h = gru_step(Value(zeta[t]), Value(eps[t]), h, params)
            pred = readout(h, head)
            diff = sub(pred, Value(target))
            return scale(sum_all(hadamard(diff, diff)), 0.5)

        plist = [
            params.w_update, params.b_update,
            params.w_reset, params.b_reset,
            params.w_cand, params.b_cand,
            head.w, head.b,
        ]
        assert finite_diff_check(f, plist) < 1e-4
