import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from airgraph import data as D
from airgraph import pipeline
from airgraph.autodiff import Tape, Value
from airgraph.model import ModelConfig, VariantKind, init_model, run_forward
from airgraph.training import (
    RmsProp,
    TrainConfig,
    batch_arrays,
    evaluate,
    mae_rmse,
    mse_loss,
    predict_windows,
    summarize_reports,
    train,
    window_targets,
    write_history_csv,
    write_metrics_csv,
)


class TestMseLoss:
    def test_perfect_prediction_is_zero(self):
        pred = [Value(np.array([[1.0], [2.0]]))]
        target = np.array([[1.0, 2.0]])
        assert float(mse_loss(pred, target).data) == 0.0

    def test_unit_residual_gives_one(self):
        pred = [Value(np.ones((3, 1))) for _ in range(2)]
        target = np.zeros((2, 3))
        assert float(mse_loss(pred, target).data) == 1.0

    def test_two_node_fixture(self):
        # residuals 1 and 3 -> (1 + 9) / 2 = 5
        pred = [Value(np.array([[1.0], [3.0]]))]
        target = np.zeros((1, 2))
        assert float(mse_loss(pred, target).data) == 5.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            mse_loss([Value(np.zeros((2, 1)))], np.zeros((2, 2)))

    def test_matches_two_loop_reference(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            horizon, n = rng.integers(1, 5), rng.integers(1, 6)
            preds = [Value(rng.normal(size=(n, 1))) for _ in range(horizon)]
            targets = rng.normal(size=(horizon, n))
            total = 0.0
            for t in range(horizon):
                acc = 0.0
                for i in range(n):
                    acc += (preds[t].data[i, 0] - targets[t, i]) ** 2
                total += acc / n
            ref = total / horizon
            assert_allclose(float(mse_loss(preds, targets).data), ref, atol=1e-12)

    def test_gradient_flows(self):
        pred_value = Value(np.array([[2.0], [0.0]]))
        with Tape() as tape:
            loss = mse_loss([pred_value], np.zeros((1, 2)))
        tape.backward(loss)
        # d/dp mean(p^2) = 2p / n
        assert_allclose(pred_value.grad, [[2.0], [0.0]], atol=1e-12)


class TestRmsProp:
    def config(self, **kw):
        defaults = dict(lr=5e-4, weight_decay=0.0, rmsprop_rho=0.9, rmsprop_eps=1e-8)
        defaults.update(kw)
        return TrainConfig(**defaults)

    def test_zero_gradient_and_zero_decay_leave_parameters(self):
        p = Value(np.array([1.0, -2.0]))
        opt = RmsProp([p], self.config())
        p.grad = np.zeros(2)
        opt.step()
        assert_array_equal(p.data, [1.0, -2.0])

    def test_first_step_magnitude(self):
        p = Value(np.array([0.0]))
        opt = RmsProp([p], self.config())
        p.grad = np.array([1.0])
        opt.step()
        expected = -5e-4 / (math.sqrt(0.1) + 1e-8)
        assert_allclose(p.data, [expected], rtol=1e-12)
        assert_allclose(p.data, [-1.5811e-3], rtol=1e-4)

    def test_decay_only_step(self):
        p = Value(np.array([1.0]))
        opt = RmsProp([p], self.config(weight_decay=5e-4))
        p.grad = np.array([0.0])
        opt.step()
        assert_allclose(p.data, [1.0 - 5e-4 * 5e-4], rtol=1e-15)
        assert p.data[0] == 0.99999975

    def test_missing_grad_treated_as_zero(self):
        p = Value(np.array([3.0]))
        opt = RmsProp([p], self.config())
        opt.step()
        assert_array_equal(p.data, [3.0])


@pytest.fixture(scope="module")
def prepared_small():
    stations = D.make_synthetic_stations(6, seed=31)
    from airgraph.geo import build_topology, project_stations

    topology = build_topology(stations)
    coords = project_stations(stations)
    cfg = D.SynthConfig(n_steps=160, seed=32, n_sources=2)
    ds, _ = D.synth_advection(stations, topology, coords, cfg)
    spec = D.fraction_split_spec(ds, 0.6, 0.2)
    return pipeline.prepare(stations, ds, spec)


def small_model(prepared, seed=0, kind=VariantKind.AEA_WIND, horizon=3):
    config = ModelConfig(
        kind=kind, horizon=horizon, hidden_edge=8, hidden_state=8, seed=seed
    )
    return init_model(
        config, prepared.topology, prepared.stations.ids, prepared.norm
    )


class TestBatchArrays:
    def test_layout_matches_windows(self, prepared_small):
        inputs = prepared_small.inputs["train"]
        starts = np.array([0, 5])
        x0, s, z, targets = batch_arrays(inputs, starts, 3)
        n = inputs.x.shape[1]
        assert x0.shape == (2 * n, 1)
        assert_array_equal(x0[:n, 0], inputs.x[0])
        assert_array_equal(x0[n:, 0], inputs.x[5])
        assert_array_equal(targets[0, :n], inputs.x[1])
        assert_array_equal(targets[2, n:], inputs.x[8])
        assert_array_equal(s[1, n:], inputs.s[7])
        assert_array_equal(z[0, z.shape[1] // 2 :], inputs.z[6])


class TestTrainLoop:
    def test_constant_validation_stops_at_patience_boundary(self, prepared_small):
        # lr tiny enough to freeze parameters: validation never improves
        model = small_model(prepared_small, seed=1)
        zero_state = {k: np.zeros_like(v) for k, v in model.get_state().items()}
        model.set_state(zero_state)
        cfg = TrainConfig(
            batch_size=16, max_epochs=50, early_stop_patience=10, lr=1e-30, seed=1
        )
        result = train(
            model, prepared_small.inputs["train"], prepared_small.inputs["val"], cfg
        )
        assert result.stopped_epoch == 11
        assert result.best_epoch == 1
        vals = [h.val_mse for h in result.history]
        assert len(set(vals)) == 1

    def test_runs_all_epochs_when_patience_not_triggered(self, prepared_small):
        model = small_model(prepared_small, seed=2)
        cfg = TrainConfig(
            batch_size=16, max_epochs=4, early_stop_patience=10, lr=5e-4, seed=2
        )
        result = train(
            model, prepared_small.inputs["train"], prepared_small.inputs["val"], cfg
        )
        assert result.stopped_epoch == 4
        assert len(result.history) == 4

    def test_training_reduces_loss(self, prepared_small):
        model = small_model(prepared_small, seed=3)
        cfg = TrainConfig(batch_size=16, max_epochs=5, lr=1e-3, seed=3)
        result = train(
            model, prepared_small.inputs["train"], prepared_small.inputs["val"], cfg
        )
        assert result.history[4].train_mse < result.history[0].train_mse

    def test_best_parameters_restored(self, prepared_small):
        model = small_model(prepared_small, seed=4)
        cfg = TrainConfig(batch_size=16, max_epochs=6, lr=2e-3, seed=4)
        result = train(
            model, prepared_small.inputs["train"], prepared_small.inputs["val"], cfg
        )
        from airgraph.training import _dataset_mse

        restored_val = _dataset_mse(
            model, prepared_small.inputs["val"], model.config.horizon
        )
        assert_allclose(restored_val, result.best_val_mse, rtol=1e-12)
        assert result.best_val_mse == min(h.val_mse for h in result.history)

    def test_deterministic_history(self, prepared_small):
        histories = []
        for _ in range(2):
            model = small_model(prepared_small, seed=5)
            cfg = TrainConfig(batch_size=16, max_epochs=3, lr=1e-3, seed=5)
            result = train(
                model,
                prepared_small.inputs["train"],
                prepared_small.inputs["val"],
                cfg,
            )
            histories.append([(h.train_mse, h.val_mse) for h in result.history])
        assert histories[0] == histories[1]

    def test_empty_dataset_rejected(self, prepared_small):
        model = small_model(prepared_small, seed=6)
        empty = D.ModelInputs(
            timestamps=prepared_small.inputs["train"].timestamps[:2],
            x_raw=prepared_small.inputs["train"].x_raw[:2],
            x=prepared_small.inputs["train"].x[:2],
            s=prepared_small.inputs["train"].s[:2],
            z=prepared_small.inputs["train"].z[:2],
        )
        with pytest.raises(ValueError):
            train(model, empty, prepared_small.inputs["val"], TrainConfig(seed=6))


class TestMetrics:
    def test_mae_rmse_fixture(self):
        mae, rmse = mae_rmse(np.array([2.0, 2.0, 5.0]), np.array([1.0, 2.0, 3.0]))
        assert mae == 1.0
        assert rmse == math.sqrt(5.0 / 3.0)

    def test_rmse_dominates_mae(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            pred = rng.normal(size=30)
            truth = rng.normal(size=30)
            mae, rmse = mae_rmse(pred, truth)
            assert rmse >= mae >= 0

    def test_perfect_model_scores_zero(self, prepared_small):
        # a zeroed model predicts the training mean; make the truth equal it
        model = small_model(prepared_small, seed=7, kind=VariantKind.STATIC)
        model.set_state({k: np.zeros_like(v) for k, v in model.get_state().items()})
        inputs = prepared_small.inputs["test"]
        flat = D.ModelInputs(
            timestamps=inputs.timestamps,
            x_raw=np.full_like(inputs.x_raw, model.norm.pm_mean),
            x=np.zeros_like(inputs.x),
            s=inputs.s,
            z=inputs.z,
        )
        report = evaluate(model, flat, horizons=(3,))
        assert report.per_horizon[3].mae == 0.0
        assert report.per_horizon[3].rmse == 0.0

    def test_pooling_matches_loop_reference(self, prepared_small):
        model = small_model(prepared_small, seed=8)
        inputs = prepared_small.inputs["test"]
        report = evaluate(model, inputs, horizons=(2, 3))
        preds = predict_windows(model, inputs, 3)
        truth = window_targets(inputs, 3)
        for h in (2, 3):
            abs_sum, sq_sum, count = 0.0, 0.0, 0
            for w in range(preds.shape[0]):
                for t in range(h):
                    for i in range(preds.shape[2]):
                        r = preds[w, t, i] - truth[w, t, i]
                        abs_sum += abs(r)
                        sq_sum += r * r
                        count += 1
            assert_allclose(report.per_horizon[h].mae, abs_sum / count, rtol=1e-12)
            assert_allclose(
                report.per_horizon[h].rmse, math.sqrt(sq_sum / count), rtol=1e-12
            )

    def test_pooling_invariant_to_window_order(self, prepared_small):
        model = small_model(prepared_small, seed=9)
        inputs = prepared_small.inputs["test"]
        preds = predict_windows(model, inputs, 3)
        truth = window_targets(inputs, 3)
        rng = np.random.default_rng(2)
        order = rng.permutation(preds.shape[0])
        mae_a, rmse_a = mae_rmse(preds, truth)
        mae_b, rmse_b = mae_rmse(preds[order], truth[order])
        assert_allclose(mae_a, mae_b, rtol=1e-12)
        assert_allclose(rmse_a, rmse_b, rtol=1e-12)

    def test_horizon_exceeding_split_rejected(self, prepared_small):
        model = small_model(prepared_small, seed=10)
        inputs = prepared_small.inputs["test"]
        with pytest.raises(ValueError):
            evaluate(model, inputs, horizons=(inputs.n_steps + 1,))

    def test_summarize_reports(self, prepared_small):
        model_a = small_model(prepared_small, seed=11)
        model_b = small_model(prepared_small, seed=12)
        inputs = prepared_small.inputs["test"]
        rows = summarize_reports(
            [evaluate(model_a, inputs, (3,)), evaluate(model_b, inputs, (3,))]
        )
        assert len(rows) == 1
        h, mae_mean, mae_std, rmse_mean, rmse_std = rows[0]
        assert h == 3
        assert mae_std >= 0 and rmse_std >= 0


class TestExports:
    def test_history_csv(self, tmp_path, prepared_small):
        model = small_model(prepared_small, seed=13)
        cfg = TrainConfig(batch_size=16, max_epochs=2, seed=13)
        result = train(
            model, prepared_small.inputs["train"], prepared_small.inputs["val"], cfg
        )
        path = tmp_path / "history.csv"
        write_history_csv(result.history, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "epoch,train_mse,val_mse"
        assert len(lines) == 3

    def test_metrics_csv(self, tmp_path, prepared_small):
        model = small_model(prepared_small, seed=14)
        report = evaluate(model, prepared_small.inputs["test"], (3,))
        path = tmp_path / "metrics.csv"
        write_metrics_csv(report, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "horizon,mae,rmse"
        assert lines[1].startswith("3,")
