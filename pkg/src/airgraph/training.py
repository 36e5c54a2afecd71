"""Loss, optimizer, training loop with early stopping, and metrics.

Training minimizes the mean squared error in normalized units over
stride-1 windows, batched by stacking windows along the node axis.
Evaluation reports MAE and RMSE in physical units, pooled over nodes,
windows, and every lead step up to each requested horizon.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .autodiff import Tape, Value, hadamard, scale, sub, sum_all, zero_grad
from .autodiff import add as v_add
from .data import ModelInputs, denormalize_pm, make_windows
from .model import GraphForecaster, run_forward
from .seeding import STREAM_SHUFFLE, rng_stream


class NumericalError(RuntimeError):
    """Raised when a NaN or Inf shows up during training or evaluation."""


@dataclass
class TrainConfig:
    batch_size: int = 32
    max_epochs: int = 50
    early_stop_patience: int = 10
    lr: float = 5e-4
    weight_decay: float = 5e-4
    rmsprop_rho: float = 0.9
    rmsprop_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.batch_size, self.max_epochs, self.early_stop_patience) < 1:
            raise ValueError("batch size, epochs, and patience must be positive")
        if min(self.lr, self.rmsprop_rho, self.rmsprop_eps) <= 0:
            raise ValueError("lr, rho, and eps must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight decay must be nonnegative")


def mse_loss(pred_steps: Sequence[Value], targets: np.ndarray) -> Value:
    """Mean over steps of the per-step mean squared residual.

    ``pred_steps`` holds T column vectors (rows, 1); ``targets`` is
    (T, rows) in the same normalized units.
    """
    horizon = len(pred_steps)
    if targets.shape[0] != horizon:
        raise ValueError(
            f"targets have {targets.shape[0]} steps for {horizon} predictions"
        )
    total: Value | None = None
    for t, pred in enumerate(pred_steps):
        rows = pred.data.shape[0]
        if targets.shape[1] != rows:
            raise ValueError("target width does not match predictions")
        diff = sub(pred, Value(targets[t][:, None]))
        term = scale(sum_all(hadamard(diff, diff)), 1.0 / rows)
        total = term if total is None else v_add(total, term)
    return scale(total, 1.0 / horizon)


class RmsProp:
    """Squared-gradient moving average update with decoupled weight decay.

    v <- rho*v + (1-rho)*g^2; theta <- theta - lr*g/(sqrt(v)+eps) - lr*wd*theta.
    """

    def __init__(self, params: Sequence[Value], config: TrainConfig) -> None:
        self.params = list(params)
        self.lr = config.lr
        self.rho = config.rmsprop_rho
        self.eps = config.rmsprop_eps
        self.weight_decay = config.weight_decay
        self.sq_avg = [np.zeros_like(p.data) for p in self.params]
        self.step_count = 0

    def step(self) -> None:
        self.step_count += 1
        for p, v in zip(self.params, self.sq_avg):
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            v *= self.rho
            v += (1.0 - self.rho) * g * g
            p.data -= self.lr * g / (np.sqrt(v) + self.eps)
            if self.weight_decay:
                p.data -= self.lr * self.weight_decay * p.data


@dataclass
class EpochStats:
    epoch: int
    train_mse: float
    val_mse: float


@dataclass
class TrainResult:
    history: list[EpochStats]
    best_epoch: int
    best_val_mse: float
    stopped_epoch: int


def batch_arrays(
    inputs: ModelInputs, starts: np.ndarray, horizon: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None, np.ndarray]:
    """Stack windows along the node axis for a block-diagonal rollout."""
    b = len(starts)
    idx = np.asarray(starts)[:, None] + 1 + np.arange(horizon)[None, :]
    n = inputs.x.shape[1]
    x0 = inputs.x[np.asarray(starts)].reshape(b * n, 1)
    targets = inputs.x[idx].transpose(1, 0, 2).reshape(horizon, b * n)
    s = inputs.s[idx].transpose(1, 0, 2, 3).reshape(horizon, b * n, -1)
    z = None
    if inputs.z is not None:
        z = inputs.z[idx].transpose(1, 0, 2).reshape(horizon, -1)
    return x0, s, z, targets


def _dataset_mse(
    model: GraphForecaster, inputs: ModelInputs, horizon: int, batch_size: int = 128
) -> float:
    """Mean window MSE in normalized units, computed without a tape."""
    starts = make_windows(inputs.n_steps, horizon)
    total = 0.0
    for lo in range(0, len(starts), batch_size):
        chunk = starts[lo : lo + batch_size]
        x0, s, z, targets = batch_arrays(inputs, chunk, horizon)
        steps = run_forward(model, x0, s, z, n_copies=len(chunk))
        loss = mse_loss(steps, targets)
        total += float(loss.data) * len(chunk)
    return total / len(starts)


def train(
    model: GraphForecaster,
    train_inputs: ModelInputs,
    val_inputs: ModelInputs,
    config: TrainConfig,
) -> TrainResult:
    """Mini-batch training with early stopping on validation MSE.

    Epochs iterate seeded shuffles of all training windows. After each
    epoch the validation MSE is computed; the best-validation parameters
    are kept and restored at the end. Stops when validation MSE has not
    improved for ``early_stop_patience`` consecutive epochs, or at
    ``max_epochs``.
    """
    horizon = model.config.horizon
    starts = make_windows(train_inputs.n_steps, horizon)
    make_windows(val_inputs.n_steps, horizon)  # validates the val split size
    params = [v for _, v in model.parameters()]
    optimizer = RmsProp(params, config)

    history: list[EpochStats] = []
    best_state = model.get_state()
    best_val = math.inf
    best_epoch = 0
    epochs_since_improvement = 0
    stopped_epoch = 0

    for epoch in range(1, config.max_epochs + 1):
        order = rng_stream(config.seed, STREAM_SHUFFLE, epoch).permutation(len(starts))
        epoch_loss = 0.0
        for lo in range(0, len(order), config.batch_size):
            chunk = starts[order[lo : lo + config.batch_size]]
            x0, s, z, targets = batch_arrays(train_inputs, chunk, horizon)
            with Tape() as tape:
                steps = run_forward(model, x0, s, z, n_copies=len(chunk))
                loss = mse_loss(steps, targets)
            loss_value = float(loss.data)
            if not math.isfinite(loss_value):
                raise NumericalError(f"training loss is not finite at epoch {epoch}")
            zero_grad(params)
            tape.backward(loss)
            optimizer.step()
            epoch_loss += loss_value * len(chunk)
        train_mse = epoch_loss / len(starts)
        val_mse = _dataset_mse(model, val_inputs, horizon)
        if not math.isfinite(val_mse):
            raise NumericalError(f"validation loss is not finite at epoch {epoch}")
        history.append(EpochStats(epoch=epoch, train_mse=train_mse, val_mse=val_mse))
        stopped_epoch = epoch
        if val_mse < best_val:
            best_val = val_mse
            best_epoch = epoch
            best_state = model.get_state()
            epochs_since_improvement = 0
        else:
            epochs_since_improvement += 1
            if epochs_since_improvement >= config.early_stop_patience:
                break

    model.set_state(best_state)
    return TrainResult(
        history=history,
        best_epoch=best_epoch,
        best_val_mse=best_val,
        stopped_epoch=stopped_epoch,
    )


# ── evaluation ───────────────────────────────────────────────────────


@dataclass
class HorizonMetrics:
    mae: float
    rmse: float


@dataclass
class MetricsReport:
    per_horizon: dict[int, HorizonMetrics] = field(default_factory=dict)

    def rows(self) -> list[tuple[int, float, float]]:
        return [
            (h, m.mae, m.rmse) for h, m in sorted(self.per_horizon.items())
        ]


def mae_rmse(pred: np.ndarray, truth: np.ndarray) -> tuple[float, float]:
    """Pooled mean absolute error and root mean squared error."""
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    resid = pred - truth
    mae = float(np.abs(resid).mean())
    rmse = float(np.sqrt((resid * resid).mean()))
    return mae, rmse


def predict_windows(
    model: GraphForecaster,
    inputs: ModelInputs,
    horizon: int,
    batch_size: int = 128,
) -> np.ndarray:
    """Denormalized rollouts for every stride-1 window: (windows, T, N)."""
    starts = make_windows(inputs.n_steps, horizon)
    n = inputs.x.shape[1]
    out = np.empty((len(starts), horizon, n))
    for lo in range(0, len(starts), batch_size):
        chunk = starts[lo : lo + batch_size]
        x0, s, z, _ = batch_arrays(inputs, chunk, horizon)
        steps = run_forward(model, x0, s, z, n_copies=len(chunk))
        block = np.stack(
            [v.data.reshape(len(chunk), n) for v in steps], axis=1
        )  # (b, T, N)
        out[lo : lo + len(chunk)] = block
    return denormalize_pm(model.norm, out)


def window_targets(inputs: ModelInputs, horizon: int) -> np.ndarray:
    """Raw (ug/m3) targets aligned with predict_windows output."""
    starts = make_windows(inputs.n_steps, horizon)
    idx = starts[:, None] + 1 + np.arange(horizon)[None, :]
    return inputs.x_raw[idx]


def evaluate(
    model: GraphForecaster,
    inputs: ModelInputs,
    horizons: Sequence[int] = (3, 6, 12, 24),
) -> MetricsReport:
    """MAE/RMSE in ug/m3 per horizon, pooled over nodes, windows, and
    all lead steps up to the horizon.

    Errors out when the split is too short for the largest horizon.
    """
    horizons = sorted(set(int(h) for h in horizons))
    if not horizons or horizons[0] < 1:
        raise ValueError("horizons must be positive")
    t_max = horizons[-1]
    preds = predict_windows(model, inputs, t_max)
    if not np.isfinite(preds).all():
        raise NumericalError("NaN or Inf in evaluation predictions")
    truth = window_targets(inputs, t_max)
    report = MetricsReport()
    for h in horizons:
        mae, rmse = mae_rmse(preds[:, :h, :], truth[:, :h, :])
        report.per_horizon[h] = HorizonMetrics(mae=mae, rmse=rmse)
    return report


def summarize_reports(
    reports: Sequence[MetricsReport],
) -> list[tuple[int, float, float, float, float]]:
    """Across-seed mean and std per horizon:
    (horizon, mae_mean, mae_std, rmse_mean, rmse_std)."""
    if not reports:
        raise ValueError("no reports to summarize")
    horizons = sorted(reports[0].per_horizon)
    rows = []
    for h in horizons:
        maes = np.array([r.per_horizon[h].mae for r in reports])
        rmses = np.array([r.per_horizon[h].rmse for r in reports])
        rows.append(
            (h, float(maes.mean()), float(maes.std()), float(rmses.mean()), float(rmses.std()))
        )
    return rows


# ── exports ──────────────────────────────────────────────────────────


def write_history_csv(history: Sequence[EpochStats], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_mse", "val_mse"])
        for row in history:
            writer.writerow([row.epoch, repr(row.train_mse), repr(row.val_mse)])


def write_metrics_csv(report: MetricsReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["horizon", "mae", "rmse"])
        for h, mae, rmse in report.rows():
            writer.writerow([h, repr(mae), repr(rmse)])
