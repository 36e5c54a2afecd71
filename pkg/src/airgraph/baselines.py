"""Historical-average baseline.

Predictions are the training-period mean of the matching weekly slot
(7 days x 8 three-hour bins per station), so they carry no dependence
on the forecast lead time. Slots never observed in training fall back
to the station's global training mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import Dataset, make_windows
from .training import HorizonMetrics, MetricsReport, mae_rmse

N_SLOTS = 56  # 7 weekdays x 8 three-hour bins


@dataclass
class WeeklyProfile:
    slot_mean: np.ndarray  # (56, N), NaN where a slot was never observed
    slot_count: np.ndarray  # (56, N)
    station_mean: np.ndarray  # (N,) global training mean fallback

    @property
    def empty_slots(self) -> np.ndarray:
        return self.slot_count == 0


def weekly_slots(timestamps: np.ndarray) -> np.ndarray:
    """Slot index weekday*8 + hour//3 for each timestamp."""
    days = timestamps.astype("datetime64[D]")
    weekday = (days.astype(np.int64) + 3) % 7  # epoch day 0 was a Thursday
    hours = (timestamps - days).astype("timedelta64[h]").astype(np.int64)
    return (weekday * 8 + hours // 3).astype(np.intp)


def fit_ha(train: Dataset) -> WeeklyProfile:
    if train.n_steps == 0:
        raise ValueError("cannot fit the baseline on an empty split")
    slots = weekly_slots(train.timestamps)
    n = train.n_stations
    sums = np.zeros((N_SLOTS, n))
    counts = np.zeros((N_SLOTS, n))
    np.add.at(sums, slots, train.x)
    np.add.at(counts, slots, np.ones_like(train.x))
    with np.errstate(invalid="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return WeeklyProfile(
        slot_mean=means,
        slot_count=counts.astype(np.int64),
        station_mean=train.x.mean(axis=0),
    )


def predict_ha(profile: WeeklyProfile, timestamps: np.ndarray) -> np.ndarray:
    """(T, N) predictions: slot means, station mean where the slot is empty."""
    slots = weekly_slots(timestamps)
    preds = profile.slot_mean[slots]
    if np.isnan(preds).any():
        fallback = np.broadcast_to(profile.station_mean, preds.shape)
        preds = np.where(np.isnan(preds), fallback, preds)
    return preds


def evaluate_ha(
    profile: WeeklyProfile,
    x_raw: np.ndarray,
    timestamps: np.ndarray,
    horizons: Sequence[int] = (3, 6, 12, 24),
) -> MetricsReport:
    """Baseline metrics pooled exactly like the model evaluation:
    over nodes, stride-1 windows, and lead steps up to each horizon."""
    horizons = sorted(set(int(h) for h in horizons))
    t_max = horizons[-1]
    starts = make_windows(x_raw.shape[0], t_max)
    idx = starts[:, None] + 1 + np.arange(t_max)[None, :]
    preds_flat = predict_ha(profile, timestamps)
    preds = preds_flat[idx]
    truth = x_raw[idx]
    report = MetricsReport()
    for h in horizons:
        mae, rmse = mae_rmse(preds[:, :h, :], truth[:, :h, :])
        report.per_horizon[h] = HorizonMetrics(mae=mae, rmse=rmse)
    return report
