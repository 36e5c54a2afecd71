"""Dataset schema, ingestion, splits, normalization, and a synthetic
advection generator.

Series are aligned 3-hourly grids: PM2.5 (T, N) plus 8 node features
(T, N, 8) in the order temperature, boundary-layer height, K index,
relative humidity, surface pressure, total precipitation, u wind,
v wind. The u/v columns are the same values the wind edge weights are
computed from.

The synthetic generator simulates mass transport on a station graph
with known per-edge coefficients, providing ground truth for
end-to-end checks of forecasting skill and edge-weight recovery.
"""

from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .geo import (
    GraphTopology,
    PlanarCoords,
    Station,
    StationTable,
    wind_edge_weights,
)
from .seeding import (
    STREAM_SYNTH_COEFF,
    STREAM_SYNTH_FEATURES,
    STREAM_SYNTH_INIT,
    STREAM_SYNTH_NOISE,
    STREAM_SYNTH_SOURCES,
    STREAM_SYNTH_WIND,
    rng_stream,
)

FEATURE_NAMES = ["temp", "pbl", "kindex", "rh", "sp", "precip", "u", "v"]
N_FEATURES = len(FEATURE_NAMES)
U_INDEX = FEATURE_NAMES.index("u")
V_INDEX = FEATURE_NAMES.index("v")
SERIES_COLUMNS = ["timestamp", "station_id", "pm25"] + FEATURE_NAMES

TIME_STEP = np.timedelta64(3, "h")


@dataclass
class Dataset:
    """Aligned station time series on a uniform 3-hour grid."""

    timestamps: np.ndarray  # (T,) datetime64[s]
    x: np.ndarray  # (T, N) PM2.5 in ug/m3
    s: np.ndarray  # (T, N, 8)
    stations: StationTable

    def __post_init__(self) -> None:
        t, n = self.x.shape
        if self.timestamps.shape != (t,):
            raise ValueError("timestamps do not match series length")
        if self.s.shape != (t, n, N_FEATURES):
            raise ValueError(f"feature array must be (T, N, {N_FEATURES})")
        if n != self.stations.n:
            raise ValueError("series width does not match the station table")

    @property
    def n_steps(self) -> int:
        return int(self.x.shape[0])

    @property
    def n_stations(self) -> int:
        return int(self.x.shape[1])

    @property
    def u(self) -> np.ndarray:
        return self.s[:, :, U_INDEX]

    @property
    def v(self) -> np.ndarray:
        return self.s[:, :, V_INDEX]

    def time_mask(self, start: np.datetime64, end: np.datetime64) -> np.ndarray:
        return (self.timestamps >= start) & (self.timestamps < end)

    def slice_time(self, start: np.datetime64, end: np.datetime64) -> "Dataset":
        mask = self.time_mask(start, end)
        return Dataset(
            timestamps=self.timestamps[mask],
            x=self.x[mask],
            s=self.s[mask],
            stations=self.stations,
        )


def load_dataset(stations_path, series_path) -> Dataset:
    """Read and validate the stations table plus the long-format series.

    Errors on unknown station ids, duplicated (timestamp, station)
    rows, missing observations, off-grid spacing, and negative PM2.5.
    """
    stations = StationTable.from_csv(stations_path)
    df = pd.read_csv(
        series_path, dtype={"station_id": str}, float_precision="round_trip"
    )
    if list(df.columns) != SERIES_COLUMNS:
        raise ValueError(
            f"series header must be {','.join(SERIES_COLUMNS)}, got {list(df.columns)}"
        )
    unknown = sorted(set(df["station_id"]) - set(stations.ids))
    if unknown:
        raise ValueError(f"series references unknown station ids: {unknown}")
    df["timestamp"] = pd.to_datetime(df["timestamp"])
    dup = df.duplicated(["timestamp", "station_id"])
    if dup.any():
        row = df[dup].iloc[0]
        raise ValueError(
            f"duplicated observation for station {row['station_id']} "
            f"at {row['timestamp'].isoformat()}"
        )
    values = {}
    for col in ["pm25"] + FEATURE_NAMES:
        pivot = df.pivot(index="timestamp", columns="station_id", values=col)
        pivot = pivot.reindex(columns=stations.ids)
        if pivot.isna().any().any():
            sid = pivot.columns[pivot.isna().any(axis=0)][0]
            when = pivot.index[pivot[sid].isna()][0]
            raise ValueError(
                f"missing {col} for station {sid} at {when.isoformat()}"
            )
        values[col] = pivot
    index = values["pm25"].index
    if len(index) > 1:
        deltas = np.diff(index.values)
        bad = np.nonzero(deltas != TIME_STEP)[0]
        if bad.size:
            when = pd.Timestamp(index.values[bad[0] + 1])
            raise ValueError(
                f"series is not on a 3-hour grid at {when.isoformat()}"
            )
    x = values["pm25"].to_numpy(dtype=np.float64)
    if np.isnan(x).any():
        raise ValueError("NaN PM2.5 value in series")
    if (x < 0).any():
        t_idx, s_idx = np.argwhere(x < 0)[0]
        raise ValueError(
            f"negative PM2.5 for station {stations.ids[s_idx]} "
            f"at {pd.Timestamp(index.values[t_idx]).isoformat()}"
        )
    s = np.stack(
        [values[name].to_numpy(dtype=np.float64) for name in FEATURE_NAMES], axis=-1
    )
    return Dataset(
        timestamps=index.values.astype("datetime64[s]"),
        x=x,
        s=s,
        stations=stations,
    )


# ── splits ───────────────────────────────────────────────────────────

NAMED_SPLITS = ("dataset1", "dataset2", "dataset3")


@dataclass(frozen=True)
class SplitSpec:
    """Half-open train/val/test intervals; ordered and non-overlapping."""

    train: tuple[np.datetime64, np.datetime64]
    val: tuple[np.datetime64, np.datetime64]
    test: tuple[np.datetime64, np.datetime64]

    def __post_init__(self) -> None:
        for name, (a, b) in self.items():
            if not a < b:
                raise ValueError(f"{name} interval is empty or inverted")
        order = [self.train, self.val, self.test]
        for (_, prev_end), (next_start, _) in zip(order[:-1], order[1:]):
            if next_start < prev_end:
                raise ValueError("split intervals overlap or are out of order")

    def items(self):
        return [("train", self.train), ("val", self.val), ("test", self.test)]


def _ts(value: str | _dt.date) -> np.datetime64:
    return np.datetime64(value, "s")


def _winter(year: int) -> tuple[np.datetime64, np.datetime64]:
    # November 1st through February 28th of the following year
    end = _dt.date(year + 1, 2, 28) + _dt.timedelta(days=1)
    return _ts(f"{year}-11-01"), _ts(end)


def named_split_spec(name: str) -> SplitSpec:
    """Three canonical split schemes over the 2015-2018 record.

    dataset1: calendar years 2015-16 / 2017 / 2018.
    dataset2: three consecutive winters (Nov 1 to Feb 28).
    dataset3: autumn 2016 for training, December 2016 for validation,
    January 2017 for testing.
    """
    name = name.lower()
    if name == "dataset1":
        return SplitSpec(
            train=(_ts("2015-01-01"), _ts("2017-01-01")),
            val=(_ts("2017-01-01"), _ts("2018-01-01")),
            test=(_ts("2018-01-01"), _ts("2019-01-01")),
        )
    if name == "dataset2":
        return SplitSpec(
            train=_winter(2015), val=_winter(2016), test=_winter(2017)
        )
    if name == "dataset3":
        return SplitSpec(
            train=(_ts("2016-09-01"), _ts("2016-12-01")),
            val=(_ts("2016-12-01"), _ts("2017-01-01")),
            test=(_ts("2017-01-01"), _ts("2017-02-01")),
        )
    raise ValueError(f"unknown split scheme {name!r}")


def fraction_split_spec(
    dataset: Dataset, train_frac: float, val_frac: float
) -> SplitSpec:
    """Index-fraction boundaries mapped onto the dataset's time axis."""
    if not (0 < train_frac and 0 < val_frac and train_frac + val_frac < 1):
        raise ValueError("fractions must be positive with train+val < 1")
    n = dataset.n_steps
    i1 = int(round(n * train_frac))
    i2 = int(round(n * (train_frac + val_frac)))
    if not (0 < i1 < i2 < n):
        raise ValueError("dataset too short for the requested fractions")
    ts = dataset.timestamps
    return SplitSpec(
        train=(ts[0], ts[i1]),
        val=(ts[i1], ts[i2]),
        test=(ts[i2], ts[-1] + TIME_STEP),
    )


def split_dataset(
    dataset: Dataset, spec: SplitSpec
) -> tuple[Dataset, Dataset, Dataset]:
    """Slice the dataset into train/val/test; error on coverage gaps."""
    lo = dataset.timestamps[0]
    hi = dataset.timestamps[-1] + TIME_STEP
    parts = []
    for name, (a, b) in spec.items():
        if a < lo or b > hi:
            raise ValueError(
                f"{name} range [{a}, {b}) not covered by data [{lo}, {hi})"
            )
        part = dataset.slice_time(a, b)
        if part.n_steps == 0:
            raise ValueError(f"{name} range [{a}, {b}) selects no samples")
        parts.append(part)
    return tuple(parts)


# ── normalization ────────────────────────────────────────────────────


@dataclass
class NormStats:
    """Train-split z-score statistics plus the wind-edge scale.

    Constant features (std 0) are flagged and normalize to 0.
    """

    pm_mean: float
    pm_std: float
    pm_constant: bool
    feat_mean: np.ndarray  # (8,)
    feat_std: np.ndarray  # (8,)
    feat_constant: np.ndarray  # (8,) bool
    wind_edge_max: float = 1.0


def fit_normalizer(train: Dataset, wind_edge_max: float = 1.0) -> NormStats:
    if train.n_steps == 0:
        raise ValueError("cannot fit normalizer on an empty split")
    pm_mean = float(train.x.mean())
    pm_std = float(train.x.std())
    feat = train.s.reshape(-1, N_FEATURES)
    feat_mean = feat.mean(axis=0)
    feat_std = feat.std(axis=0)
    return NormStats(
        pm_mean=pm_mean,
        pm_std=pm_std if pm_std > 0 else 1.0,
        pm_constant=pm_std == 0,
        feat_mean=feat_mean,
        feat_std=np.where(feat_std > 0, feat_std, 1.0),
        feat_constant=feat_std == 0,
        wind_edge_max=float(wind_edge_max),
    )


def normalize_pm(norm: NormStats, x: np.ndarray) -> np.ndarray:
    if norm.pm_constant:
        return np.zeros_like(x)
    return (x - norm.pm_mean) / norm.pm_std


def denormalize_pm(norm: NormStats, x: np.ndarray) -> np.ndarray:
    if norm.pm_constant:
        return np.full_like(x, norm.pm_mean)
    return x * norm.pm_std + norm.pm_mean


def normalize_features(norm: NormStats, s: np.ndarray) -> np.ndarray:
    out = (s - norm.feat_mean) / norm.feat_std
    if norm.feat_constant.any():
        out[..., norm.feat_constant] = 0.0
    return out


# ── windows and model inputs ─────────────────────────────────────────


def make_windows(n_steps: int, horizon: int) -> np.ndarray:
    """Start indices of stride-1 windows: x0 at k, targets k+1..k+horizon."""
    if horizon < 1:
        raise ValueError("horizon must be positive")
    if n_steps <= horizon:
        raise ValueError(
            f"split of {n_steps} steps cannot host horizon {horizon} windows"
        )
    return np.arange(n_steps - horizon)


@dataclass
class ModelInputs:
    """One split prepared for the forecaster: raw and normalized series
    plus the edge signal slice aligned with it."""

    timestamps: np.ndarray
    x_raw: np.ndarray  # (T, N)
    x: np.ndarray  # (T, N) normalized
    s: np.ndarray  # (T, N, 8) normalized
    z: np.ndarray | None  # (T, n_edges) normalized advection weights

    @property
    def n_steps(self) -> int:
        return int(self.x.shape[0])


def prepare_inputs(
    dataset: Dataset, norm: NormStats, z_values: np.ndarray | None
) -> ModelInputs:
    if z_values is not None and z_values.shape[0] != dataset.n_steps:
        raise ValueError("edge signal length does not match the split")
    return ModelInputs(
        timestamps=dataset.timestamps,
        x_raw=dataset.x,
        x=normalize_pm(norm, dataset.x),
        s=normalize_features(norm, dataset.s),
        z=z_values,
    )


# ── synthetic generator ──────────────────────────────────────────────


@dataclass
class SynthConfig:
    """Knobs for the synthetic transport dataset.

    Per-edge transport at step t is planted_coeff * advection(t) where
    the advection factor is the same wind projection the forecaster
    sees. Planted coefficients default to a seeded uniform draw.
    """

    n_steps: int = 2000
    wind_regime: str = "rotating"  # rotating | steady | seasonal | churning
    wind_speed: float = 5.0
    coeff_low: float = 0.2
    coeff_high: float = 1.0
    # fraction of edges promoted to strong transport corridors
    coeff_outlier_frac: float = 0.0
    coeff_outlier_low: float = 2.5
    coeff_outlier_high: float = 3.5
    planted_coeffs: np.ndarray | None = None
    n_sources: int = 3
    source_rate: float = 6.0
    source_uniform: bool = False  # every node emits exactly source_rate
    source_rates: np.ndarray | None = None
    decay: float = 0.05
    noise_std: float = 0.5
    x0_level: float = 30.0
    source_pulse_period: int = 0  # 0 = constant sources
    burn_in: int = 64
    seed: int = 0
    start: str = "2015-01-01T00:00:00"


def make_synthetic_stations(
    n: int,
    seed: int = 0,
    layout: str = "grid",
    spacing_km: float = 140.0,
    jitter_km: float = 15.0,
    altitude_span_km: float = 0.4,
    origin: tuple[float, float] = (34.0, 108.0),
) -> StationTable:
    """Synthetic station geographies.

    "grid": jittered square grid, spaced so the default thresholds give
    a connected but non-complete graph. "ring": stations on a circle
    sized so only adjacent stations connect (degree 2), the layout
    where per-edge weights are cleanly identifiable.
    """
    rng = rng_stream(seed, STREAM_SYNTH_INIT, 0)
    if layout == "grid":
        side = int(np.ceil(np.sqrt(n)))
        xs, ys = [], []
        for k in range(n):
            gx, gy = k % side, k // side
            xs.append(gx * spacing_km + rng.uniform(-jitter_km, jitter_km))
            ys.append(gy * spacing_km + rng.uniform(-jitter_km, jitter_km))
        xs = np.array(xs)
        ys = np.array(ys)
        alts = rng.uniform(0.0, altitude_span_km, n)
    elif layout == "ring":
        radius = n * spacing_km / (2.0 * np.pi)
        angles = 2.0 * np.pi * np.arange(n) / n
        xs = radius * np.cos(angles)
        ys = radius * np.sin(angles)
        alts = np.full(n, 0.5 * altitude_span_km)
    else:
        raise ValueError(f"unknown station layout {layout!r}")
    xs = np.asarray(xs) - np.mean(xs)
    ys = np.asarray(ys) - np.mean(ys)
    lat0, lon0 = origin
    km_per_deg = 6371.0 * np.pi / 180.0
    lats = lat0 + ys / km_per_deg
    lons = lon0 + xs / (km_per_deg * np.cos(np.radians(lat0)))
    stations = [
        Station(
            id=f"S{k:03d}",
            lat=float(lats[k]),
            lon=float(lons[k]),
            altitude_km=float(alts[k]),
            name=f"synthetic-{k:03d}",
        )
        for k in range(n)
    ]
    return StationTable(stations)


def _wind_fields(
    cfg: SynthConfig, n_steps: int, n_stations: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    t = np.arange(n_steps, dtype=np.float64)[:, None]
    base = cfg.wind_speed
    if cfg.wind_regime == "rotating":
        theta = 2.0 * np.pi * t / 64.0
        speed = base + 0.4 * base * np.sin(2.0 * np.pi * t / 173.0)
    elif cfg.wind_regime == "steady":
        theta = np.full_like(t, rng.uniform(0.0, 2.0 * np.pi))
        speed = base + 0.2 * base * np.sin(2.0 * np.pi * t / 211.0)
    elif cfg.wind_regime == "seasonal":
        theta = np.pi * np.sin(2.0 * np.pi * t / 2920.0) + 0.3 * np.sin(
            2.0 * np.pi * t / 56.0
        )
        speed = 0.8 * base + 0.4 * base * np.sin(2.0 * np.pi * t / 2920.0 + 1.0)
    elif cfg.wind_regime == "churning":
        # independent direction each step: every bearing gets the same
        # average advection exposure
        theta = rng.uniform(0.0, 2.0 * np.pi, (n_steps, 1))
        speed = base + 0.2 * base * np.sin(2.0 * np.pi * t / 97.0)
    else:
        raise ValueError(f"unknown wind regime {cfg.wind_regime!r}")
    u = speed * np.cos(theta) + rng.normal(0.0, 0.2, (n_steps, n_stations))
    v = speed * np.sin(theta) + rng.normal(0.0, 0.2, (n_steps, n_stations))
    return u, v


def advection_step(
    x: np.ndarray,
    w: np.ndarray,
    src: np.ndarray,
    dst: np.ndarray,
    n: int,
    decay: float = 0.0,
    sources: np.ndarray | None = None,
) -> np.ndarray:
    """One mass-transport update: x gains inflow w*x[src] on each edge,
    loses the matching outflow, decays, and receives sources."""
    outflow_frac = np.bincount(src, weights=w, minlength=n)
    inflow = np.bincount(dst, weights=w * x[src], minlength=n)
    out = (1.0 - decay) * x + inflow - outflow_frac * x
    if sources is not None:
        out = out + sources
    return out


def synth_advection(
    stations: StationTable,
    topology: GraphTopology,
    coords: PlanarCoords,
    cfg: SynthConfig,
) -> tuple[Dataset, np.ndarray]:
    """Simulate transport on the station graph; returns the dataset and
    the planted per-edge coefficients (aligned with the edge order).

    Raises when any node's per-step outflow fraction would exceed 1,
    which would make the update unstable.
    """
    n = stations.n
    l = topology.n_edges
    total = cfg.burn_in + cfg.n_steps
    rng_wind = rng_stream(cfg.seed, STREAM_SYNTH_WIND)
    u, v = _wind_fields(cfg, total, n, rng_wind)
    adv = wind_edge_weights(topology, coords, u, v, norm_max=1.0).values

    if cfg.planted_coeffs is not None:
        planted = np.asarray(cfg.planted_coeffs, dtype=np.float64)
        if planted.shape != (l,):
            raise ValueError(f"planted_coeffs must have shape ({l},)")
    else:
        rng_coeff = rng_stream(cfg.seed, STREAM_SYNTH_COEFF)
        planted = rng_coeff.uniform(cfg.coeff_low, cfg.coeff_high, l)
        if cfg.coeff_outlier_frac > 0:
            outliers = rng_coeff.random(l) < cfg.coeff_outlier_frac
            planted = np.where(
                outliers,
                rng_coeff.uniform(cfg.coeff_outlier_low, cfg.coeff_outlier_high, l),
                planted,
            )
    w = adv * planted

    outflow = np.zeros((total, n))
    for e in range(l):
        outflow[:, topology.src[e]] += w[:, e]
    peak = float(outflow.max()) if l else 0.0
    if peak > 1.0:
        raise ValueError(
            f"unstable transport: per-node outflow fraction peaks at {peak:.3f} > 1; "
            "reduce planted coefficients or wind speeds"
        )

    if cfg.source_rates is not None:
        sources = np.asarray(cfg.source_rates, dtype=np.float64)
        if sources.shape != (n,):
            raise ValueError(f"source_rates must have shape ({n},)")
    elif cfg.source_uniform:
        sources = np.full(n, cfg.source_rate)
    else:
        rng_src = rng_stream(cfg.seed, STREAM_SYNTH_SOURCES)
        sources = np.zeros(n)
        if cfg.n_sources > 0:
            picks = rng_src.choice(n, size=min(cfg.n_sources, n), replace=False)
            sources[picks] = cfg.source_rate * rng_src.uniform(0.5, 1.5, picks.size)

    rng_noise = rng_stream(cfg.seed, STREAM_SYNTH_NOISE)
    rng_init = rng_stream(cfg.seed, STREAM_SYNTH_INIT, 1)
    if cfg.source_pulse_period > 0:
        # per-node on/off duty cycle with random phases
        phases = rng_init.uniform(0.0, 2.0 * np.pi, n)
        wave = np.sin(
            2.0 * np.pi * np.arange(total)[:, None] / cfg.source_pulse_period
            + phases
        )
        source_series = sources * (wave > 0.0) * 2.0
    else:
        source_series = np.broadcast_to(sources, (total, n))
    x = np.empty((total, n))
    x[0] = cfg.x0_level * rng_init.uniform(0.5, 1.5, n)
    for t in range(total - 1):
        nxt = advection_step(
            x[t], w[t], topology.src, topology.dst, n, cfg.decay, source_series[t]
        )
        if cfg.noise_std > 0:
            nxt = nxt + rng_noise.normal(0.0, cfg.noise_std, n)
        x[t + 1] = np.maximum(nxt, 0.0)

    # Remaining features: smooth seasonal signals plus a component tied
    # to the source layout; none of them feed back into the transport.
    rng_feat = rng_stream(cfg.seed, STREAM_SYNTH_FEATURES)
    tt = np.arange(total, dtype=np.float64)[:, None]
    year = 2920.0
    day = 8.0
    src_corr = sources / max(float(sources.max()), 1.0)
    temp = (
        12.0
        + 10.0 * np.sin(2.0 * np.pi * tt / year + 0.3)
        + 3.0 * np.sin(2.0 * np.pi * tt / day)
        + 3.0 * src_corr
        + rng_feat.normal(0.0, 0.3, (total, n))
    )
    pbl = (
        700.0
        + 350.0 * np.sin(2.0 * np.pi * tt / day + 1.1)
        + 120.0 * src_corr
        + rng_feat.normal(0.0, 20.0, (total, n))
    )
    kindex = (
        20.0
        + 10.0 * np.sin(2.0 * np.pi * tt / year + 2.0)
        + 8.0 * src_corr
        + rng_feat.normal(0.0, 1.0, (total, n))
    )
    rh = np.clip(
        60.0
        + 25.0 * np.sin(2.0 * np.pi * tt / year + 4.0)
        - 5.0 * src_corr
        + rng_feat.normal(0.0, 2.0, (total, n)),
        5.0,
        100.0,
    )
    sp = (
        1010.0
        - 90.0 * stations.altitude_km
        + 8.0 * np.sin(2.0 * np.pi * tt / year + 1.7)
        + rng_feat.normal(0.0, 0.5, (total, n))
    )
    precip = np.maximum(rng_feat.normal(-0.5, 1.0, (total, n)), 0.0)

    s = np.stack([temp, pbl, kindex, rh, sp, precip, u, v], axis=-1)
    start = np.datetime64(cfg.start, "s")
    timestamps = start + TIME_STEP * np.arange(total)

    keep = slice(cfg.burn_in, total)
    dataset = Dataset(
        timestamps=timestamps[keep],
        x=x[keep],
        s=s[keep],
        stations=stations,
    )
    return dataset, planted


# ── CSV export (schema shared with ingestion) ────────────────────────


def _fmt(value: float) -> str:
    return repr(float(value))


def write_series_csv(dataset: Dataset, path) -> None:
    """Long-format series rows ordered by timestamp then station order."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SERIES_COLUMNS)
        for t in range(dataset.n_steps):
            stamp = str(dataset.timestamps[t])
            for i, sid in enumerate(dataset.stations.ids):
                row = [stamp, sid, _fmt(dataset.x[t, i])]
                row.extend(_fmt(dataset.s[t, i, k]) for k in range(N_FEATURES))
                writer.writerow(row)


def write_planted_csv(
    stations: StationTable, topology: GraphTopology, planted: np.ndarray, path
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["src_id", "dst_id", "coeff"])
        for e in range(topology.n_edges):
            writer.writerow(
                [
                    stations.ids[topology.src[e]],
                    stations.ids[topology.dst[e]],
                    _fmt(planted[e]),
                ]
            )


def load_planted_csv(path, stations: StationTable, topology: GraphTopology) -> np.ndarray:
    """Planted coefficients realigned to the topology's edge order."""
    table = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (stations.index_of(row["src_id"]), stations.index_of(row["dst_id"]))
            table[key] = float(row["coeff"])
    out = np.empty(topology.n_edges)
    for e, (i, j) in enumerate(topology.edge_pairs()):
        if (i, j) not in table:
            raise ValueError(f"planted file missing edge {i}->{j}")
        out[e] = table[(i, j)]
    return out
