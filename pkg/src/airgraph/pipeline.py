"""End-to-end assembly shared by the CLI and the acceptance checks.

Ties together graph construction, wind edge weights (normalized by the
training-period maximum), train-split normalization, and per-split
model inputs, then drives training runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .data import (
    Dataset,
    ModelInputs,
    NormStats,
    SplitSpec,
    fit_normalizer,
    fraction_split_spec,
    named_split_spec,
    prepare_inputs,
    split_dataset,
)
from .geo import (
    GraphTopology,
    PlanarCoords,
    StationTable,
    build_topology,
    project_stations,
    wind_edge_weights,
)
from .model import (
    GraphForecaster,
    ModelConfig,
    VariantKind,
    init_model,
)
from .training import TrainConfig, TrainResult, train


@dataclass
class Prepared:
    stations: StationTable
    topology: GraphTopology
    coords: PlanarCoords
    norm: NormStats
    datasets: dict[str, Dataset]
    inputs: dict[str, ModelInputs]
    spec: SplitSpec


def resolve_split_spec(config: RunConfig, dataset: Dataset) -> SplitSpec:
    name = config.split.lower()
    if name in ("dataset1", "dataset2", "dataset3"):
        return named_split_spec(name)
    if name == "fractions":
        return fraction_split_spec(dataset, config.train_frac, config.val_frac)
    if name == "custom":
        fields = [
            config.train_start, config.train_end,
            config.val_start, config.val_end,
            config.test_start, config.test_end,
        ]
        if not all(fields):
            raise ValueError("custom split requires all six boundary timestamps")
        ts = [np.datetime64(v, "s") for v in fields]
        return SplitSpec(train=(ts[0], ts[1]), val=(ts[2], ts[3]), test=(ts[4], ts[5]))
    raise ValueError(f"unknown split scheme {config.split!r}")


def prepare(
    stations: StationTable,
    dataset: Dataset,
    spec: SplitSpec,
    distance_threshold_km: float = 300.0,
    altitude_threshold_km: float = 1.2,
) -> Prepared:
    """Build topology and normalized per-split inputs for one dataset.

    The wind edge signal is computed over the full record and scaled by
    its maximum raw value inside the training interval; PM2.5 and
    feature statistics likewise come from the training split only.
    """
    topology = build_topology(stations, distance_threshold_km, altitude_threshold_km)
    coords = project_stations(stations)
    raw_signal = wind_edge_weights(topology, coords, dataset.u, dataset.v, norm_max=1.0)

    train_ds, val_ds, test_ds = split_dataset(dataset, spec)
    train_mask = dataset.time_mask(*spec.train)
    if topology.n_edges:
        peak = float(raw_signal.values[train_mask].max())
    else:
        peak = 0.0
    wind_max = peak if peak > 0 else 1.0
    norm = fit_normalizer(train_ds, wind_edge_max=wind_max)

    datasets = {"train": train_ds, "val": val_ds, "test": test_ds}
    inputs = {}
    for name, ds in datasets.items():
        mask = dataset.time_mask(ds.timestamps[0], ds.timestamps[-1] + np.timedelta64(3, "h"))
        z = raw_signal.values[mask] / wind_max
        inputs[name] = prepare_inputs(ds, norm, z)
    return Prepared(
        stations=stations,
        topology=topology,
        coords=coords,
        norm=norm,
        datasets=datasets,
        inputs=inputs,
        spec=spec,
    )


def model_config_from_run(config: RunConfig, seed: int) -> ModelConfig:
    return ModelConfig(
        kind=VariantKind(config.variant.lower()),
        horizon=config.horizon,
        hidden_edge=config.hidden_edge,
        hidden_state=config.hidden_state,
        seed=seed,
    )


def train_config_from_run(config: RunConfig, seed: int) -> TrainConfig:
    return TrainConfig(
        batch_size=config.batch_size,
        max_epochs=config.max_epochs,
        early_stop_patience=config.early_stop_patience,
        lr=config.lr,
        weight_decay=config.weight_decay,
        rmsprop_rho=config.rmsprop_rho,
        rmsprop_eps=config.rmsprop_eps,
        seed=seed,
    )


def train_one(
    prepared: Prepared, model_config: ModelConfig, train_config: TrainConfig
) -> tuple[GraphForecaster, TrainResult]:
    model = init_model(
        model_config, prepared.topology, prepared.stations.ids, prepared.norm
    )
    result = train(
        model, prepared.inputs["train"], prepared.inputs["val"], train_config
    )
    return model, result
