"""The full forecaster: model assembly, variants, iterative rollout,
adaptive-edge export, and checkpoint I/O.

A model owns one or two message-passing paths over the same topology.
The wind path consumes the time-varying advection weights; the adaptive
path consumes one learnable weight per directed edge, constant across
time. With both paths present their outputs are fused; ablation
variants drop a path, freeze the edge signal to ones, or withhold the
future weather features.

The rollout follows the iterative scheme: the first prediction is
seeded with the last observation, the hidden state starts at zero, and
each step feeds the previous prediction back into the node embedding.
"""

from __future__ import annotations

import enum
import io
import json
import zipfile
from dataclasses import dataclass

import numpy as np

from .autodiff import Value, all_finite, gather_nodes
from .data import NormStats, denormalize_pm
from .geo import GraphTopology
from .seeding import STREAM_ADAPTIVE, STREAM_PARAMS, rng_stream
from .spatial import (
    EDGE_FEATURE_WIDTH,
    MESSAGE_INPUT_WIDTH,
    NODE_EMBED_WIDTH,
    FusionParams,
    MpnnParams,
    aggregate_directed,
    edge_messages,
    fuse_graphs,
    node_embed,
)
from .temporal import GruParams, OutputHead, gru_step, readout

SUPPORTED_HORIZONS = (3, 6, 12, 24)

ADAPTIVE_INIT_RANGE = 0.1


class VariantKind(enum.Enum):
    """Model variants: the full dual-path model and its ablations."""

    AEA_WIND = "aea_wind"
    ONLY_WIND = "only_wind"
    ONLY_AEA = "only_aea"
    STATIC = "static"
    WO_WEATHER = "wo_weather"

    @property
    def has_wind_path(self) -> bool:
        return self in (VariantKind.AEA_WIND, VariantKind.ONLY_WIND, VariantKind.WO_WEATHER)

    @property
    def has_adaptive_path(self) -> bool:
        return self in (VariantKind.AEA_WIND, VariantKind.ONLY_AEA, VariantKind.WO_WEATHER)

    @property
    def has_static_path(self) -> bool:
        return self is VariantKind.STATIC

    @property
    def zero_weather(self) -> bool:
        return self is VariantKind.WO_WEATHER

    @property
    def needs_wind_signal(self) -> bool:
        return self.has_wind_path

    @property
    def dual_path(self) -> bool:
        return self.has_wind_path and self.has_adaptive_path


@dataclass(frozen=True)
class ModelConfig:
    """Variant kind, widths, forecast horizon, and the parameter seed."""

    kind: VariantKind
    horizon: int = 6
    hidden_edge: int = 32
    hidden_state: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        if self.horizon not in SUPPORTED_HORIZONS:
            raise ValueError(
                f"horizon must be one of {SUPPORTED_HORIZONS}, got {self.horizon}"
            )
        if self.hidden_edge < 1 or self.hidden_state < 1:
            raise ValueError("hidden widths must be positive")


@dataclass
class ForecastResult:
    """Denormalized multi-step predictions, (T, N) in ug/m3."""

    values: np.ndarray
    timestamps: np.ndarray | None = None


@dataclass
class GraphForecaster:
    config: ModelConfig
    topology: GraphTopology
    station_ids: list[str]
    norm: NormStats
    gru: GruParams
    head: OutputHead
    mpnn_wind: MpnnParams | None = None
    mpnn_adaptive: MpnnParams | None = None
    mpnn_static: MpnnParams | None = None
    fusion: FusionParams | None = None
    adaptive_edges: Value | None = None  # (n_edges, 1)

    def parameters(self) -> list[tuple[str, Value]]:
        """All learnable parameters in a fixed, documented order."""
        out: list[tuple[str, Value]] = []
        for prefix, block in (
            ("mpnn_wind", self.mpnn_wind),
            ("mpnn_adaptive", self.mpnn_adaptive),
            ("mpnn_static", self.mpnn_static),
        ):
            if block is not None:
                out.extend(
                    [
                        (f"{prefix}.phi_w", block.phi_w),
                        (f"{prefix}.phi_b", block.phi_b),
                        (f"{prefix}.omega_w", block.omega_w),
                        (f"{prefix}.omega_b", block.omega_b),
                    ]
                )
        if self.fusion is not None:
            out.extend(
                [("fusion.psi_w", self.fusion.psi_w), ("fusion.psi_b", self.fusion.psi_b)]
            )
        out.extend(
            [
                ("gru.w_update", self.gru.w_update),
                ("gru.b_update", self.gru.b_update),
                ("gru.w_reset", self.gru.w_reset),
                ("gru.b_reset", self.gru.b_reset),
                ("gru.w_cand", self.gru.w_cand),
                ("gru.b_cand", self.gru.b_cand),
                ("head.w", self.head.w),
                ("head.b", self.head.b),
            ]
        )
        if self.adaptive_edges is not None:
            out.append(("adaptive_edges", self.adaptive_edges))
        return out

    def param_count(self) -> int:
        return sum(v.data.size for _, v in self.parameters())

    def get_state(self) -> dict[str, np.ndarray]:
        return {name: v.data.copy() for name, v in self.parameters()}

    def set_state(self, state: dict[str, np.ndarray]) -> None:
        current = dict(self.parameters())
        if set(state) != set(current):
            raise ValueError("parameter names do not match this model")
        for name, arr in state.items():
            v = current[name]
            if arr.shape != v.data.shape:
                raise ValueError(f"shape mismatch for {name}")
            v.data[...] = arr


def _init_linear(rng: np.random.Generator, fan_in: int, fan_out: int) -> tuple[Value, Value]:
    bound = np.sqrt(1.0 / fan_in)
    w = Value(rng.uniform(-bound, bound, (fan_in, fan_out)))
    b = Value(np.zeros(fan_out))
    return w, b


def _init_mpnn(rng: np.random.Generator, hidden: int) -> MpnnParams:
    phi_w, phi_b = _init_linear(rng, MESSAGE_INPUT_WIDTH, hidden)
    omega_w, omega_b = _init_linear(rng, hidden, hidden)
    return MpnnParams(phi_w=phi_w, phi_b=phi_b, omega_w=omega_w, omega_b=omega_b)


def init_model(
    config: ModelConfig,
    topology: GraphTopology,
    station_ids: list[str],
    norm: NormStats,
) -> GraphForecaster:
    """Build a model with seeded uniform(-sqrt(1/fan_in), +sqrt(1/fan_in))
    weights, zero biases, and adaptive edge weights from uniform(-0.1, 0.1).

    The same config and seed always produce bitwise-identical parameters.
    """
    if len(station_ids) != topology.n_nodes:
        raise ValueError("station id list does not match the topology")
    rng = rng_stream(config.seed, STREAM_PARAMS)
    kind = config.kind
    h_e, h = config.hidden_edge, config.hidden_state

    mpnn_wind = _init_mpnn(rng, h_e) if kind.has_wind_path else None
    mpnn_adaptive = _init_mpnn(rng, h_e) if kind.has_adaptive_path else None
    mpnn_static = _init_mpnn(rng, h_e) if kind.has_static_path else None
    fusion = None
    if kind.dual_path:
        psi_w, psi_b = _init_linear(rng, 2 * h_e, h_e)
        fusion = FusionParams(psi_w=psi_w, psi_b=psi_b)

    gru_in = h + h_e + NODE_EMBED_WIDTH
    w_update, b_update = _init_linear(rng, gru_in, h)
    w_reset, b_reset = _init_linear(rng, gru_in, h)
    w_cand, b_cand = _init_linear(rng, gru_in, h)
    gru = GruParams(
        w_update=w_update,
        b_update=b_update,
        w_reset=w_reset,
        b_reset=b_reset,
        w_cand=w_cand,
        b_cand=b_cand,
    )
    head_w, head_b = _init_linear(rng, h, 1)

    adaptive = None
    if kind.has_adaptive_path:
        rng_a = rng_stream(config.seed, STREAM_ADAPTIVE)
        adaptive = Value(
            rng_a.uniform(-ADAPTIVE_INIT_RANGE, ADAPTIVE_INIT_RANGE, (topology.n_edges, 1))
        )

    return GraphForecaster(
        config=config,
        topology=topology,
        station_ids=list(station_ids),
        norm=norm,
        gru=gru,
        head=OutputHead(w=head_w, b=head_b),
        mpnn_wind=mpnn_wind,
        mpnn_adaptive=mpnn_adaptive,
        mpnn_static=mpnn_static,
        fusion=fusion,
        adaptive_edges=adaptive,
    )


def run_forward(
    model: GraphForecaster,
    x0: np.ndarray,
    s: np.ndarray,
    z_wind: np.ndarray | None,
    n_copies: int = 1,
    fusion_select: str = "both",
) -> list[Value]:
    """Iterative multi-step rollout in normalized units.

    Inputs may stack several independent windows along the node axis
    (block-diagonal batching): x0 is (n_copies*N, 1), s is
    (T, n_copies*N, 8), z_wind is (T, n_copies*n_edges) when the variant
    consumes it. Returns the per-step prediction columns.

    ``fusion_select`` is a diagnostic override for dual-path models:
    "wind" or "adaptive" bypasses the fusion layer and uses just that
    path, which must reproduce the corresponding single-path variant.
    """
    topo = model.topology
    n = topo.n_nodes
    rows = n_copies * n
    kind = model.config.kind
    if fusion_select not in ("both", "wind", "adaptive"):
        raise ValueError(f"unknown fusion_select {fusion_select!r}")
    if fusion_select != "both" and not kind.dual_path:
        raise ValueError("fusion_select applies only to dual-path variants")

    x0 = np.asarray(x0, dtype=np.float64).reshape(rows, 1)
    if s.ndim != 3 or s.shape[1] != rows or s.shape[2] != NODE_EMBED_WIDTH - 1:
        raise ValueError(f"features must be (T, {rows}, {NODE_EMBED_WIDTH - 1})")
    horizon = s.shape[0]
    if horizon < 1:
        raise ValueError("rollout needs at least one step")
    if kind.needs_wind_signal:
        if z_wind is None:
            raise ValueError(f"variant {kind.value} requires the wind edge signal")
        if z_wind.shape != (horizon, n_copies * topo.n_edges):
            raise ValueError(
                f"wind signal must be ({horizon}, {n_copies * topo.n_edges}), "
                f"got {z_wind.shape}"
            )
        if not all_finite(z_wind):
            raise ValueError("NaN or Inf in the wind edge signal")
    if not (all_finite(x0) and all_finite(s)):
        raise ValueError("NaN or Inf in rollout inputs")

    offsets = np.arange(n_copies) * n
    src = (topo.src[None, :] + offsets[:, None]).reshape(-1)
    dst = (topo.dst[None, :] + offsets[:, None]).reshape(-1)
    adaptive_index = np.tile(np.arange(topo.n_edges), n_copies)

    x_prev = Value(x0)
    h = Value(np.zeros((rows, model.config.hidden_state)))
    steps: list[Value] = []
    for t in range(horizon):
        s_t = np.zeros_like(s[t]) if kind.zero_weather else s[t]
        eps = node_embed(x_prev, Value(s_t))

        embeddings: list[tuple[str, Value]] = []
        if kind.has_wind_path:
            z_t = Value(z_wind[t].reshape(-1, EDGE_FEATURE_WIDTH))
            m = edge_messages(eps, z_t, src, dst, model.mpnn_wind)
            embeddings.append(
                ("wind", aggregate_directed(m, src, dst, rows, model.mpnn_wind))
            )
        if kind.has_adaptive_path:
            z_a = gather_nodes(model.adaptive_edges, adaptive_index)
            m = edge_messages(eps, z_a, src, dst, model.mpnn_adaptive)
            embeddings.append(
                ("adaptive", aggregate_directed(m, src, dst, rows, model.mpnn_adaptive))
            )
        if kind.has_static_path:
            z_ones = Value(np.ones((src.shape[0], EDGE_FEATURE_WIDTH)))
            m = edge_messages(eps, z_ones, src, dst, model.mpnn_static)
            embeddings.append(
                ("static", aggregate_directed(m, src, dst, rows, model.mpnn_static))
            )

        if len(embeddings) == 2 and fusion_select == "both":
            zeta = fuse_graphs(embeddings[0][1], embeddings[1][1], model.fusion)
        elif len(embeddings) == 2:
            zeta = dict(embeddings)[fusion_select]
        else:
            zeta = embeddings[0][1]

        h = gru_step(zeta, eps, h, model.gru)
        x_prev = readout(h, model.head)
        steps.append(x_prev)
    return steps


def forecast(
    model: GraphForecaster,
    x0: np.ndarray,
    s_future: np.ndarray,
    z_wind: np.ndarray | None = None,
    timestamps: np.ndarray | None = None,
) -> ForecastResult:
    """Multi-step forecast for one window of normalized inputs.

    x0 is the last normalized observation (N,); s_future is (T, N, 8)
    normalized features; z_wind is the (T, n_edges) normalized advection
    signal when the variant consumes wind. The result is denormalized.
    """
    n = model.topology.n_nodes
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape not in ((n,), (n, 1)):
        raise ValueError(f"x0 must have {n} entries")
    steps = run_forward(model, x0.reshape(n, 1), s_future, z_wind)
    stacked = np.stack([v.data[:, 0] for v in steps], axis=0)
    return ForecastResult(
        values=denormalize_pm(model.norm, stacked), timestamps=timestamps
    )


def export_adaptive_edges(
    model: GraphForecaster,
) -> tuple[list[tuple[str, str, float]], list[tuple[str, str, float]]]:
    """Learned edge weights plus the per-pair direction asymmetry.

    Returns (edge rows, asymmetry rows): edge rows are
    (src_id, dst_id, weight) in edge order; asymmetry rows give
    weight(i, j) - weight(j, i) once per unordered pair (i < j).
    """
    if model.adaptive_edges is None:
        raise ValueError("variant has no adaptive edges")
    topo = model.topology
    ids = model.station_ids
    weights = model.adaptive_edges.data[:, 0]
    edge_rows = [
        (ids[i], ids[j], float(w))
        for (i, j), w in zip(topo.edge_pairs(), weights)
    ]
    lookup = {(i, j): float(w) for (i, j), w in zip(topo.edge_pairs(), weights)}
    asym_rows = [
        (ids[i], ids[j], w - lookup[(j, i)])
        for (i, j), w in sorted(lookup.items())
        if i < j
    ]
    return edge_rows, asym_rows


# ── checkpoint I/O ───────────────────────────────────────────────────

_CHECKPOINT_VERSION = 1


def save_checkpoint(model: GraphForecaster, path, extra: dict | None = None) -> None:
    """Write a self-describing npz checkpoint.

    Arrays round-trip bit-exactly, and the file bytes are reproducible
    for identical content (fixed zip metadata, no timestamps).
    """
    meta = {
        "version": _CHECKPOINT_VERSION,
        "kind": model.config.kind.value,
        "horizon": model.config.horizon,
        "hidden_edge": model.config.hidden_edge,
        "hidden_state": model.config.hidden_state,
        "seed": model.config.seed,
        "station_ids": model.station_ids,
        "extra": extra or {},
    }
    arrays: dict[str, np.ndarray] = {
        "meta_json": np.array([json.dumps(meta, sort_keys=True)]),
        "topology_src": model.topology.src.astype(np.int64),
        "topology_dst": model.topology.dst.astype(np.int64),
        "topology_dist_km": model.topology.dist_km,
        "norm_pm": np.array([model.norm.pm_mean, model.norm.pm_std]),
        "norm_pm_constant": np.array([int(model.norm.pm_constant)]),
        "norm_feat_mean": model.norm.feat_mean,
        "norm_feat_std": model.norm.feat_std,
        "norm_feat_constant": model.norm.feat_constant.astype(np.int64),
        "norm_wind_max": np.array([model.norm.wind_edge_max]),
    }
    for name, value in model.parameters():
        arrays[f"param::{name}"] = value.data
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(
                buf, np.ascontiguousarray(arrays[name]), allow_pickle=False
            )
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())


def load_checkpoint(path) -> GraphForecaster:
    with np.load(path, allow_pickle=False) as blob:
        meta = json.loads(str(blob["meta_json"][0]))
        if meta.get("version") != _CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
        topology = GraphTopology(
            n_nodes=len(meta["station_ids"]),
            src=blob["topology_src"].astype(np.intp),
            dst=blob["topology_dst"].astype(np.intp),
            dist_km=blob["topology_dist_km"],
        )
        norm = NormStats(
            pm_mean=float(blob["norm_pm"][0]),
            pm_std=float(blob["norm_pm"][1]),
            pm_constant=bool(blob["norm_pm_constant"][0]),
            feat_mean=blob["norm_feat_mean"],
            feat_std=blob["norm_feat_std"],
            feat_constant=blob["norm_feat_constant"].astype(bool),
            wind_edge_max=float(blob["norm_wind_max"][0]),
        )
        config = ModelConfig(
            kind=VariantKind(meta["kind"]),
            horizon=int(meta["horizon"]),
            hidden_edge=int(meta["hidden_edge"]),
            hidden_state=int(meta["hidden_state"]),
            seed=int(meta["seed"]),
        )
        model = init_model(config, topology, meta["station_ids"], norm)
        state = {
            key[len("param::"):]: blob[key]
            for key in blob.files
            if key.startswith("param::")
        }
        model.set_state(state)
    return model


def checkpoint_extra(path) -> dict:
    """The free-form metadata stored alongside a checkpoint."""
    with np.load(path, allow_pickle=False) as blob:
        return json.loads(str(blob["meta_json"][0])).get("extra", {})
