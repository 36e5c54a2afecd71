"""Station geography: planar projection, gated topology, wind edge weights.

Stations are projected onto a local plane, pairs within a distance
threshold and an altitude-difference threshold become directed edge
pairs, and each directed edge carries a per-time-step advection weight
derived from the wind at its source station.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

EARTH_RADIUS_KM = 6371.0

DEFAULT_DISTANCE_THRESHOLD_KM = 300.0
DEFAULT_ALTITUDE_THRESHOLD_KM = 1.2

STATIONS_HEADER = ["station_id", "name", "lat", "lon", "altitude_km"]


@dataclass(frozen=True)
class Station:
    id: str
    lat: float
    lon: float
    altitude_km: float
    name: str = ""


class StationTable:
    """Validated, ordered collection of observation stations.

    Row order defines the node index used everywhere downstream.
    """

    def __init__(self, stations: list[Station]) -> None:
        ids = [s.id for s in stations]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate station ids: {dupes}")
        for s in stations:
            if not -90.0 <= s.lat <= 90.0:
                raise ValueError(f"station {s.id}: lat {s.lat} outside [-90, 90]")
            if not -180.0 <= s.lon <= 180.0:
                raise ValueError(f"station {s.id}: lon {s.lon} outside [-180, 180]")
            if s.altitude_km < -0.5:
                raise ValueError(
                    f"station {s.id}: altitude {s.altitude_km} km below -0.5 km"
                )
        self.stations = list(stations)
        self.ids = ids
        self.lat = np.array([s.lat for s in stations], dtype=np.float64)
        self.lon = np.array([s.lon for s in stations], dtype=np.float64)
        self.altitude_km = np.array(
            [s.altitude_km for s in stations], dtype=np.float64
        )

    @property
    def n(self) -> int:
        return len(self.stations)

    def index_of(self, station_id: str) -> int:
        return self.ids.index(station_id)

    @classmethod
    def from_csv(cls, path) -> "StationTable":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != STATIONS_HEADER:
                raise ValueError(
                    f"stations file header must be {','.join(STATIONS_HEADER)}, "
                    f"got {reader.fieldnames}"
                )
            stations = [
                Station(
                    id=row["station_id"],
                    lat=float(row["lat"]),
                    lon=float(row["lon"]),
                    altitude_km=float(row["altitude_km"]),
                    name=row["name"],
                )
                for row in reader
            ]
        return cls(stations)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(STATIONS_HEADER)
            for s in self.stations:
                writer.writerow([s.id, s.name, repr(s.lat), repr(s.lon), repr(s.altitude_km)])


@dataclass
class PlanarCoords:
    """Per-station plane coordinates in km, same order as the table."""

    x: np.ndarray
    y: np.ndarray

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def point(self, i: int) -> tuple[float, float]:
        return float(self.x[i]), float(self.y[i])


@dataclass
class GraphTopology:
    """Directed edge list gated by distance and altitude difference.

    Edges come in symmetric pairs ((i, j) present iff (j, i) present)
    and are sorted by (src, dst). ``dist_km`` is the planar distance of
    each edge.
    """

    n_nodes: int
    src: np.ndarray
    dst: np.ndarray
    dist_km: np.ndarray

    @property
    def n_edges(self) -> int:
        return int(self.src.shape[0])

    def edge_pairs(self) -> list[tuple[int, int]]:
        return [(int(a), int(b)) for a, b in zip(self.src, self.dst)]


@dataclass
class EdgeSignal:
    """Per-time-step nonnegative advection weights over the edge list.

    ``values`` is (T, n_edges); ``norm_max`` is the raw maximum the
    values were divided by (1.0 means unnormalized raw values).
    """

    values: np.ndarray
    norm_max: float = 1.0

    @property
    def n_steps(self) -> int:
        return int(self.values.shape[0])


def project_stations(stations: StationTable) -> PlanarCoords:
    """Equirectangular projection about the mean latitude/longitude.

    x = R * dlon * cos(mean lat), y = R * dlat, angles in radians,
    R = 6371 km. A station at the mean lat/lon maps to (0, 0).
    """
    if stations.n == 0:
        raise ValueError("no stations")
    lat0 = stations.lat.mean()
    lon0 = stations.lon.mean()
    x = EARTH_RADIUS_KM * np.radians(stations.lon - lon0) * math.cos(math.radians(lat0))
    y = EARTH_RADIUS_KM * np.radians(stations.lat - lat0)
    return PlanarCoords(x=x, y=y)


def euclidean_distance(p: tuple[float, float], q: tuple[float, float]) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def bearing(src: tuple[float, float], dst: tuple[float, float]) -> float:
    """Direction from src toward dst, atan2 convention, range (-pi, pi]."""
    dx = dst[0] - src[0]
    dy = dst[1] - src[1]
    if dx == 0.0 and dy == 0.0:
        raise ValueError("zero-length edge")
    return math.atan2(dy, dx)


def build_topology(
    stations: StationTable,
    distance_threshold_km: float = DEFAULT_DISTANCE_THRESHOLD_KM,
    altitude_threshold_km: float = DEFAULT_ALTITUDE_THRESHOLD_KM,
) -> GraphTopology:
    """Connect station pairs with d <= distance threshold and
    |altitude difference| <= altitude threshold, both directions.

    Thresholds are inclusive. Edges are ordered by (src, dst). An
    all-isolated result is allowed with a warning; the forecaster then
    degrades to independent per-station recurrences.
    """
    if stations.n < 2:
        raise ValueError("need at least 2 stations to build a graph")
    coords = project_stations(stations)
    dx = coords.x[:, None] - coords.x[None, :]
    dy = coords.y[:, None] - coords.y[None, :]
    dist = np.sqrt(dx * dx + dy * dy)
    alt_diff = np.abs(stations.altitude_km[:, None] - stations.altitude_km[None, :])
    keep = (dist <= distance_threshold_km) & (alt_diff <= altitude_threshold_km)
    np.fill_diagonal(keep, False)
    off_diag_zero = (dist == 0.0) & ~np.eye(stations.n, dtype=bool)
    if off_diag_zero.any():
        i, j = np.argwhere(off_diag_zero)[0]
        raise ValueError(
            f"stations {stations.ids[i]} and {stations.ids[j]} are coincident"
        )
    pairs = np.argwhere(keep)  # row-major, already sorted by (src, dst)
    src = pairs[:, 0].astype(np.intp)
    dst = pairs[:, 1].astype(np.intp)
    if src.size == 0:
        warnings.warn(
            "topology has no edges; every station is isolated", stacklevel=2
        )
    return GraphTopology(
        n_nodes=stations.n, src=src, dst=dst, dist_km=dist[src, dst]
    )


def wind_edge_weights(
    topology: GraphTopology,
    coords: PlanarCoords,
    u: np.ndarray,
    v: np.ndarray,
    norm_max: float | None = None,
) -> EdgeSignal:
    """Advection weight of each directed edge from the source station wind.

    The raw weight is the wind component along the edge direction over
    the edge length: relu((dx*u + dy*v) / d^2) with wind in m/s and d in
    km, which equals relu(|wind| / d * cos(bearing - wind direction)).
    Raw values are divided by ``norm_max``; when None, the maximum of
    this signal is used and stored (fit on the training period, reuse
    elsewhere).
    """
    if u.shape != v.shape or u.ndim != 2 or u.shape[1] != topology.n_nodes:
        raise ValueError(
            f"wind arrays must be (T, {topology.n_nodes}), got {u.shape} and {v.shape}"
        )
    dx = coords.x[topology.dst] - coords.x[topology.src]
    dy = coords.y[topology.dst] - coords.y[topology.src]
    d2 = dx * dx + dy * dy
    proj = u[:, topology.src] * dx + v[:, topology.src] * dy
    raw = np.maximum(proj / d2, 0.0)
    if norm_max is None:
        peak = float(raw.max()) if raw.size else 0.0
        norm_max = peak if peak > 0.0 else 1.0
    return EdgeSignal(values=raw / norm_max, norm_max=float(norm_max))


def compose_adjacency(
    topology: GraphTopology, weights: np.ndarray
) -> list[tuple[int, int, float]]:
    """Sparse (src, dst, weight) rows for one weight per directed edge."""
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    if weights.shape[0] != topology.n_edges:
        raise ValueError(
            f"expected {topology.n_edges} weights, got {weights.shape[0]}"
        )
    return [
        (int(i), int(j), float(w))
        for i, j, w in zip(topology.src, topology.dst, weights)
    ]
