"""Network analysis of learned edge weights.

Degree centrality over the binary topology, per-station in/out strength
over absolute edge weights, the out-minus-in balance that separates
influencing stations from influenced ones, and rank correlations
between strength and degree.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats


@dataclass
class NodeNetworkStats:
    station_id: str
    degree: int
    centrality: float
    in_strength: float
    out_strength: float
    balance: float  # out_strength - in_strength; positive = net influencer


@dataclass
class WeightDegreeReport:
    strength_vs_degree: float | None
    strength_vs_centrality: float | None
    n_nodes: int
    notes: list[str]


def degree_centrality(
    src: Sequence[int], dst: Sequence[int], n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Distinct-neighbor count per node and its (n-1)-normalized form."""
    if n < 2:
        raise ValueError("degree centrality needs at least 2 nodes")
    adj = np.zeros((n, n), dtype=bool)
    src = np.asarray(src, dtype=np.intp)
    dst = np.asarray(dst, dtype=np.intp)
    adj[src, dst] = True
    adj |= adj.T
    np.fill_diagonal(adj, False)
    degree = adj.sum(axis=1)
    return degree, degree / (n - 1)


def strength_ranking(
    src: Sequence[int],
    dst: Sequence[int],
    weights: Sequence[float],
    station_ids: Sequence[str],
) -> list[NodeNetworkStats]:
    """Per-station stats sorted by balance, descending; ties by id."""
    n = len(station_ids)
    src = np.asarray(src, dtype=np.intp)
    dst = np.asarray(dst, dtype=np.intp)
    mag = np.abs(np.asarray(weights, dtype=np.float64))
    if mag.shape != src.shape:
        raise ValueError("weights must align with the edge list")
    out_strength = np.bincount(src, weights=mag, minlength=n)
    in_strength = np.bincount(dst, weights=mag, minlength=n)
    degree, centrality = degree_centrality(src, dst, n)
    rows = [
        NodeNetworkStats(
            station_id=station_ids[i],
            degree=int(degree[i]),
            centrality=float(centrality[i]),
            in_strength=float(in_strength[i]),
            out_strength=float(out_strength[i]),
            balance=float(out_strength[i] - in_strength[i]),
        )
        for i in range(n)
    ]
    rows.sort(key=lambda r: (-r.balance, r.station_id))
    return rows


def weight_degree_report(stats_rows: Sequence[NodeNetworkStats]) -> WeightDegreeReport:
    """Spearman correlation of total strength against degree and against
    degree centrality. Degenerate (constant) series are reported as
    undefined rather than asserted."""
    if len(stats_rows) < 3:
        raise ValueError("correlation needs at least 3 nodes")
    strength = np.array([r.in_strength + r.out_strength for r in stats_rows])
    degree = np.array([r.degree for r in stats_rows], dtype=np.float64)
    centrality = np.array([r.centrality for r in stats_rows])
    notes: list[str] = []

    def spearman(a: np.ndarray, b: np.ndarray, label: str) -> float | None:
        if np.all(a == a[0]) or np.all(b == b[0]):
            notes.append(f"{label}: undefined (constant series)")
            return None
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rho = stats.spearmanr(a, b).statistic
        if not np.isfinite(rho):
            notes.append(f"{label}: undefined")
            return None
        return float(rho)

    return WeightDegreeReport(
        strength_vs_degree=spearman(strength, degree, "strength vs degree"),
        strength_vs_centrality=spearman(strength, centrality, "strength vs centrality"),
        n_nodes=len(stats_rows),
        notes=notes,
    )


def format_summary(
    stats_rows: Sequence[NodeNetworkStats], report: WeightDegreeReport, top: int = 5
) -> str:
    """Human-readable block: correlations plus the extreme-balance stations."""
    lines = [f"stations: {report.n_nodes}"]
    for label, value in (
        ("spearman strength vs degree", report.strength_vs_degree),
        ("spearman strength vs centrality", report.strength_vs_centrality),
    ):
        lines.append(f"{label}: {'undefined' if value is None else f'{value:.4f}'}")
    for note in report.notes:
        lines.append(f"note: {note}")
    head = stats_rows[: min(top, len(stats_rows))]
    tail = stats_rows[-min(top, len(stats_rows)):]
    lines.append("strongest net influencers (balance = out - in):")
    for r in head:
        lines.append(f"  {r.station_id}: balance {r.balance:+.4f}")
    lines.append("most influenced stations:")
    for r in reversed(tail):
        lines.append(f"  {r.station_id}: balance {r.balance:+.4f}")
    return "\n".join(lines) + "\n"
