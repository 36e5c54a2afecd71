"""Command-line surface: graph building, synthetic data generation,
training, evaluation, ablation sweeps, and network analysis.

Exit codes: 0 success, 2 input or validation error, 3 numerical
failure. Every command writes a resolved copy of its configuration into
the output directory, and given --force plus identical inputs the
outputs are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import pipeline
from .config import ConfigError, RunConfig, parse_config, write_config
from .geo import StationTable, build_topology, project_stations
from .model import (
    checkpoint_extra,
    export_adaptive_edges,
    load_checkpoint,
    save_checkpoint,
)
from .netanalysis import format_summary, strength_ranking, weight_degree_report
from .training import (
    NumericalError,
    evaluate,
    summarize_reports,
    write_history_csv,
    write_metrics_csv,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

ABLATION_VARIANTS = ("aea_wind", "only_wind", "only_aea", "static", "wo_weather")


def _prepare_out(path: str, force: bool) -> Path:
    out = Path(path)
    if out.exists() and any(out.iterdir()):
        if not force:
            raise ValueError(
                f"output directory {out} exists and is not empty (use --force)"
            )
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_config(args) -> RunConfig:
    config = parse_config(args.config) if args.config else RunConfig()
    overrides = {}
    for name in ("stations", "series"):
        value = getattr(args, name, None)
        if value:
            overrides[name] = value
    if getattr(args, "seed", None) is not None:
        overrides["seeds"] = (args.seed,)
        overrides["synth_seed"] = args.seed
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _fmt(value: float) -> str:
    return repr(float(value))


# ── commands ─────────────────────────────────────────────────────────


def cmd_build_graph(args) -> int:
    config = _load_config(args)
    if not config.stations:
        raise ValueError("a stations file is required (--stations or config)")
    out = _prepare_out(args.out, args.force)
    stations = StationTable.from_csv(config.stations)
    topology = build_topology(
        stations, config.distance_threshold_km, config.altitude_threshold_km
    )
    _write_rows(
        out / "topology.csv",
        ["src_id", "dst_id", "distance_km"],
        (
            (stations.ids[i], stations.ids[j], _fmt(d))
            for (i, j), d in zip(topology.edge_pairs(), topology.dist_km)
        ),
    )
    degree = np.bincount(topology.src, minlength=stations.n)
    hist = np.bincount(degree, minlength=1)
    lines = [
        f"stations: {stations.n}",
        f"directed edges: {topology.n_edges}",
        "degree histogram (out-degree: stations):",
    ]
    lines += [f"  {d}: {c}" for d, c in enumerate(hist) if c > 0]
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    write_config(config, out / "run_config.txt")
    print(f"built graph: {stations.n} stations, {topology.n_edges} directed edges")
    return EXIT_OK


def cmd_gen_synthetic(args) -> int:
    config = _load_config(args)
    out = _prepare_out(args.out, args.force)
    stations = data_mod.make_synthetic_stations(
        config.synth_nodes,
        config.synth_seed,
        layout=config.synth_layout,
        spacing_km=config.synth_spacing_km,
    )
    topology = build_topology(
        stations, config.distance_threshold_km, config.altitude_threshold_km
    )
    coords = project_stations(stations)
    synth_cfg = data_mod.SynthConfig(
        n_steps=config.synth_steps,
        wind_regime=config.synth_wind_regime,
        wind_speed=config.synth_wind_speed,
        coeff_low=config.synth_coeff_low,
        coeff_high=config.synth_coeff_high,
        coeff_outlier_frac=config.synth_coeff_outlier_frac,
        coeff_outlier_low=config.synth_coeff_outlier_low,
        coeff_outlier_high=config.synth_coeff_outlier_high,
        n_sources=config.synth_n_sources,
        source_rate=config.synth_source_rate,
        source_uniform=bool(config.synth_source_uniform),
        source_pulse_period=config.synth_source_pulse_period,
        decay=config.synth_decay,
        noise_std=config.synth_noise_std,
        burn_in=config.synth_burn_in,
        seed=config.synth_seed,
    )
    dataset, planted = data_mod.synth_advection(stations, topology, coords, synth_cfg)
    stations.to_csv(out / "stations.csv")
    data_mod.write_series_csv(dataset, out / "series.csv")
    data_mod.write_planted_csv(stations, topology, planted, out / "planted_edges.csv")
    write_config(config, out / "run_config.txt")
    print(
        f"generated {dataset.n_steps} steps for {stations.n} stations "
        f"({topology.n_edges} directed edges)"
    )
    return EXIT_OK


def _prepare_from_config(config: RunConfig) -> pipeline.Prepared:
    if not config.stations or not config.series:
        raise ValueError("stations and series paths are required")
    dataset = data_mod.load_dataset(config.stations, config.series)
    spec = pipeline.resolve_split_spec(config, dataset)
    return pipeline.prepare(
        dataset.stations,
        dataset,
        spec,
        config.distance_threshold_km,
        config.altitude_threshold_km,
    )


def _train_variant(
    prepared: pipeline.Prepared, config: RunConfig, variant: str, out: Path
) -> list:
    reports = []
    for seed in config.seeds:
        run_cfg = dataclasses.replace(config, variant=variant)
        model_cfg = pipeline.model_config_from_run(run_cfg, seed)
        train_cfg = pipeline.train_config_from_run(run_cfg, seed)
        model, result = pipeline.train_one(prepared, model_cfg, train_cfg)
        save_checkpoint(
            model,
            out / f"checkpoint_seed{seed}.npz",
            extra={"split": config.split, "variant": variant, "seed": seed},
        )
        write_history_csv(result.history, out / f"history_seed{seed}.csv")
        report = evaluate(model, prepared.inputs["test"], config.eval_horizons)
        write_metrics_csv(report, out / f"metrics_seed{seed}.csv")
        reports.append(report)
    _write_rows(
        out / "metrics_summary.csv",
        ["horizon", "mae_mean", "mae_std", "rmse_mean", "rmse_std"],
        (
            (h, _fmt(mm), _fmt(ms), _fmt(rm), _fmt(rs))
            for h, mm, ms, rm, rs in summarize_reports(reports)
        ),
    )
    return reports


def cmd_train(args) -> int:
    config = _load_config(args)
    out = _prepare_out(args.out, args.force)
    prepared = _prepare_from_config(config)
    _train_variant(prepared, config, config.variant, out)
    write_config(config, out / "run_config.txt")
    print(f"trained {len(config.seeds)} run(s) of {config.variant} into {out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = _load_config(args)
    out = _prepare_out(args.out, args.force)
    model = load_checkpoint(args.checkpoint)
    extra = checkpoint_extra(args.checkpoint)
    if args.split:
        config = dataclasses.replace(config, split=args.split)
    elif extra.get("split"):
        config = dataclasses.replace(config, split=str(extra["split"]))
    horizons = (
        tuple(int(h) for h in args.horizons.split(","))
        if args.horizons
        else config.eval_horizons
    )
    dataset = data_mod.load_dataset(config.stations, config.series)
    spec = pipeline.resolve_split_spec(config, dataset)
    prepared = pipeline.prepare(
        dataset.stations,
        dataset,
        spec,
        config.distance_threshold_km,
        config.altitude_threshold_km,
    )
    # evaluation must use the normalization the model was trained with
    prepared_inputs = data_mod.prepare_inputs(
        prepared.datasets["test"],
        model.norm,
        None
        if prepared.inputs["test"].z is None
        else prepared.inputs["test"].z
        * (prepared.norm.wind_edge_max / model.norm.wind_edge_max),
    )
    report = evaluate(model, prepared_inputs, horizons)
    write_metrics_csv(report, out / "metrics.csv")
    write_config(config, out / "run_config.txt")
    for h, mae, rmse in report.rows():
        print(f"horizon {h}: mae {mae:.4f} rmse {rmse:.4f}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    config = _load_config(args)
    out = _prepare_out(args.out, args.force)
    prepared = _prepare_from_config(config)
    table_rows = []
    summaries = {}
    for variant in ABLATION_VARIANTS:
        variant_dir = out / variant
        variant_dir.mkdir(exist_ok=True)
        reports = _train_variant(prepared, config, variant, variant_dir)
        summaries[variant] = summarize_reports(reports)
    horizons = [row[0] for row in summaries[ABLATION_VARIANTS[0]]]
    for idx, h in enumerate(horizons):
        best_rmse = min(summaries[v][idx][3] for v in ABLATION_VARIANTS)
        best_mae = min(summaries[v][idx][1] for v in ABLATION_VARIANTS)
        for variant in ABLATION_VARIANTS:
            _, mae_mean, mae_std, rmse_mean, rmse_std = summaries[variant][idx]
            table_rows.append(
                (
                    variant,
                    h,
                    _fmt(mae_mean),
                    _fmt(mae_std),
                    _fmt(rmse_mean),
                    _fmt(rmse_std),
                    int(mae_mean == best_mae),
                    int(rmse_mean == best_rmse),
                )
            )
    _write_rows(
        out / "ablation_table.csv",
        [
            "variant", "horizon", "mae_mean", "mae_std",
            "rmse_mean", "rmse_std", "best_mae", "best_rmse",
        ],
        table_rows,
    )
    write_config(config, out / "run_config.txt")
    print(f"ablation table written to {out / 'ablation_table.csv'}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    out = _prepare_out(args.out, args.force)
    model = load_checkpoint(args.checkpoint)
    edge_rows, asym_rows = export_adaptive_edges(model)
    _write_rows(
        out / "adaptive_edges.csv",
        ["src_id", "dst_id", "weight"],
        ((a, b, _fmt(w)) for a, b, w in edge_rows),
    )
    _write_rows(
        out / "edge_asymmetry.csv",
        ["station_a", "station_b", "weight_difference"],
        ((a, b, _fmt(w)) for a, b, w in asym_rows),
    )
    weights = model.adaptive_edges.data[:, 0]
    stats_rows = strength_ranking(
        model.topology.src, model.topology.dst, weights, model.station_ids
    )
    _write_rows(
        out / "network_stats.csv",
        ["station_id", "degree", "centrality", "in_strength", "out_strength", "balance"],
        (
            (r.station_id, r.degree, _fmt(r.centrality), _fmt(r.in_strength),
             _fmt(r.out_strength), _fmt(r.balance))
            for r in stats_rows
        ),
    )
    report = weight_degree_report(stats_rows)
    (out / "summary.txt").write_text(
        format_summary(stats_rows, report), encoding="utf-8"
    )
    print(f"analysis written to {out}")
    return EXIT_OK


# ── entry point ──────────────────────────────────────────────────────


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airgraph",
        description="Station-network air quality forecasting toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--force", action="store_true", help="overwrite outputs")
        p.add_argument("--seed", type=int, help="override the seed list")

    p = sub.add_parser("build-graph", help="stations file to topology CSV")
    p.add_argument("--stations", help="stations CSV path")
    common(p)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("gen-synthetic", help="generate a synthetic dataset")
    common(p)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("train", help="train one variant over the seed list")
    p.add_argument("--stations")
    p.add_argument("--series")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--stations")
    p.add_argument("--series")
    p.add_argument("--split", help="override the checkpoint's split scheme")
    p.add_argument("--horizons", help="comma-separated horizons")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="train and compare all variants")
    p.add_argument("--stations")
    p.add_argument("--series")
    common(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("analyze", help="network analysis of learned edges")
    p.add_argument("--checkpoint", required=True)
    common(p)
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, OSError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
