"""Command-line driver: config parsing, orchestration, file emission.

Usage:
    spillnet --config run.toml [--mode full|rolling] [--scheme ...] [...]
    spillnet gen-synth --out prices.csv [--seed N] [...]

Exit codes: 1 config problem, 2 data validation, 3 estimation failure,
4 file I/O.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import exports, synth
from .connect import measures, vd, vd_ordering_averaged
from .errors import ConfigError, DataError, EstimationError, SpillnetError
from .identify import SCHEMES, ClusterSpec, ma_coefficients, make_identification
from .returns import read_price_csv, summary_stats, weekly_returns_from_prices, write_stats_csv
from .rolling import ORDER_AVERAGE, MeasureSeries, RollingConfig, roll
from .varnet import fit_var, model_to_dict

logger = logging.getLogger(__name__)

ALL_SCHEMES = ("clustered", "generalized", "orthogonalized")

_CONFIG_KEYS = {
    "input", "date_column", "mode", "lags", "horizon", "schemes", "clusters",
    "cluster_order", "window", "step", "out", "node_attributes",
    "edge_threshold", "dump_model", "workers",
}


@dataclass
class RunConfig:
    """Effective run settings after config file and flag overrides merge."""

    input_path: Path
    clusters: dict[str, list[str]]
    date_column: str = "date"
    mode: str = "full"
    lag_order: int = 3
    horizon: int = 12
    schemes: tuple[str, ...] = ALL_SCHEMES
    cluster_order: tuple[str, ...] | str = ORDER_AVERAGE
    window: int = 104
    step: int = 1
    out_dir: Path = Path("out")
    node_attributes: Path | None = None
    edge_threshold: float = exports.DEFAULT_EDGE_THRESHOLD
    dump_model: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.mode not in ("full", "rolling"):
            raise ConfigError(f"mode must be 'full' or 'rolling', got {self.mode!r}")
        self.schemes = tuple(dict.fromkeys(self.schemes))
        bad = set(self.schemes) - set(SCHEMES)
        if bad:
            raise ConfigError(f"unknown schemes {sorted(bad)}")
        if not self.clusters:
            raise ConfigError("config must define at least one cluster")
        if isinstance(self.cluster_order, str) and self.cluster_order != ORDER_AVERAGE:
            raise ConfigError(f"cluster_order must be a list or {ORDER_AVERAGE!r}")
        if not isinstance(self.cluster_order, str):
            self.cluster_order = tuple(self.cluster_order)
            if len(self.cluster_order) != len(self.clusters) or set(
                self.cluster_order
            ) != set(self.clusters):
                raise ConfigError("cluster_order must list every cluster exactly once")
        for name in ("lag_order", "horizon", "window", "step", "workers"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        with path.open("rb") as handle:
            raw = tomllib.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if "input" not in raw:
        raise ConfigError("config must set `input` (path to the daily price CSV)")
    if "clusters" not in raw:
        raise ConfigError("config must define a [clusters] table")
    clusters = raw["clusters"]
    if not isinstance(clusters, dict) or not all(
        isinstance(v, list) and all(isinstance(s, str) for s in v) for v in clusters.values()
    ):
        raise ConfigError("[clusters] must map cluster names to lists of series labels")

    schemes = raw.get("schemes", list(ALL_SCHEMES))
    if isinstance(schemes, str):
        schemes = ALL_SCHEMES if schemes == "all" else [schemes]
    try:
        return RunConfig(
            input_path=path.parent / raw["input"],
            clusters={str(k): list(v) for k, v in clusters.items()},
            date_column=raw.get("date_column", "date"),
            mode=raw.get("mode", "full"),
            lag_order=int(raw.get("lags", 3)),
            horizon=int(raw.get("horizon", 12)),
            schemes=tuple(schemes),
            cluster_order=raw.get("cluster_order", ORDER_AVERAGE),
            window=int(raw.get("window", 104)),
            step=int(raw.get("step", 1)),
            out_dir=path.parent / raw.get("out", "out"),
            node_attributes=(path.parent / raw["node_attributes"])
            if "node_attributes" in raw
            else None,
            edge_threshold=float(raw.get("edge_threshold", exports.DEFAULT_EDGE_THRESHOLD)),
            dump_model=bool(raw.get("dump_model", False)),
            workers=int(raw.get("workers", 1)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def _toml_key(key: str) -> str:
    if key and all(c.isalnum() or c in "-_" for c in key):
        return key
    return json.dumps(key)


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    return json.dumps(str(value))


def write_effective_config(cfg: RunConfig, path: Path) -> None:
    """Serialize the merged settings; re-reading them reproduces the run."""
    lines = [
        f"input = {_toml_value(str(cfg.input_path.resolve()))}",
        f"date_column = {_toml_value(cfg.date_column)}",
        f"mode = {_toml_value(cfg.mode)}",
        f"lags = {cfg.lag_order}",
        f"horizon = {cfg.horizon}",
        f"schemes = {_toml_value(cfg.schemes)}",
        f"cluster_order = {_toml_value(cfg.cluster_order)}",
        f"window = {cfg.window}",
        f"step = {cfg.step}",
        f"out = {_toml_value(str(cfg.out_dir.resolve()))}",
        f"edge_threshold = {_toml_value(cfg.edge_threshold)}",
        f"dump_model = {_toml_value(cfg.dump_model)}",
        f"workers = {cfg.workers}",
    ]
    if cfg.node_attributes is not None:
        lines.append(f"node_attributes = {_toml_value(str(cfg.node_attributes.resolve()))}")
    lines.append("")
    lines.append("[clusters]")
    for name, members in cfg.clusters.items():
        lines.append(f"{_toml_key(name)} = {_toml_value(members)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _full_sample(cfg: RunConfig, panel, spec, out_dir: Path) -> list[str]:
    model = fit_var(panel, cfg.lag_order)
    ma = ma_coefficients(model, cfg.horizon)
    node_sizes = None
    if cfg.node_attributes is not None:
        node_sizes = exports.read_node_attributes(cfg.node_attributes)
        missing = [lab for lab in panel.labels if lab not in node_sizes]
        if missing:
            logger.warning("node attribute file lacks %s; size omitted there", missing)
    summary = []
    for scheme in cfg.schemes:
        if scheme == "clustered" and cfg.cluster_order == ORDER_AVERAGE:
            vdm = vd_ordering_averaged(ma, model.sigma, spec, cfg.horizon, labels=panel.labels)
        else:
            order = cfg.cluster_order if scheme == "clustered" else None
            ident = make_identification(model.sigma, scheme, spec=spec, order=order)
            vdm = vd(ma, ident, cfg.horizon, labels=panel.labels)
        report = measures(vdm, spec)
        exports.write_vd_csv(vdm, report, out_dir / f"vd_{scheme}.csv")
        exports.write_report_json(report, vdm, out_dir / f"report_{scheme}.json")
        if panel.n_series >= 2:  # a density needs a cross-section
            exports.write_density_csv(report, out_dir / f"density_{scheme}.csv")
        exports.write_gexf(
            vdm, report, out_dir / f"network_{scheme}.gexf",
            node_sizes=node_sizes, threshold=cfg.edge_threshold,
        )
        summary.append(
            f"  {scheme:>14}: system-wide {report.system_wide:6.2f}  "
            f"within {report.within_cluster:6.2f}  cross {report.cross_cluster:6.2f}"
        )
    if cfg.dump_model:
        with (out_dir / "model.json").open("w", encoding="utf-8") as handle:
            json.dump(model_to_dict(model), handle, indent=2, sort_keys=True)
            handle.write("\n")
    return summary


def _rolling(cfg: RunConfig, panel, spec, out_dir: Path) -> list[str]:
    rcfg = RollingConfig(
        window=cfg.window,
        step=cfg.step,
        horizon=cfg.horizon,
        lag_order=cfg.lag_order,
        schemes=cfg.schemes,
        ordering=cfg.cluster_order,
        workers=cfg.workers,
    )
    series: MeasureSeries = roll(panel, spec, rcfg)
    for scheme in cfg.schemes:
        exports.write_rolling_csv(series, scheme, out_dir / f"rolling_{scheme}.csv")
    if {"clustered", "generalized"} <= set(cfg.schemes):
        exports.write_difference_csv(series, out_dir / "rolling_diff.csv")
    n_fail = len(series.diagnostics)
    summary = [f"  {len(series.dates)} windows ({n_fail} failed)"]
    for line in series.diagnostics[:3]:
        summary.append(f"    {line}")
    if cfg.dump_model:
        logger.warning("--dump-model applies to full-sample mode; ignored under rolling")
    return summary


def run(cfg: RunConfig) -> list[str]:
    """Execute the configured pipeline; returns the printed summary lines."""
    prices = read_price_csv(cfg.input_path, date_column=cfg.date_column)
    panel = weekly_returns_from_prices(prices)
    spec = ClusterSpec.from_labels(
        cfg.clusters,
        panel.labels,
        order=None if isinstance(cfg.cluster_order, str) else cfg.cluster_order,
    )
    out_dir = cfg.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    stats = summary_stats(panel)
    write_stats_csv(stats, out_dir / "stats.csv")
    write_effective_config(cfg, out_dir / "effective_config.toml")

    lines = [
        f"spillnet: {panel.n_series} series, {panel.n_obs} weeks "
        f"({panel.dates[0]} .. {panel.dates[-1]})",
        f"  mode {cfg.mode}, lags {cfg.lag_order}, horizon {cfg.horizon}, "
        f"schemes {'/'.join(cfg.schemes)}",
    ]
    if cfg.mode == "full":
        lines += _full_sample(cfg, panel, spec, out_dir)
    else:
        lines += _rolling(cfg, panel, spec, out_dir)
    lines.append(f"  outputs in {out_dir}")
    return lines


def _run_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spillnet",
        description="Variance-decomposition connectedness with clustered shock identification",
    )
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--mode", choices=["full", "rolling"])
    parser.add_argument(
        "--scheme", help="clustered|generalized|orthogonalized|all (comma list accepted)"
    )
    parser.add_argument("--order", help="'average' or a comma-separated cluster ordering")
    parser.add_argument("--horizon", type=int)
    parser.add_argument("--lags", type=int)
    parser.add_argument("--window", type=int)
    parser.add_argument("--step", type=int)
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--dump-model", action="store_true", default=None)
    parser.add_argument("--workers", type=int)
    return parser


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    if args.mode:
        cfg.mode = args.mode
    if args.scheme:
        cfg.schemes = ALL_SCHEMES if args.scheme == "all" else tuple(args.scheme.split(","))
    if args.order:
        cfg.cluster_order = (
            ORDER_AVERAGE if args.order == ORDER_AVERAGE else tuple(args.order.split(","))
        )
    for flag, attr in (
        ("horizon", "horizon"), ("lags", "lag_order"), ("window", "window"),
        ("step", "step"), ("workers", "workers"),
    ):
        value = getattr(args, flag)
        if value is not None:
            setattr(cfg, attr, value)
    if args.out:
        cfg.out_dir = Path(args.out)
    if args.dump_model is not None:
        cfg.dump_model = args.dump_model
    cfg.__post_init__()  # re-validate after overrides
    return cfg


def _gen_synth_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spillnet gen-synth",
        description="Emit a reproducible synthetic daily price panel",
    )
    parser.add_argument("--out", default="synthetic_prices.csv", help="output CSV path")
    parser.add_argument("--config-out", help="also write a ready-to-run TOML config here")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--weeks", type=int, default=300)
    parser.add_argument("--clusters", type=int, default=3)
    parser.add_argument("--series-per-cluster", type=int, default=2)
    parser.add_argument("--within-corr", type=float, default=0.4)
    parser.add_argument("--cross-loading", type=float, default=0.35)
    parser.add_argument("--lag-coupling", type=float, default=0.05)
    parser.add_argument("--own-lag", type=float, default=0.1)
    parser.add_argument("--daily-vol", type=float, default=0.012)
    return parser


def _gen_synth_main(argv: list[str]) -> int:
    args = _gen_synth_parser().parse_args(argv)
    panel = synth.synthetic_price_panel(
        weeks=args.weeks,
        clusters=args.clusters,
        series_per_cluster=args.series_per_cluster,
        seed=args.seed,
        within_corr=args.within_corr,
        cross_loading=args.cross_loading,
        lag_coupling=args.lag_coupling,
        own_lag=args.own_lag,
        daily_vol=args.daily_vol,
    )
    out = Path(args.out)
    synth.write_price_csv(panel, out)
    print(
        f"wrote {out}: {len(panel.labels)} series x {len(panel.dates)} days "
        f"({args.weeks} weeks), seed {args.seed}"
    )
    if args.config_out:
        groups = synth.cluster_groups(panel)
        lines = [f"input = {_toml_value(str(out.resolve()))}", 'mode = "full"', "", "[clusters]"]
        for name, members in groups.items():
            lines.append(f"{_toml_key(name)} = {_toml_value(members)}")
        Path(args.config_out).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {args.config_out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and argv[0] == "gen-synth":
            return _gen_synth_main(argv[1:])
        args = _run_parser().parse_args(argv)
        cfg = _apply_overrides(load_config(args.config), args)
        for line in run(cfg):
            print(line)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except EstimationError as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except SpillnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
