"""Command-line front end.

Exit codes: 0 success, 1 internal fault, 2 input data error, 3 configuration
error.
"""

from __future__ import annotations

import argparse
import contextlib
import sys

import numpy as np

from . import io as csvio
from . import svg
from ._backend import backend_name
from .cluster import LdcofConfig, build_features, dump_model, ldcof_detect, load_model, train_ldcof
from .detect import OFFLINE_SPORADIC, ONLINE_SPORADIC, EsdConfig, FilterConfig
from .errors import ConfigError, InputError
from .evaluate import FaultPolicy, confusion, fault_flag, metrics, window_frequency
from .ingest import CleaningConfig, clean, condense_dst, format_timestamp, format_value, parse_sensor_csv, parse_timestamp, write_series
from .pipeline import ALGORITHMS, DEFAULT_MEMBERS, DetectorSettings, load_config, run_detector, run_pipeline
from .series import TimeSeries
from .stats import decompose, kendall, pearson, spearman
from .synth import InjectionConfig, inject

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_CONFIG = 0, 1, 2, 3


class UsageError(ConfigError):
    def __init__(self, message: str, usage: str = ""):
        super().__init__(message)
        self.usage = usage


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, self.format_usage())


@contextlib.contextmanager
def _out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _echo(args, *extra) -> list[str]:
    return [f"sensorqc {args.command}", f"seed={args.seed}", *extra]


def _read_sensor(path, sensor=None) -> TimeSeries:
    with open(path, encoding="utf-8") as fh:
        readings = parse_sensor_csv(fh, sensor)
    return TimeSeries.from_readings(readings, sensor)


# ------------------------------------------------------------------ commands


def cmd_clean(args) -> int:
    cfg = CleaningConfig(
        magnitude_cutoff=args.cutoff, drop_negative=not args.keep_negative, drop_nonfinite=not args.keep_nonfinite
    )
    series = _read_sensor(args.input, args.sensor)
    cleaned, report = clean(series, cfg)
    condensed, dst = condense_dst(cleaned)
    report = report.merge(dst)
    echo = _echo(args, f"magnitude_cutoff={cfg.magnitude_cutoff!r} drop_negative={cfg.drop_negative} drop_nonfinite={cfg.drop_nonfinite}")
    with _out(args.output) as fh:
        write_series(condensed, fh, echo)
    if args.report:
        with _out(args.report) as fh:
            fh.write(report.to_text())
    else:
        sys.stderr.write(report.to_text())
    return EXIT_OK


def cmd_decompose(args) -> int:
    series, _ = csvio.read_input_series(args.input, args.sensor)
    d = decompose(series, args.period)
    with _out(args.output) as fh:
        csvio.write_decomposition(series.values, d, fh, _echo(args, f"period={args.period}"))
    return EXIT_OK


def cmd_correlate(args) -> int:
    a, _ = csvio.read_input_series(args.input, args.sensor)
    b, _ = csvio.read_input_series(args.other, args.other_sensor)
    common, ia, ib = np.intersect1d(a.timestamps, b.timestamps, return_indices=True)
    x, y = a.values[ia], b.values[ib]
    with _out(args.output) as fh:
        fh.write(f"n={common.size}\n")
        fh.write(f"pearson={pearson(x, y)!r}\n")
        fh.write(f"spearman={spearman(x, y)!r}\n")
        fh.write(f"kendall={kendall(x, y)!r}\n")
    return EXIT_OK


def cmd_inject(args) -> int:
    series, _ = csvio.read_input_series(args.input, args.sensor)
    cfg = InjectionConfig(rate=args.rate, offset_min=args.offset_min, offset_max=args.offset_max, seed=args.seed)
    labeled = inject(series, cfg)
    with _out(args.output) as fh:
        csvio.write_labeled(labeled, fh, _echo(args, cfg.echo()))
    return EXIT_OK


def _detector_settings(args) -> DetectorSettings:
    def filt(default: FilterConfig, mode):
        return FilterConfig(
            window=args.window if args.window is not None else default.window,
            alpha=args.alpha if args.alpha is not None else default.alpha,
            mode=mode,
        )

    threshold = args.threshold
    if threshold != "auto":
        try:
            threshold = float(threshold)
        except ValueError:
            raise ConfigError(f"--threshold must be a number or 'auto', got {threshold!r}") from None
    members = tuple(m.strip() for m in args.members.split(",") if m.strip())
    weights = tuple(float(w) for w in args.weights.split(",")) if args.weights else None
    return DetectorSettings(
        offline=filt(OFFLINE_SPORADIC, "offline"),
        online=filt(ONLINE_SPORADIC, "online"),
        eps=args.eps,
        gaussian_window=args.gauss_window,
        esd=EsdConfig(max_outliers=args.max_outliers, significance=args.significance, period=args.period),
        ldcof=LdcofConfig(k_clusters=args.k, alpha=args.ldcof_alpha, beta=args.ldcof_beta, score_threshold=threshold),
        temporal=args.temporal,
        members=members,
        strategy=args.strategy,
        weights=weights,
    )


def _algo_echo(algo, s: DetectorSettings) -> str:
    return {
        "baseline": "algo=baseline",
        "lowhigh-offline": f"algo=lowhigh-offline {s.offline.echo()}",
        "lowhigh-online": f"algo=lowhigh-online {s.online.echo()}",
        "gaussian": f"algo=gaussian eps={s.eps!r} window={s.gaussian_window}",
        "sesd": f"algo=sesd {s.esd.echo()}",
        "ldcof": f"algo=ldcof {s.ldcof.echo()} temporal={s.temporal}",
        "ensemble": f"algo=ensemble members={','.join(s.members)} strategy={s.strategy} weights={s.weights}",
    }[algo]


def cmd_detect(args) -> int:
    if args.algo not in ALGORITHMS:
        raise UsageError(f"unknown --algo {args.algo!r}; choose from {', '.join(ALGORITHMS)}", args.usage)
    settings = _detector_settings(args)
    series, in_labels = csvio.read_input_series(args.input, args.sensor)
    train = csvio.read_input_series(args.train, args.sensor)[0] if args.train else series
    oxygen = csvio.read_input_series(args.oxygen, args.oxygen_sensor)[0] if args.oxygen else None
    train_oxygen = csvio.read_input_series(args.train_oxygen, args.oxygen_sensor)[0] if args.train_oxygen else oxygen

    if args.algo == "ldcof" and args.model:
        with open(args.model, encoding="utf-8") as fh:
            model = load_model(fh)
        mat = build_features(series, oxygen, settings.temporal)
        report = ldcof_detect(model, mat, settings.ldcof)
    else:
        report = run_detector(args.algo, series, train, settings, args.seed, oxygen, train_oxygen)
        if args.algo == "ldcof" and args.model_out:
            train_fm = build_features(train, train_oxygen, settings.temporal)
            with _out(args.model_out) as fh:
                dump_model(train_ldcof(train_fm, settings.ldcof, seed=args.seed), fh)

    echo = _echo(args, _algo_echo(args.algo, settings), f"backend={backend_name()}")
    with _out(args.output) as fh:
        csvio.write_report(series, report, fh, echo)

    labels = None
    if args.labels:
        labels = csvio.read_labeled(args.labels).labels
    elif args.metrics and in_labels is not None:
        labels = in_labels
    if labels is not None:
        counts = confusion(report, labels)
        m = metrics(counts)
        target = args.metrics or "-"
        # report CSV already owns stdout
        if target == "-" and args.output in (None, "-"):
            csvio.write_metrics_text(counts, m, sys.stderr)
        else:
            with _out(target) as fh:
                csvio.write_metrics_text(counts, m, fh)
    return EXIT_OK


def _parse_when(text: str):
    try:
        return parse_timestamp(text)
    except ValueError:
        raise ConfigError(f"bad timestamp {text!r}; expected YYYY-MM-DD HH:MM:SS") from None


def cmd_evaluate(args) -> int:
    series, report = csvio.read_report(args.report)
    with _out(args.output) as fh:
        if args.labels:
            counts = confusion(report, csvio.read_labeled(args.labels).labels)
            m = metrics(counts)
            csvio.write_metrics_text(counts, m, fh)
            if args.csv:
                with _out(args.csv) as cfh:
                    csvio.write_metrics_csv([(report.detector, counts, m)], cfh, _echo(args))
        if args.window_start or args.window_end:
            if not (args.window_start and args.window_end):
                raise ConfigError("--window-start and --window-end go together")
            wf = window_frequency(
                report,
                series.timestamps,
                np.timedelta64(args.bin, "m"),
                (_parse_when(args.window_start), _parse_when(args.window_end)),
            )
            fh.write(f"in_rate={wf.in_rate!r}\nout_rate={wf.out_rate!r}\n")
            if args.bins:
                with _out(args.bins) as bfh:
                    csvio.write_comments(bfh, _echo(args, f"bin_minutes={args.bin}"))
                    bfh.write("bin_start,count,inside\n")
                    for st, c, ins in zip(wf.bin_starts, wf.bin_counts, wf.bin_inside):
                        bfh.write(f"{format_timestamp(st)},{int(c)},{int(ins)}\n")
        if args.faults:
            policy = FaultPolicy(np.timedelta64(args.fault_interval, "m"), args.fault_min_events)
            intervals = fault_flag(report, series.timestamps, policy)
            with _out(args.faults) as ffh:
                csvio.write_faults(
                    intervals, ffh, _echo(args, f"interval_minutes={args.fault_interval} min_events={args.fault_min_events}")
                )
            fh.write(f"fault_intervals={len(intervals)}\n")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    if not args.config:
        raise ConfigError("pipeline requires --config")
    cfg = load_config(args.config)
    result = run_pipeline(cfg, seed=args.seed_explicit, threads=args.threads)
    with _out(args.output) as fh:
        csvio.write_metrics_csv(result.rows, fh, ["sensorqc pipeline", *result.header])
    return EXIT_OK


def cmd_plot_data(args) -> int:
    kind = args.kind
    if kind == "report-overlay":
        if not args.report:
            raise ConfigError("report-overlay needs --report")
        series, labels = csvio.read_input_series(args.input, args.sensor)
        rseries, report = csvio.read_report(args.report)
        common, ia, ib = np.intersect1d(series.timestamps, rseries.timestamps, return_indices=True)
        with _out(args.output) as fh:
            csvio.write_comments(fh, _echo(args, "kind=report-overlay"))
            fh.write("timestamp,value,score,flag" + (",label" if labels is not None else "") + "\n")
            for t, i, j in zip(common, ia, ib):
                row = f"{format_timestamp(t)},{format_value(series.values[i])},{format_value(report.scores[j])},{int(report.flags[j])}"
                if labels is not None:
                    row += f",{int(labels[i])}"
                fh.write(row + "\n")
        if args.svg:
            flags = np.zeros(len(series), dtype=bool)
            flags[ia] = report.flags[ib]
            with _out(args.svg) as sfh:
                sfh.write(svg.render(series.values, flags))
        return EXIT_OK

    series, _ = csvio.read_input_series(args.input, args.sensor)
    if kind == "series":
        with _out(args.output) as fh:
            csvio.write_comments(fh, _echo(args, "kind=series"))
            fh.write("timestamp,value\n")
            for t, v in zip(series.timestamps, series.values):
                fh.write(f"{format_timestamp(t)},{format_value(v)}\n")
        if args.svg:
            with _out(args.svg) as sfh:
                sfh.write(svg.render(series.values))
    elif kind == "decomposition":
        d = decompose(series, args.period)
        with _out(args.output) as fh:
            csvio.write_decomposition(series.values, d, fh, _echo(args, "kind=decomposition", f"period={args.period}"))
        if args.svg:
            with _out(args.svg) as sfh:
                sfh.write(svg.render(d.residual))
    elif kind == "histogram":
        if args.rounding not in (0, 1):
            raise ConfigError("--rounding must be 0 (integers) or 1 (one decimal digit)")
        with _out(args.output) as fh:
            csvio.write_comments(fh, _echo(args, "kind=histogram", f"rounding={args.rounding}"))
            fh.write("bin,count\n")
            for key, count in svg.histogram(series.values, args.rounding):
                fh.write(f"{key},{count}\n")
    else:
        raise UsageError(f"unknown plot kind {kind!r}", args.usage)
    return EXIT_OK


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    common.add_argument("--config", default=None, help="flat key = value config; [<subcommand>] supplies defaults")
    common.add_argument("--output", "-o", default="-", help="output path (default stdout)")

    parser = _Parser(prog="sensorqc", description="Sensor time-series anomaly detection")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("clean", parents=[common], help="noise filter and DST repair")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--sensor")
    p.add_argument("--cutoff", type=float, default=1e6)
    p.add_argument("--keep-negative", action="store_true")
    p.add_argument("--keep-nonfinite", action="store_true")
    p.add_argument("--report", help="write the cleaning report here instead of stderr")
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("decompose", parents=[common], help="trend/seasonal/residual export")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--sensor")
    p.add_argument("--period", type=int, default=1440)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("correlate", parents=[common], help="Pearson, Spearman and Kendall between two series")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--other", required=True)
    p.add_argument("--sensor")
    p.add_argument("--other-sensor")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("inject", parents=[common], help="add labelled synthetic anomalies")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--sensor")
    p.add_argument("--rate", type=float, default=0.01)
    p.add_argument("--offset-min", type=float, default=1.0)
    p.add_argument("--offset-max", type=float, default=4.0)
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("detect", parents=[common], help="run one detector")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--algo", required=True, help=" | ".join(ALGORITHMS))
    p.add_argument("--sensor")
    p.add_argument("--train", help="anomaly-free training series (gaussian, ldcof); default: the input")
    p.add_argument("--window", type=int, help="low-high filter window (default 5 offline, 20 online)")
    p.add_argument("--alpha", type=float, help="low-high filter alpha (default 1 offline, 0.2 online)")
    p.add_argument("--eps", type=float, default=0.08)
    p.add_argument("--gauss-window", type=int)
    p.add_argument("--max-outliers", type=int)
    p.add_argument("--significance", type=float, default=0.05)
    p.add_argument("--period", type=int, default=1440)
    p.add_argument("--k", type=int, default=12)
    p.add_argument("--ldcof-alpha", type=float, default=0.75)
    p.add_argument("--ldcof-beta", type=float, default=0.25)
    p.add_argument("--threshold", default="auto")
    p.add_argument("--oxygen")
    p.add_argument("--oxygen-sensor")
    p.add_argument("--train-oxygen")
    p.add_argument("--temporal", default="none", help="none | month | season | weekday")
    p.add_argument("--model", help="load an exported LDCOF model instead of training")
    p.add_argument("--model-out", help="export the trained LDCOF model")
    p.add_argument("--members", default=",".join(DEFAULT_MEMBERS))
    p.add_argument("--strategy", default="majority")
    p.add_argument("--weights")
    p.add_argument("--labels", help="labeled CSV; emits metrics")
    p.add_argument("--metrics", help="metrics destination (default stderr)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("evaluate", parents=[common], help="metrics, window frequency and fault intervals")
    p.add_argument("--report", required=True)
    p.add_argument("--labels")
    p.add_argument("--csv", help="also write metrics as a one-row CSV")
    p.add_argument("--window-start")
    p.add_argument("--window-end")
    p.add_argument("--bin", type=int, default=60, help="bin width in minutes")
    p.add_argument("--bins", help="per-bin counts CSV")
    p.add_argument("--faults", help="fault intervals CSV")
    p.add_argument("--fault-interval", type=int, default=60, help="minutes")
    p.add_argument("--fault-min-events", type=int, default=5)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", parents=[common], help="clean, inject, run every detector, score")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("plot-data", parents=[common], help="CSV (and SVG) for figure-style plots")
    p.add_argument("kind", help="series | decomposition | histogram | report-overlay")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--sensor")
    p.add_argument("--report")
    p.add_argument("--period", type=int, default=1440)
    p.add_argument("--rounding", type=int, default=1, help="decimal digits for histogram bins: 1 or 0")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_plot_data)
    return parser


def _apply_config_defaults(parser, argv) -> None:
    """Install ``[<subcommand>]`` config values as subparser defaults before parsing."""
    subparsers = parser._subparsers._group_actions[0].choices
    if not argv or argv[0] not in subparsers or argv[0] == "pipeline":
        return
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv[1:])
    if not known.config:
        return
    command = argv[0]
    cfg = load_config(known.config)
    if not cfg.has_section(command):
        return
    subparser = subparsers[command]
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in cfg.items(command):
        dest = key.replace("-", "_")
        action = actions.get(dest)
        if action is None or dest in ("help", "config"):
            raise ConfigError(f"[{command}] unknown key {key!r}")
        if action.type is not None:
            try:
                defaults[dest] = action.type(raw)
            except ValueError:
                raise ConfigError(f"[{command}] {key}: cannot parse {raw!r}") from None
        elif isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = raw.strip().lower() in ("1", "true", "yes", "on")
        else:
            defaults[dest] = raw
        action.required = False
    subparser.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config_defaults(parser, argv)
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required", parser.format_usage())
        args.seed_explicit = args.seed
        if args.seed is None:
            args.seed = 0
        args.usage = parser.format_usage()
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(exc.usage)
        sys.stderr.write(f"sensorqc: error: {exc}\n")
        return EXIT_CONFIG
    except ConfigError as exc:
        sys.stderr.write(f"sensorqc: config error: {exc}\n")
        return EXIT_CONFIG
    except InputError as exc:
        sys.stderr.write(f"sensorqc: input error: {exc}\n")
        return EXIT_INPUT
    except (OSError, UnicodeDecodeError) as exc:
        sys.stderr.write(f"sensorqc: input error: {exc}\n")
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit code 1
        sys.stderr.write(f"sensorqc: internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
