"""End-to-end run: load or synthesize -> clean -> inject -> detect all -> score."""

from __future__ import annotations

import configparser
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cluster import LdcofConfig, build_features, ldcof_detect, train_ldcof
from .detect import (
    EsdConfig,
    FilterConfig,
    GAUSSIAN_EPS,
    OFFLINE_SPORADIC,
    ONLINE_SPORADIC,
    baseline_detect,
    gaussian_detect,
    lowhigh_offline,
    lowhigh_online,
    sesd_detect,
)
from .errors import ConfigError
from .evaluate import confusion, ensemble_combine, metrics
from .ingest import CleaningConfig, clean, condense_dst, read_series
from .stats import fit_gaussian
from .synth import InjectionConfig, SeasonalSpec, companion_series, inject, seasonal_series

ALGORITHMS = ("baseline", "lowhigh-online", "lowhigh-offline", "gaussian", "sesd", "ldcof", "ensemble")
DEFAULT_MEMBERS = ("sesd", "gaussian", "lowhigh-offline")


def load_config(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parser


def _get(cfg, section, key, conv=str, default=None, required=False):
    if cfg.has_option(section, key):
        raw = cfg.get(section, key)
        try:
            return conv(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None
    if required:
        raise ConfigError(f"missing required key [{section}] {key}")
    return default


def _threshold(raw: str):
    return raw if raw.strip() == "auto" else float(raw)


@dataclass
class DetectorSettings:
    """Effective hyper-parameters for every detector."""

    offline: FilterConfig = OFFLINE_SPORADIC
    online: FilterConfig = ONLINE_SPORADIC
    eps: float = GAUSSIAN_EPS
    gaussian_window: int | None = None
    esd: EsdConfig = EsdConfig()
    ldcof: LdcofConfig = LdcofConfig()
    temporal: str = "none"
    members: tuple = DEFAULT_MEMBERS
    strategy: str = "majority"
    weights: tuple | None = None

    def echo(self) -> list[str]:
        return [
            f"lowhigh-offline {self.offline.echo()}",
            f"lowhigh-online {self.online.echo()}",
            f"gaussian eps={self.eps!r} window={self.gaussian_window}",
            f"sesd {self.esd.echo()}",
            f"ldcof {self.ldcof.echo()} temporal={self.temporal}",
            f"ensemble members={','.join(self.members)} strategy={self.strategy} weights={self.weights}",
        ]


def settings_from_config(cfg) -> DetectorSettings:
    off = FilterConfig(
        window=_get(cfg, "lowhigh-offline", "window", int, OFFLINE_SPORADIC.window),
        alpha=_get(cfg, "lowhigh-offline", "alpha", float, OFFLINE_SPORADIC.alpha),
        mode="offline",
    )
    on = FilterConfig(
        window=_get(cfg, "lowhigh-online", "window", int, ONLINE_SPORADIC.window),
        alpha=_get(cfg, "lowhigh-online", "alpha", float, ONLINE_SPORADIC.alpha),
        mode="online",
    )
    esd = EsdConfig(
        max_outliers=_get(cfg, "sesd", "max_outliers", int, None),
        significance=_get(cfg, "sesd", "significance", float, 0.05),
        period=_get(cfg, "sesd", "period", int, _get(cfg, "synthetic", "period", int, 1440)),
    )
    ld = LdcofConfig(
        k_clusters=_get(cfg, "ldcof", "k", int, 12),
        alpha=_get(cfg, "ldcof", "alpha", float, 0.75),
        beta=_get(cfg, "ldcof", "beta", float, 0.25),
        score_threshold=_get(cfg, "ldcof", "threshold", _threshold, "auto"),
    )
    members = tuple(m.strip() for m in _get(cfg, "ensemble", "members", str, ",".join(DEFAULT_MEMBERS)).split(",") if m.strip())
    weights = _get(cfg, "ensemble", "weights", lambda s: tuple(float(w) for w in s.split(",")), None)
    return DetectorSettings(
        offline=off,
        online=on,
        eps=_get(cfg, "gaussian", "eps", float, GAUSSIAN_EPS),
        gaussian_window=_get(cfg, "gaussian", "window", int, None),
        esd=esd,
        ldcof=ld,
        temporal=_get(cfg, "ldcof", "temporal", str, "none"),
        members=members,
        strategy=_get(cfg, "ensemble", "strategy", str, "majority"),
        weights=weights,
    )


def run_detector(name, test, train, settings: DetectorSettings, seed: int, oxygen=None, train_oxygen=None, member_reports=None):
    """One detector on ``test``; ``train`` is the anomaly-free reference series."""
    if name == "baseline":
        return baseline_detect(test)
    if name == "lowhigh-offline":
        return lowhigh_offline(test, settings.offline)
    if name == "lowhigh-online":
        return lowhigh_online(test, settings.online)
    if name == "gaussian":
        return gaussian_detect(fit_gaussian(train), test, settings.eps, settings.gaussian_window)
    if name == "sesd":
        return sesd_detect(test, settings.esd)
    if name == "ldcof":
        train_fm = build_features(train, train_oxygen, settings.temporal)
        model = train_ldcof(train_fm, settings.ldcof, seed=seed)
        test_fm = build_features(test, oxygen, settings.temporal, normalization=train_fm.normalization)
        if len(test_fm) != len(test):
            raise ConfigError("ldcof test features do not align with the series; oxygen timestamps must match")
        return ldcof_detect(model, test_fm, settings.ldcof)
    if name == "ensemble":
        if member_reports is None:
            member_reports = [run_detector(m, test, train, settings, seed, oxygen, train_oxygen) for m in settings.members]
        return ensemble_combine(member_reports, settings.strategy, settings.weights)
    raise ConfigError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")


@dataclass
class PipelineResult:
    header: list
    rows: list  # (detector, ConfusionCounts, EvalMetrics)


def run_pipeline(cfg: configparser.ConfigParser, seed: int | None = None, threads: int | None = None) -> PipelineResult:
    source = _get(cfg, "data", "source", str, required=True).strip()
    if seed is None:
        seed = _get(cfg, "run", "seed", int, 0)
    header = [f"seed={seed}", f"data.source={source}"]
    oxygen = None
    if source == "synthetic":
        spec = SeasonalSpec(
            n=_get(cfg, "synthetic", "n", int, SeasonalSpec.n),
            period=_get(cfg, "synthetic", "period", int, SeasonalSpec.period),
            level=_get(cfg, "synthetic", "level", float, SeasonalSpec.level),
            amplitude=_get(cfg, "synthetic", "amplitude", float, SeasonalSpec.amplitude),
            trend=_get(cfg, "synthetic", "trend", float, SeasonalSpec.trend),
            noise=_get(cfg, "synthetic", "noise", float, SeasonalSpec.noise),
            seed=seed,
        )
        base = seasonal_series(spec)
        oxygen = companion_series(spec)
        header.append(
            f"synthetic n={spec.n} period={spec.period} level={spec.level!r} amplitude={spec.amplitude!r} "
            f"trend={spec.trend!r} noise={spec.noise!r}"
        )
    elif source == "csv":
        path = _get(cfg, "data", "path", str, required=True)
        sensor = _get(cfg, "data", "sensor", str, None)
        ccfg = CleaningConfig(magnitude_cutoff=_get(cfg, "clean", "magnitude_cutoff", float, 1e6))
        base, _ = clean(read_series(path, sensor), ccfg)
        base, _ = condense_dst(base)
        header.append(f"data.path={path} sensor={sensor} magnitude_cutoff={ccfg.magnitude_cutoff!r}")
        oxy_path = _get(cfg, "data", "oxygen_path", str, None)
        if oxy_path:
            oxygen, _ = condense_dst(clean(read_series(oxy_path, _get(cfg, "data", "oxygen_sensor", str, None)), ccfg)[0])
            header.append(f"data.oxygen_path={oxy_path}")
    else:
        raise ConfigError(f"[data] source must be synthetic or csv, got {source!r}")

    icfg = InjectionConfig(
        rate=_get(cfg, "inject", "rate", float, 0.01),
        offset_min=_get(cfg, "inject", "offset_min", float, 1.0),
        offset_max=_get(cfg, "inject", "offset_max", float, 4.0),
        seed=seed,
    )
    header.append(f"inject {icfg.echo()}")
    labeled = inject(base, icfg)
    settings = settings_from_config(cfg)
    header.extend(settings.echo())
    names = tuple(
        a.strip() for a in _get(cfg, "detect", "algorithms", str, ",".join(ALGORITHMS)).split(",") if a.strip()
    )
    for name in names:
        if name not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {name!r} in [detect] algorithms")
    if threads is None:
        threads = _get(cfg, "detect", "threads", int, 1)
    header.append(f"detect algorithms={','.join(names)}")

    singles = [n for n in dict.fromkeys(names + (settings.members if "ensemble" in names else ())) if n != "ensemble"]

    def job(name):
        return run_detector(name, labeled.series, base, settings, seed, oxygen, oxygen)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = dict(zip(singles, pool.map(job, singles)))
    else:
        reports = {n: job(n) for n in singles}
    if "ensemble" in names:
        reports["ensemble"] = ensemble_combine([reports[m] for m in settings.members], settings.strategy, settings.weights)

    rows = []
    for name in names:
        counts = confusion(reports[name], labeled.labels)
        rows.append((name, counts, metrics(counts)))
    return PipelineResult(header, rows)
