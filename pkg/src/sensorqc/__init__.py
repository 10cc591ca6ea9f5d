"""Anomaly detection and fault flagging for sensor time series."""

from .cluster import (
    ClusterModel,
    FeatureMatrix,
    LdcofConfig,
    build_features,
    kmeans_fit,
    ldcof_detect,
    ldcof_score,
    split_clusters,
    train_ldcof,
    with_split,
)
from .detect import (
    AnomalyReport,
    EsdConfig,
    FilterConfig,
    LowHighOnline,
    baseline_detect,
    esd_test,
    gaussian_detect,
    gaussian_score,
    lowhigh_offline,
    lowhigh_online,
    sesd_detect,
)
from .evaluate import (
    ConfusionCounts,
    EvalMetrics,
    FaultPolicy,
    confusion,
    ensemble_combine,
    fault_flag,
    metrics,
    window_frequency,
)
from .ingest import CleaningConfig, CleaningReport, clean, condense_dst, parse_sensor_csv
from .series import SensorReading, TimeSeries
from .stats import Decomposition, GaussianModel, decompose, fit_gaussian, kendall, pearson, spearman
from .synth import InjectionConfig, LabeledSeries, inject

__version__ = "0.1.0"
