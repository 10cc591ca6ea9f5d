"""CSV formats exchanged between subcommands."""

from __future__ import annotations

import csv
import math

import numpy as np

from .detect import AnomalyReport
from .errors import EmptyInput, MalformedRow
from .ingest import format_timestamp, format_value, parse_sensor_csv, parse_timestamp
from .series import TimeSeries
from .synth import LabeledSeries

LABELED_HEADER = ("timestamp", "value", "label")
REPORT_HEADER = ("timestamp", "value", "score", "flag", "detector")
DECOMP_HEADER = ("index", "value", "trend", "seasonal", "residual")
FAULT_HEADER = ("start", "end", "count")


def write_comments(fh, lines) -> None:
    for line in lines:
        fh.write(f"# {line}\n")


def _rows(fh):
    """(line number, fields) for every non-comment, non-blank line."""
    for lineno, line in enumerate(fh, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        yield lineno, next(csv.reader([text]))


def _opt(value: float) -> str:
    return "" if math.isnan(value) else repr(float(value))


def sniff_header(path) -> tuple:
    with open(path, encoding="utf-8") as fh:
        for _, row in _rows(fh):
            return tuple(c.strip() for c in row)
    raise EmptyInput(f"{path}: no data rows")


# ------------------------------------------------------------ labeled series


def write_labeled(labeled: LabeledSeries, fh, header_lines=()) -> None:
    write_comments(fh, header_lines)
    fh.write(",".join(LABELED_HEADER) + "\n")
    s = labeled.series
    for ts, v, lab in zip(s.timestamps, s.values, labeled.labels):
        fh.write(f"{format_timestamp(ts)},{format_value(v)},{int(lab)}\n")


def read_labeled(path, sensor_id: str = "labeled") -> LabeledSeries:
    ts, vals, labels = [], [], []
    with open(path, encoding="utf-8") as fh:
        rows = _rows(fh)
        for lineno, row in rows:
            if tuple(c.strip() for c in row) == LABELED_HEADER:
                continue
            if len(row) != 3:
                raise MalformedRow(lineno, f"expected 3 fields, got {len(row)}")
            try:
                ts.append(parse_timestamp(row[0]))
                vals.append(math.nan if row[1].strip() == "NaN" else float(row[1]))
                lab = int(row[2])
            except ValueError:
                raise MalformedRow(lineno, "unparsable field") from None
            if lab not in (0, 1):
                raise MalformedRow(lineno, f"label must be 0 or 1, got {lab}")
            labels.append(bool(lab))
    if not ts:
        raise EmptyInput(f"{path}: no data rows")
    return LabeledSeries(TimeSeries(sensor_id, np.array(ts), np.array(vals)), np.array(labels))


def read_input_series(path, sensor: str | None = None) -> tuple[TimeSeries, np.ndarray | None]:
    """Accept either a sensor CSV or a labeled CSV; labels are None for the former."""
    if sniff_header(path) == LABELED_HEADER:
        lab = read_labeled(path, sensor or "labeled")
        return lab.series, lab.labels
    with open(path, encoding="utf-8") as fh:
        readings = parse_sensor_csv(fh, sensor)
    return TimeSeries.from_readings(readings, sensor), None


# ------------------------------------------------------------------- reports


def write_report(series: TimeSeries, report: AnomalyReport, fh, header_lines=()) -> None:
    write_comments(fh, header_lines)
    fh.write(",".join(REPORT_HEADER) + "\n")
    for ts, v, score, flag in zip(series.timestamps, series.values, report.scores, report.flags):
        fh.write(f"{format_timestamp(ts)},{format_value(v)},{_opt(score)},{int(flag)},{report.detector}\n")


def read_report(path) -> tuple[TimeSeries, AnomalyReport]:
    ts, vals, scores, flags = [], [], [], []
    detector = ""
    with open(path, encoding="utf-8") as fh:
        for lineno, row in _rows(fh):
            if tuple(c.strip() for c in row) == REPORT_HEADER:
                continue
            if len(row) != 5:
                raise MalformedRow(lineno, f"expected 5 fields, got {len(row)}")
            try:
                ts.append(parse_timestamp(row[0]))
                vals.append(math.nan if row[1] == "NaN" else float(row[1]))
                scores.append(float(row[2]) if row[2] else math.nan)
                flag = int(row[3])
            except ValueError:
                raise MalformedRow(lineno, "unparsable field") from None
            if flag not in (0, 1):
                raise MalformedRow(lineno, f"flag must be 0 or 1, got {flag}")
            flags.append(bool(flag))
            detector = row[4]
    if not ts:
        raise EmptyInput(f"{path}: no data rows")
    series = TimeSeries("report", np.array(ts), np.array(vals))
    return series, AnomalyReport(detector, np.array(flags), np.array(scores))


# ------------------------------------------------------------ other exports


def write_decomposition(values, decomp, fh, header_lines=()) -> None:
    write_comments(fh, header_lines)
    fh.write(",".join(DECOMP_HEADER) + "\n")
    for i, v in enumerate(values):
        fh.write(f"{i},{format_value(v)},{_opt(decomp.trend[i])},{_opt(decomp.seasonal[i])},{_opt(decomp.residual[i])}\n")


def write_metrics_text(counts, m, fh) -> None:
    for key in ("tp", "fp", "fn", "tn"):
        fh.write(f"{key}={getattr(counts, key)}\n")
    fh.write(m.to_text())


def write_metrics_csv(rows, fh, header_lines=(), label_column: str = "detector") -> None:
    from .evaluate import METRIC_COLUMNS, metrics_row

    write_comments(fh, header_lines)
    fh.write(",".join((label_column,) + METRIC_COLUMNS) + "\n")
    for name, counts, m in rows:
        fh.write(",".join([name] + [repr(v) if isinstance(v, float) else str(v) for v in metrics_row(counts, m)]) + "\n")


def write_faults(intervals, fh, header_lines=()) -> None:
    write_comments(fh, header_lines)
    fh.write(",".join(FAULT_HEADER) + "\n")
    for iv in intervals:
        fh.write(f"{format_timestamp(iv.start)},{format_timestamp(iv.end)},{iv.count}\n")
