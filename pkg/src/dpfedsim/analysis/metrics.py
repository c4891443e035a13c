"""Per-round metrics and the metric CSV layout."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass
from pathlib import Path

import numpy as np

METRIC_COLUMNS = ("round", "suboptimality", "snr", "cohort_size", "u_mean", "u_min", "u_max",
                  "clip_active_fraction", "eta")


@dataclass(frozen=True)
class RoundRecord:
    """Metrics of round k.

    ``suboptimality`` is f(w_{k+1}) - f(w*), measured after the server step,
    so the last record of a run carries the final iterate.  The update-norm
    statistics are NaN for an empty cohort.
    """

    round: int
    suboptimality: float
    snr: float
    cohort_size: int
    u_mean: float
    u_min: float
    u_max: float
    clip_active_fraction: float
    eta: float


def snr(aggregated_signal: np.ndarray, aggregated_noise: np.ndarray) -> float:
    """||signal|| / ||noise||, +inf when the noise is exactly zero."""
    if aggregated_signal.shape != aggregated_noise.shape:
        raise ValueError("signal and noise must have the same shape")
    noise = float(np.linalg.norm(aggregated_noise))
    signal = float(np.linalg.norm(aggregated_signal))
    if noise == 0.0:
        return math.inf
    return signal / noise


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def metrics_csv_text(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRIC_COLUMNS)
    for rec in records:
        writer.writerow([_fmt(v) for v in astuple(rec)])
    return buf.getvalue()


def write_metrics_csv(path: str | Path, records) -> None:
    Path(path).write_text(metrics_csv_text(records))


def read_metrics_csv(path: str | Path) -> list[RoundRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != METRIC_COLUMNS:
            raise ValueError(f"unexpected metric columns {header}")
        out = []
        for row in reader:
            out.append(RoundRecord(int(row[0]), float(row[1]), float(row[2]), int(row[3]),
                                   *(float(v) for v in row[4:])))
    return out
