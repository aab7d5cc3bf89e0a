"""Published measurement tables embedded as read-only datasets.

Values are transcribed digit for digit.  Where a table gives a value without an
uncertainty the corresponding error is stored as 0.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from rtnoise.errors import DatasetNotFoundError

__all__ = ["DataPoint", "Dataset", "DATASET_NAMES", "load_dataset", "dataset_to_csv", "read_csv_dataset", "write_csv_dataset"]

CSV_COLUMNS = ("x", "x_err", "y", "y_err")


@dataclass(frozen=True)
class DataPoint:
    x: float
    x_err: float
    y: float
    y_err: float
    y_low: float | None = None
    y_high: float | None = None

    def __post_init__(self):
        if self.x_err < 0 or self.y_err < 0:
            raise ValueError("errors must be non-negative")


@dataclass(frozen=True)
class Dataset:
    name: str
    points: tuple[DataPoint, ...]
    x_label: str = "x"
    y_label: str = "y"
    units: str = ""

    def __post_init__(self):
        if len(self.points) < 3:
            raise ValueError("a dataset needs at least 3 points")

    def __len__(self):
        return len(self.points)

    @property
    def x(self) -> np.ndarray:
        return np.array([p.x for p in self.points])

    @property
    def x_err(self) -> np.ndarray:
        return np.array([p.x_err for p in self.points])

    @property
    def y(self) -> np.ndarray:
        return np.array([p.y for p in self.points])

    @property
    def y_err(self) -> np.ndarray:
        return np.array([p.y_err for p in self.points])


def _pts(rows):
    return tuple(DataPoint(*r) for r in rows)


# (x, x_err, y, y_err)
_SNR_VS_R = _pts([
    (0.013, 0.004, -6.222, 0.740),
    (0.030, 0.004, -4.440, 0.432),
    (0.040, 0.006, -3.010, 0.440),
    (0.080, 0.008, -1.105, 0.388),
    (0.340, 0.021, -0.530, 0.442),
    (1.130, 0.052, -0.086, 0.392),
    (1.510, 0.057, -2.201, 0.241),
    (3.290, 0.290, -3.502, 0.667),
    (7.180, 0.680, -6.434, 0.727),
])

# Pump-series columns: SNR [dB], CC_g per 100 s, pump power [mW]
_PUMP_SERIES = [
    (9.91, 1.274, 2.91, 0.111, 13, 2),
    (7.50, 0.787, 7.23, 0.217, 25, 2),
    (6.23, 0.714, 19.88, 0.613, 50, 2),
    (5.17, 0.559, 51.59, 1.384, 104, 3),
    (3.33, 0.577, 135.28, 4.392, 190, 3),
]
_SNR_VS_CCG = _pts([(cc, cce, s, se) for s, se, cc, cce, _, _ in _PUMP_SERIES])
_CCG_VS_PUMP = _pts([(pp, ppe, cc, cce) for _, _, cc, cce, pp, ppe in _PUMP_SERIES])

_CCG_VS_A1 = _pts([
    (1, 0, 41.2, 3.2),
    (1.4, 0, 27.2, 1.7),
    (2, 0, 19.0, 1.7),
    (2.7, 0, 14.3, 1.8),
    (4, 0, 10.0, 1.7),
])
_CCG_VS_A2 = _pts([
    (1, 0, 44.8, 2.5),
    (1.3, 0, 22.2, 1.5),
    (1.9, 0, 10.0, 1),
    (2.8, 0, 6.2, 1),
    (3.8, 0, 2.3, 0.3),
])

# Fidelity series: fidelity, interval <low, high>, SNR [dB] +- err.  y_err is the half
# width of the interval; the interval itself is kept on each point.
_FIDELITY_ROWS = [
    (0.96, 0.93, 0.98, 9.91, 1.27),
    (0.94, 0.90, 0.96, 7.50, 0.79),
    (0.92, 0.86, 0.95, 6.23, 0.71),
    (0.89, 0.85, 0.91, 5.17, 0.56),
    (0.85, 0.83, 0.86, 3.29, 0.58),
]
_FIDELITY_VS_SNR = tuple(
    DataPoint(s, se, f, round((hi - lo) / 2, 10), lo, hi) for f, lo, hi, s, se in _FIDELITY_ROWS
)

_DATASETS = {
    "snr_vs_r": Dataset("snr_vs_r", _SNR_VS_R, "R", "SNR", "R: dimensionless; SNR: dB"),
    "snr_vs_ccg": Dataset("snr_vs_ccg", _SNR_VS_CCG, "CC_g", "SNR", "CC_g: counts per 100 s; SNR: dB"),
    "ccg_vs_pump": Dataset("ccg_vs_pump", _CCG_VS_PUMP, "P_p", "CC_g", "P_p: mW; CC_g: counts per 100 s"),
    "ccg_vs_a1": Dataset("ccg_vs_a1", _CCG_VS_A1, "A1", "CC_g", "A1: intensity factor; CC_g: counts per 100 s"),
    "ccg_vs_a2": Dataset("ccg_vs_a2", _CCG_VS_A2, "A2", "CC_g", "A2: intensity factor; CC_g: counts per 100 s"),
    "fidelity_vs_snr": Dataset("fidelity_vs_snr", _FIDELITY_VS_SNR, "SNR", "F", "SNR: dB; F: average fidelity"),
}

DATASET_NAMES = tuple(_DATASETS)


def load_dataset(name: str) -> Dataset:
    try:
        return _DATASETS[name]
    except KeyError:
        raise DatasetNotFoundError(f"unknown dataset {name!r}; choose from {', '.join(DATASET_NAMES)}") from None


def dataset_to_csv(ds: Dataset, header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        for line in header.splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in ds.points:
        w.writerow([repr(float(v)) for v in (p.x, p.x_err, p.y, p.y_err)])
    return buf.getvalue()


def write_csv_dataset(ds: Dataset, path: str | Path, header: str | None = None) -> None:
    Path(path).write_text(dataset_to_csv(ds, header))


def read_csv_dataset(path: str | Path, name: str | None = None, x_label: str = "x", y_label: str = "y") -> Dataset:
    """Read a CSV with header ``x,x_err,y,y_err``; ``#`` lines are comments.

    Missing error columns default to zero.
    """
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    rows = list(csv.DictReader(lines))
    if not rows or "x" not in rows[0] or "y" not in rows[0]:
        raise ValueError(f"{path}: expected columns {','.join(CSV_COLUMNS)}")
    points = tuple(
        DataPoint(float(r["x"]), float(r.get("x_err") or 0.0), float(r["y"]), float(r.get("y_err") or 0.0))
        for r in rows
    )
    return Dataset(name or path.stem, points, x_label, y_label)
