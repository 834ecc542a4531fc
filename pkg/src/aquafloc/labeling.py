"""Dataset labeling, synthetic data generation, and CSV persistence."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .model import Condition, LABELING_DEFAULTS, Thresholds


class InvalidParam(ValueError):
    """A generation parameter was out of range."""


class ParseError(ValueError):
    """A dataset file line could not be interpreted."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


CSV_HEADER = ("condition", "temperature", "ph", "tds")

# Sampling envelope for synthetic data; deliberately wider than the
# Good bands on every axis so both classes appear.
TEMP_RANGE = (20.0, 35.0)
PH_RANGE = (5.0, 11.0)
TDS_RANGE = (900.0, 2000.0)


@dataclass(frozen=True)
class LabeledSample:
    temperature: float
    ph: float
    tds: float
    condition: Condition


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus 0/1 labels.

    ``features`` is (n, 3) float64 ordered temperature, ph, tds;
    ``labels`` is (n,) float64 with Good=1.0, Bad=0.0. ``provenance``
    is a human-readable note excluded from equality.
    """

    features: np.ndarray
    labels: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[1] != 3:
            raise ValueError(f"features must be (n, 3), got {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels length must match features rows")

    def __len__(self) -> int:
        return self.features.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return np.array_equal(self.features, other.features) and np.array_equal(self.labels, other.labels)

    def rows(self) -> Iterator[LabeledSample]:
        for (temp, ph, tds), label in zip(self.features, self.labels):
            yield LabeledSample(float(temp), float(ph), float(tds), Condition.from_value(float(label)))


def label_sample(features: tuple[float, float, float], thresholds: Thresholds = LABELING_DEFAULTS) -> Condition:
    """Good iff every feature sits inside its band, boundaries included."""
    temp, ph, tds = features
    inside = (
        thresholds.temp_lo <= temp <= thresholds.temp_hi
        and thresholds.ph_lo <= ph <= thresholds.ph_hi
        and thresholds.turb_lo <= tds <= thresholds.turb_hi
    )
    return Condition.GOOD if inside else Condition.BAD


def _quantize2(values: np.ndarray) -> np.ndarray:
    # Round through the same decimal text the CSV writer emits, so a
    # generated dataset survives save/load bit-for-bit.
    return np.array([float(f"{v:.2f}") for v in values], dtype=np.float64)


def generate_dataset(
    n: int,
    seed: int = 0,
    noise_rate: float = 0.0,
    thresholds: Thresholds = LABELING_DEFAULTS,
) -> Dataset:
    """Uniform synthetic samples, threshold-labeled, with optional label noise.

    Noise flips each label independently with probability ``noise_rate``.
    Flip draws happen even at rate 0.0, so two datasets that differ only
    in ``noise_rate`` share identical feature rows for the same seed.
    """
    if n <= 0:
        raise InvalidParam(f"n must be positive, got {n}")
    if not (0.0 <= noise_rate <= 1.0):
        raise InvalidParam(f"noise_rate must be in [0, 1], got {noise_rate}")

    rng = np.random.default_rng(seed)
    temps = _quantize2(rng.uniform(*TEMP_RANGE, n))
    phs = _quantize2(rng.uniform(*PH_RANGE, n))
    tdss = _quantize2(rng.uniform(*TDS_RANGE, n))
    flips = rng.uniform(0.0, 1.0, n)

    inside = (
        (temps >= thresholds.temp_lo)
        & (temps <= thresholds.temp_hi)
        & (phs >= thresholds.ph_lo)
        & (phs <= thresholds.ph_hi)
        & (tdss >= thresholds.turb_lo)
        & (tdss <= thresholds.turb_hi)
    )
    labels = inside.astype(np.float64)
    labels = np.where(flips < noise_rate, 1.0 - labels, labels)

    features = np.column_stack((temps, phs, tdss))
    return Dataset(features, labels, provenance=f"synthetic(n={n}, seed={seed}, noise_rate={noise_rate})")


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write CSV with header ``condition,temperature,ph,tds``."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_HEADER)
        for (temp, ph, tds), label in zip(dataset.features, dataset.labels):
            cond = Condition.from_value(float(label)).value
            writer.writerow([cond, f"{temp:.2f}", f"{ph:.2f}", f"{tds:.2f}"])


def load_dataset(path: str | Path) -> Dataset:
    features: list[tuple[float, float, float]] = []
    labels: list[float] = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise ParseError(1, f"expected header {','.join(CSV_HEADER)}, got {header!r}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(line_no, f"expected 4 columns, got {len(row)}")
            cond_token, temp_s, ph_s, tds_s = row
            try:
                condition = Condition(cond_token)
            except ValueError:
                raise ParseError(line_no, f"unknown condition {cond_token!r}") from None
            try:
                temp, ph, tds = float(temp_s), float(ph_s), float(tds_s)
            except ValueError:
                raise ParseError(line_no, "non-numeric feature value") from None
            features.append((temp, ph, tds))
            labels.append(condition.to_value())
    if not features:
        return Dataset(np.empty((0, 3)), np.empty((0,)), provenance=str(path))
    return Dataset(np.array(features, dtype=np.float64), np.array(labels, dtype=np.float64), provenance=str(path))


# Ten-row reference table used as the memorization fixture: five Good
# rows from healthy operation and five Bad excursions.
TABLE1_ROWS: tuple[tuple[str, float, float, float], ...] = (
    ("Good", 24.98, 7.81, 1350.0),
    ("Good", 25.59, 7.81, 1760.0),
    ("Good", 26.03, 7.98, 1750.0),
    ("Good", 25.95, 7.95, 1740.0),
    ("Good", 26.31, 7.66, 1740.0),
    ("Bad", 23.00, 9.90, 1850.0),
    ("Bad", 31.00, 7.00, 1400.0),
    ("Bad", 23.00, 9.00, 1600.0),
    ("Bad", 33.00, 5.70, 1050.0),
    ("Bad", 27.90, 7.16, 1100.0),
)


def table1_dataset() -> Dataset:
    features = np.array([[t, p, d] for _, t, p, d in TABLE1_ROWS], dtype=np.float64)
    labels = np.array([Condition(c).to_value() for c, _, _, _ in TABLE1_ROWS], dtype=np.float64)
    return Dataset(features, labels, provenance="table1")
