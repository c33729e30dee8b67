"""Wind-power data handling: wide CSV ingestion, per-farm min-max scaling,
sliding-window supervision, chronological splitting, and a seeded synthetic
generator with distance-decaying spatial correlation."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .errors import DataError

# Default site grid for the synthetic generator (id, latitude, longitude).
DEFAULT_SITES = [
    ("SITE_00173", 36.14, -100.34),
    ("SITE_00193", 36.42, -100.44),
    ("SITE_00215", 36.42, -100.67),
    ("SITE_00365", 36.50, -100.68),
    ("SITE_00446", 36.50, -100.28),
    ("SITE_00797", 36.56, -100.54),
]


@dataclass
class FarmSeries:
    """Aligned power series for N farms: values[i, t] is farm i at step t, in MW."""

    ids: list[str]
    values: np.ndarray
    step_minutes: float = 10.0
    latlon: list[tuple[float, float]] | None = None

    @property
    def n_farms(self) -> int:
        return len(self.ids)

    @property
    def length(self) -> int:
        return self.values.shape[1]


def _parse_timestamp(text: str, line: int):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        raise DataError(f"row {line}: timestamp {text!r} is neither an integer "
                        "nor ISO-8601") from None


def _step_minutes(t0, t1) -> float:
    if isinstance(t0, int) and isinstance(t1, int):
        return float(t1 - t0)
    if isinstance(t0, datetime) and isinstance(t1, datetime):
        return (t1 - t0).total_seconds() / 60.0
    raise DataError("timestamps mix integer and ISO-8601 styles")


def load_wide_csv(path) -> FarmSeries:
    """Parse `timestamp,<id1>,...,<idN>` rows into a FarmSeries.

    Timestamps must be strictly increasing with a constant step; every cell
    must hold a finite, non-negative power value.  Row numbers in error
    messages count physical file lines, header included.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty CSV: no header row") from None
        if len(header) < 2 or header[0].strip() != "timestamp":
            raise DataError('header must be "timestamp,<id1>,..." with at least one farm')
        ids = [c.strip() for c in header[1:]]
        if any(not i for i in ids):
            raise DataError("row 1: empty farm id in header")
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DataError(f"row 1: duplicate farm id(s): {dupes}")

        times = []
        columns: list[list[float]] = [[] for _ in ids]
        for record in reader:
            line = reader.line_num
            if len(record) != len(ids) + 1:
                raise DataError(f"row {line}: expected {len(ids) + 1} cells, "
                                f"got {len(record)}")
            times.append(_parse_timestamp(record[0], line))
            for j, cell in enumerate(record[1:]):
                cell = cell.strip()
                if not cell:
                    raise DataError(f"row {line}: blank cell for farm {ids[j]}")
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(f"row {line}: cell {cell!r} is not a number") from None
                if not np.isfinite(value):
                    raise DataError(f"row {line}: non-finite value for farm {ids[j]}")
                if value < 0:
                    raise DataError(f"row {line}: negative power {value} for farm {ids[j]}")
                columns[j].append(value)

    if len(times) < 2:
        raise DataError(f"need at least 2 data rows, got {len(times)}")
    step = _step_minutes(times[0], times[1])
    for idx in range(1, len(times)):
        gap = _step_minutes(times[idx - 1], times[idx])
        if gap <= 0:
            raise DataError(f"row {idx + 2}: timestamps must be strictly increasing")
        if gap != step:
            raise DataError(f"row {idx + 2}: irregular timestamp step "
                            f"({gap} min, expected {step} min)")
    return FarmSeries(ids=ids, values=np.array(columns, dtype=np.float64),
                      step_minutes=step)


def load_latlon_csv(path, ids: list[str]) -> list[tuple[float, float]]:
    """Parse `id,lat,lon` metadata and align it to the given farm ids."""
    coords: dict[str, tuple[float, float]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header[:3]] != ["id", "lat", "lon"]:
            raise DataError('metadata header must be "id,lat,lon"')
        for record in reader:
            line = reader.line_num
            if len(record) != 3:
                raise DataError(f"row {line}: expected 3 cells, got {len(record)}")
            site = record[0].strip()
            if site in coords:
                raise DataError(f"row {line}: duplicate metadata for {site}")
            try:
                coords[site] = (float(record[1]), float(record[2]))
            except ValueError:
                raise DataError(f"row {line}: non-numeric coordinate") from None
    missing = [i for i in ids if i not in coords]
    if missing:
        raise DataError(f"metadata missing coordinates for: {missing}")
    return [coords[i] for i in ids]


def write_wide_csv(series: FarmSeries, path) -> None:
    """Write a FarmSeries back out in the loader's schema."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["timestamp"] + list(series.ids))
        step = int(series.step_minutes)
        for t in range(series.length):
            writer.writerow([t * step] + [repr(float(v)) for v in series.values[:, t]])


def write_latlon_csv(series: FarmSeries, path) -> None:
    if series.latlon is None:
        raise DataError("series has no coordinates to write")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "lat", "lon"])
        for site, (lat, lon) in zip(series.ids, series.latlon):
            writer.writerow([site, repr(float(lat)), repr(float(lon))])


class MinMaxScaler:
    """Per-farm map of [min, max] MW onto [0, 1], fit on the training range only.

    A constant farm (max == min) scales to 0 everywhere and inverts back to
    the constant.
    """

    def __init__(self, mins: np.ndarray, maxs: np.ndarray):
        if np.any(maxs < mins):
            raise DataError("scaler requires max >= min per farm")
        self.mins = np.asarray(mins, dtype=np.float64)
        self.maxs = np.asarray(maxs, dtype=np.float64)
        self.spans = self.maxs - self.mins

    @classmethod
    def fit(cls, train_values: np.ndarray) -> "MinMaxScaler":
        train_values = np.asarray(train_values, dtype=np.float64)
        if train_values.ndim != 2 or train_values.shape[1] < 1:
            raise DataError(f"scaler needs an N x L matrix, got {train_values.shape}")
        return cls(train_values.min(axis=1), train_values.max(axis=1))

    def apply(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        spans = np.where(self.spans == 0.0, 1.0, self.spans)
        scaled = (values - self.mins[:, None]) / spans[:, None]
        return np.where(self.spans[:, None] == 0.0, 0.0, scaled)

    def invert(self, scaled: np.ndarray) -> np.ndarray:
        scaled = np.asarray(scaled, dtype=np.float64)
        return scaled * self.spans[:, None] + self.mins[:, None]

    def invert_farm(self, scaled, farm: int):
        """Inverse map for one farm; accepts scalars or arrays."""
        return np.asarray(scaled, dtype=np.float64) * self.spans[farm] + self.mins[farm]


@dataclass
class WindowedDataset:
    """Chronologically ordered supervised samples (X window, horizon targets)."""

    samples: list[tuple[np.ndarray, np.ndarray]]
    T: int
    n_max: int
    target: int

    def __len__(self) -> int:
        return len(self.samples)

    def subset(self, indices) -> "WindowedDataset":
        return WindowedDataset([self.samples[i] for i in indices],
                               self.T, self.n_max, self.target)


def make_windows(scaled: np.ndarray, T: int, n_max: int, target: int) -> WindowedDataset:
    """Stride-1 sliding windows: X is columns t0..t0+T-1, target k is the
    target farm's value at t0+T-1+k."""
    scaled = np.asarray(scaled, dtype=np.float64)
    n_farms, length = scaled.shape
    if not 0 <= target < n_farms:
        raise DataError(f"target {target} out of range for {n_farms} farms")
    needed = T + n_max
    if length < needed:
        raise DataError(f"series length {length} too short: windowing needs "
                        f"at least T + n_max = {needed} steps")
    samples = []
    for t0 in range(length - needed + 1):
        window = scaled[:, t0:t0 + T].copy()
        targets = scaled[target, t0 + T:t0 + T + n_max].copy()
        samples.append((window, targets))
    return WindowedDataset(samples, T, n_max, target)


def chrono_split(obj, train_fraction: float):
    """First floor(fraction * count) units to train, the rest to test."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    if isinstance(obj, FarmSeries):
        cut = int(train_fraction * obj.length)
        if cut < 1 or cut >= obj.length:
            raise DataError(f"split at {cut} leaves an empty side "
                            f"(length {obj.length})")
        head = FarmSeries(obj.ids, obj.values[:, :cut].copy(),
                          obj.step_minutes, obj.latlon)
        tail = FarmSeries(obj.ids, obj.values[:, cut:].copy(),
                          obj.step_minutes, obj.latlon)
        return head, tail
    if isinstance(obj, WindowedDataset):
        cut = int(train_fraction * len(obj))
        if cut < 1 or cut >= len(obj):
            raise DataError(f"split at {cut} leaves an empty side "
                            f"({len(obj)} samples)")
        return obj.subset(range(cut)), obj.subset(range(cut, len(obj)))
    raise TypeError(f"cannot split object of type {type(obj).__name__}")


def _default_grid(n_farms: int) -> tuple[list[str], list[tuple[float, float]]]:
    if n_farms <= len(DEFAULT_SITES):
        chosen = DEFAULT_SITES[:n_farms]
        return [s[0] for s in chosen], [(s[1], s[2]) for s in chosen]
    ids = [s[0] for s in DEFAULT_SITES]
    coords = [(s[1], s[2]) for s in DEFAULT_SITES]
    for extra in range(n_farms - len(DEFAULT_SITES)):
        ids.append(f"SITE_X{extra:04d}")
        coords.append((36.1 + 0.07 * extra, -100.9 - 0.05 * extra))
    return ids, coords


def synth_correlated(n_farms: int, length: int, latlon=None, seed: int = 0,
                     rho: float = 0.25, driver_weight: float = 0.55,
                     phi_regional: float = 0.99, phi_local: float = 0.95,
                     mean_mw: float = 60.0, swing_mw: float = 35.0) -> FarmSeries:
    """Seeded synthetic farms with distance-decaying correlation.

    Generative formula (per step t, farm j):

        r_t      = phi_regional * r_{t-1} + sqrt(1 - phi_regional^2) * e_t
        u_{j,t}  = phi_local    * u_{j,t-1} + sqrt(1 - phi_local^2) * e_{j,t}
        M_{jk}   = exp(-dist(j, k) / rho), rows normalized to sum 1
        s_{j,t}  = driver_weight * r_t + (1 - driver_weight) * (M u_t)_j
        power    = max(0, mean_mw + swing_mw * s_{j,t})

    where e terms are i.i.d. standard normal draws and dist is the Euclidean
    distance between (lat, lon) pairs in degrees.  Both AR(1) components are
    variance-normalized, so mixing weights control the spatial structure
    directly: nearby farms share more of each other's local component and
    therefore correlate more strongly than distant ones.
    """
    if n_farms < 2:
        raise DataError(f"synthetic generator needs at least 2 farms, got {n_farms}")
    if length < 100:
        raise DataError(f"synthetic generator needs length >= 100, got {length}")
    if latlon is None:
        ids, latlon = _default_grid(n_farms)
    else:
        if len(latlon) != n_farms:
            raise DataError(f"got {len(latlon)} coordinates for {n_farms} farms")
        ids = [s[0] for s in DEFAULT_SITES[:n_farms]] if n_farms <= len(DEFAULT_SITES) \
            else _default_grid(n_farms)[0]

    coords = np.asarray(latlon, dtype=np.float64)
    dist = np.sqrt(((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2))
    mix = np.exp(-dist / rho)
    mix /= mix.sum(axis=1, keepdims=True)

    rng = np.random.default_rng(seed)
    regional_noise = rng.standard_normal(length)
    local_noise = rng.standard_normal((n_farms, length))

    regional = np.empty(length)
    local = np.empty((n_farms, length))
    r_scale = np.sqrt(1.0 - phi_regional ** 2)
    u_scale = np.sqrt(1.0 - phi_local ** 2)
    regional[0] = regional_noise[0]
    local[:, 0] = local_noise[:, 0]
    for t in range(1, length):
        regional[t] = phi_regional * regional[t - 1] + r_scale * regional_noise[t]
        local[:, t] = phi_local * local[:, t - 1] + u_scale * local_noise[:, t]

    signal = driver_weight * regional[None, :] + (1.0 - driver_weight) * (mix @ local)
    values = np.maximum(mean_mw + swing_mw * signal, 0.0)
    return FarmSeries(ids=ids, values=values, step_minutes=10.0,
                      latlon=[tuple(c) for c in coords])
