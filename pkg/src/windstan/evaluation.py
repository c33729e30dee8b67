"""RMSE metric, the training-free baselines, and multi-model multi-horizon
comparison reports in MW."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import MinMaxScaler, WindowedDataset
from .errors import ConfigError, DataError
from .model import Model


def rmse(pred, truth) -> float:
    """Root mean squared difference between two equal-length vectors."""
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    truth = np.asarray(truth, dtype=np.float64).reshape(-1)
    if pred.size == 0:
        raise DataError("rmse needs at least one value")
    if pred.shape != truth.shape:
        raise DataError(f"rmse length mismatch: {pred.size} vs {truth.size}")
    diff = pred - truth
    return float(np.sqrt((diff @ diff) / pred.size))


def historical_average(window: np.ndarray, target: int, horizon: int = 1) -> float:
    """Mean of the target farm's in-window values, for every horizon."""
    window = np.asarray(window, dtype=np.float64)
    return float(window[target, :].mean())


def persistence_forecast(window: np.ndarray, target: int, horizon: int = 1) -> float:
    """The target farm's last in-window value, for every horizon."""
    window = np.asarray(window, dtype=np.float64)
    return float(window[target, -1])


@dataclass
class EvalResult:
    """Per-horizon RMSE in MW for one method over a shared test set."""

    method: str
    rmse_mw: list[float]
    samples: int


def _collect(test: WindowedDataset, predict) -> np.ndarray:
    """Stack predict(window) over all samples into (samples, n_max)."""
    return np.array([predict(window) for window, _ in test.samples])


def evaluate_models(models: dict[str, Model], test: WindowedDataset,
                    scaler: MinMaxScaler, include_baselines: bool = True) -> list[EvalResult]:
    """One EvalResult per method over identical (sample, horizon) pairs.

    Baselines come first, then models sorted by name.  Model predictions and
    the stored scaled targets are inverted to MW with the target farm's
    scaler row before the metric.
    """
    if len(test) == 0:
        raise DataError("empty test set")
    target = test.target
    n_max = test.n_max
    truth_scaled = np.array([targets for _, targets in test.samples])
    truth_mw = scaler.invert_farm(truth_scaled, target)

    methods: list[tuple[str, np.ndarray]] = []
    if include_baselines:
        ha = _collect(test, lambda w: [historical_average(w, target)] * n_max)
        naive = _collect(test, lambda w: [persistence_forecast(w, target)] * n_max)
        methods.append(("HA", scaler.invert_farm(ha, target)))
        methods.append(("persistence", scaler.invert_farm(naive, target)))
    for name in sorted(models):
        model = models[name]
        if model.cfg.T != test.T or model.cfg.n_max != n_max or model.cfg.target != target:
            raise ConfigError(
                f"model {name!r} (T={model.cfg.T}, n_max={model.cfg.n_max}, "
                f"target={model.cfg.target}) does not match the test set "
                f"(T={test.T}, n_max={n_max}, target={target})")
        preds = _collect(test, model.forward_window)
        methods.append((name, scaler.invert_farm(preds, target)))

    results = []
    for name, preds_mw in methods:
        per_horizon = [rmse(preds_mw[:, k], truth_mw[:, k]) for k in range(n_max)]
        results.append(EvalResult(name, per_horizon, len(test)))
    return results


def report_csv(results: list[EvalResult]) -> str:
    """CSV report: method,rmse_1,...,rmse_n,samples."""
    if not results:
        raise DataError("nothing to report")
    n_max = len(results[0].rmse_mw)
    lines = ["method," + ",".join(f"rmse_{k + 1}" for k in range(n_max)) + ",samples"]
    for r in results:
        lines.append(r.method + "," + ",".join(repr(v) for v in r.rmse_mw)
                     + f",{r.samples}")
    return "\n".join(lines) + "\n"


def report_text(results: list[EvalResult]) -> str:
    """Aligned plain-text table of the same report."""
    if not results:
        raise DataError("nothing to report")
    n_max = len(results[0].rmse_mw)
    headers = ["method"] + [f"{k + 1}-step" for k in range(n_max)] + ["samples"]
    rows = [[r.method] + [f"{v:.2f}" for v in r.rmse_mw] + [str(r.samples)]
            for r in results]
    widths = [max(len(h), *(len(row[i]) for row in rows))
              for i, h in enumerate(headers)]
    def line(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    out = [line(headers), line(["-" * w for w in widths])]
    out += [line(row) for row in rows]
    return "\n".join(out) + "\n"
