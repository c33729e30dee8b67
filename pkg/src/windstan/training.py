"""Mean-squared-error objective, Adam with bias correction, and the
deterministic mini-batch training loop."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ShapeError
from .model import Model
from .data import WindowedDataset
from .tensor import add, scale


def mse_loss(pred, truth) -> tuple[float, np.ndarray]:
    """Mean squared error over B paired values.

    Returns the loss and its gradient with respect to each prediction,
    2 (pred - truth) / B.
    """
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    truth = np.asarray(truth, dtype=np.float64).reshape(-1)
    if pred.shape != truth.shape:
        raise ShapeError(f"mse length mismatch: {pred.shape} vs {truth.shape}")
    if pred.size < 1:
        raise ShapeError("mse needs at least one value")
    diff = pred - truth
    return float(diff @ diff) / pred.size, 2.0 * diff / pred.size


class AdamState:
    """Per-parameter first/second moment estimates plus the step counter."""

    def __init__(self, model: Model, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {p.name: np.zeros(p.shape) for p in model.params}
        self.v = {p.name: np.zeros(p.shape) for p in model.params}

    def step(self, model: Model) -> None:
        """One bias-corrected update from the currently accumulated grads.

        Raises on non-finite gradients (optimizer state is left untouched so
        training can be inspected post-mortem); zeroes all grads afterwards.
        """
        for p in model.params:
            if not np.isfinite(p.grad).all():
                raise NumericError(f"non-finite gradient in {p.name}")
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for p in model.params:
            g = p.grad
            m = self.m[p.name]
            v = self.v[p.name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / correction1
            v_hat = v / correction2
            p.value.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        model.zero_grads()


def clip_global_norm(model: Model, max_norm: float) -> float:
    """Scale all grads so their joint L2 norm is at most max_norm.

    A max_norm of 0 disables clipping.  Returns the pre-clip norm.
    """
    total = 0.0
    for p in model.params:
        g = p.grad
        total += float((g * g).sum())
    norm = float(np.sqrt(total))
    if max_norm > 0 and norm > max_norm:
        factor = max_norm / norm
        for p in model.params:
            p.value.grad *= factor
    return norm


@dataclass
class TrainReport:
    """Per-epoch mean training loss (scaled space) and wall time."""

    losses: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)
    completed: bool = False

    @property
    def epochs(self) -> int:
        return len(self.losses)


def fit(model: Model, train: WindowedDataset, log=None) -> TrainReport:
    """Train in deterministically shuffled mini-batches.

    The per-epoch sample order is drawn from a generator seeded with
    (config seed, epoch index), so identical config + data reproduce the
    loss curve and the final parameters bit for bit.  The per-batch gradient
    averages over the batch's samples and all horizons; gradients are
    norm-clipped (unless disabled) before each Adam step.  ``log`` is called
    with (epoch, loss, seconds) after every epoch.
    """
    if len(train) < 1:
        raise ShapeError("training dataset is empty")
    cfg = model.cfg
    adam = AdamState(model, lr=cfg.lr)
    report = TrainReport()
    model.zero_grads()
    try:
        _run_epochs(model, train, adam, report, log)
    except NumericError as exc:
        exc.report = report  # partial per-epoch history up to the failure
        raise
    report.completed = True
    return report


def _run_epochs(model: Model, train: WindowedDataset, adam: AdamState,
                report: TrainReport, log) -> None:
    cfg = model.cfg
    for epoch in range(1, cfg.epochs + 1):
        start = time.perf_counter()
        order = np.random.default_rng([cfg.seed, epoch]).permutation(len(train))
        epoch_loss = 0.0
        for lo in range(0, len(order), cfg.batch):
            batch = order[lo:lo + cfg.batch]
            batch_loss = None
            for idx in batch:
                window, targets = train.samples[idx]
                sample_loss = model.window_loss(window, targets)
                batch_loss = sample_loss if batch_loss is None \
                    else add(batch_loss, sample_loss)
            batch_loss = scale(batch_loss, 1.0 / len(batch))
            batch_loss.backward()
            epoch_loss += batch_loss.item() * len(batch)
            clip_global_norm(model, cfg.clip_norm)
            adam.step(model)
        loss = epoch_loss / len(order)
        elapsed = time.perf_counter() - start
        report.losses.append(loss)
        report.seconds.append(elapsed)
        if log is not None:
            log(epoch, loss, elapsed)
