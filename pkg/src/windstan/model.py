"""Full forecaster assembly: configuration, the three model variants,
window-level forward passes, and JSON checkpoint round-tripping.

Variants:

* ``STAN``   -- spatial self-attention stack, then the attention decoder.
* ``STANsa`` -- same spatial stack, decoder stripped of attention (the
  encoder summary reaches the decoder only through its initial state).
* ``STANta`` -- spatial stack replaced by embedding plus one plain
  feed-forward block (no attention, no residual/norm), attention decoder
  kept.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, NumericError, ShapeError
from .nn import Parameter
from .spatial import (FfnParams, SpatialEncoderParams, embed_timestep,
                      position_wise_ffn, spatial_encode)
from .temporal import DecoderParams, EncoderParams, decode_horizon, run_encoder
from .tensor import Tensor, add, mul, row, scale

VARIANTS = ("STAN", "STANsa", "STANta")

DESK_PRESET = dict(N=6, T=12, n_max=3, target=0, d_m=32, d_e=32, d_d=32,
                   d_ffn=64, h=4, N_x=2, lr=0.01, epochs=10, batch=32,
                   seed=42, variant="STAN", scale_by_dm=False, clip_norm=5.0)

PAPER_PRESET = dict(N=6, T=12, n_max=3, target=0, d_m=512, d_e=512, d_d=512,
                    d_ffn=2048, h=8, N_x=6, lr=0.01, epochs=40, batch=32,
                    seed=42, variant="STAN", scale_by_dm=False, clip_norm=5.0)


@dataclass
class StanConfig:
    """Every dimension and training hyperparameter of one model."""

    N: int = 6            # farm count
    T: int = 12           # input window length
    n_max: int = 3        # maximum forecast horizon
    target: int = 0       # index of the farm being predicted
    d_m: int = 32         # spatial model width
    d_e: int = 32         # encoder hidden width
    d_d: int = 32         # decoder hidden width
    d_ffn: int = 64       # feed-forward inner width
    h: int = 4            # attention heads
    N_x: int = 2          # spatial layer count
    lr: float = 0.01
    epochs: int = 10
    batch: int = 32
    seed: int = 42
    variant: str = "STAN"
    scale_by_dm: bool = False
    clip_norm: float = 5.0  # 0 disables gradient clipping

    def validate(self) -> "StanConfig":
        checks = [
            (self.N >= 1, f"N must be >= 1, got {self.N}"),
            (self.T >= 1, f"T must be >= 1, got {self.T}"),
            (self.n_max >= 1, f"n_max must be >= 1, got {self.n_max}"),
            (0 <= self.target < self.N,
             f"target must lie in [0, {self.N}), got {self.target}"),
            (self.d_m >= 1 and self.d_e >= 1 and self.d_d >= 1 and self.d_ffn >= 1,
             f"widths must be >= 1, got d_m={self.d_m} d_e={self.d_e} "
             f"d_d={self.d_d} d_ffn={self.d_ffn}"),
            (self.h >= 1, f"h must be >= 1, got {self.h}"),
            (self.d_m % self.h == 0,
             f"h={self.h} must divide d_m={self.d_m}"),
            (self.N_x >= 1, f"N_x must be >= 1, got {self.N_x}"),
            (self.lr > 0, f"lr must be positive, got {self.lr}"),
            (self.epochs >= 1, f"epochs must be >= 1, got {self.epochs}"),
            (self.batch >= 1, f"batch must be >= 1, got {self.batch}"),
            (self.seed >= 0, f"seed must be a non-negative integer, got {self.seed}"),
            (self.variant in VARIANTS,
             f"variant must be one of {VARIANTS}, got {self.variant!r}"),
            (self.clip_norm >= 0, f"clip_norm must be >= 0, got {self.clip_norm}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self

    @classmethod
    def preset(cls, name: str, **overrides) -> "StanConfig":
        presets = {"desk": DESK_PRESET, "paper": PAPER_PRESET}
        if name not in presets:
            raise ConfigError(f"unknown preset {name!r}, expected one of {sorted(presets)}")
        merged = dict(presets[name])
        for key, value in overrides.items():
            if key not in merged:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = value
        return cls(**merged).validate()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, values: dict) -> "StanConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        merged = dict(DESK_PRESET)
        merged.update(values)
        return cls(**merged).validate()


class FeedForwardSpatialParams:
    """Embedding plus one plain FFN block: the spatial-attention ablation."""

    def __init__(self, d_m: int, d_ffn: int, rng):
        from .nn import glorot_init
        self.embed = Parameter("embed.wi", glorot_init(1, d_m, rng))
        self.ffn = FfnParams("spatial.ffn", d_m, d_ffn, rng)

    def parameters(self) -> list[Parameter]:
        return [self.embed] + self.ffn.parameters()

    def encode(self, xs: list[Tensor], target: int) -> list[Tensor]:
        n_farms = xs[0].rows
        if not 0 <= target < n_farms:
            raise IndexError(f"target farm {target} out of range for {n_farms} farms")
        return [row(position_wise_ffn(embed_timestep(x_t, self.embed), self.ffn), target)
                for x_t in xs]


class Model:
    """A built variant: config, parameter containers, and forward passes."""

    def __init__(self, cfg: StanConfig, spatial, encoder: EncoderParams,
                 decoder: DecoderParams):
        self.cfg = cfg
        self.spatial = spatial
        self.encoder = encoder
        self.decoder = decoder
        self.params = (spatial.parameters() + encoder.parameters()
                       + decoder.parameters())
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate parameter names in model")
        self.by_name = {p.name: p for p in self.params}

    def parameter_count(self) -> int:
        return sum(p.shape[0] * p.shape[1] for p in self.params)

    def zero_grads(self) -> None:
        for p in self.params:
            p.zero_grad()

    def _encode_spatial(self, xs: list[Tensor]) -> list[Tensor]:
        if isinstance(self.spatial, FeedForwardSpatialParams):
            return self.spatial.encode(xs, self.cfg.target)
        return spatial_encode(xs, self.spatial, self.cfg.target,
                              scale_by_dm=self.cfg.scale_by_dm)

    def forward_graph(self, window: np.ndarray) -> list[Tensor]:
        """Differentiable forward pass; returns n_max 1x1 prediction tensors."""
        window = np.asarray(window, dtype=np.float64)
        if window.shape != (self.cfg.N, self.cfg.T):
            raise ShapeError(
                f"window shape {window.shape} does not match "
                f"(N={self.cfg.N}, T={self.cfg.T})")
        xs = [Tensor(window[:, t:t + 1].copy()) for t in range(self.cfg.T)]
        features = self._encode_spatial(xs)
        states = run_encoder(features, self.encoder)
        x_last = float(window[self.cfg.target, -1])
        return decode_horizon(states, x_last, self.cfg.n_max, self.decoder)

    def forward_window(self, window: np.ndarray) -> np.ndarray:
        """Predictions for horizons 1..n_max in scaled space."""
        preds = np.array([y.item() for y in self.forward_graph(window)])
        if not np.isfinite(preds).all():
            raise NumericError("forward pass produced non-finite predictions")
        return preds

    def window_loss(self, window: np.ndarray, targets: np.ndarray) -> Tensor:
        """Mean squared error over the n_max horizons of one window."""
        targets = np.asarray(targets, dtype=np.float64).reshape(-1)
        if targets.shape[0] != self.cfg.n_max:
            raise ShapeError(
                f"expected {self.cfg.n_max} targets, got {targets.shape[0]}")
        preds = self.forward_graph(window)
        total = None
        for y_k, t_k in zip(preds, targets):
            diff = add(y_k, Tensor([[-t_k]]))
            sq = mul(diff, diff)
            total = sq if total is None else add(total, sq)
        return scale(total, 1.0 / self.cfg.n_max)


def build_model(cfg: StanConfig) -> Model:
    """Deterministically construct a variant from its config and seed."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    if cfg.variant == "STANta":
        spatial = FeedForwardSpatialParams(cfg.d_m, cfg.d_ffn, rng)
    else:
        spatial = SpatialEncoderParams(cfg.d_m, cfg.h, cfg.d_ffn, cfg.N_x, rng)
    encoder = EncoderParams(cfg.d_m, cfg.d_e, rng)
    decoder = DecoderParams(cfg.d_e, cfg.d_d, rng,
                            attention=(cfg.variant != "STANsa"))
    return Model(cfg, spatial, encoder, decoder)


def _emit_number(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _emit_json(obj) -> str:
    """Serialize with floats at 17 significant digits for exact round trips."""
    if isinstance(obj, dict):
        items = (f"{json.dumps(k)}: {_emit_json(v)}" for k, v in obj.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_emit_json(v) for v in obj) + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    return _emit_number(obj)


def save_checkpoint(model: Model, path) -> None:
    """Write {"config": ..., "params": [...]} with params in name order."""
    for p in model.params:
        if not np.isfinite(p.value.data).all():
            raise NumericError(f"refusing to save non-finite parameter {p.name}")
    params = [
        {"name": p.name, "rows": p.shape[0], "cols": p.shape[1],
         "data": [v for v in p.value.data.reshape(-1)]}
        for p in sorted(model.params, key=lambda p: p.name)
    ]
    doc = {"config": model.cfg.to_dict(), "params": params}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_emit_json(doc))
        fh.write("\n")


def load_checkpoint(path) -> Model:
    """Rebuild a model from a checkpoint, revalidating every invariant."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"checkpoint parse error at byte {exc.pos}: {exc.msg}") from exc
    if not isinstance(doc, dict) or set(doc) != {"config", "params"}:
        raise DataError('checkpoint must be an object with exactly "config" and "params"')
    try:
        cfg = StanConfig.from_dict(doc["config"])
    except ConfigError as exc:
        raise DataError(f"checkpoint config invalid: {exc}") from exc
    model = build_model(cfg)
    seen = set()
    for entry in doc["params"]:
        if not isinstance(entry, dict) or set(entry) != {"name", "rows", "cols", "data"}:
            raise DataError("each param entry needs exactly name/rows/cols/data")
        name = entry["name"]
        if name not in model.by_name:
            raise DataError(f"checkpoint has unknown parameter {name!r}")
        if name in seen:
            raise DataError(f"checkpoint repeats parameter {name!r}")
        seen.add(name)
        p = model.by_name[name]
        rows, cols = int(entry["rows"]), int(entry["cols"])
        if (rows, cols) != p.shape:
            raise DataError(
                f"parameter {name!r} has shape {rows}x{cols}, config implies "
                f"{p.shape[0]}x{p.shape[1]}")
        data = np.asarray(entry["data"], dtype=np.float64)
        if data.size != rows * cols:
            raise DataError(
                f"parameter {name!r} data length {data.size} != rows*cols {rows * cols}")
        if not np.isfinite(data).all():
            raise DataError(f"parameter {name!r} contains non-finite values")
        p.value.data = data.reshape(rows, cols)
        p.zero_grad()
    missing = set(model.by_name) - seen
    if missing:
        raise DataError(f"checkpoint missing parameter(s): {sorted(missing)}")
    return model
