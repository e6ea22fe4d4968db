"""Desk-scale supervised heatmap regression on synthetic data.

Trains :class:`~heatmapreg.net.TinyNet` with plain minibatch gradient
descent driven by the analytic loss gradients, optionally reweighted by the
weighted loss map or its continuous baseline. The per-epoch trace always
records pixel-mean MSE over all pixels and over foreground pixels only, no
matter which loss is being optimized, so runs with different losses can be
compared on one scale.

Also provides the ablation runner (loss/weighting/channel variants over a
shared dataset and budget) and the hyperparameter sweep used by the CLI.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .coords import concat_channels, make_xy_radius
from .exceptions import DivergenceError, DomainError, SchemaError
from .heatmaps import decode_landmarks
from .losses import LossKind, LossParams, loss_grid
from .metrics import NormalizationRule, nme
from .net import TinyNet
from .synthetic import NUM_LANDMARKS, SyntheticSample, generate_dataset
from .weighting import build_mask

__all__ = [
    "TrainConfig",
    "EpochStats",
    "TrainResult",
    "train",
    "evaluate_landmarks",
    "train_and_evaluate",
    "ablation_run",
    "sweep_nme",
    "ABLATION_SPECS",
]

WEIGHT_MODES = ("none", "map", "baseline")
TRAINER_COORD_CHANNELS = ("cx", "cy", "radius")

# Synthetic faces: landmarks 0 and 1 are the outer eye points.
EYE_NORM = NormalizationRule.interocular(0, 1)


@dataclass(frozen=True)
class TrainConfig:
    """Full description of one training run (flat, file-serializable)."""

    loss_kind: str = "awing"
    omega: float = 14.0
    epsilon: float = 1.0
    theta: float = 0.5
    alpha: float = 2.1
    weight_mode: str = "none"
    weight: float = 10.0
    coord_channels: tuple[str, ...] = ()
    boundary_channel: bool = False
    epochs: int = 14
    batch_size: int = 8
    optimizer: str = "rmsprop"
    learning_rate: float = 1e-3
    rms_decay: float = 0.99
    rms_epsilon: float = 1e-8
    lr_decay: float = 0.2
    decay_epochs: tuple[int, ...] = ()
    hidden: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.weight_mode not in WEIGHT_MODES:
            raise DomainError(
                f"weight_mode must be one of {WEIGHT_MODES}, got {self.weight_mode!r}"
            )
        if self.optimizer not in ("rmsprop", "sgd"):
            raise DomainError(f"optimizer must be rmsprop or sgd, got {self.optimizer!r}")
        bad = [c for c in self.coord_channels if c not in TRAINER_COORD_CHANNELS]
        if bad:
            raise DomainError(
                f"trainer coordinate channels limited to {TRAINER_COORD_CHANNELS} "
                f"(boundary-masked coordinates need a preceding prediction stage); "
                f"got {bad}"
            )
        if self.epochs < 0 or self.batch_size < 1:
            raise DomainError("epochs must be >= 0 and batch_size >= 1")
        object.__setattr__(self, "coord_channels", tuple(self.coord_channels))
        object.__setattr__(self, "decay_epochs", tuple(int(e) for e in self.decay_epochs))
        self.loss_params()  # validate loss hyperparameters eagerly

    def loss_params(self) -> LossParams:
        return LossParams(
            omega=self.omega,
            epsilon=self.epsilon,
            theta=self.theta,
            alpha=self.alpha,
            kind=LossKind(self.loss_kind),
        )

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{f.name}={value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TrainConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise SchemaError(f"config line {lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in known:
                raise SchemaError(f"config line {lineno}: unknown key {key!r}")
            kwargs[key] = _parse_config_value(key, value)
        return cls(**kwargs)


def _parse_config_value(key: str, value: str):
    if key in ("loss_kind", "weight_mode", "optimizer"):
        return value
    if key == "boundary_channel":
        low = value.lower()
        if low not in ("true", "false", "1", "0"):
            raise SchemaError(f"{key} must be true/false, got {value!r}")
        return low in ("true", "1")
    if key == "coord_channels":
        return tuple(v for v in value.split(",") if v)
    if key == "decay_epochs":
        return tuple(int(v) for v in value.split(",") if v)
    if key in ("epochs", "batch_size", "hidden", "seed"):
        return int(value)
    return float(value)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float       # mean of the optimized (possibly weighted) loss
    mse_all: float    # plain MSE over every pixel of every trained channel
    mse_fg: float     # plain MSE over foreground (gt > 0) pixels only


@dataclass(frozen=True)
class TrainResult:
    net: TinyNet
    trace: tuple[EpochStats, ...]
    config: TrainConfig = field(repr=False, default=None)


def _prepare_inputs(samples: list[SyntheticSample], config: TrainConfig) -> np.ndarray:
    if not samples:
        return np.zeros((0, 1, 2, 2), dtype=np.float32)
    frame = samples[0].image.shape[1:]
    coords = make_xy_radius(frame) if config.coord_channels else None
    stacked = []
    for s in samples:
        grid = s.image
        if coords is not None:
            grid = concat_channels(grid, coords, config.coord_channels)
        stacked.append(grid)
    return np.stack(stacked).astype(np.float32)


def _prepare_targets(samples: list[SyntheticSample], config: TrainConfig) -> np.ndarray:
    chans = []
    for s in samples:
        stack = s.heatmaps
        chans.append(stack.channels if config.boundary_channel else stack.landmark_channels())
    return np.stack(chans).astype(np.float32)


def _multiplier_source(targets: np.ndarray, config: TrainConfig):
    """Per-sample loss multipliers: None (unweighted), or an (N, C, H, W) array."""
    if config.weight_mode == "none":
        return None
    if config.weight_mode == "baseline":
        return targets * np.float32(config.weight) + np.float32(1.0)
    masks = np.stack([build_mask(t, config.weight).mask for t in targets])
    return np.float32(config.weight) * masks.astype(np.float32) + np.float32(1.0)


def train(config: TrainConfig, data: list[SyntheticSample]) -> TrainResult:
    """Minibatch gradient descent on the configured weighted loss.

    Deterministic for a fixed (config, data): initialization, shuffling, and
    reduction order all derive from ``config.seed``. Raises
    :class:`DivergenceError` as soon as the loss stops being finite.
    """
    params = config.loss_params()
    inputs = _prepare_inputs(data, config)
    targets = _prepare_targets(data, config)
    multipliers = _multiplier_source(targets, config)

    rng = np.random.default_rng(config.seed)
    out_channels = targets.shape[1] if len(data) else NUM_LANDMARKS
    net = TinyNet(inputs.shape[1], out_channels, hidden=config.hidden, rng=rng)
    rms_cache = (
        [np.zeros_like(p) for p in net.parameters()]
        if config.optimizer == "rmsprop"
        else None
    )

    trace: list[EpochStats] = []
    n = len(data)
    lr = config.learning_rate
    for epoch in range(1, config.epochs + 1):
        if epoch in config.decay_epochs:
            lr *= config.lr_decay
        order = rng.permutation(n)
        loss_sum = sq_sum = fg_sum = 0.0
        pixel_count = fg_count = 0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            x, t = inputs[idx], targets[idx]
            pred = net.forward(x)
            values, grads = loss_grid(t, pred, params)
            if multipliers is not None:
                m = multipliers[idx]
                values = values * m
                grads = grads * m
            loss = values.mean()
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch} "
                    f"(kind={config.loss_kind}, lr={lr:g})",
                    epoch,
                    trace,
                )
            net.zero_gradients()
            net.backward((grads / values.size).astype(np.float32))
            if rms_cache is None:
                for p, g in zip(net.parameters(), net.gradients()):
                    p -= np.float32(lr) * g
            else:
                decay = np.float32(config.rms_decay)
                eps = np.float32(config.rms_epsilon)
                for p, g, cache in zip(net.parameters(), net.gradients(), rms_cache):
                    cache *= decay
                    cache += (np.float32(1.0) - decay) * g * g
                    p -= np.float32(lr) * g / (np.sqrt(cache) + eps)

            sq = np.square(pred - t)
            fg = t > 0.0
            loss_sum += values.sum()
            pixel_count += values.size
            sq_sum += sq.sum(dtype=np.float64)
            fg_sum += sq[fg].sum(dtype=np.float64)
            fg_count += int(fg.sum())
        trace.append(
            EpochStats(
                epoch=epoch,
                loss=loss_sum / max(pixel_count, 1),
                mse_all=sq_sum / max(pixel_count, 1),
                mse_fg=fg_sum / max(fg_count, 1),
            )
        )
    return TrainResult(net=net, trace=tuple(trace), config=config)


def evaluate_landmarks(
    net: TinyNet,
    samples: list[SyntheticSample],
    config: TrainConfig,
    batch_size: int = 32,
):
    """Decode predictions and score them: (mean NME, per-image NME list)."""
    inputs = _prepare_inputs(samples, config)
    nmes = []
    for start in range(0, len(samples), batch_size):
        batch = samples[start : start + batch_size]
        preds = net.forward(inputs[start : start + batch_size])
        for sample, pred in zip(batch, preds):
            decoded = decode_landmarks(pred[:NUM_LANDMARKS])
            nmes.append(nme(sample.landmarks, decoded.landmarks, EYE_NORM))
    return float(np.mean(nmes)), nmes


def train_and_evaluate(
    config: TrainConfig,
    train_count: int,
    test_count: int,
    frame=(64, 64),
    dataset: list[SyntheticSample] | None = None,
):
    """Train on the first ``train_count`` samples of the seed's synthetic
    stream and evaluate NME on the next ``test_count``."""
    if dataset is None:
        dataset = generate_dataset(config.seed, train_count + test_count, frame)
    result = train(config, dataset[:train_count])
    mean_nme, _ = evaluate_landmarks(result.net, dataset[train_count:], config)
    return result, mean_nme


# Ablation variants in reporting order: name -> config overrides.
ABLATION_SPECS = (
    ("mse", dict(loss_kind="mse", weight_mode="none")),
    ("mse+wm", dict(loss_kind="mse", weight_mode="map")),
    ("awing", dict(loss_kind="awing", weight_mode="none")),
    ("awing+wm_base", dict(loss_kind="awing", weight_mode="baseline")),
    ("awing+wm", dict(loss_kind="awing", weight_mode="map")),
    (
        "awing+wm+coords+boundary",
        dict(
            loss_kind="awing",
            weight_mode="map",
            coord_channels=("cx", "cy", "radius"),
            boundary_channel=True,
        ),
    ),
)


def ablation_run(
    seed: int,
    base: TrainConfig | None = None,
    train_count: int = 500,
    test_count: int = 100,
    frame=(64, 64),
    names=None,
) -> list[tuple[str, float]]:
    """Held-out NME per ablation variant over one shared dataset and budget.

    All variants train on the identical sample list with identical epochs,
    batch size, learning rate, and seed; only the loss/weighting/channel
    settings differ. Returns (name, nme) rows in the fixed reporting order.
    """
    base = base if base is not None else TrainConfig()
    dataset = generate_dataset(seed, train_count + test_count, frame)
    rows = []
    for name, overrides in ABLATION_SPECS:
        if names is not None and name not in names:
            continue
        config = replace(base, seed=seed, **overrides)
        _, mean_nme = train_and_evaluate(
            config, train_count, test_count, frame, dataset=dataset
        )
        rows.append((name, mean_nme))
    return rows


def sweep_nme(
    omegas,
    epsilons,
    thetas,
    base: TrainConfig | None = None,
    train_count: int = 120,
    test_count: int = 40,
    frame=(64, 64),
) -> list[tuple[float, float, float, float]]:
    """Held-out NME for every (omega, epsilon, theta) cell, shared dataset."""
    base = base if base is not None else TrainConfig()
    dataset = generate_dataset(base.seed, train_count + test_count, frame)
    rows = []
    for theta in thetas:
        for epsilon in epsilons:
            for omega in omegas:
                config = replace(
                    base, loss_kind="awing", omega=omega, epsilon=epsilon, theta=theta
                )
                _, mean_nme = train_and_evaluate(
                    config, train_count, test_count, frame, dataset=dataset
                )
                rows.append((float(omega), float(epsilon), float(theta), mean_nme))
    return rows
