"""Small dense network with total-variation regularized regression.

Maps a perceived cue direction (theta, phi) to a body-surface position. The
architecture is fixed: the two angles (optionally augmented with sin/cos of
the azimuth so the fit behaves across the azimuth wrap), five hidden layers
of 64 ReLU units, and a 3-unit linear output. Training minimizes

    L(theta) = mean_i ||f(x_i) - p_i||^2
             + lambda * mean_i sum_j sum_k |d f_k / d x_j (x_i)|

where the inner derivative is taken by central differences of the *network
itself* over the two angle inputs (step ``tv_step``). The TV term penalizes
jagged direction-to-position maps, which otherwise chase the between-subject
scatter of the mapping data. The objective is averaged over samples; the
summed form differs only by a constant factor absorbed into the rates.

Training is minibatch gradient descent with momentum and analytic gradients;
the backward pass is written out here rather than pulled from an autodiff
framework so it can be verified against finite differences parameter by
parameter. Inputs and targets are standardized internally (the affine maps
ride along inside the model), so callers always work in raw radians and
meters.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

HIDDEN_LAYERS = (64, 64, 64, 64, 64)
OUTPUT_DIM = 3
MODEL_FORMAT_VERSION = 1


class NonFiniteLoss(RuntimeError):
    """Training diverged to a non-finite loss (learning rate too hot)."""


@dataclass
class TrainConfig:
    """Optimizer settings.

    The learning rate drops by ``lr_decay`` once ``lr_decay_at`` of the
    epochs have run; the late small-step phase settles the minibatch noise.
    ``batch_size=None`` means full-batch descent.
    """

    learning_rate: float = 0.01
    momentum: float = 0.9
    epochs: int = 1000
    batch_size: Optional[int] = 32
    lr_decay: float = 0.1
    lr_decay_at: float = 0.8
    tv_weight: float = 0.1
    tv_step: float = 1e-3
    standardize: bool = True
    seed: int = 0
    use_trig_features: bool = True

    def __post_init__(self):
        if not (self.learning_rate > 0):
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.momentum < 1):
            raise ValueError("momentum must be in [0, 1)")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1 or None")
        if not (0 < self.lr_decay <= 1):
            raise ValueError("lr_decay must be in (0, 1]")
        if not (0 <= self.lr_decay_at <= 1):
            raise ValueError("lr_decay_at must be in [0, 1]")
        if self.tv_weight < 0:
            raise ValueError("tv_weight must be non-negative")
        if not (self.tv_step > 0):
            raise ValueError("tv_step must be positive")


class MlpModel:
    """The direction-to-position network.

    ``weights[l]`` has shape (fan_in, fan_out); ``biases[l]`` shape
    (fan_out,). The standardization vectors are fixed data, not trainable
    parameters; ``forward`` takes raw (theta, phi) pairs and returns
    positions in meters.
    """

    def __init__(self, use_trig_features: bool = True, seed: int = 0):
        self.use_trig_features = bool(use_trig_features)
        in_dim = 4 if self.use_trig_features else 2
        dims = [in_dim, *HIDDEN_LAYERS, OUTPUT_DIM]
        rng = np.random.default_rng(seed)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for a, b in zip(dims, dims[1:]):
            # He initialization suits the ReLU stack
            self.weights.append(rng.normal(scale=np.sqrt(2.0 / a), size=(a, b)))
            self.biases.append(np.zeros(b))
        self.feature_mean = np.zeros(in_dim)
        self.feature_std = np.ones(in_dim)
        self.target_mean = np.zeros(OUTPUT_DIM)
        self.target_std = np.ones(OUTPUT_DIM)

    # -- plumbing ------------------------------------------------------------

    def features(self, angles: np.ndarray) -> np.ndarray:
        """Raw (n, 2) angles to the standardized network input."""
        angles = np.atleast_2d(np.asarray(angles, dtype=float))
        if angles.shape[1] != 2:
            raise ValueError(f"expected (n, 2) angle input, got {angles.shape}")
        if self.use_trig_features:
            angles = np.column_stack(
                [angles[:, 0], angles[:, 1], np.sin(angles[:, 1]), np.cos(angles[:, 1])]
            )
        return (angles - self.feature_mean) / self.feature_std

    def _forward_cached(self, x: np.ndarray):
        """Forward pass keeping post-activation values for the backward pass.

        The returned last entry is the *standardized* output; de-standardize
        with target_mean/std to get meters.
        """
        acts = [x]
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ W + b
            if l < len(self.weights) - 1:
                z = np.maximum(z, 0.0)
            acts.append(z)
        return acts

    def forward(self, angles) -> np.ndarray:
        """Positions in meters for raw (n, 2) angles; returns (n, 3)."""
        z = self._forward_cached(self.features(angles))[-1]
        return z * self.target_std + self.target_mean

    def _backward(self, acts, dz):
        """Gradients of sum(dz * net_output) w.r.t. every parameter."""
        gw = [np.zeros_like(W) for W in self.weights]
        gb = [np.zeros_like(b) for b in self.biases]
        delta = dz
        for l in range(len(self.weights) - 1, -1, -1):
            gw[l] = acts[l].T @ delta
            gb[l] = delta.sum(axis=0)
            if l > 0:
                delta = (delta @ self.weights[l].T) * (acts[l] > 0.0)
        return gw, gb

    def parameter_vector(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in (*self.weights, *self.biases)])

    def set_parameter_vector(self, vec: np.ndarray) -> None:
        pos = 0
        for arrs in (self.weights, self.biases):
            for i, a in enumerate(arrs):
                arrs[i] = vec[pos : pos + a.size].reshape(a.shape).copy()
                pos += a.size
        if pos != vec.size:
            raise ValueError("parameter vector has the wrong length")


def loss_and_gradients(
    model: MlpModel,
    angles: np.ndarray,
    targets: np.ndarray,
    tv_weight: float,
    tv_step: float = 1e-3,
):
    """Full objective and analytic parameter gradients in one pass.

    The TV term differentiates the network over its two *angle* inputs with
    central differences, so the stacked forward batch holds five views of
    every sample: the base point and the four angle shifts. One backward
    pass over the stack carries both the squared-error gradient (base rows)
    and the TV gradient (sign-weighted shift rows). All quantities are in
    output units (meters), so the backward chain picks up target_std.

    Returns (mse, tv, grad_w, grad_b).
    """
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    n = angles.shape[0]
    if targets.shape != (n, OUTPUT_DIM):
        raise ValueError(f"targets must be ({n}, {OUTPUT_DIM}), got {targets.shape}")

    shifts = np.zeros((5, 1, 2))
    shifts[1, 0, 0] = tv_step
    shifts[2, 0, 0] = -tv_step
    shifts[3, 0, 1] = tv_step
    shifts[4, 0, 1] = -tv_step
    stacked = (angles[None, :, :] + shifts).reshape(5 * n, 2)

    acts = model._forward_cached(model.features(stacked))
    out = acts[-1] * model.target_std + model.target_mean
    y = out[:n]
    yp_t, ym_t = out[n : 2 * n], out[2 * n : 3 * n]
    yp_p, ym_p = out[3 * n : 4 * n], out[4 * n : 5 * n]

    err = y - targets
    mse = float(np.sum(err**2) / n)

    g_t = (yp_t - ym_t) / (2 * tv_step)
    g_p = (yp_p - ym_p) / (2 * tv_step)
    tv = float((np.abs(g_t).sum() + np.abs(g_p).sum()) / n)

    dy = np.zeros_like(out)
    dy[:n] = 2.0 * err / n
    scale = tv_weight / (2 * tv_step * n)
    dy[n : 2 * n] = scale * np.sign(g_t)
    dy[2 * n : 3 * n] = -scale * np.sign(g_t)
    dy[3 * n : 4 * n] = scale * np.sign(g_p)
    dy[4 * n : 5 * n] = -scale * np.sign(g_p)

    gw, gb = model._backward(acts, dy * model.target_std)
    return mse, tv, gw, gb


@dataclass
class TrainResult:
    model: MlpModel
    mse: float
    tv: float
    history: list = field(default_factory=list)


def _fit_scalers(model: MlpModel, angles: np.ndarray, targets: np.ndarray) -> None:
    raw = np.atleast_2d(np.asarray(angles, dtype=float))
    if model.use_trig_features:
        raw = np.column_stack(
            [raw[:, 0], raw[:, 1], np.sin(raw[:, 1]), np.cos(raw[:, 1])]
        )
    fstd = raw.std(axis=0)
    tstd = targets.std(axis=0)
    model.feature_mean = raw.mean(axis=0)
    # constant columns pass through unscaled instead of amplifying noise
    model.feature_std = np.where(fstd > 1e-12, fstd, 1.0)
    model.target_mean = targets.mean(axis=0)
    model.target_std = np.where(tstd > 1e-12, tstd, 1.0)


def train(angles, targets, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Fit the network with minibatch momentum gradient descent.

    Deterministic for a fixed config: initialization and the shuffle order
    both come from the seed. Each history entry is the mean of that epoch's
    batch objectives. Raises NonFiniteLoss if the objective leaves the
    reals, which beats silently returning a NaN model.
    """
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    n = angles.shape[0]
    if n == 0:
        raise ValueError("training set is empty")
    model = MlpModel(use_trig_features=cfg.use_trig_features, seed=cfg.seed)
    if cfg.standardize:
        _fit_scalers(model, angles, targets)
    shuffle_rng = np.random.default_rng(cfg.seed + 1)
    batch = n if cfg.batch_size is None else min(cfg.batch_size, n)
    vel_w = [np.zeros_like(W) for W in model.weights]
    vel_b = [np.zeros_like(b) for b in model.biases]
    history = []
    for epoch in range(cfg.epochs):
        lr = cfg.learning_rate
        if epoch >= cfg.lr_decay_at * cfg.epochs:
            lr *= cfg.lr_decay
        order = shuffle_rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            # divergence shows up as overflow first; the isfinite check below
            # turns it into NonFiniteLoss instead of warning spam
            with np.errstate(over="ignore", invalid="ignore"):
                mse, tv, gw, gb = loss_and_gradients(
                    model, angles[idx], targets[idx], cfg.tv_weight, cfg.tv_step
                )
            loss = mse + cfg.tv_weight * tv
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss became {loss} at epoch {epoch}")
            epoch_losses.append(loss)
            for l in range(len(model.weights)):
                vel_w[l] = cfg.momentum * vel_w[l] - lr * gw[l]
                vel_b[l] = cfg.momentum * vel_b[l] - lr * gb[l]
                model.weights[l] = model.weights[l] + vel_w[l]
                model.biases[l] = model.biases[l] + vel_b[l]
        history.append(float(np.mean(epoch_losses)))
    mse, tv, _, _ = loss_and_gradients(model, angles, targets, cfg.tv_weight, cfg.tv_step)
    return TrainResult(model=model, mse=mse, tv=tv, history=history)


def tv_on_grid(model: MlpModel, thetas, phis, tv_step: float = 1e-3) -> float:
    """Mean TV measure of the fitted map over a probe grid of angles."""
    tt, pp = np.meshgrid(np.asarray(thetas, float), np.asarray(phis, float))
    grid = np.column_stack([tt.ravel(), pp.ravel()])
    zeros = np.zeros((grid.shape[0], OUTPUT_DIM))
    _, tv, _, _ = loss_and_gradients(model, grid, zeros, tv_weight=0.0, tv_step=tv_step)
    return tv


# -- model container ----------------------------------------------------------


def save_model(path, model: MlpModel) -> None:
    """Versioned npz container: architecture header plus parameter arrays."""
    header = {
        "format_version": MODEL_FORMAT_VERSION,
        "use_trig_features": model.use_trig_features,
        "hidden_layers": list(HIDDEN_LAYERS),
        "output_dim": OUTPUT_DIM,
    }
    arrays = {
        "header": np.frombuffer(json.dumps(header).encode(), dtype=np.uint8),
        "feature_mean": model.feature_mean,
        "feature_std": model.feature_std,
        "target_mean": model.target_mean,
        "target_std": model.target_std,
    }
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        arrays[f"W{i}"] = W
        arrays[f"b{i}"] = b
    with open(path, "wb") as f:
        np.savez(f, **arrays)


def load_model(path) -> MlpModel:
    with np.load(path) as data:
        header = json.loads(bytes(data["header"]).decode())
        if header.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(
                f"unsupported model format {header.get('format_version')!r}"
            )
        if tuple(header["hidden_layers"]) != HIDDEN_LAYERS:
            raise ValueError("model architecture does not match this build")
        model = MlpModel(use_trig_features=header["use_trig_features"], seed=0)
        for i in range(len(model.weights)):
            model.weights[i] = data[f"W{i}"].copy()
            model.biases[i] = data[f"b{i}"].copy()
        model.feature_mean = data["feature_mean"].copy()
        model.feature_std = data["feature_std"].copy()
        model.target_mean = data["target_mean"].copy()
        model.target_std = data["target_std"].copy()
    return model
