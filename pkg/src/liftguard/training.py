"""Training: cross-entropy loss, backpropagation through time, Adam, epoch loop.

Gradients are exact, propagated through every timestep of every LSTM
layer, and are checked against a central finite-difference oracle in the
test suite. The whole pipeline is deterministic given (seed, config,
data): the split, the init, and the update order are all seed-driven.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .network import (
    Activation,
    ArchitectureConfig,
    ConfigError,
    DimensionError,
    ModelParams,
    clone_model,
    forward_batch,
    init_model,
    param_entries,
)
from .pose import Label, LabeledSequence

LOG_CLAMP = 1e-12

Gradients = dict[str, np.ndarray]


class NumericError(ArithmeticError):
    """Loss or gradients became non-finite."""


class StratificationError(ValueError):
    """Dataset cannot be split with both classes present."""


class StopReason(Enum):
    EPOCHS_EXHAUSTED = "epochs_exhausted"
    EARLY_STOPPED = "early_stopped"


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 150
    learning_rate: float = 0.001
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    early_stop_threshold: float = 0.95
    early_stop_patience: int = 5
    test_fraction: float = 0.25
    seed: int = 0
    grad_clip_norm: float = 5.0
    batch_size: int | None = None  # None = full batch

    def validate(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must be in (0, 1)")
        if self.early_stop_patience < 1:
            raise ConfigError("early_stop_patience must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1 when set")
        if self.grad_clip_norm <= 0:
            raise ConfigError("grad_clip_norm must be > 0")


@dataclass
class AdamState:
    m: Gradients
    v: Gradients
    t: int = 0


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    mean_loss: float
    categorical_accuracy: float


@dataclass
class TrainingHistory:
    records: list[EpochRecord] = field(default_factory=list)
    stop_reason: StopReason = StopReason.EPOCHS_EXHAUSTED

    def to_csv(self) -> str:
        lines = ["epoch,loss,categorical_accuracy"]
        for r in self.records:
            lines.append(f"{r.epoch},{r.mean_loss!r},{r.categorical_accuracy!r}")
        return "\n".join(lines) + "\n"


def cross_entropy(probs: np.ndarray, label: np.ndarray) -> float:
    """Categorical cross-entropy of one prediction against a one-hot label.

    Probabilities are clamped at 1e-12 before the log so a saturated
    softmax cannot produce an infinite loss.
    """
    probs = np.asarray(probs, dtype=np.float64)
    label = np.asarray(label, dtype=np.float64)
    if probs.shape != label.shape:
        raise DimensionError(f"probs shape {probs.shape} != label shape {label.shape}")
    return float(-(label * np.log(np.maximum(probs, LOG_CLAMP))).sum())


def _as_sequence_batch(batch) -> tuple[np.ndarray, np.ndarray]:
    """Stack a batch into (xs, onehot): xs is (T, B, D), onehot is (B, 2).

    Entries are LabeledSequence objects or plain (features, Label) pairs,
    which the gradient-check harness uses for short toy sequences.
    """
    if not batch:
        raise ConfigError("batch must be non-empty")
    feats, labels = [], []
    for item in batch:
        if isinstance(item, LabeledSequence):
            feats.append(item.window.frames)
            labels.append(item.label)
        else:
            arr, label = item
            feats.append(np.asarray(arr, dtype=np.float64))
            labels.append(label)
    T, D = feats[0].shape
    for f in feats:
        if f.shape != (T, D):
            raise DimensionError("all windows in a batch must share length and width")
    xs = np.stack(feats, axis=1)  # (T, B, D)
    onehot = np.zeros((len(labels), 2))
    for k, label in enumerate(labels):
        onehot[k, label.value] = 1.0
    return xs, onehot


def _zeros_like_params(model: ModelParams) -> Gradients:
    return {key: np.zeros_like(arr) for key, arr in param_entries(model)}


def backward(model: ModelParams, batch) -> tuple[Gradients, float]:
    """Mean loss over the batch and its exact gradient for every parameter.

    Backpropagation runs through the dense stack, then through time across
    every step of every LSTM layer.
    """
    xs, onehot = _as_sequence_batch(batch)
    B = xs.shape[1]
    probs, cache = forward_batch(model, xs, want_cache=True)
    losses = -(onehot * np.log(np.maximum(probs, LOG_CLAMP))).sum(axis=1)
    mean_loss = float(losses.mean())
    if not math.isfinite(mean_loss):
        raise NumericError("non-finite loss over batch")

    grads = _zeros_like_params(model)

    # Dense stack. Softmax + cross-entropy collapse to (p - y) on the logits.
    d_act = (probs - onehot) / B
    for k in range(len(model.dense_layers) - 1, -1, -1):
        layer = model.dense_layers[k]
        if layer.activation is Activation.RELU:
            d_pre = d_act * (cache.dense_pre[k] > 0)
        else:  # softmax handled above, identity passes through
            d_pre = d_act
        grads[f"dense{k}.w"] += d_pre.T @ cache.dense_inputs[k]
        grads[f"dense{k}.b"] += d_pre.sum(axis=0)
        d_act = d_pre @ layer.w

    # d_act is now the gradient on the last LSTM layer's final hidden state.
    T = xs.shape[0]
    d_hidden_seq = None  # (T, B, H) gradient on a layer's full output sequence
    for li in range(len(model.lstm_layers) - 1, -1, -1):
        layer = model.lstm_layers[li]
        lc = cache.lstm[li]
        H = layer.hidden_size
        if d_hidden_seq is None:
            d_hidden_seq = np.zeros((T, B, H))
            d_hidden_seq[T - 1] = d_act
        wh = {"i": layer.w_i[:, :H], "f": layer.w_f[:, :H],
              "o": layer.w_o[:, :H], "c": layer.w_c[:, :H]}
        wx = {"i": layer.w_i[:, H:], "f": layer.w_f[:, H:],
              "o": layer.w_o[:, H:], "c": layer.w_c[:, H:]}
        dwh = {g: np.zeros_like(wh[g]) for g in "ifoc"}
        dwx = {g: np.zeros_like(wx[g]) for g in "ifoc"}
        db = {g: np.zeros(H) for g in "ifoc"}
        d_input_seq = np.zeros_like(lc.x)
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in range(T - 1, -1, -1):
            dh = d_hidden_seq[t] + dh_next
            i, f, o, g = lc.i[t], lc.f[t], lc.o[t], lc.g[t]
            dc = dc_next + dh * o * (1.0 - lc.tanh_c[t] ** 2)
            da = {
                "o": dh * lc.tanh_c[t] * o * (1.0 - o),
                "f": dc * lc.c_prev[t] * f * (1.0 - f),
                "i": dc * g * i * (1.0 - i),
                "c": dc * i * (1.0 - g ** 2),
            }
            h_prev = lc.h_prev[t]
            x_t = lc.x[t]
            dh_next = np.zeros((B, H))
            dx_t = np.zeros_like(x_t)
            for gate in "ifoc":
                a = da[gate]
                dwh[gate] += a.T @ h_prev
                dwx[gate] += a.T @ x_t
                db[gate] += a.sum(axis=0)
                dh_next += a @ wh[gate]
                dx_t += a @ wx[gate]
            d_input_seq[t] = dx_t
            dc_next = dc * f
        for gate, wname, bname in (("i", "w_i", "b_i"), ("f", "w_f", "b_f"),
                                   ("o", "w_o", "b_o"), ("c", "w_c", "b_c")):
            grads[f"lstm{li}.{wname}"] += np.concatenate([dwh[gate], dwx[gate]], axis=1)
            grads[f"lstm{li}.{bname}"] += db[gate]
        d_hidden_seq = d_input_seq

    return grads, mean_loss


def gradient_global_norm(grads: Gradients) -> float:
    return float(np.sqrt(sum(float((g ** 2).sum()) for g in grads.values())))


def clip_gradients(grads: Gradients, max_norm: float) -> Gradients:
    """Scale the whole gradient down so its global norm is at most max_norm."""
    norm = gradient_global_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return grads
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}


def fresh_adam_state(model: ModelParams) -> AdamState:
    return AdamState(m=_zeros_like_params(model), v=_zeros_like_params(model), t=0)


def adam_step(
    model: ModelParams, grads: Gradients, state: AdamState, cfg: TrainingConfig
) -> tuple[ModelParams, AdamState]:
    """One Adam update with bias correction, after global-norm clipping."""
    grads = clip_gradients(grads, cfg.grad_clip_norm)
    t = state.t + 1
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    new_m, new_v = {}, {}
    updated = clone_model(model)
    for key, theta in param_entries(updated):
        g = grads[key]
        m = b1 * state.m[key] + (1.0 - b1) * g
        v = b2 * state.v[key] + (1.0 - b2) * g ** 2
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        theta -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_epsilon)
        new_m[key] = m
        new_v[key] = v
    return updated, AdamState(m=new_m, v=new_v, t=t)


def split_dataset(
    data: list[LabeledSequence], cfg: TrainingConfig
) -> tuple[list[LabeledSequence], list[LabeledSequence]]:
    """Deterministic stratified split into (train, test).

    Test size is ceil(N * test_fraction); per-class test counts stay
    within 1 of each class's proportional share. Same seed, same split.
    """
    cfg.validate()
    if len(data) < 4:
        raise ConfigError("need at least 4 sequences to split")
    by_class: dict[Label, list[int]] = {}
    for idx, item in enumerate(data):
        by_class.setdefault(item.label, []).append(idx)
    if len(by_class) < 2:
        only = next(iter(by_class)) if by_class else None
        raise StratificationError(f"dataset holds a single class ({only})")

    n_total = len(data)
    n_test = math.ceil(n_total * cfg.test_fraction)
    rng = np.random.default_rng(cfg.seed)
    classes = sorted(by_class, key=lambda c: c.value)

    # Largest-remainder allocation of the test budget across classes.
    shares = [len(by_class[c]) * cfg.test_fraction for c in classes]
    counts = [min(int(s), len(by_class[c])) for s, c in zip(shares, classes)]
    order = sorted(range(len(classes)), key=lambda k: (-(shares[k] - counts[k]), k))
    short = n_test - sum(counts)
    while short > 0:
        progressed = False
        for k in order:
            if short <= 0:
                break
            if counts[k] < len(by_class[classes[k]]):
                counts[k] += 1
                short -= 1
                progressed = True
        if not progressed:
            break

    test_idx: set[int] = set()
    for c, count in zip(classes, counts):
        pool = np.array(by_class[c])
        rng.shuffle(pool)
        test_idx.update(int(i) for i in pool[:count])
    train = [data[i] for i in range(n_total) if i not in test_idx]
    test = [data[i] for i in range(n_total) if i in test_idx]
    return train, test


def categorical_accuracy(model: ModelParams, data: list[LabeledSequence]) -> float:
    """Fraction of sequences whose argmax prediction matches the label."""
    xs, onehot = _as_sequence_batch(data)
    probs = forward_batch(model, xs)
    predicted = probs.argmax(axis=1)
    actual = onehot.argmax(axis=1)
    return float((predicted == actual).mean())


def _batches(data: list, batch_size: int | None) -> list[list]:
    if batch_size is None or batch_size >= len(data):
        return [data]
    return [data[k:k + batch_size] for k in range(0, len(data), batch_size)]


def fit(
    train_data: list[LabeledSequence], arch: ArchitectureConfig, cfg: TrainingConfig
) -> tuple[ModelParams, TrainingHistory]:
    """Run the epoch loop over an already-split training partition.

    After each epoch the categorical accuracy on the training partition is
    recorded; training halts early once that accuracy holds at or above
    cfg.early_stop_threshold for cfg.early_stop_patience consecutive epochs.
    """
    cfg.validate()
    if not train_data:
        raise ConfigError("training partition is empty")
    model = init_model(arch, cfg.seed)
    state = fresh_adam_state(model)
    history = TrainingHistory()
    streak = 0
    for epoch in range(1, cfg.epochs + 1):
        losses, sizes = [], []
        for batch in _batches(train_data, cfg.batch_size):
            try:
                grads, loss = backward(model, batch)
            except NumericError as exc:
                raise NumericError(f"epoch {epoch}: {exc}") from None
            model, state = adam_step(model, grads, state, cfg)
            losses.append(loss)
            sizes.append(len(batch))
        mean_loss = float(np.average(losses, weights=sizes))
        acc = categorical_accuracy(model, train_data)
        history.records.append(
            EpochRecord(epoch=epoch, mean_loss=mean_loss, categorical_accuracy=acc)
        )
        streak = streak + 1 if acc >= cfg.early_stop_threshold else 0
        if streak >= cfg.early_stop_patience:
            history.stop_reason = StopReason.EARLY_STOPPED
            return model, history
    history.stop_reason = StopReason.EPOCHS_EXHAUSTED
    return model, history


def train(
    data: list[LabeledSequence], arch: ArchitectureConfig, cfg: TrainingConfig
) -> tuple[ModelParams, TrainingHistory]:
    """Split the dataset and fit on the training partition."""
    train_part, _ = split_dataset(data, cfg)
    return fit(train_part, arch, cfg)
