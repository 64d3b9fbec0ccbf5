"""Stacked-LSTM classifier network: gate math, dense head, initialization.

The network is a stack of LSTM layers run over the whole input sequence,
followed by dense layers applied to the final timestep's hidden vector;
the last dense layer is a 2-way softmax. All arithmetic is float64 so
gradients can be checked against central finite differences at tight
tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .pose import FILTERED_FEATURE_WIDTH, SequenceWindow

N_CLASSES = 2

DEFAULT_LSTM_HIDDEN = (64, 128, 64)
DEFAULT_DENSE_SIZES = (64, 32, N_CLASSES)


class DimensionError(ValueError):
    """Operand shapes do not chain."""


class ConfigError(ValueError):
    """Invalid architecture or training configuration."""


class Activation(Enum):
    RELU = "relu"
    SOFTMAX = "softmax"
    IDENTITY = "identity"


def sigmoid(x):
    """Logistic function, overflow-safe on both tails."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def tanh(x):
    out = np.tanh(np.asarray(x, dtype=np.float64))
    return out if out.ndim else float(out)


def softmax(z: np.ndarray) -> np.ndarray:
    """Softmax with max-subtraction; output is positive and sums to 1."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class LstmLayerParams:
    """One LSTM layer's weights.

    Each gate matrix has shape (hidden, input + hidden) and multiplies the
    concatenation [h_prev, x_t]; columns [:hidden] act on the recurrent
    state and columns [hidden:] on the input.
    """

    w_i: np.ndarray
    w_f: np.ndarray
    w_o: np.ndarray
    w_c: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_c: np.ndarray

    @property
    def hidden_size(self) -> int:
        return self.w_i.shape[0]

    @property
    def input_size(self) -> int:
        return self.w_i.shape[1] - self.w_i.shape[0]

    def validate(self):
        h = self.w_i.shape[0]
        cols = self.w_i.shape[1]
        if cols <= h:
            raise DimensionError("gate matrix narrower than its own hidden size")
        for name in ("w_i", "w_f", "w_o", "w_c"):
            m = getattr(self, name)
            if m.shape != (h, cols):
                raise DimensionError(f"{name} shape {m.shape} != {(h, cols)}")
            if not np.isfinite(m).all():
                raise DimensionError(f"{name} holds non-finite entries")
        for name in ("b_i", "b_f", "b_o", "b_c"):
            b = getattr(self, name)
            if b.shape != (h,):
                raise DimensionError(f"{name} shape {b.shape} != {(h,)}")
            if not np.isfinite(b).all():
                raise DimensionError(f"{name} holds non-finite entries")


@dataclass
class DenseLayerParams:
    w: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    activation: Activation = Activation.RELU

    @property
    def out_size(self) -> int:
        return self.w.shape[0]

    @property
    def in_size(self) -> int:
        return self.w.shape[1]

    def validate(self):
        if self.w.ndim != 2:
            raise DimensionError("dense weight must be a matrix")
        if self.b.shape != (self.w.shape[0],):
            raise DimensionError(f"dense bias shape {self.b.shape} != ({self.w.shape[0]},)")
        if not (np.isfinite(self.w).all() and np.isfinite(self.b).all()):
            raise DimensionError("dense layer holds non-finite entries")


@dataclass(frozen=True)
class ArchitectureConfig:
    input_width: int = FILTERED_FEATURE_WIDTH
    lstm_hidden: tuple[int, ...] = DEFAULT_LSTM_HIDDEN
    dense_sizes: tuple[int, ...] = DEFAULT_DENSE_SIZES
    filter_head: bool = True
    canonicalize: bool = False  # body-centred rescaling before feature extraction

    def validate(self):
        if self.input_width < 1:
            raise ConfigError("input_width must be positive")
        if not self.lstm_hidden or any(h < 1 for h in self.lstm_hidden):
            raise ConfigError("lstm_hidden must be non-empty positive widths")
        if not self.dense_sizes or any(d < 1 for d in self.dense_sizes):
            raise ConfigError("dense_sizes must be non-empty positive widths")
        if self.dense_sizes[-1] != N_CLASSES:
            raise ConfigError(f"final dense width must be {N_CLASSES}")


@dataclass
class ModelParams:
    """All weights of the network plus an architecture descriptor."""

    lstm_layers: list[LstmLayerParams]
    dense_layers: list[DenseLayerParams]
    input_width: int
    descriptor: dict = field(default_factory=dict)

    def validate(self):
        if not self.lstm_layers or not self.dense_layers:
            raise DimensionError("model needs at least one LSTM and one dense layer")
        prev = self.input_width
        for k, layer in enumerate(self.lstm_layers):
            layer.validate()
            if layer.input_size != prev:
                raise DimensionError(
                    f"lstm layer {k} expects input {layer.input_size}, previous width is {prev}"
                )
            prev = layer.hidden_size
        for k, layer in enumerate(self.dense_layers):
            layer.validate()
            if layer.in_size != prev:
                raise DimensionError(
                    f"dense layer {k} expects input {layer.in_size}, previous width is {prev}"
                )
            prev = layer.out_size
            last = k == len(self.dense_layers) - 1
            if last and layer.activation is not Activation.SOFTMAX:
                raise DimensionError("final dense layer must be softmax")
            if not last and layer.activation is Activation.SOFTMAX:
                raise DimensionError("softmax only allowed in the final position")
        if prev != N_CLASSES:
            raise DimensionError(f"final output width must be {N_CLASSES}")


@dataclass
class CellState:
    h: np.ndarray
    c: np.ndarray


def init_model(cfg: ArchitectureConfig, seed: int) -> ModelParams:
    """Deterministically initialize a model from a seed.

    Weights are uniform(-r, r) with r = sqrt(6 / (fan_in + fan_out)) per
    matrix; biases start at zero except the forget-gate biases, which
    start at 1.0 to keep early memory open.
    """
    cfg.validate()
    rng = np.random.default_rng(seed)

    def uniform(shape):
        fan_out, fan_in = shape
        r = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-r, r, size=shape)

    lstm_layers = []
    prev = cfg.input_width
    for hidden in cfg.lstm_hidden:
        shape = (hidden, prev + hidden)
        lstm_layers.append(
            LstmLayerParams(
                w_i=uniform(shape),
                w_f=uniform(shape),
                w_o=uniform(shape),
                w_c=uniform(shape),
                b_i=np.zeros(hidden),
                b_f=np.ones(hidden),
                b_o=np.zeros(hidden),
                b_c=np.zeros(hidden),
            )
        )
        prev = hidden
    dense_layers = []
    for k, width in enumerate(cfg.dense_sizes):
        act = Activation.SOFTMAX if k == len(cfg.dense_sizes) - 1 else Activation.RELU
        dense_layers.append(
            DenseLayerParams(w=uniform((width, prev)), b=np.zeros(width), activation=act)
        )
        prev = width
    model = ModelParams(
        lstm_layers=lstm_layers,
        dense_layers=dense_layers,
        input_width=cfg.input_width,
        descriptor={
            "input_width": cfg.input_width,
            "lstm_hidden": list(cfg.lstm_hidden),
            "dense_sizes": list(cfg.dense_sizes),
            "filter_head": cfg.filter_head,
            "canonicalize": cfg.canonicalize,
            "seed": int(seed),
        },
    )
    model.validate()
    return model


def lstm_cell_step(p: LstmLayerParams, x_t: np.ndarray, state: CellState) -> CellState:
    """One timestep of the LSTM cell.

    i = sigmoid(W_i [h, x] + b_i), f and o likewise; the new cell state is
    f * C_prev + i * tanh(W_C [h, x] + b_C) and the new hidden state is
    o * tanh(C).
    """
    x_t = np.asarray(x_t, dtype=np.float64).reshape(-1)
    if x_t.size != p.input_size:
        raise DimensionError(f"input width {x_t.size} != layer input {p.input_size}")
    if state.h.shape != (p.hidden_size,) or state.c.shape != (p.hidden_size,):
        raise DimensionError("state width does not match layer hidden size")
    z = np.concatenate([state.h, x_t])
    i = sigmoid(p.w_i @ z + p.b_i)
    f = sigmoid(p.w_f @ z + p.b_f)
    o = sigmoid(p.w_o @ z + p.b_o)
    g = np.tanh(p.w_c @ z + p.b_c)
    c = f * state.c + i * g
    h = o * np.tanh(c)
    return CellState(h=h, c=c)


def lstm_layer_forward(p: LstmLayerParams, seq) -> list[np.ndarray]:
    """Run one layer over a sequence from the zero state, returning every h_t."""
    seq = [np.asarray(x, dtype=np.float64).reshape(-1) for x in seq]
    if not seq:
        raise DimensionError("sequence must be non-empty")
    state = CellState(h=np.zeros(p.hidden_size), c=np.zeros(p.hidden_size))
    out = []
    for x_t in seq:
        state = lstm_cell_step(p, x_t, state)
        out.append(state.h)
    return out


@dataclass
class LayerCache:
    """Per-timestep activations one LSTM layer needs for backprop."""

    i: np.ndarray        # (T, B, H)
    f: np.ndarray
    o: np.ndarray
    g: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray
    h_prev: np.ndarray   # (T, B, H), h_prev[0] is the zero state
    c_prev: np.ndarray
    x: np.ndarray        # (T, B, D) layer input


@dataclass
class ForwardCache:
    lstm: list[LayerCache]
    dense_inputs: list[np.ndarray]   # input to each dense layer, (B, width)
    dense_pre: list[np.ndarray]      # pre-activation of each dense layer
    probs: np.ndarray                # (B, 2)


def _lstm_layer_forward_batch(p: LstmLayerParams, xs: np.ndarray) -> tuple[np.ndarray, LayerCache]:
    """Batched layer forward; xs is (T, B, D), returns hs (T, B, H) plus cache."""
    T, B, D = xs.shape
    H = p.hidden_size
    if D != p.input_size:
        raise DimensionError(f"input width {D} != layer input {p.input_size}")
    # Split each gate matrix into recurrent and input parts; the input part
    # is applied to the whole sequence in one matmul.
    wx = [p.w_i[:, H:], p.w_f[:, H:], p.w_o[:, H:], p.w_c[:, H:]]
    wh = [p.w_i[:, :H], p.w_f[:, :H], p.w_o[:, :H], p.w_c[:, :H]]
    bias = [p.b_i, p.b_f, p.b_o, p.b_c]
    flat = xs.reshape(T * B, D)
    x_proj = [(flat @ w.T).reshape(T, B, H) + b for w, b in zip(wx, bias)]

    i_a = np.empty((T, B, H))
    f_a = np.empty((T, B, H))
    o_a = np.empty((T, B, H))
    g_a = np.empty((T, B, H))
    c_a = np.empty((T, B, H))
    tanh_c = np.empty((T, B, H))
    h_prev_a = np.empty((T, B, H))
    c_prev_a = np.empty((T, B, H))
    hs = np.empty((T, B, H))

    h = np.zeros((B, H))
    c = np.zeros((B, H))
    for t in range(T):
        h_prev_a[t] = h
        c_prev_a[t] = c
        i = sigmoid(x_proj[0][t] + h @ wh[0].T)
        f = sigmoid(x_proj[1][t] + h @ wh[1].T)
        o = sigmoid(x_proj[2][t] + h @ wh[2].T)
        g = np.tanh(x_proj[3][t] + h @ wh[3].T)
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        i_a[t], f_a[t], o_a[t], g_a[t] = i, f, o, g
        c_a[t], tanh_c[t], hs[t] = c, tc, h
    cache = LayerCache(i=i_a, f=f_a, o=o_a, g=g_a, c=c_a, tanh_c=tanh_c,
                       h_prev=h_prev_a, c_prev=c_prev_a, x=xs)
    return hs, cache


def forward_batch(m: ModelParams, xs: np.ndarray, want_cache: bool = False):
    """Forward pass over a batch of sequences.

    xs is (T, B, input_width). The LSTM stack consumes the whole sequence;
    only the final timestep of the last layer feeds the dense stack.
    Returns the (B, 2) probabilities, plus the cache when requested.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 3:
        raise DimensionError(f"expected (T, B, D) input, got shape {xs.shape}")
    if xs.shape[2] != m.input_width:
        raise DimensionError(f"feature width {xs.shape[2]} != model input {m.input_width}")
    lstm_caches = []
    seq = xs
    for layer in m.lstm_layers:
        seq, cache = _lstm_layer_forward_batch(layer, seq)
        lstm_caches.append(cache)
    y = seq[-1]  # (B, H) final timestep of the last LSTM layer
    dense_inputs, dense_pre = [], []
    for layer in m.dense_layers:
        dense_inputs.append(y)
        a = y @ layer.w.T + layer.b
        dense_pre.append(a)
        if layer.activation is Activation.RELU:
            y = np.maximum(a, 0.0)
        elif layer.activation is Activation.IDENTITY:
            y = a
        else:
            y = softmax(a)
    probs = y
    if want_cache:
        return probs, ForwardCache(lstm=lstm_caches, dense_inputs=dense_inputs,
                                   dense_pre=dense_pre, probs=probs)
    return probs


def model_forward(m: ModelParams, window: SequenceWindow) -> np.ndarray:
    """Classify one window; returns the length-2 probability vector."""
    if window.width != m.input_width:
        raise DimensionError(f"window width {window.width} != model input {m.input_width}")
    probs = forward_batch(m, window.frames[:, None, :])
    return probs[0]


def predict_label_index(probs: np.ndarray) -> int:
    """Argmax with ties broken toward the lower class index."""
    return int(np.argmax(probs))


def param_entries(m: ModelParams) -> list[tuple[str, np.ndarray]]:
    """All parameter arrays in a fixed, stable order."""
    entries = []
    for k, layer in enumerate(m.lstm_layers):
        for name in ("w_i", "w_f", "w_o", "w_c", "b_i", "b_f", "b_o", "b_c"):
            entries.append((f"lstm{k}.{name}", getattr(layer, name)))
    for k, layer in enumerate(m.dense_layers):
        entries.append((f"dense{k}.w", layer.w))
        entries.append((f"dense{k}.b", layer.b))
    return entries


def clone_model(m: ModelParams) -> ModelParams:
    lstm = [
        LstmLayerParams(
            w_i=l.w_i.copy(), w_f=l.w_f.copy(), w_o=l.w_o.copy(), w_c=l.w_c.copy(),
            b_i=l.b_i.copy(), b_f=l.b_f.copy(), b_o=l.b_o.copy(), b_c=l.b_c.copy(),
        )
        for l in m.lstm_layers
    ]
    dense = [
        DenseLayerParams(w=d.w.copy(), b=d.b.copy(), activation=d.activation)
        for d in m.dense_layers
    ]
    return ModelParams(lstm_layers=lstm, dense_layers=dense,
                       input_width=m.input_width, descriptor=dict(m.descriptor))
