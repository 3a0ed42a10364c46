"""Feedforward encoder with hand-derived backprop and AdamW.

Layers are affine with ReLU on hidden layers; the final layer is affine
followed by row-wise L2 normalization, so embeddings live on the unit
sphere (up to near-zero rows guarded by a small epsilon). All math is
float64 so gradients can be checked against finite differences.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .rng import generator

__all__ = [
    "EncoderParams",
    "OptimState",
    "TrainingError",
    "init_encoder",
    "encode",
    "encode_forward",
    "encode_backward",
    "adamw_step",
    "save_checkpoint",
    "load_checkpoint",
]

EPS_NORM = 1e-12
CHECKPOINT_MAGIC = b"DMTC"
CHECKPOINT_VERSION = 1


class TrainingError(RuntimeError):
    pass


@dataclass
class EncoderParams:
    layer_dims: list[int]
    weights: list[np.ndarray]   # weights[i]: (dims[i], dims[i+1])
    biases: list[np.ndarray]    # biases[i]: (dims[i+1],)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def n_parameters(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def copy(self) -> "EncoderParams":
        return EncoderParams(
            list(self.layer_dims),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )


@dataclass
class OptimState:
    """AdamW moments and hyperparameters (decoupled weight decay)."""

    lr: float
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m_weights: list = field(default_factory=list)
    v_weights: list = field(default_factory=list)
    m_biases: list = field(default_factory=list)
    v_biases: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params: EncoderParams, lr: float, weight_decay: float = 0.0) -> "OptimState":
        return cls(
            lr=lr,
            weight_decay=weight_decay,
            m_weights=[np.zeros_like(w) for w in params.weights],
            v_weights=[np.zeros_like(w) for w in params.weights],
            m_biases=[np.zeros_like(b) for b in params.biases],
            v_biases=[np.zeros_like(b) for b in params.biases],
        )


def init_encoder(layer_dims, seed: int = 0) -> EncoderParams:
    """Uniform fan-scaled weights (bound sqrt(6/(fan_in+fan_out))), zero biases."""
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2:
        raise ValueError("need at least an input and an output dimension")
    if any(d <= 0 for d in dims):
        raise ValueError(f"zero/negative layer dimension in {dims}")
    rng = generator(seed, "encoder-init")
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return EncoderParams(dims, weights, biases)


def _normalize_rows(z: np.ndarray):
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    safe = np.maximum(norms, EPS_NORM)
    return z / safe, norms, safe


def encode_forward(params: EncoderParams, x_rows: np.ndarray):
    """Forward pass returning (unit-row output, cache for backward)."""
    x_rows = np.asarray(x_rows, dtype=np.float64)
    activations = [x_rows]
    h = x_rows
    last = params.n_layers - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w + b
        if i < last:
            h = np.maximum(h, 0.0)
        activations.append(h)
    out, norms, safe = _normalize_rows(h)
    cache = (activations, norms, safe, out)
    return out, cache


def encode(params: EncoderParams, x_rows: np.ndarray) -> np.ndarray:
    """Unit-row embedding of a batch (rows with pre-norm below eps stay tiny)."""
    out, _ = encode_forward(params, x_rows)
    return out


def encode_backward(params: EncoderParams, cache, grad_out: np.ndarray):
    """Exact gradients of sum(grad_out * output) w.r.t. all parameters.

    Returns (weight_grads, bias_grads, grad_input). The normalization
    Jacobian projects away the component of grad_out parallel to each
    output row.
    """
    activations, norms, safe, out = cache
    grad_out = np.asarray(grad_out, dtype=np.float64)
    if grad_out.shape != out.shape:
        raise ValueError(f"upstream grad shape {grad_out.shape} != output {out.shape}")
    # through y = z / max(||z||, eps); rows at the zero-norm singularity get
    # a zero subgradient rather than a 1/eps blowup
    parallel = np.sum(grad_out * out, axis=1, keepdims=True)
    g = np.where(norms > EPS_NORM, (grad_out - parallel * out) / safe, 0.0)
    weight_grads = [np.empty(0)] * params.n_layers
    bias_grads = [np.empty(0)] * params.n_layers
    last = params.n_layers - 1
    for i in range(last, -1, -1):
        if i < last:
            g = g * (activations[i + 1] > 0.0)
        weight_grads[i] = activations[i].T @ g
        bias_grads[i] = g.sum(axis=0)
        g = g @ params.weights[i].T
    return weight_grads, bias_grads, g


def adamw_step(params: EncoderParams, weight_grads, bias_grads, opt: OptimState) -> None:
    """In-place AdamW update with bias correction and decoupled decay."""
    for g in weight_grads + bias_grads:
        if not np.all(np.isfinite(g)):
            raise TrainingError("non-finite gradient")
    opt.step += 1
    bc1 = 1.0 - opt.beta1**opt.step
    bc2 = 1.0 - opt.beta2**opt.step

    def update(theta, grad, m, v):
        m *= opt.beta1
        m += (1.0 - opt.beta1) * grad
        v *= opt.beta2
        v += (1.0 - opt.beta2) * grad * grad
        if opt.weight_decay:
            theta -= opt.lr * opt.weight_decay * theta
        theta -= opt.lr * (m / bc1) / (np.sqrt(v / bc2) + opt.eps)

    for i in range(params.n_layers):
        update(params.weights[i], weight_grads[i], opt.m_weights[i], opt.v_weights[i])
        update(params.biases[i], bias_grads[i], opt.m_biases[i], opt.v_biases[i])


# --- checkpoints -------------------------------------------------------------


def save_checkpoint(path, params: EncoderParams, opt: OptimState | None = None) -> None:
    """Versioned binary blob: layer dims, f64 tensors, optional optimizer state."""
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        dims = params.layer_dims
        fh.write(struct.pack("<I", len(dims)))
        fh.write(struct.pack(f"<{len(dims)}Q", *dims))
        for w, b in zip(params.weights, params.biases):
            w.astype("<f8").tofile(fh)
            b.astype("<f8").tofile(fh)
        fh.write(struct.pack("<B", 1 if opt is not None else 0))
        if opt is not None:
            fh.write(struct.pack("<ddddd", opt.lr, opt.weight_decay, opt.beta1, opt.beta2, opt.eps))
            fh.write(struct.pack("<Q", opt.step))
            for group in (opt.m_weights, opt.v_weights, opt.m_biases, opt.v_biases):
                for t in group:
                    t.astype("<f8").tofile(fh)


def load_checkpoint(path):
    """Inverse of :func:`save_checkpoint`; returns (params, opt_or_None)."""
    with open(path, "rb") as fh:
        if fh.read(4) != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        (n_dims,) = struct.unpack("<I", fh.read(4))
        dims = list(struct.unpack(f"<{n_dims}Q", fh.read(8 * n_dims)))
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            weights.append(np.fromfile(fh, dtype="<f8", count=fan_in * fan_out).reshape(fan_in, fan_out))
            biases.append(np.fromfile(fh, dtype="<f8", count=fan_out))
        params = EncoderParams(dims, weights, biases)
        (has_opt,) = struct.unpack("<B", fh.read(1))
        opt = None
        if has_opt:
            lr, wd, b1, b2, eps = struct.unpack("<ddddd", fh.read(40))
            (step,) = struct.unpack("<Q", fh.read(8))
            opt = OptimState.for_params(params, lr, wd)
            opt.beta1, opt.beta2, opt.eps, opt.step = b1, b2, eps, step
            for group in (opt.m_weights, opt.v_weights, opt.m_biases, opt.v_biases):
                for i, t in enumerate(group):
                    group[i] = np.fromfile(fh, dtype="<f8", count=t.size).reshape(t.shape)
    return params, opt
