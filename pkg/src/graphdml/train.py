"""Mini-batch training loop and full-dataset embedding emission.

One optimizer step per batch: the batch's rows are encoded as the anchor
view and, depending on the mode, contrasted against labels (dmt), one
masked view plus labels (dmat), or several masked views without labels
(dmat_i, loss averaged over views). The final product is the unit-row
embedding of every node.
"""

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from .augment import AugmentConfig, mask_columns
from .encoder import (
    EncoderParams,
    OptimState,
    TrainingError,
    adamw_step,
    encode_backward,
    encode_forward,
)
from .encoder import init_encoder
from .gprfilter import SmoothedFeatures
from .losses import dmat_i_objective, dmat_loss, dmt_loss
from .rng import generator

__all__ = ["TrainConfig", "EmbeddingMatrix", "TrainResult", "train", "embed_all"]

log = logging.getLogger(__name__)

MODES = ("dmt", "dmat", "dmat_i")


@dataclass(frozen=True)
class TrainConfig:
    mode: str = "dmat_i"
    learning_rate: float = 1e-4
    weight_decay: float = 0.0
    batch_size: int = 512
    n_epochs: int = 100
    temperature: float = 1.0
    mask_fraction: float = 0.1
    n_view: int = 1
    architecture: tuple = (256, 128)   # hidden sizes then embedding dim
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.n_epochs < 1:
            raise ValueError("n_epochs must be >= 1")
        if self.temperature <= 0.0:
            raise ValueError("temperature must be > 0")
        if self.n_view < 1:
            raise ValueError("n_view must be >= 1")
        if not self.architecture:
            raise ValueError("architecture must list at least the embedding dim")


@dataclass
class EmbeddingMatrix:
    """Unit-row node embeddings plus how they were produced."""

    z: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.z.shape[0]


@dataclass
class TrainResult:
    params: EncoderParams
    embedding: EmbeddingMatrix
    loss_trace: list   # per-epoch mean batch loss


def params_digest(params: EncoderParams) -> str:
    h = hashlib.sha256()
    for w, b in zip(params.weights, params.biases):
        h.update(np.ascontiguousarray(w).tobytes())
        h.update(np.ascontiguousarray(b).tobytes())
    return h.hexdigest()[:16]


def embed_all(params: EncoderParams, features: np.ndarray, batch_size: int = 4096) -> EmbeddingMatrix:
    """Encode every row in batches; batching does not change values."""
    n = features.shape[0]
    out = np.empty((n, params.layer_dims[-1]))
    for start in range(0, n, batch_size):
        stop = min(start + batch_size, n)
        rows = features[start:stop]
        if stop - start == 1:
            # single-row matmuls take a different BLAS path (gemv) whose
            # summation order differs from gemm; pad so batching never
            # changes the bits
            z, _ = encode_forward(params, np.vstack([rows, rows]))
            out[start:stop] = z[:1]
        else:
            out[start:stop], _ = encode_forward(params, rows)
    return EmbeddingMatrix(z=out, provenance={"checkpoint": params_digest(params)})


def _supervised_rows(labels, label_mask, n_nodes: int) -> np.ndarray:
    if labels is None:
        raise TrainingError("supervised modes need labels")
    if label_mask is None:
        rows = np.arange(n_nodes)
    else:
        rows = np.flatnonzero(np.asarray(label_mask, dtype=bool))
    if rows.size == 0:
        raise TrainingError("supervised mode with an empty labeled set")
    return rows


def train(
    smoothed: SmoothedFeatures,
    labels: np.ndarray | None,
    cfg: TrainConfig,
    label_mask: np.ndarray | None = None,
) -> TrainResult:
    """Run the configured objective to completion and embed all nodes.

    ``label_mask`` restricts which rows count as labeled training data for
    the supervised modes; dmat_i always trains on every row.
    """
    x = smoothed.matrix
    n_nodes, d_in = x.shape
    if cfg.mode == "dmat_i":
        rows = np.arange(n_nodes)
    else:
        rows = _supervised_rows(labels, label_mask, n_nodes)

    params = init_encoder([d_in, *cfg.architecture], seed=cfg.seed)
    opt = OptimState.for_params(params, lr=cfg.learning_rate, weight_decay=cfg.weight_decay)
    aug = AugmentConfig(mask_fraction=cfg.mask_fraction, n_view=cfg.n_view, seed=cfg.seed)

    trace = []
    step_nonce = 0
    for epoch in range(cfg.n_epochs):
        order = rows[generator(cfg.seed, "shuffle", epoch).permutation(rows.size)]
        batch_losses = []
        for start in range(0, order.size, cfg.batch_size):
            batch_rows = order[start:start + cfg.batch_size]
            loss = _train_step(params, opt, x[batch_rows],
                               None if labels is None else labels[batch_rows],
                               cfg, aug, step_nonce)
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss {loss} at epoch {epoch}, batch {start // cfg.batch_size}"
                )
            batch_losses.append(loss)
            step_nonce += 1
        trace.append(float(np.mean(batch_losses)))
        log.debug("epoch=%d loss=%f", epoch, trace[-1])

    embedding = embed_all(params, x, batch_size=max(cfg.batch_size, 1))
    embedding.provenance["config"] = cfg
    return TrainResult(params=params, embedding=embedding, loss_trace=trace)


def _train_step(params, opt, x_batch, y_batch, cfg, aug, step_nonce) -> float:
    anchor, anchor_cache = encode_forward(params, x_batch)

    if cfg.mode == "dmt":
        loss, d_anchor = dmt_loss(anchor, y_batch, cfg.temperature)
        wgrads, bgrads, _ = encode_backward(params, anchor_cache, d_anchor)
        adamw_step(params, wgrads, bgrads, opt)
        return loss

    if cfg.mode == "dmat":
        masked = mask_columns(x_batch, aug, 0, step_nonce)
        view, view_cache = encode_forward(params, masked)
        loss, d_anchor, d_view = dmat_loss(anchor, view, y_batch, cfg.temperature)
        wgrads, bgrads, _ = encode_backward(params, anchor_cache, d_anchor)
        wg2, bg2, _ = encode_backward(params, view_cache, d_view)
        _accumulate(wgrads, bgrads, wg2, bg2)
        adamw_step(params, wgrads, bgrads, opt)
        return loss

    # dmat_i: average the objective over n_view masked counterpart views
    total_loss = 0.0
    d_anchor_sum = np.zeros_like(anchor)
    wgrads = [np.zeros_like(w) for w in params.weights]
    bgrads = [np.zeros_like(b) for b in params.biases]
    for view_index in range(cfg.n_view):
        masked = mask_columns(x_batch, aug, view_index, step_nonce)
        view, view_cache = encode_forward(params, masked)
        loss, d_anchor, d_view = dmat_i_objective(anchor, view, cfg.temperature)
        total_loss += loss
        d_anchor_sum += d_anchor
        wg, bg, _ = encode_backward(params, view_cache, d_view)
        _accumulate(wgrads, bgrads, wg, bg)
    scale = 1.0 / cfg.n_view
    wg, bg, _ = encode_backward(params, anchor_cache, d_anchor_sum * scale)
    for g in wgrads + bgrads:
        g *= scale
    _accumulate(wgrads, bgrads, wg, bg)
    adamw_step(params, wgrads, bgrads, opt)
    return total_loss * scale


def _accumulate(wgrads, bgrads, wg, bg) -> None:
    for a, g in zip(wgrads, wg):
        a += g
    for a, g in zip(bgrads, bg):
        a += g


def training_working_set_bytes(cfg: TrainConfig, d_in: int) -> int:
    """Peak training working set: batch activations plus parameters/moments.

    Independent of the node count; the full feature matrix is memory-mapped
    or held by the caller and only batch slices enter the step.
    """
    dims = [d_in, *cfg.architecture]
    n_params = sum(a * b + b for a, b in zip(dims[:-1], dims[1:]))
    acts = cfg.batch_size * sum(dims) * (2 + cfg.n_view)
    return 8 * (acts + 4 * n_params)
