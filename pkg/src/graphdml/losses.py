"""Training objectives over unit-norm embeddings.

All three objectives share the similarity kernel h(u, v) = exp(u.v / t) and
a softmax structure: the loss per anchor is log(sum over a contrast set)
minus log(sum over a positive set). Supervised variants take the positive
set from labels; the unsupervised variant uses only the augmented
counterpart. Values are batch means; gradients are with respect to the
(already normalized) embedding rows. Everything is evaluated in
log-sum-exp form with per-anchor max subtraction.
"""

import numpy as np

__all__ = [
    "pair_similarity",
    "dmt_loss",
    "dmat_loss",
    "dmat_i_objective",
    "unbiased_reference_loss",
]


def _check_temperature(t: float) -> None:
    if t <= 0.0:
        raise ValueError(f"temperature must be > 0, got {t}")


def pair_similarity(u: np.ndarray, v: np.ndarray, t: float) -> float:
    """h(u, v) = exp(u.v / t); in [e^(-1/t), e^(1/t)] for unit vectors."""
    _check_temperature(t)
    return float(np.exp(np.dot(u, v) / t))


def _masked_logsumexp(scores: np.ndarray, mask: np.ndarray):
    """Row-wise logsumexp restricted to mask; also returns the softmax matrix.

    Rows whose mask is empty yield -inf and an all-zero softmax row.
    """
    neg = np.where(mask, scores, -np.inf)
    rowmax = neg.max(axis=1, keepdims=True)
    rowmax = np.where(np.isfinite(rowmax), rowmax, 0.0)
    ex = np.exp(neg - rowmax)
    denom = ex.sum(axis=1, keepdims=True)
    lse = np.log(np.where(denom > 0.0, denom, 1.0)) + rowmax
    soft = np.divide(ex, denom, out=np.zeros_like(ex), where=denom > 0.0)
    return lse.ravel(), soft


def _softmax_contrast(scores, all_mask, pos_mask):
    """Loss rows log-sum(all) - log-sum(pos) plus the gradient matrix G."""
    lse_all, soft_all = _masked_logsumexp(scores, all_mask)
    lse_pos, soft_pos = _masked_logsumexp(scores, pos_mask)
    return lse_all - lse_pos, soft_all - soft_pos


def dmt_loss(embeddings: np.ndarray, labels: np.ndarray, t: float):
    """Supervised multi-positive tuplet loss on one encoded batch.

    Each row is an anchor; its positive set is every same-label row
    (itself included, so the loss is 0 when the whole batch shares a
    label), and the denominator adds all different-label rows. Returns
    (mean loss, gradient w.r.t. the embedding rows).
    """
    _check_temperature(t)
    if labels is None:
        raise ValueError("labels are required")
    emb = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    n = emb.shape[0]
    scores = emb @ emb.T / t
    same = labels[:, None] == labels[None, :]
    all_mask = np.ones((n, n), dtype=bool)
    losses, g = _softmax_contrast(scores, all_mask, same)
    g /= t * n
    grad = (g + g.T) @ emb
    return float(losses.mean()), grad


def dmat_loss(anchors: np.ndarray, counterparts: np.ndarray, labels: np.ndarray, t: float):
    """Supervised tuplet loss over a batch and its augmented counterparts.

    The 2B rows [anchors; counterparts] all act as anchors; positives are
    the same-label members of the other 2B - 1 rows (the counterpart of a
    row shares its label, so it is always a positive). Returns
    (mean loss, dL/danchors, dL/dcounterparts).
    """
    _check_temperature(t)
    if labels is None or counterparts is None:
        raise ValueError("dmat_loss needs labels and a counterpart view")
    u = np.asarray(anchors, dtype=np.float64)
    v = np.asarray(counterparts, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"view shapes differ: {u.shape} vs {v.shape}")
    b = u.shape[0]
    w = np.vstack([u, v])
    lab2 = np.concatenate([labels, labels])
    scores = w @ w.T / t
    off_diag = ~np.eye(2 * b, dtype=bool)
    same = (lab2[:, None] == lab2[None, :]) & off_diag
    losses, g = _softmax_contrast(scores, off_diag, same)
    g /= t * 2 * b
    grad = (g + g.T) @ w
    return float(losses.mean()), grad[:b], grad[b:]


def dmat_i_objective(anchors: np.ndarray, counterparts: np.ndarray, t: float):
    """Label-free objective: counterpart vs. everything else in both views.

    Per anchor x with counterpart x_bar, the loss is
    log(sum over the other 2B - 1 rows of h(x, .)) - log h(x, x_bar);
    the objective averages the interchanged roles over all 2B rows.
    Returns (J, dJ/danchors, dJ/dcounterparts).
    """
    _check_temperature(t)
    u = np.asarray(anchors, dtype=np.float64)
    v = np.asarray(counterparts, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"view shapes differ: {u.shape} vs {v.shape}")
    b = u.shape[0]
    w = np.vstack([u, v])
    partner = np.concatenate([np.arange(b) + b, np.arange(b)])
    scores = w @ w.T / t
    off_diag = ~np.eye(2 * b, dtype=bool)
    lse_all, soft_all = _masked_logsumexp(scores, off_diag)
    rows = np.arange(2 * b)
    losses = lse_all - scores[rows, partner]
    g = soft_all.copy()
    g[rows, partner] -= 1.0
    g /= t * 2 * b
    grad = (g + g.T) @ w
    return float(losses.mean()), grad[:b], grad[b:]


def unbiased_reference_loss(
    anchor: np.ndarray, positive: np.ndarray, negative_set: np.ndarray, t: float
) -> float:
    """Single-positive contrastive loss with the negative expectation
    replaced by the mean over the supplied negative set.

    -log[ h(x, x+) / (h(x, x+) + q * mean_neg h) ] with q = len(negative_set).
    """
    _check_temperature(t)
    negative_set = np.atleast_2d(np.asarray(negative_set, dtype=np.float64))
    if negative_set.shape[0] == 0:
        raise ValueError("negative set must be non-empty")
    s_pos = np.dot(anchor, positive) / t
    s_neg = negative_set @ np.asarray(anchor, dtype=np.float64) / t
    # -log h+/(h+ + q*mean h-) = logsumexp([s+, s-..]) - s+
    stacked = np.concatenate([[s_pos], s_neg])
    m = stacked.max()
    return float(np.log(np.exp(stacked - m).sum()) + m - s_pos)
