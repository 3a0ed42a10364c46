"""Downstream tasks: clustering, node classification, link prediction.

Conventions fixed here (the literature leaves them open): clustering
accuracy and macro-F1 use the Hungarian one-to-one cluster/class matching;
NMI normalizes by the arithmetic mean of entropies; conductance is the
unweighted mean over clusters of cut / min(vol, complement vol). The four
label metrics live in [0, 1] and are reported x100 alongside modularity and
conductance, which are also x100.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.cluster import KMeans
from sklearn.metrics import (
    adjusted_rand_score,
    average_precision_score,
    f1_score,
    normalized_mutual_info_score,
)

from .graph import AttributedGraph, _csr_from_pairs
from .rng import generator

__all__ = [
    "ClusterResult",
    "EdgeSplit",
    "LinearClassifier",
    "kmeans",
    "clustering_metrics",
    "fit_linear_classifier",
    "split_edges",
    "link_prediction_eval",
    "auc_score",
    "average_precision",
    "write_metrics_report",
]


# --- clustering --------------------------------------------------------------


def kmeans(z: np.ndarray, k: int, n_restarts: int = 10, max_iter: int = 300, seed: int = 0) -> np.ndarray:
    """Lloyd iterations from k-means++ seeding; best of n_restarts by inertia."""
    z = np.asarray(z, dtype=np.float64)
    if k < 1 or k > z.shape[0]:
        raise ValueError(f"k={k} invalid for {z.shape[0]} points")
    rng = generator(seed, "kmeans")
    model = KMeans(
        n_clusters=k,
        n_init=n_restarts,
        max_iter=max_iter,
        random_state=int(rng.integers(2**31 - 1)),
    )
    return model.fit_predict(z)


def hungarian_mapping(assignments: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Cluster-id -> class-id permutation maximizing agreement."""
    k = int(max(assignments.max(), labels.max())) + 1
    contingency = np.zeros((k, k), dtype=np.int64)
    np.add.at(contingency, (assignments, labels), 1)
    rows, cols = linear_sum_assignment(contingency, maximize=True)
    mapping = np.arange(k)
    mapping[rows] = cols
    return mapping


def modularity(g: AttributedGraph, assignments: np.ndarray) -> float:
    """Q = sum_c (e_cc - a_c^2) over intra-cluster edge and degree fractions."""
    m2 = float(g.csr_targets.size)   # 2|E|
    if m2 == 0.0:
        return 0.0
    src = np.repeat(np.arange(g.n_nodes), g.degrees())
    intra = assignments[src] == assignments[g.csr_targets]
    k = int(assignments.max()) + 1
    e_cc = np.bincount(assignments[src][intra], minlength=k) / m2
    a_c = np.bincount(assignments[src], minlength=k) / m2
    return float(np.sum(e_cc - a_c**2))


def conductance(g: AttributedGraph, assignments: np.ndarray) -> float:
    """Unweighted mean over clusters of cut(S) / min(vol S, vol V\\S)."""
    src = np.repeat(np.arange(g.n_nodes), g.degrees())
    total_vol = float(g.csr_targets.size)
    k = int(assignments.max()) + 1
    cut = np.bincount(
        assignments[src][assignments[src] != assignments[g.csr_targets]], minlength=k
    ).astype(np.float64)
    vol = np.bincount(assignments[src], minlength=k).astype(np.float64)
    vals = []
    for c in range(k):
        denom = min(vol[c], total_vol - vol[c])
        vals.append(0.0 if denom == 0.0 else cut[c] / denom)
    return float(np.mean(vals)) if vals else 0.0


@dataclass
class ClusterResult:
    assignments: np.ndarray
    metrics: dict = field(default_factory=dict)


def clustering_metrics(assignments: np.ndarray, labels: np.ndarray | None, g: AttributedGraph) -> dict:
    """Six clustering metrics, all on the x100 (percent) scale.

    Degenerate single-cluster/single-class NMI is defined as 0.
    """
    assignments = np.asarray(assignments, dtype=np.int64)
    out = {}
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
        mapping = hungarian_mapping(assignments, labels)
        matched = mapping[assignments]
        out["accuracy"] = float(np.mean(matched == labels)) * 100.0
        if np.unique(labels).size < 2 or np.unique(assignments).size < 2:
            nmi = 0.0
        else:
            nmi = normalized_mutual_info_score(labels, assignments, average_method="arithmetic")
        out["nmi"] = float(nmi) * 100.0
        out["ari"] = float(adjusted_rand_score(labels, assignments)) * 100.0
        out["macro_f1"] = float(f1_score(labels, matched, average="macro")) * 100.0
    out["modularity"] = modularity(g, assignments) * 100.0
    out["conductance"] = conductance(g, assignments) * 100.0
    return out


# --- node classification ------------------------------------------------------


@dataclass
class LinearClassifier:
    weight: np.ndarray   # K x d
    bias: np.ndarray     # K


def stratified_split(labels: np.ndarray, fractions=(0.1, 0.1), seed: int = 0):
    """Per-class random split into (train, val, test) index arrays."""
    rng = generator(seed, "classify-split")
    train, val, test = [], [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        n_tr = max(1, int(round(fractions[0] * idx.size)))
        n_va = max(1, int(round(fractions[1] * idx.size)))
        if n_tr + n_va >= idx.size:
            raise ValueError(f"class {c} too small for a {fractions} split")
        train.append(idx[:n_tr])
        val.append(idx[n_tr:n_tr + n_va])
        test.append(idx[n_tr + n_va:])
    return (np.sort(np.concatenate(train)),
            np.sort(np.concatenate(val)),
            np.sort(np.concatenate(test)))


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=1, keepdims=True)


def fit_linear_classifier(
    z: np.ndarray,
    labels: np.ndarray,
    seed: int = 0,
    n_epochs: int = 500,
    lr: float = 0.05,
    weight_decay: float = 1e-4,
    fractions=(0.1, 0.1),
):
    """Multinomial softmax regression on frozen embeddings.

    Stratified 10/10/80 split, full-batch gradient descent, the epoch with
    the best validation accuracy is kept; returns (classifier, test accuracy
    in [0, 1]).
    """
    z = np.asarray(z, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    k = int(labels.max()) + 1
    tr, va, te = stratified_split(labels, fractions=fractions, seed=seed)
    w = np.zeros((k, z.shape[1]))
    b = np.zeros(k)
    onehot = np.eye(k)[labels[tr]]
    best = (-1.0, w.copy(), b.copy())
    for _ in range(n_epochs):
        probs = _softmax(z[tr] @ w.T + b)
        diff = (probs - onehot) / tr.size
        gw = diff.T @ z[tr] + weight_decay * w
        gb = diff.sum(axis=0)
        w -= lr * gw
        b -= lr * gb
        val_acc = float(np.mean(np.argmax(z[va] @ w.T + b, axis=1) == labels[va]))
        if val_acc > best[0]:
            best = (val_acc, w.copy(), b.copy())
    _, w, b = best
    clf = LinearClassifier(weight=w, bias=b)
    test_acc = float(np.mean(np.argmax(z[te] @ w.T + b, axis=1) == labels[te]))
    return clf, test_acc


# --- link prediction -----------------------------------------------------------


@dataclass
class EdgeSplit:
    train_graph: AttributedGraph
    val_pairs: np.ndarray    # (n, 2)
    val_labels: np.ndarray   # 1 = true edge, 0 = non-edge
    test_pairs: np.ndarray
    test_labels: np.ndarray


def _sample_nonedges(g: AttributedGraph, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform non-edges by rejection; never collides with any original edge."""
    existing = set()
    src = np.repeat(np.arange(g.n_nodes), g.degrees())
    for u, v in zip(src, g.csr_targets):
        if u < v:
            existing.add(u * g.n_nodes + v)
    out = []
    while len(out) < count:
        u, v = rng.integers(0, g.n_nodes, size=2)
        if u == v:
            continue
        lo, hi = (u, v) if u < v else (v, u)
        key = int(lo) * g.n_nodes + int(hi)
        if key in existing:
            continue
        existing.add(key)
        out.append((lo, hi))
    return np.asarray(out, dtype=np.int64).reshape(-1, 2)


def split_edges(g: AttributedGraph, val_frac: float = 0.05, test_frac: float = 0.10, seed: int = 0) -> EdgeSplit:
    """Hold out floor(frac * |E|) undirected edges for val/test and pair them
    with equally many sampled non-edges; node attributes stay with the
    pruned train graph."""
    edges = g.edge_array()
    n_val = int(np.floor(val_frac * edges.shape[0]))
    n_test = int(np.floor(test_frac * edges.shape[0]))
    if edges.shape[0] - n_val - n_test <= 0 and edges.shape[0] > 0:
        raise ValueError("split would leave the train graph without edges")
    rng = generator(seed, "edge-split")
    order = rng.permutation(edges.shape[0])
    val_pos = edges[order[:n_val]]
    test_pos = edges[order[n_val:n_val + n_test]]
    train_edges = edges[order[n_val + n_test:]]
    offsets, targets, _ = _csr_from_pairs(g.n_nodes, train_edges)
    train_graph = AttributedGraph(
        g.n_nodes, offsets, targets, g.features, labels=g.labels, n_classes=g.n_classes
    )
    val_neg = _sample_nonedges(g, n_val, rng)
    test_neg = _sample_nonedges(g, n_test, rng)
    return EdgeSplit(
        train_graph=train_graph,
        val_pairs=np.vstack([val_pos, val_neg]) if n_val else np.empty((0, 2), np.int64),
        val_labels=np.r_[np.ones(n_val), np.zeros(n_val)].astype(np.int64),
        test_pairs=np.vstack([test_pos, test_neg]) if n_test else np.empty((0, 2), np.int64),
        test_labels=np.r_[np.ones(n_test), np.zeros(n_test)].astype(np.int64),
    )


def auc_score(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney AUC with ties counted 0.5."""
    from scipy.stats import rankdata

    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("need both positive and negative pairs")
    ranks = rankdata(scores)
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def average_precision(scores: np.ndarray, labels: np.ndarray) -> float:
    """Area under precision-recall by step interpolation over the ranking."""
    if int(np.sum(labels)) == 0 or int(np.sum(labels)) == len(labels):
        raise ValueError("need both positive and negative pairs")
    return float(average_precision_score(labels, scores))


def link_prediction_eval(z: np.ndarray, pairs: np.ndarray, labels: np.ndarray):
    """Score pairs by sigmoid(z_u . z_v), return (AUC, AP)."""
    if pairs.shape[0] == 0:
        raise ValueError("empty evaluation set")
    dots = np.sum(z[pairs[:, 0]] * z[pairs[:, 1]], axis=1)
    scores = 1.0 / (1.0 + np.exp(-dots))
    return auc_score(scores, labels), average_precision(scores, labels)


# --- reporting -------------------------------------------------------------------


def write_metrics_report(path, task: str, dataset: str, config_hash: str, seed: int, metrics: dict) -> None:
    """MetricsReport JSON with a stable key order for diffability.

    Wall-clock timing is deliberately kept out of this file (it lives in the
    run manifest) so identical configs reproduce byte-identical reports.
    """
    report = {
        "task": task,
        "dataset": dataset,
        "config_hash": config_hash,
        "seed": seed,
        "metrics": {k: metrics[k] for k in sorted(metrics)},
    }
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=False)
        fh.write("\n")
