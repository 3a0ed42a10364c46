import os
from pathlib import Path

import numpy as np
import pytest

from graphdml.graph import AttributedGraph, _csr_from_pairs


def planted_graph(n=120, k=3, d=30, p_in=0.12, p_out=0.01, seed=0):
    """Planted-partition graph with class-shifted random features."""
    r = np.random.default_rng(seed)
    labels = np.repeat(np.arange(k), n // k)
    labels = np.r_[labels, r.integers(0, k, size=n - labels.size)]
    pairs = []
    for u in range(n):
        for v in range(u + 1, n):
            if r.random() < (p_in if labels[u] == labels[v] else p_out):
                pairs.append((u, v))
    offsets, targets, _ = _csr_from_pairs(n, np.asarray(pairs))
    shift = r.random((k, d)) * 3.0
    feats = r.random((n, d)) + 0.3 * shift[labels]
    return AttributedGraph(n, offsets, targets, feats, labels=labels, n_classes=k)


def random_graph(n, d=6, p=0.1, seed=0, connected=True):
    """Erdos-Renyi style graph, optionally chained so nothing is isolated."""
    r = np.random.default_rng(seed)
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n) if r.random() < p]
    if connected:
        pairs += [(i, i + 1) for i in range(n - 1)]
    offsets, targets, _ = _csr_from_pairs(n, np.asarray(pairs))
    return AttributedGraph(n, offsets, targets, r.random((n, d)))


def dataset_dir() -> Path:
    return Path(os.environ.get("GRAPHDML_DATA_DIR", Path(__file__).parent / "data"))


def require_dataset(name: str) -> Path:
    """Path to an on-disk benchmark dataset, or skip with an explanation.

    Expected layout: <data-dir>/<name>/{features.txt|gfm8, edges.txt, labels.txt}.
    The sandbox has no general network access and the package mirror carries
    no graph-dataset distributions, so these files cannot be fetched here.
    """
    base = dataset_dir() / name
    if not (base / "edges.txt").exists():
        pytest.skip(
            f"{name} dataset files not present under {base} "
            "(no network access to fetch them in this environment); "
            "see README for the expected file layout"
        )
    return base


@pytest.fixture
def small_graph():
    return planted_graph(n=60, k=2, d=10, seed=1)
