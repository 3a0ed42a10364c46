"""Attributed-graph storage, ingestion, and synthetic generation.

Graphs are undirected and simple, stored as CSR with every edge present in
both directions; node features ride along as a dense float64 matrix, labels
as an optional integer vector.
"""

import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .matrixio import FormatError, read_matrix, write_matrix_binary, write_matrix_text
from .rng import generator

__all__ = [
    "AttributedGraph",
    "GraphValidationError",
    "load_graph",
    "write_graph",
    "augmented_degrees",
    "gen_synthetic",
]

log = logging.getLogger(__name__)


class GraphValidationError(ValueError):
    pass


@dataclass
class AttributedGraph:
    """Undirected simple graph with dense node features and optional labels."""

    n_nodes: int
    csr_offsets: np.ndarray      # int64, length n_nodes + 1
    csr_targets: np.ndarray      # int64, both directions, no self-loops/dups
    features: np.ndarray         # float64, n_nodes x d_in
    labels: np.ndarray | None = None
    n_classes: int | None = None

    def __post_init__(self):
        self.csr_offsets = np.asarray(self.csr_offsets, dtype=np.int64)
        self.csr_targets = np.asarray(self.csr_targets, dtype=np.int64)
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.n_classes is None:
                self.n_classes = int(self.labels.max()) + 1 if self.labels.size else 0
        self.validate()

    # --- basic views -----------------------------------------------------

    @property
    def n_edges(self) -> int:
        """Number of undirected edges."""
        return self.csr_targets.size // 2

    @property
    def d_in(self) -> int:
        return self.features.shape[1]

    def neighbors(self, u: int) -> np.ndarray:
        return self.csr_targets[self.csr_offsets[u]:self.csr_offsets[u + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.csr_offsets)

    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(self.csr_targets.size, dtype=np.float64)
        return sp.csr_matrix(
            (data, self.csr_targets, self.csr_offsets),
            shape=(self.n_nodes, self.n_nodes),
        )

    def edge_array(self) -> np.ndarray:
        """Unique undirected edges as an (E, 2) array with u < v."""
        src = np.repeat(np.arange(self.n_nodes), self.degrees())
        mask = src < self.csr_targets
        return np.column_stack([src[mask], self.csr_targets[mask]])

    # --- invariants -------------------------------------------------------

    def validate(self) -> None:
        n = self.n_nodes
        if self.csr_offsets.size != n + 1 or self.csr_offsets[0] != 0:
            raise GraphValidationError("bad CSR offsets")
        if np.any(np.diff(self.csr_offsets) < 0):
            raise GraphValidationError("CSR offsets not monotone")
        if self.csr_targets.size and (
            self.csr_targets.min() < 0 or self.csr_targets.max() >= n
        ):
            raise GraphValidationError("CSR target out of range")
        if self.features.shape[0] != n:
            raise GraphValidationError(
                f"feature rows ({self.features.shape[0]}) != n_nodes ({n})"
            )
        if self.labels is not None:
            if self.labels.size != n:
                raise GraphValidationError(
                    f"label count ({self.labels.size}) != n_nodes ({n})"
                )
            if self.labels.size:
                if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
                    raise GraphValidationError("label outside [0, K)")
                present = np.unique(self.labels)
                if present.size != self.n_classes:
                    raise GraphValidationError("some class in [0, K) never occurs")
        src = np.repeat(np.arange(n), np.diff(self.csr_offsets))
        if np.any(src == self.csr_targets):
            raise GraphValidationError("self-loop stored in CSR")

    def check_symmetry(self, rng: np.random.Generator | None = None) -> None:
        """Verify (u,v) present iff (v,u) present.

        Exhaustive for n <= 1e4, sampled (1e4 half-edges) above that.
        """
        adj = self.adjacency()
        if self.n_nodes <= 10_000:
            if (adj != adj.T).nnz != 0:
                raise GraphValidationError("adjacency not symmetric")
            return
        rng = rng or np.random.default_rng(0)
        src = np.repeat(np.arange(self.n_nodes), self.degrees())
        idx = rng.choice(src.size, size=min(10_000, src.size), replace=False)
        for u, v in zip(src[idx], self.csr_targets[idx]):
            if u not in self.neighbors(v):
                raise GraphValidationError(f"edge ({u},{v}) has no reverse")


@dataclass
class DegreeView:
    """Per-node degrees of the self-loop-augmented adjacency A + I."""

    aug_degrees: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))

    def __iter__(self):
        return iter(self.aug_degrees)

    def __len__(self):
        return self.aug_degrees.size

    def __getitem__(self, i):
        return self.aug_degrees[i]


def augmented_degrees(g: AttributedGraph) -> DegreeView:
    """Degrees after adding a self-loop to every node (always >= 1)."""
    return DegreeView(aug_degrees=g.degrees() + 1)


# --- construction ----------------------------------------------------------


def _csr_from_pairs(n_nodes: int, pairs: np.ndarray):
    """Symmetric deduplicated CSR from an (E, 2) array of endpoints.

    Self-loops and duplicate (undirected) listings are dropped; the number
    dropped is reported via a counted warning.
    """
    if pairs.size == 0:
        return np.zeros(n_nodes + 1, dtype=np.int64), np.empty(0, dtype=np.int64), 0
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    loops = int(np.count_nonzero(lo == hi))
    lo, hi = lo[lo != hi], hi[lo != hi]
    keys = np.unique(lo * np.int64(n_nodes) + hi)
    dropped = loops + (pairs.shape[0] - loops - keys.size)
    lo, hi = keys // n_nodes, keys % n_nodes
    src = np.concatenate([lo, hi])
    dst = np.concatenate([hi, lo])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    offsets = np.zeros(n_nodes + 1, dtype=np.int64)
    np.add.at(offsets, src + 1, 1)
    np.cumsum(offsets, out=offsets)
    return offsets, dst, dropped


def _read_edges(path: Path) -> list[tuple[int, int]]:
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.split()
            if len(toks) != 2:
                raise FormatError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            try:
                pairs.append((int(toks[0]), int(toks[1])))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-integer node id") from None
    return pairs


def _read_labels(path: Path) -> np.ndarray:
    vals = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                vals.append(int(line))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-integer label") from None
    return np.asarray(vals, dtype=np.int64)


def load_graph(features_path, edges_path, labels_path=None) -> AttributedGraph:
    """Build an AttributedGraph from on-disk feature/edge/label files.

    Edge direction in the file is ignored; duplicates and self-loops are
    silently dropped (with a counted warning).
    """
    features = read_matrix(features_path)
    n_nodes = features.shape[0]
    pairs = np.asarray(_read_edges(Path(edges_path)), dtype=np.int64).reshape(-1, 2)
    if pairs.size and (pairs.min() < 0 or pairs.max() >= n_nodes):
        bad = pairs[(pairs < 0).any(1) | (pairs >= n_nodes).any(1)][0]
        raise GraphValidationError(
            f"edge endpoint {bad.tolist()} out of range [0, {n_nodes})"
        )
    offsets, targets, dropped = _csr_from_pairs(n_nodes, pairs)
    if dropped:
        warnings.warn(f"dropped {dropped} duplicate/self-loop edge lines", stacklevel=2)
    labels = _read_labels(Path(labels_path)) if labels_path is not None else None
    return AttributedGraph(n_nodes, offsets, targets, features, labels)


def write_graph(g: AttributedGraph, features_path, edges_path, labels_path=None) -> None:
    """Persist a graph in formats accepted by :func:`load_graph`; the
    feature format follows the path suffix (.gfm8/.gfm1 binary, else text)."""
    suffix = Path(features_path).suffix
    if suffix in (".gfm8", ".gfm1", ".gfm"):
        write_matrix_binary(features_path, g.features, dtype="f4" if suffix == ".gfm1" else "f8")
    else:
        write_matrix_text(features_path, g.features)
    with open(edges_path, "w") as fh:
        for u, v in g.edge_array():
            fh.write(f"{u} {v}\n")
    if labels_path is not None and g.labels is not None:
        with open(labels_path, "w") as fh:
            fh.writelines(f"{y}\n" for y in g.labels)


# --- synthetic graphs -------------------------------------------------------

# Recursive-partition quadrant probabilities; skewed to mimic power-law-ish
# degree distributions of benchmark generators.
RMAT_PROBS = (0.57, 0.19, 0.19, 0.05)


def gen_synthetic(
    n_nodes: int,
    edge_factor: int = 20,
    d_in: int = 1000,
    seed: int = 0,
    probs: tuple = RMAT_PROBS,
) -> AttributedGraph:
    """Random skewed graph with ~edge_factor * n_nodes unique edges.

    Edges are drawn by recursive quadrant partitioning over the next
    power-of-two id space; self-loops, duplicates, and out-of-range ids are
    rejected and resampled. Features are uniform in [0, 1).
    """
    if n_nodes < 1:
        raise GraphValidationError("n_nodes must be >= 1")
    target = edge_factor * n_nodes if n_nodes > 1 else 0
    capacity = n_nodes * (n_nodes - 1) // 2
    if target > capacity:
        raise GraphValidationError(
            f"{target} edges requested but simple-graph capacity is {capacity}"
        )
    rng = generator(seed, "synthetic-edges")
    levels = max(1, int(np.ceil(np.log2(n_nodes)))) if n_nodes > 1 else 1
    p = np.asarray(probs, dtype=np.float64)
    p = p / p.sum()
    seen: set[int] = set()
    edges: list[int] = []
    while len(edges) < target:
        batch = max(1024, 2 * (target - len(edges)))
        quad = rng.choice(4, size=(batch, levels), p=p)
        bit = np.int64(1) << np.arange(levels - 1, -1, -1, dtype=np.int64)
        u = ((quad >> 1) * bit).sum(axis=1)
        v = ((quad & 1) * bit).sum(axis=1)
        ok = (u != v) & (u < n_nodes) & (v < n_nodes)
        lo = np.minimum(u[ok], v[ok])
        hi = np.maximum(u[ok], v[ok])
        for key in lo * np.int64(n_nodes) + hi:
            if key not in seen:
                seen.add(int(key))
                edges.append(int(key))
                if len(edges) == target:
                    break
    keys = np.asarray(edges, dtype=np.int64)
    pairs = np.column_stack([keys // n_nodes, keys % n_nodes])
    offsets, targets, _ = _csr_from_pairs(n_nodes, pairs)
    features = generator(seed, "synthetic-features").random((n_nodes, d_in))
    return AttributedGraph(n_nodes, offsets, targets, features)
