"""Empirical checks of the loss-gap inequality and bound constants.

The supervised tuplet loss is provably no larger than the single-positive
reference loss on matched tuplets; the gap between the label-free objective
and the reference loss is bounded by a concentration expression whose
constants depend only on tuplet sizes and two population ratios. This
module samples synthetic tuplet configurations to exercise those claims and
estimates the false-negative ratio on real embeddings.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .losses import unbiased_reference_loss, pair_similarity
from .rng import generator

__all__ = [
    "SyntheticTupletSource",
    "BoundReport",
    "loss_gap_check",
    "tau0_estimate",
    "tau0_for_sample",
    "evaluate_bound",
    "concentration_bound",
    "scaling_constants",
    "hardness_histogram",
    "write_histogram_csv",
]

PAIR_SAMPLE_CAP = 20_000_000


@dataclass(frozen=True)
class SyntheticTupletSource:
    """Class-conditional Gaussian embeddings on the unit sphere.

    Class c has a fixed mean direction; samples are the normalized sum of
    the mean and isotropic noise. Uniform class priors: tau_plus = 1/K.
    """

    n_classes: int = 2
    dim: int = 8
    noise: float = 0.5
    m: int = 8
    q: int = 8
    seed: int = 0

    @property
    def tau_plus(self) -> float:
        return 1.0 / self.n_classes

    @property
    def tau_minus(self) -> float:
        return 1.0 - self.tau_plus

    def class_means(self) -> np.ndarray:
        rng = generator(self.seed, "class-means")
        means = rng.normal(size=(self.n_classes, self.dim))
        return means / np.linalg.norm(means, axis=1, keepdims=True)

    def sample(self, class_id: int, count: int, rng: np.random.Generator) -> np.ndarray:
        mean = self.class_means()[class_id]
        pts = mean + self.noise * rng.normal(size=(count, self.dim))
        return pts / np.linalg.norm(pts, axis=1, keepdims=True)


@dataclass
class BoundReport:
    m: int
    q: int
    tau_minus: float
    tau0_quantiles: tuple          # (Q1, median, Q3)
    bound_at_median: float
    observed_mean_gap: float
    per_sample_max_gap: float
    n_unstable: int = 0
    extra: dict = field(default_factory=dict)


def concentration_bound(m: int, q: int, tau0: float, tau_minus: float) -> float:
    """sqrt(2 (e^3 - e) tau0^2 pi / m) + sqrt(2 (e^3 - e) tau_minus^2 pi / q)."""
    if m < 1 or q < 1:
        raise ValueError("m and q must be >= 1")
    c = 2.0 * (np.e**3 - np.e) * np.pi
    return float(np.sqrt(c * tau0**2 / m) + np.sqrt(c * tau_minus**2 / q))


def scaling_constants(m: int, q: int):
    """(lambda, Gamma) = ((m+q)e / (m+q+e), log(m+q))."""
    k = m + q
    if k < 1:
        raise ValueError("m + q must be >= 1")
    return float(k * np.e / (k + np.e)), float(np.log(k))


def loss_gap_check(source: SyntheticTupletSource, n_trials: int, t: float, tolerance: float = 1e-12):
    """Per-trial check that the supervised tuplet loss never exceeds the
    single-positive reference loss on matched-size tuplets.

    Both tuplets share the designated positive; the reference loss sees the
    same q negatives plus m fresh ones so the tuplet sizes agree. Returns a
    dict with the max signed gap (expected <= 0) and the violation count.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    rng = generator(source.seed, "loss-gap-trials")
    max_gap = -np.inf
    violations = 0
    for _ in range(n_trials):
        cls = int(rng.integers(source.n_classes))
        other = [c for c in range(source.n_classes) if c != cls]
        anchor = source.sample(cls, 1, rng)[0]
        shared_pos = source.sample(cls, 1, rng)[0]
        positives = source.sample(cls, source.m, rng)
        neg_classes = rng.choice(other, size=source.q + source.m)
        negatives = np.vstack(
            [source.sample(int(c), 1, rng) for c in neg_classes]
        )
        loss_ref = unbiased_reference_loss(anchor, shared_pos, negatives, t)
        loss_sup = _anchor_dmat_loss(anchor, shared_pos, positives, negatives[: source.q], t)
        gap = loss_sup - loss_ref
        max_gap = max(max_gap, gap)
        if gap > tolerance:
            violations += 1
    return {"n_trials": n_trials, "max_gap": float(max_gap), "violations": violations}


def _anchor_dmat_loss(anchor, counterpart, positives, negatives, t) -> float:
    """Single-anchor supervised tuplet loss term."""
    h0 = pair_similarity(anchor, counterpart, t)
    s_pos = float(np.sum(np.exp(positives @ anchor / t))) if len(positives) else 0.0
    s_neg = float(np.sum(np.exp(negatives @ anchor / t))) if len(negatives) else 0.0
    return float(np.log1p(s_neg / (h0 + s_pos)))


def tau0_for_sample(
    z: np.ndarray,
    labels: np.ndarray,
    i: int,
    peers: np.ndarray,
    t: float = 1.0,
    denom_floor: float = 1e-15,
):
    """False-negative ratio for one sample given an explicit batch-positive
    subset ``peers`` (indices into z). Returns nan when the denominator
    vanishes."""
    z = np.asarray(z, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = z.shape[0]
    same = np.flatnonzero((labels == labels[i]) & (np.arange(n) != i))
    diff = np.flatnonzero(labels != labels[i])
    if same.size == 0 or diff.size == 0:
        return float("nan")
    tau_plus = float(np.mean(labels == labels[i]))
    mean_batch_pos = float(np.mean(np.exp(z[peers] @ z[i] / t)))
    mean_all_pos = float(np.mean(np.exp(z[same] @ z[i] / t)))
    mean_all_neg = float(np.mean(np.exp(z[diff] @ z[i] / t)))
    den = abs(mean_batch_pos - mean_all_pos)
    if den < denom_floor:
        return float("nan")
    return tau_plus * abs(mean_batch_pos - mean_all_neg) / den


def tau0_estimate(
    z: np.ndarray,
    labels: np.ndarray,
    t: float = 1.0,
    batch_size: int = 512,
    seed: int = 0,
    denom_floor: float = 1e-15,
):
    """Per-sample false-negative ratio and its quantiles.

    For each sample: the batch-positive mean similarity kernel over m
    same-class peers (m scaled to the expected same-class count in a
    training batch) is compared against the full-dataset class-conditional
    means; tau0 = class prior * |num| / |den|. Samples with a vanishing
    denominator are flagged unstable and excluded from the quantiles.
    """
    z = np.asarray(z, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = z.shape[0]
    rng = generator(seed, "tau0")
    classes, counts = np.unique(labels, return_counts=True)
    class_frac = {int(c): cnt / n for c, cnt in zip(classes, counts)}

    values = np.full(n, np.nan)
    unstable = 0
    h = np.exp(z @ z.T / t) if n <= 4000 else None
    for i in range(n):
        same = np.flatnonzero((labels == labels[i]) & (np.arange(n) != i))
        diff = np.flatnonzero(labels != labels[i])
        if same.size == 0 or diff.size == 0:
            unstable += 1
            continue
        if h is not None:
            h_i_same, h_i_diff = h[i, same], h[i, diff]
        else:
            h_i_same = np.exp(z[same] @ z[i] / t)
            h_i_diff = np.exp(z[diff] @ z[i] / t)
        tau_plus = class_frac[int(labels[i])]
        m = max(1, int(round((batch_size - 1) * tau_plus)))
        m = min(m, same.size)
        peers = rng.choice(same.size, size=m, replace=False)
        mean_batch_pos = float(h_i_same[peers].mean())
        mean_all_neg = float(h_i_diff.mean())
        mean_all_pos = float(h_i_same.mean())
        den = abs(mean_batch_pos - mean_all_pos)
        if den < denom_floor:
            unstable += 1
            continue
        values[i] = tau_plus * abs(mean_batch_pos - mean_all_neg) / den
    valid = values[np.isfinite(values)]
    quantiles = tuple(np.percentile(valid, [25, 50, 75])) if valid.size else (np.nan,) * 3
    return values, {"quantiles": quantiles, "n_unstable": unstable}


def evaluate_bound(source: SyntheticTupletSource, n_trials: int, t: float = 1.0) -> BoundReport:
    """Observed |reference loss - label-free loss| vs the concentration bound.

    Population kernel expectations are estimated from a large i.i.d. draw of
    the known class-conditional distributions.
    """
    rng = generator(source.seed, "bound-trials")
    pop_rng = generator(source.seed, "bound-population")
    pop = {
        c: source.sample(c, 20_000, pop_rng) for c in range(source.n_classes)
    }
    gaps = []
    tau0s = []
    for _ in range(n_trials):
        cls = int(rng.integers(source.n_classes))
        other = [c for c in range(source.n_classes) if c != cls]
        anchor = source.sample(cls, 1, rng)[0]
        counterpart = source.sample(cls, 1, rng)[0]
        positives = source.sample(cls, source.m, rng)
        neg_cls = rng.choice(other, size=source.q)
        negatives = np.vstack([source.sample(int(c), 1, rng) for c in neg_cls])

        h0 = pair_similarity(anchor, counterpart, t)
        s_pos = float(np.sum(np.exp(positives @ anchor / t)))
        s_neg = float(np.sum(np.exp(negatives @ anchor / t)))
        loss_i = float(np.log((s_pos + s_neg + h0) / h0))

        pop_neg = np.concatenate([pop[c] for c in other])
        e_neg = float(np.mean(np.exp(pop_neg @ anchor / t)))
        e_pos = float(np.mean(np.exp(pop[cls] @ anchor / t)))
        loss_ref = float(np.log((h0 + (source.m + source.q) * e_neg) / h0))
        gaps.append(abs(loss_ref - loss_i))

        mean_batch_pos = float(np.mean(np.exp(positives @ anchor / t)))
        den = abs(mean_batch_pos - e_pos)
        if den >= 1e-15:
            tau0s.append(source.tau_plus * abs(mean_batch_pos - e_neg) / den)
    tau0s = np.asarray(tau0s)
    q1, med, q3 = np.percentile(tau0s, [25, 50, 75])
    bound = concentration_bound(source.m, source.q, med, source.tau_minus)
    return BoundReport(
        m=source.m,
        q=source.q,
        tau_minus=source.tau_minus,
        tau0_quantiles=(float(q1), float(med), float(q3)),
        bound_at_median=bound,
        observed_mean_gap=float(np.mean(gaps)),
        per_sample_max_gap=float(np.max(gaps)),
        n_unstable=n_trials - tau0s.size,
    )


def hardness_histogram(
    rows: np.ndarray,
    labels: np.ndarray,
    n_bins: int = 40,
    seed: int = 0,
    pair_cap: int = PAIR_SAMPLE_CAP,
):
    """Normalized histogram of cosine similarity over different-label pairs.

    Enumerates all pairs up to ``pair_cap``, sampling uniformly beyond.
    Returns (bin_edges, fractions) with bins spanning [-1, 1].
    """
    rows = np.asarray(rows, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    unit = rows / norms
    n = rows.shape[0]
    total_pairs = n * (n - 1) // 2
    rng = generator(seed, "hardness-pairs")
    sims = []
    if total_pairs <= pair_cap:
        for i in range(n):
            diff = np.flatnonzero(labels[i + 1:] != labels[i]) + i + 1
            if diff.size:
                sims.append(unit[diff] @ unit[i])
    else:
        drawn = 0
        while drawn < pair_cap:
            batch = min(1_000_000, pair_cap - drawn)
            u = rng.integers(0, n, size=batch)
            v = rng.integers(0, n, size=batch)
            keep = (u != v) & (labels[u] != labels[v])
            sims.append(np.sum(unit[u[keep]] * unit[v[keep]], axis=1))
            drawn += batch
    sims = np.concatenate(sims) if sims else np.empty(0)
    edges = np.linspace(-1.0, 1.0, n_bins + 1)
    counts, _ = np.histogram(np.clip(sims, -1.0, 1.0), bins=edges)
    fractions = counts / counts.sum() if counts.sum() else counts.astype(np.float64)
    return edges, fractions


def band_mass(edges: np.ndarray, fractions: np.ndarray, lo: float, hi: float) -> float:
    """Histogram mass between similarity lo and hi (by bin centers)."""
    centers = 0.5 * (edges[:-1] + edges[1:])
    return float(fractions[(centers >= lo) & (centers < hi)].sum())


def write_histogram_csv(path, edges: np.ndarray, fractions: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right", "fraction"])
        for left, right, frac in zip(edges[:-1], edges[1:], fractions):
            writer.writerow([f"{left:.6f}", f"{right:.6f}", f"{frac:.10f}"])
