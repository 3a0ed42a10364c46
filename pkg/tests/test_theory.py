import numpy as np
import pytest

from graphdml.rng import generator
from graphdml.theory import (SyntheticTupletSource, band_mass, loss_gap_check,
                             evaluate_bound, hardness_histogram, tau0_estimate,
                             tau0_for_sample, concentration_bound, scaling_constants,
                             write_histogram_csv)


def test_loss_gap_check_clean_on_gaussian_source():
    src = SyntheticTupletSource(m=8, q=8, seed=0)
    out = loss_gap_check(src, n_trials=200, t=1.0)
    assert out["violations"] == 0
    assert out["max_gap"] <= 1e-12


def test_loss_gap_check_random_tuplet_sizes():
    # 4-class source, per-trial tuplet sizes drawn in [1, 32]
    rng = np.random.default_rng(3)
    for trial in range(50):
        m, q = int(rng.integers(1, 33)), int(rng.integers(1, 33))
        src = SyntheticTupletSource(n_classes=4, m=m, q=q, seed=trial)
        out = loss_gap_check(src, n_trials=5, t=0.8)
        assert out["violations"] == 0


def test_concentration_bound_hand_value():
    # m=q=1, tau0=tau_minus=1: 2 sqrt(2 (e^3-e) pi) ~ 20.90
    val = concentration_bound(1, 1, 1.0, 1.0)
    assert val == pytest.approx(2 * np.sqrt(2 * (np.e**3 - np.e) * np.pi), abs=1e-12)
    assert val == pytest.approx(20.90, abs=0.01)


def test_concentration_bound_domain():
    with pytest.raises(ValueError):
        concentration_bound(0, 4, 1.0, 1.0)
    with pytest.raises(ValueError):
        concentration_bound(4, 0, 1.0, 1.0)


def test_concentration_bound_shrinks_with_sample_sizes():
    small = concentration_bound(8, 8, 2.0, 0.5)
    big = concentration_bound(128, 128, 2.0, 0.5)
    assert big < small


def test_scaling_constants():
    lam, gamma = scaling_constants(510, 512)
    assert gamma == pytest.approx(np.log(1022), abs=1e-12)
    assert gamma == pytest.approx(6.9295, abs=1e-4)
    assert lam == pytest.approx(1022 * np.e / (1022 + np.e), abs=1e-12)
    with pytest.raises(ValueError):
        scaling_constants(0, 0)


def test_tau0_hand_oracle():
    # 6 points, 2 classes; peers chosen explicitly so the ratio can be
    # evaluated spreadsheet-style from pair similarities
    z = np.array([
        [1.0, 0.0], [0.9, np.sqrt(1 - 0.81)], [0.8, -0.6],
        [-1.0, 0.0], [-0.9, np.sqrt(1 - 0.81)], [-0.7, -np.sqrt(1 - 0.49)],
    ])
    labels = np.array([0, 0, 0, 1, 1, 1])
    i, peers, t = 0, np.array([1]), 1.0
    h = np.exp(z @ z[0] / t)
    tau_plus = 0.5
    num = abs(h[1] - np.mean(h[3:]))
    den = abs(h[1] - np.mean(h[1:3]))
    expected = tau_plus * num / den
    assert tau0_for_sample(z, labels, i, peers, t) == pytest.approx(expected, abs=1e-12)


def test_tau0_unstable_denominator_flagged():
    # all same-class points identical: batch mean equals the class mean
    z = np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    labels = np.array([0, 0, 0, 1])
    assert np.isnan(tau0_for_sample(z, labels, 0, np.array([1]), 1.0))


def test_tau0_estimate_quantiles_ordered():
    rng = np.random.default_rng(0)
    z = rng.normal(size=(80, 8))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    labels = rng.integers(0, 3, size=80)
    values, stats = tau0_estimate(z, labels, t=1.0, batch_size=16, seed=0)
    q1, med, q3 = stats["quantiles"]
    assert q1 <= med <= q3
    assert values.shape == (80,)
    finite = values[np.isfinite(values)]
    assert finite.size + stats["n_unstable"] == 80
    assert np.all(finite >= 0)


def test_tau0_estimate_deterministic():
    rng = np.random.default_rng(1)
    z = rng.normal(size=(50, 6))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    labels = rng.integers(0, 2, size=50)
    a, _ = tau0_estimate(z, labels, batch_size=8, seed=4)
    b, _ = tau0_estimate(z, labels, batch_size=8, seed=4)
    assert np.array_equal(a, b, equal_nan=True)


def test_bound_report_fields_consistent():
    rep = evaluate_bound(SyntheticTupletSource(m=8, q=8, seed=1), n_trials=100, t=1.0)
    assert rep.m == 8 and rep.q == 8
    q1, med, q3 = rep.tau0_quantiles
    assert q1 <= med <= q3
    assert rep.observed_mean_gap <= rep.per_sample_max_gap
    assert rep.bound_at_median == concentration_bound(8, 8, med, rep.tau_minus)


def test_hardness_histogram_normalized_and_bounded():
    rng = np.random.default_rng(2)
    rows = rng.normal(size=(60, 5))
    labels = rng.integers(0, 3, size=60)
    edges, fractions = hardness_histogram(rows, labels, n_bins=20)
    assert edges.shape == (21,) and fractions.shape == (20,)
    assert fractions.sum() == pytest.approx(1.0, abs=1e-12)
    assert edges[0] == -1.0 and edges[-1] == 1.0


def test_hardness_histogram_excludes_same_label_pairs():
    # two identical same-label points and one opposite-label point at -x:
    # only cross-label pairs (cos = -1) are counted
    rows = np.array([[1.0, 0.0], [1.0, 0.0], [-1.0, 0.0]])
    labels = np.array([0, 0, 1])
    edges, fractions = hardness_histogram(rows, labels, n_bins=4)
    assert fractions[0] == 1.0  # all mass in the [-1, -0.5) bin


def test_hardness_histogram_sampling_cap():
    rng = np.random.default_rng(3)
    rows = rng.normal(size=(300, 4))
    labels = rng.integers(0, 2, size=300)
    _, sampled = hardness_histogram(rows, labels, n_bins=10, pair_cap=1000)
    assert sampled.sum() == pytest.approx(1.0, abs=1e-12)


def test_band_mass_sums_bins():
    edges = np.linspace(-1, 1, 5)
    fractions = np.array([0.1, 0.2, 0.3, 0.4])
    assert band_mass(edges, fractions, 0.0, 1.01) == pytest.approx(0.7)


def test_histogram_csv_layout(tmp_path):
    edges = np.linspace(-1, 1, 4)
    fractions = np.array([0.5, 0.25, 0.25])
    path = tmp_path / "hist.csv"
    write_histogram_csv(path, edges, fractions)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "bin_left,bin_right,fraction"
    assert len(lines) == 4


def test_source_unit_norm_and_priors():
    src = SyntheticTupletSource(n_classes=4, seed=5)
    assert src.tau_plus == 0.25 and src.tau_minus == 0.75
    pts = src.sample(2, 50, generator(5, "check"))
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
