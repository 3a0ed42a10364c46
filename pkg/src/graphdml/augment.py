"""Column-masking augmentation for feature batches."""

from dataclasses import dataclass

import numpy as np

from .rng import generator

__all__ = ["AugmentConfig", "mask_columns", "mask_indices"]


@dataclass(frozen=True)
class AugmentConfig:
    mask_fraction: float = 0.0
    n_view: int = 1
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.mask_fraction <= 1.0):
            raise ValueError(f"mask_fraction must be in [0, 1], got {self.mask_fraction}")
        if self.n_view < 1:
            raise ValueError(f"n_view must be >= 1, got {self.n_view}")


def mask_indices(n_cols: int, cfg: AugmentConfig, view_index: int, step_nonce: int) -> np.ndarray:
    """floor(mask_fraction * n_cols) distinct columns from the stream keyed
    by (seed, view_index, step_nonce); deterministic and thread-safe."""
    k = int(np.floor(cfg.mask_fraction * n_cols))
    rng = generator(cfg.seed, "mask", view_index, step_nonce)
    return rng.choice(n_cols, size=k, replace=False)


def mask_columns(batch: np.ndarray, cfg: AugmentConfig, view_index: int, step_nonce: int) -> np.ndarray:
    """Copy of the batch with the keyed column subset zeroed out."""
    out = np.array(batch, dtype=np.float64, copy=True)
    cols = mask_indices(batch.shape[1], cfg, view_index, step_nonce)
    out[:, cols] = 0.0
    return out
