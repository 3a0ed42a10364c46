"""Named hyperparameter presets for the eight benchmark datasets.

Each preset bundles the training, augmentation, and filter settings that a
dataset is normally run with. Keys match the flat config-file vocabulary
used by the command-line tool (learning_rate, architecture, tau, n_epochs,
mask_fraction, view_num, weight_decay, batch_size, alpha, r_max, rrz).
"""

__all__ = ["PRESETS", "preset_names", "get_preset", "parse_architecture"]

PRESETS = {
    "acm": {
        "learning_rate": 1e-3, "architecture": "256-128", "tau": 2.0,
        "n_epochs": 400, "mask_fraction": 0.6, "view_num": 4,
        "weight_decay": 0.02, "batch_size": 512,
        "alpha": 0.4, "r_max": 1e-5, "rrz": 0.4,
    },
    "dblp": {
        "learning_rate": 1e-3, "architecture": "256-256", "tau": 2.0,
        "n_epochs": 300, "mask_fraction": 0.2, "view_num": 4,
        "weight_decay": 0.05, "batch_size": 512,
        "alpha": 0.6, "r_max": 1e-4, "rrz": 0.5,
    },
    "cora": {
        "learning_rate": 1e-4, "architecture": "256-128", "tau": 1.0,
        "n_epochs": 300, "mask_fraction": 0.08, "view_num": 3,
        "weight_decay": 0.02, "batch_size": 512,
        "alpha": 0.1, "r_max": 1e-6, "rrz": 0.4,
    },
    "citeseer": {
        "learning_rate": 1e-4, "architecture": "256-512", "tau": 4.0,
        "n_epochs": 400, "mask_fraction": 0.2, "view_num": 4,
        "weight_decay": 0.05, "batch_size": 512,
        "alpha": 0.4, "r_max": 1e-5, "rrz": 0.4,
    },
    "pubmed": {
        "learning_rate": 1e-5, "architecture": "256-256", "tau": 0.8,
        "n_epochs": 200, "mask_fraction": 0.2, "view_num": 2,
        "weight_decay": 0.05, "batch_size": 512,
        "alpha": 0.01, "r_max": 1e-5, "rrz": 0.4,
    },
    "amazon_photo": {
        "learning_rate": 8e-5, "architecture": "512-512", "tau": 2.0,
        "n_epochs": 500, "mask_fraction": 0.1, "view_num": 4,
        "weight_decay": 0.1, "batch_size": 256,
        "alpha": 0.03, "r_max": 1e-6, "rrz": 0.5,
    },
    "coauthor_cs": {
        "learning_rate": 1e-5, "architecture": "256-512", "tau": 1.2,
        "n_epochs": 400, "mask_fraction": 0.4, "view_num": 5,
        "weight_decay": 0.05, "batch_size": 512,
        "alpha": 0.1, "r_max": 1e-5, "rrz": 0.4,
    },
    "coauthor_phy": {
        "learning_rate": 2e-5, "architecture": "256-512", "tau": 0.5,
        "n_epochs": 400, "mask_fraction": 0.1, "view_num": 5,
        "weight_decay": 0.05, "batch_size": 512,
        "alpha": 0.08, "r_max": 1e-5, "rrz": 0.4,
    },
}


def preset_names():
    return sorted(PRESETS)


def get_preset(name: str) -> dict:
    key = name.lower().replace("-", "_")
    if key not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return dict(PRESETS[key])


def parse_architecture(arch: str):
    """'256-128' -> (256, 128)."""
    try:
        dims = tuple(int(p) for p in str(arch).replace(",", "-").split("-") if p)
    except ValueError:
        raise ValueError(f"bad architecture string {arch!r}") from None
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"bad architecture string {arch!r}")
    return dims
