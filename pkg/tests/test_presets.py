import pytest

from graphdml.presets import PRESETS, get_preset, parse_architecture, preset_names

EXPECTED_NAMES = {"acm", "dblp", "cora", "citeseer", "pubmed",
                  "amazon_photo", "coauthor_cs", "coauthor_phy"}

REQUIRED_KEYS = {"learning_rate", "architecture", "tau", "n_epochs", "mask_fraction",
                 "view_num", "weight_decay", "batch_size", "alpha", "r_max", "rrz"}


def test_all_eight_presets_present():
    assert set(preset_names()) == EXPECTED_NAMES


def test_every_preset_complete_and_sane():
    for name, preset in PRESETS.items():
        assert set(preset) == REQUIRED_KEYS, name
        assert 0 < preset["alpha"] < 1
        assert preset["batch_size"] >= 1 and preset["n_epochs"] >= 1
        assert 0 <= preset["mask_fraction"] <= 1
        assert preset["r_max"] > 0 and preset["tau"] > 0
        parse_architecture(preset["architecture"])


def test_cora_preset_values():
    p = get_preset("cora")
    assert p["learning_rate"] == 1e-4
    assert p["architecture"] == "256-128"
    assert p["tau"] == 1.0
    assert p["n_epochs"] == 300
    assert p["mask_fraction"] == 0.08
    assert p["view_num"] == 3
    assert p["weight_decay"] == 0.02
    assert p["batch_size"] == 512
    assert p["alpha"] == 0.1
    assert p["r_max"] == 1e-6
    assert p["rrz"] == 0.4


def test_name_normalization_and_copy():
    assert get_preset("Amazon-Photo") == PRESETS["amazon_photo"]
    p = get_preset("cora")
    p["tau"] = 99.0
    assert PRESETS["cora"]["tau"] == 1.0


def test_unknown_preset():
    with pytest.raises(KeyError, match="available"):
        get_preset("imagenet")


def test_parse_architecture():
    assert parse_architecture("256-128") == (256, 128)
    assert parse_architecture("512") == (512,)
    with pytest.raises(ValueError):
        parse_architecture("256-abc")
    with pytest.raises(ValueError):
        parse_architecture("")
