"""Recipe loading and schema validation."""

import json

import pytest

from rfdrift import recipes
from rfdrift.errors import ValidationError


def test_bundled_names():
    assert recipes.bundled_names() == (
        "short_term", "long_term", "distances", "configurations", "receivers",
    )


def test_every_bundled_recipe_validates():
    for name in recipes.bundled_names():
        completed = recipes.validate_recipe(recipes.get_bundled(name))
        assert completed["name"] == name


def test_get_bundled_returns_copies():
    a = recipes.get_bundled("short_term")
    a["n_devices"] = 99
    a["drift"]["short_term_sigma"] = 123.0
    b = recipes.get_bundled("short_term")
    assert b["n_devices"] != 99
    assert b["drift"]["short_term_sigma"] != 123.0


def test_get_bundled_unknown_name():
    with pytest.raises(ValidationError):
        recipes.get_bundled("weekend_special")


def test_load_recipe_by_name_and_by_path(tmp_path):
    by_name = recipes.load_recipe("long_term")
    assert by_name["name"] == "long_term"

    path = tmp_path / "custom.json"
    custom = recipes.get_bundled("short_term")
    custom["n_devices"] = 4
    path.write_text(json.dumps(custom))
    loaded = recipes.load_recipe(path)
    assert loaded["n_devices"] == 4


def test_load_recipe_missing_file():
    with pytest.raises(ValidationError):
        recipes.load_recipe("/nonexistent/recipe.json")


def test_load_recipe_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ValidationError):
        recipes.load_recipe(path)


def test_validate_fills_defaults():
    completed = recipes.validate_recipe({"name": "short_term", "setup": "days_indoor"})
    assert completed["frames_per_device"] == 128
    assert completed["train"]["epochs"] == 50
    assert completed["model"]["combine"] == "concat"


def test_validate_rejects_unknown_field():
    recipe = {"name": "short_term", "setup": "days_indoor", "volume": 11}
    with pytest.raises(ValidationError, match="volume"):
        recipes.validate_recipe(recipe)


def test_validate_requires_name_and_setup():
    with pytest.raises(ValidationError, match="name"):
        recipes.validate_recipe({"setup": "days_indoor"})
    with pytest.raises(ValidationError, match="setup"):
        recipes.validate_recipe({"name": "short_term"})


def test_validate_rejects_unknown_name_or_setup():
    with pytest.raises(ValidationError):
        recipes.validate_recipe({"name": "nope", "setup": "days_indoor"})
    with pytest.raises(ValidationError):
        recipes.validate_recipe({"name": "short_term", "setup": "basement"})


@pytest.mark.parametrize(
    "patch",
    [
        {"modem": "zigbee"},
        {"n_devices": 1},
        {"spreading_factor": 13},
        {"domain_key": "week"},
        {"representation": "wavelet"},
        {"split": [0.5, 0.5, 0.5]},
        {"split": [0.9, 0.05, 0.05, 0.0]},
        {"seeds": []},
        {"seeds": [1, "two"]},
        {"n_devices": True},
        {"duration_s": -1.0},
    ],
)
def test_validate_rejects_bad_top_level_values(patch):
    recipe = {"name": "short_term", "setup": "days_indoor", **patch}
    with pytest.raises(ValidationError):
        recipes.validate_recipe(recipe)


@pytest.mark.parametrize(
    "sub, patch",
    [
        ("drift", {"short_term_sigma": -0.1}),
        ("drift", {"reboot_mix": 1.5}),
        ("drift", {"common_mode": 1.5}),
        ("model", {"latent_dim": 0}),
        ("model", {"widths": []}),
        ("model", {"widths": [8, 0]}),
        ("model", {"combine": "multiply"}),
        ("model", {"gamma": -1.0}),
        ("train", {"epochs": 0}),
        ("train", {"batch_size": 0}),
        ("train", {"learning_rate": 0.0}),
        ("train", {"warmup_fraction": 1.0}),
        ("train", {"constant_lambda": -0.5}),
    ],
)
def test_validate_rejects_bad_nested_values(sub, patch):
    recipe = {"name": "short_term", "setup": "days_indoor", sub: patch}
    with pytest.raises(ValidationError):
        recipes.validate_recipe(recipe)


def test_constant_lambda_null_is_allowed():
    recipe = {
        "name": "short_term",
        "setup": "days_indoor",
        "train": {"constant_lambda": None},
    }
    completed = recipes.validate_recipe(recipe)
    assert completed["train"]["constant_lambda"] is None


def test_validate_does_not_mutate_input():
    recipe = {"name": "short_term", "setup": "days_indoor", "train": {"epochs": 3}}
    recipes.validate_recipe(recipe)
    assert recipe["train"] == {"epochs": 3}
