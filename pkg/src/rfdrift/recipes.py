"""Bundled experiment recipes and the recipe schema.

A recipe is a flat JSON-able dict that fully determines an experiment given
its seeds: scenario shape, drift, dataset assembly, model size, and training
knobs. The bundled five are desk-scale: small fleets, sub-second captures,
and narrow networks, so a full run fits in minutes on one CPU core.
"""

from __future__ import annotations

import copy
import json

from .errors import ValidationError
from .framing import REPRESENTATIONS
from .scenario import SETUP_NAMES

RECIPE_NAMES = ("short_term", "long_term", "distances", "configurations", "receivers")

_BASE = {
    "modem": "lora",
    "n_devices": 10,
    "n_days": 1,
    "captures_per_day": 4,
    "gap_minutes": 5.0,
    "duration_s": 0.2,
    "spreading_factor": 7,
    "snr_db_at_5m": 30.0,
    "rebooted": False,
    "domain_key": "capture",
    "source_domain": 1,
    "target_domain": 2,
    "frames_per_device": 128,
    "representation": "fft",
    "split": [0.70, 0.15, 0.15],
    "drift": {
        "short_term_sigma": 0.14,
        "day_jump_sigma": 0.8,
        "reboot_mix": 0.35,
        "common_mode": 0.9,
    },
    "model": {
        "latent_dim": 64,
        "widths": [8, 8, 16, 16, 32, 32],
        "combine": "concat",
        "alpha": 0.1,
        "beta": 0.075,
        "gamma": 0.25,
    },
    "train": {
        "epochs": 50,
        "batch_size": 32,
        "warmup_fraction": 0.10,
        "learning_rate": 3e-3,
        "constant_lambda": None,
    },
    "seeds": [2, 3, 4],
}

_BUNDLED = {
    "short_term": {
        **copy.deepcopy(_BASE),
        "name": "short_term",
        "setup": "days_indoor",
    },
    "long_term": {
        **copy.deepcopy(_BASE),
        "name": "long_term",
        "setup": "days_indoor",
        "n_days": 2,
        "captures_per_day": 2,
        "domain_key": "day",
        "seeds": [0, 1],
    },
    "distances": {
        **copy.deepcopy(_BASE),
        "name": "distances",
        "setup": "distances",
    },
    "configurations": {
        **copy.deepcopy(_BASE),
        "name": "configurations",
        "setup": "configurations",
        # SF 11/12 chirps are long; shorter captures keep frame counts modest.
        "frames_per_device": 64,
    },
    "receivers": {
        **copy.deepcopy(_BASE),
        "name": "receivers",
        "setup": "receivers",
    },
}


def bundled_names() -> tuple:
    return RECIPE_NAMES


def get_bundled(name: str) -> dict:
    if name not in _BUNDLED:
        raise ValidationError("name", f"unknown bundled recipe {name!r}")
    return copy.deepcopy(_BUNDLED[name])


def load_recipe(path_or_name) -> dict:
    """A bundled name, or a path to a JSON recipe file."""
    name = str(path_or_name)
    if name in _BUNDLED:
        return get_bundled(name)
    try:
        with open(name) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(
            "recipe", f"{name!r} is neither a bundled recipe nor a readable file: {exc}"
        ) from exc
    except json.JSONDecodeError as exc:
        raise ValidationError("recipe", f"invalid JSON in {name}: {exc}") from exc


def _require(recipe: dict, field: str, kind, check=None, why: str = ""):
    if field not in recipe:
        raise ValidationError(field, "required field is missing")
    value = recipe[field]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ValidationError(field, f"expected {kind.__name__}")
    if check is not None and not check(value):
        raise ValidationError(field, why or "invalid value")
    return value


def validate_recipe(recipe: dict) -> dict:
    """Check a recipe against the schema; returns a completed copy.

    Missing optional fields are filled from the defaults; a wrong type, an
    out-of-range value, or an unknown field raises a ValidationError naming
    the field.
    """
    if not isinstance(recipe, dict):
        raise ValidationError("recipe", "expected a JSON object")
    merged = copy.deepcopy(_BASE)
    for sub in ("drift", "model", "train"):
        merged[sub].update(recipe.get(sub, {}))
    merged.update({k: v for k, v in recipe.items() if k not in ("drift", "model", "train")})

    known = set(_BASE) | {"name", "setup"}
    for key in merged:
        if key not in known:
            raise ValidationError(key, "unknown recipe field")

    _require(merged, "name", str, lambda v: v in RECIPE_NAMES, f"must be one of {RECIPE_NAMES}")
    _require(merged, "setup", str, lambda v: v in SETUP_NAMES, f"must be one of {SETUP_NAMES}")
    _require(merged, "modem", str, lambda v: v in ("lora", "wifi"), "must be 'lora' or 'wifi'")
    _require(merged, "n_devices", int, lambda v: v >= 2, "need at least 2 devices")
    _require(merged, "n_days", int, lambda v: v >= 1, "must be >= 1")
    _require(merged, "captures_per_day", int, lambda v: v >= 1, "must be >= 1")
    _require(merged, "gap_minutes", float, lambda v: v > 0, "must be positive")
    _require(merged, "duration_s", float, lambda v: v > 0, "must be positive")
    _require(merged, "spreading_factor", int, lambda v: 7 <= v <= 12, "must be in [7, 12]")
    _require(merged, "snr_db_at_5m", float)
    _require(merged, "rebooted", bool)
    _require(merged, "domain_key", str, lambda v: v in ("capture", "day"), "must be 'capture' or 'day'")
    _require(merged, "source_domain", int, lambda v: v >= 1, "must be >= 1")
    _require(merged, "target_domain", int, lambda v: v >= 1, "must be >= 1")
    _require(merged, "frames_per_device", int, lambda v: v >= 1, "must be >= 1")
    _require(
        merged, "representation", str,
        lambda v: v in REPRESENTATIONS, f"must be one of {REPRESENTATIONS}",
    )
    split = _require(
        merged, "split", list,
        lambda v: len(v) == 3 and abs(sum(v) - 1.0) < 1e-9,
        "must be three fractions summing to 1",
    )
    if not all(isinstance(x, (int, float)) and 0 < x < 1 for x in split):
        raise ValidationError("split", "fractions must be in (0, 1)")
    seeds = _require(merged, "seeds", list, lambda v: len(v) >= 1, "need at least one seed")
    if not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
        raise ValidationError("seeds", "must be integers")

    drift = merged["drift"]
    for key in ("short_term_sigma", "day_jump_sigma"):
        if not isinstance(drift.get(key), (int, float)) or drift[key] < 0:
            raise ValidationError(f"drift.{key}", "must be a number >= 0")
    for key in ("reboot_mix", "common_mode"):
        if not 0.0 <= drift.get(key, -1) <= 1.0:
            raise ValidationError(f"drift.{key}", "must be in [0, 1]")

    model = merged["model"]
    if not isinstance(model.get("latent_dim"), int) or model["latent_dim"] < 1:
        raise ValidationError("model.latent_dim", "must be an integer >= 1")
    widths = model.get("widths")
    if not isinstance(widths, list) or not widths or not all(
        isinstance(w, int) and w >= 1 for w in widths
    ):
        raise ValidationError("model.widths", "must be a list of positive integers")
    if model.get("combine") not in ("concat", "sum"):
        raise ValidationError("model.combine", "must be 'concat' or 'sum'")
    for key in ("alpha", "beta", "gamma"):
        if not isinstance(model.get(key), (int, float)) or model[key] < 0:
            raise ValidationError(f"model.{key}", "must be a number >= 0")

    train = merged["train"]
    for key, low in (("epochs", 1), ("batch_size", 1)):
        if not isinstance(train.get(key), int) or train[key] < low:
            raise ValidationError(f"train.{key}", f"must be an integer >= {low}")
    if not isinstance(train.get("learning_rate"), (int, float)) or train["learning_rate"] <= 0:
        raise ValidationError("train.learning_rate", "must be a positive number")
    wf = train.get("warmup_fraction")
    if not isinstance(wf, (int, float)) or not 0.0 <= wf < 1.0:
        raise ValidationError("train.warmup_fraction", "must be in [0, 1)")
    cl = train.get("constant_lambda")
    if cl is not None and (not isinstance(cl, (int, float)) or cl < 0):
        raise ValidationError("train.constant_lambda", "must be null or a number >= 0")

    return merged
