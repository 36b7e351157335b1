"""JSON experiment configuration: defaults, validation, dotted overrides.

A config file is a JSON object following the shape of ``DEFAULTS``;
omitted keys take their default value.  Overrides are ``a.b.c=value``
strings whose value part is parsed as JSON when possible (so
``loss.lambda=0`` and ``encoder.widths=[64,32]`` both work) and must
name an existing field.  The dataset seed, unless given explicitly, is
derived from the master seed (see ``seeding``), as is every other
random stream in a run.
"""

from __future__ import annotations

import copy
import difflib
import json

from .data import SparseDenseSpec
from .losses import LossConfig
from .networks import ProjectorSpec
from .seeding import derive_seed
from .training import (AugmentConfig, EncoderConfig, EvalConfig, ExperimentConfig,
                       ImageSource, OptimizerConfig, TargetConfig, VAETrainConfig)


class ConfigError(Exception):
    pass


DEFAULTS: dict = {
    "seed": 0,
    "output_dir": "runs/run",
    "batch_size": 128,
    "epochs": 20,
    "share_heads": True,
    "dataset": {
        "kind": "synthetic",
        "num_classes": 2,
        "sparse_dim": 4,
        "dense_dim": 60,
        "num_samples": 2000,
        "signal": 1.0,
        "sparse_noise": 0.1,
        "dense_noise": 1.0,
        "seed": None,
        "path": None,
        "labels_path": None,
    },
    "augment": {
        "dense_noise_scale": 0.5,
        "dense_dropout_prob": 0.2,
        "scale_jitter": [0.9, 1.1],
        "mirror_prob": 0.5,
        "crop_scale": [0.6, 1.0],
        "aspect_jitter": [1.0, 1.0],
        "brightness_jitter": 0.2,
        "contrast_jitter": 0.2,
    },
    "encoder": {
        "widths": [64, 64, 32],
        "tap_index": 2,
        "batch_norm": True,
        "allow_tap_at_final": False,
    },
    "coloring_head": {"widths": [64, 64, 64], "batch_norm": True},
    "whitening_head": {"widths": [64, 64, 64], "batch_norm": True},
    "loss": {
        "lambda": 0.05,
        "lambda_schedule": None,
        "lambda_block_epochs": 50,
        "alpha": 0.01,
        "sigma": 1.0,
        "variant": "cross",
    },
    "target": {"source": "vae", "path": None, "draws": 1},
    "vae_train": {"epochs": 30, "lr": 1e-3, "beta_kl": 1.0, "batch_size": 64},
    "optimizer": {"lr": 3e-3, "weight_decay": 5e-6, "betas": [0.9, 0.999]},
    "eval": {
        "probe_epochs": 50,
        "train_fraction": 0.8,
        "lr_start": 1e-3,
        "lr_end": 1e-6,
        "batch_size": 128,
    },
}


def _merge(defaults: dict, given: dict, path: str = "") -> dict:
    """Recursive merge with unknown-key detection and suggestions."""
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        dotted = f"{path}{key}"
        if key not in defaults:
            near = difflib.get_close_matches(key, defaults.keys(), n=1)
            hint = f"; nearest valid key is '{path}{near[0]}'" if near else ""
            raise ConfigError(f"unknown config key '{dotted}'{hint}")
        if isinstance(defaults[key], dict) and isinstance(value, dict):
            out[key] = _merge(defaults[key], value, path=f"{dotted}.")
        else:
            out[key] = copy.deepcopy(value)
    return out


def apply_overrides(resolved: dict, overrides) -> dict:
    """Apply ``a.b=value`` pairs onto a resolved config dict."""
    out = copy.deepcopy(resolved)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        dotted, raw = item.split("=", 1)
        keys = dotted.split(".")
        node = out
        ref = DEFAULTS
        for i, key in enumerate(keys):
            if not isinstance(ref, dict) or key not in ref:
                valid = ref.keys() if isinstance(ref, dict) else []
                near = difflib.get_close_matches(key, valid, n=1)
                hint = f"; nearest valid key is '{near[0]}'" if near else ""
                raise ConfigError(f"unknown override key '{dotted}'{hint}")
            if i == len(keys) - 1:
                try:
                    node[key] = json.loads(raw)
                except json.JSONDecodeError:
                    node[key] = raw
            else:
                node = node.setdefault(key, {})
                ref = ref[key]
    return out


def _tuple2(value, name: str) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"'{name}' must be a pair, got {value!r}")
    return float(value[0]), float(value[1])


def config_from_resolved(resolved: dict) -> ExperimentConfig:
    """Build the typed experiment config from a fully resolved dict."""
    master_seed = int(resolved["seed"])

    ds = resolved["dataset"]
    if ds["kind"] == "synthetic":
        dataset = SparseDenseSpec(
            num_classes=int(ds["num_classes"]), sparse_dim=int(ds["sparse_dim"]),
            dense_dim=int(ds["dense_dim"]), num_samples=int(ds["num_samples"]),
            signal=float(ds["signal"]), sparse_noise=float(ds["sparse_noise"]),
            dense_noise=float(ds["dense_noise"]),
            seed=int(ds["seed"]) if ds["seed"] is not None
            else derive_seed(master_seed, "dataset"),
        )
    elif ds["kind"] == "image":
        if not ds["path"]:
            raise ConfigError("image dataset needs 'dataset.path'")
        dataset = ImageSource(ds["path"], ds["labels_path"])
    else:
        raise ConfigError(f"unknown dataset kind {ds['kind']!r} (synthetic or image)")

    aug = resolved["augment"]
    lc = resolved["loss"]
    schedule = lc["lambda_schedule"]
    try:
        config = ExperimentConfig(
            dataset=dataset,
            augment=AugmentConfig(
                dense_noise_scale=float(aug["dense_noise_scale"]),
                dense_dropout_prob=float(aug["dense_dropout_prob"]),
                scale_jitter=_tuple2(aug["scale_jitter"], "augment.scale_jitter"),
                mirror_prob=float(aug["mirror_prob"]),
                crop_scale=_tuple2(aug["crop_scale"], "augment.crop_scale"),
                aspect_jitter=_tuple2(aug["aspect_jitter"], "augment.aspect_jitter"),
                brightness_jitter=float(aug["brightness_jitter"]),
                contrast_jitter=float(aug["contrast_jitter"]),
            ),
            encoder=EncoderConfig(
                widths=tuple(int(w) for w in resolved["encoder"]["widths"]),
                tap_index=int(resolved["encoder"]["tap_index"]),
                batch_norm=bool(resolved["encoder"]["batch_norm"]),
                allow_tap_at_final=bool(resolved["encoder"]["allow_tap_at_final"]),
            ),
            coloring_head=ProjectorSpec(
                tuple(int(w) for w in resolved["coloring_head"]["widths"]),
                bool(resolved["coloring_head"]["batch_norm"])),
            whitening_head=ProjectorSpec(
                tuple(int(w) for w in resolved["whitening_head"]["widths"]),
                bool(resolved["whitening_head"]["batch_norm"])),
            loss=LossConfig(
                lam=float(lc["lambda"]),
                lam_schedule=tuple(float(v) for v in schedule) if schedule else None,
                lam_block_epochs=int(lc["lambda_block_epochs"]),
                alpha=float(lc["alpha"]), sigma=float(lc["sigma"]),
                variant=str(lc["variant"]),
            ),
            target=TargetConfig(source=str(resolved["target"]["source"]),
                                path=resolved["target"]["path"],
                                draws=int(resolved["target"]["draws"])),
            vae_train=VAETrainConfig(
                epochs=int(resolved["vae_train"]["epochs"]),
                lr=float(resolved["vae_train"]["lr"]),
                beta_kl=float(resolved["vae_train"]["beta_kl"]),
                batch_size=int(resolved["vae_train"]["batch_size"])),
            optimizer=OptimizerConfig(
                lr=float(resolved["optimizer"]["lr"]),
                weight_decay=float(resolved["optimizer"]["weight_decay"]),
                betas=_tuple2(resolved["optimizer"]["betas"], "optimizer.betas")),
            eval=EvalConfig(
                probe_epochs=int(resolved["eval"]["probe_epochs"]),
                train_fraction=float(resolved["eval"]["train_fraction"]),
                lr_start=float(resolved["eval"]["lr_start"]),
                lr_end=float(resolved["eval"]["lr_end"]),
                batch_size=int(resolved["eval"]["batch_size"])),
            batch_size=int(resolved["batch_size"]),
            epochs=int(resolved["epochs"]),
            seed=master_seed,
            share_heads=bool(resolved["share_heads"]),
            output_dir=str(resolved["output_dir"]),
        )
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc

    # eager structural validation so bad tap indices fail at parse time
    try:
        config.encoder.spec_for(max(config.encoder.widths))
    except Exception as exc:
        raise ConfigError(f"invalid encoder configuration: {exc}") from exc
    return config


def parse_config(path, overrides=None) -> tuple[ExperimentConfig, dict]:
    """Load, merge, override, validate; returns (config, resolved dict)."""
    try:
        with open(path) as fh:
            given = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(given, dict):
        raise ConfigError(f"config root must be a JSON object, got {type(given).__name__}")
    resolved = _merge(DEFAULTS, given)
    resolved = apply_overrides(resolved, overrides)
    return config_from_resolved(resolved), resolved


def config_from_manifest(manifest_config: dict) -> ExperimentConfig:
    """Rebuild a typed config from the dict a run manifest stores.

    Manifests store ``dataclasses.asdict`` output (field names, e.g.
    ``lam``), not the JSON config schema (``lambda``); this converts the
    former so a run can be re-executed bit-identically from its manifest.
    """
    d = manifest_config
    ds = d["dataset"]
    dataset = SparseDenseSpec(**ds) if "num_classes" in ds else ImageSource(**ds)
    loss = dict(d["loss"])
    if loss.get("lam_schedule"):
        loss["lam_schedule"] = tuple(loss["lam_schedule"])
    return ExperimentConfig(
        dataset=dataset,
        augment=AugmentConfig(**{**d["augment"],
                                 "scale_jitter": tuple(d["augment"]["scale_jitter"]),
                                 "crop_scale": tuple(d["augment"]["crop_scale"]),
                                 "aspect_jitter": tuple(d["augment"]["aspect_jitter"])}),
        encoder=EncoderConfig(**{**d["encoder"], "widths": tuple(d["encoder"]["widths"])}),
        coloring_head=ProjectorSpec(tuple(d["coloring_head"]["widths"]),
                                    d["coloring_head"]["batch_norm"]),
        whitening_head=ProjectorSpec(tuple(d["whitening_head"]["widths"]),
                                     d["whitening_head"]["batch_norm"]),
        loss=LossConfig(**loss),
        target=TargetConfig(**d["target"]),
        vae_train=VAETrainConfig(**d["vae_train"]),
        optimizer=OptimizerConfig(**{**d["optimizer"], "betas": tuple(d["optimizer"]["betas"])}),
        eval=EvalConfig(**d["eval"]),
        batch_size=d["batch_size"], epochs=d["epochs"], seed=d["seed"],
        share_heads=d["share_heads"], output_dir=d["output_dir"],
    )
