# -*- coding: utf-8 -*-
"""
Run configuration for the gaitlab.msgcn collection.

Argument specifications are plain dicts shared by the Ansible modules and the
command-line dispatcher. A run configuration is a JSON file deep-merged with
explicit overrides, validated against ``run_argument_spec()`` and frozen into
dataclasses.
"""

from __future__ import absolute_import, division, print_function

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Mapping, Optional, Tuple

from ansible.module_utils.basic import env_fallback
from ansible.module_utils.common.arg_spec import ArgumentSpecValidator
from ansible.module_utils._text import to_text

from .exceptions import ConfigurationError

__metaclass__ = type

# Environment variable names
ENV_VARS = {
    "SEED": "MSGCN_SEED",
    "JOBS": "MSGCN_JOBS",
    "PRECISION": "MSGCN_PRECISION",
    "LOG_LEVEL": "MSGCN_LOG_LEVEL",
}

VARIANTS = ("ms-gcn", "st-gcn", "ms-tcn", "tcn")
SINGLE_STAGE_VARIANTS = ("st-gcn", "tcn")
GRAPH_VARIANTS = ("ms-gcn", "st-gcn")
PRECISIONS = ("float64", "float32")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")
CONFIG_FILENAME = "config.json"

logger = logging.getLogger(__name__)


def model_argument_spec() -> Dict[str, Dict[str, Any]]:
    """
    Argument specification of the network architecture.

    Returns:
        Dict describing the ``model`` section options
    """
    return {
        "variant": {"type": "str", "default": "ms-gcn", "choices": list(VARIANTS)},
        "num_stages": {"type": "int", "default": 5},
        "layers_per_stage": {"type": "int", "default": 10},
        "channels": {"type": "int", "default": 64},
        "kernel_size": {"type": "int", "default": 3},
        "num_classes": {"type": "int", "default": 2},
        "in_channels": {"type": "int", "default": 3},
        "acausal": {"type": "bool", "default": True},
        "bn_momentum": {"type": "float", "default": 0.1},
        "bn_eps": {"type": "float", "default": 1e-5},
    }


def loss_argument_spec() -> Dict[str, Dict[str, Any]]:
    return {
        "smoothing_weight": {"type": "float", "default": 0.15, "aliases": ["lambda"]},
        "tau": {"type": "float", "default": 4.0},
    }


def train_argument_spec() -> Dict[str, Dict[str, Any]]:
    return {
        "epochs": {"type": "int", "default": 100},
        "batch_size": {"type": "int", "default": 16},
        "learning_rate": {"type": "float", "default": 0.0005, "aliases": ["lr"]},
        "beta1": {"type": "float", "default": 0.9},
        "beta2": {"type": "float", "default": 0.999},
        "adam_eps": {"type": "float", "default": 1e-8},
        "log_every": {"type": "int", "default": 1},
    }


def synth_argument_spec() -> Dict[str, Dict[str, Any]]:
    """
    Argument specification of the synthetic gait generator.

    Durations are in seconds, frequencies in Hz and amplitudes in millimeters.
    """
    return {
        "subjects": {"type": "int", "default": 3},
        "trials_per_subject": {"type": "int", "default": 4, "aliases": ["trials"]},
        "sample_rate": {"type": "float", "default": 100.0},
        "trial_duration_min": {"type": "float", "default": 15.0},
        "trial_duration_max": {"type": "float", "default": 25.0},
        "stride_freq_min": {"type": "float", "default": 0.8},
        "stride_freq_max": {"type": "float", "default": 1.2},
        "stride_amplitude": {"type": "float", "default": 150.0},
        "walking_speed": {"type": "float", "default": 10.0},
        "fog_rate": {"type": "float", "default": 0.5},
        "episodes_min": {"type": "int", "default": 1},
        "episodes_max": {"type": "int", "default": 3},
        "episode_duration_mean": {"type": "float", "default": 3.0},
        "episode_duration_sd": {"type": "float", "default": 1.5},
        "episode_duration_min": {"type": "float", "default": 0.5},
        "trembling_fraction": {"type": "float", "default": 0.5},
        "tremble_freq_min": {"type": "float", "default": 3.0},
        "tremble_freq_max": {"type": "float", "default": 8.0},
        "tremble_amplitude_ratio": {"type": "float", "default": 0.2},
        "noise": {"type": "float", "default": 0.5},
    }


def _section(options: Dict[str, Dict[str, Any]]) -> Dict[str, Any]:
    return {"type": "dict", "options": options, "default": {}, "apply_defaults": True}


def run_argument_spec() -> Dict[str, Dict[str, Any]]:
    """
    Base argument specification for every pipeline command.

    Returns:
        Dict containing the common options and the nested configuration sections
    """
    return {
        "seed": {
            "type": "int",
            "default": 0,
            "fallback": (env_fallback, [ENV_VARS["SEED"]]),
        },
        "jobs": {
            "type": "int",
            "default": 1,
            "fallback": (env_fallback, [ENV_VARS["JOBS"]]),
        },
        "precision": {
            "type": "str",
            "default": "float64",
            "choices": list(PRECISIONS),
            "fallback": (env_fallback, [ENV_VARS["PRECISION"]]),
        },
        "log_level": {
            "type": "str",
            "default": "WARNING",
            "choices": list(LOG_LEVELS),
            "fallback": (env_fallback, [ENV_VARS["LOG_LEVEL"]]),
        },
        "model": _section(model_argument_spec()),
        "loss": _section(loss_argument_spec()),
        "train": _section(train_argument_spec()),
        "synth": _section(synth_argument_spec()),
        "paths": {"type": "dict", "default": {}},
    }


def _require(condition: bool, message: str, **kwargs: Any) -> None:
    if not condition:
        raise ConfigurationError(message, **kwargs)


@dataclass(frozen=True)
class ModelConfig:
    """Architecture of one network; ``dilations`` doubles per layer."""

    variant: str = "ms-gcn"
    num_stages: int = 5
    layers_per_stage: int = 10
    channels: int = 64
    kernel_size: int = 3
    num_classes: int = 2
    in_channels: int = 3
    acausal: bool = True
    bn_momentum: float = 0.1
    bn_eps: float = 1e-5

    def __post_init__(self) -> None:
        _require(
            self.variant in VARIANTS,
            f"Variant '{self.variant}' is not valid. Must be one of: {', '.join(VARIANTS)}",
            variant=self.variant,
        )
        _require(self.num_stages >= 1, f"num_stages must be >= 1, got {self.num_stages}")
        _require(
            self.layers_per_stage >= 1,
            f"layers_per_stage must be >= 1, got {self.layers_per_stage}",
        )
        _require(self.channels >= 1, f"channels must be >= 1, got {self.channels}")
        _require(self.in_channels >= 1, f"in_channels must be >= 1, got {self.in_channels}")
        _require(self.num_classes >= 2, f"num_classes must be >= 2, got {self.num_classes}")
        _require(self.kernel_size >= 1, f"kernel_size must be >= 1, got {self.kernel_size}")
        _require(
            not self.acausal or self.kernel_size % 2 == 1,
            f"acausal convolution requires an odd kernel_size, got {self.kernel_size}",
        )
        _require(
            0.0 < self.bn_momentum <= 1.0,
            f"bn_momentum must be in (0, 1], got {self.bn_momentum}",
        )
        _require(self.bn_eps > 0, f"bn_eps must be > 0, got {self.bn_eps}")

    @property
    def dilations(self) -> Tuple[int, ...]:
        return tuple(2**i for i in range(self.layers_per_stage))

    @property
    def stage_count(self) -> int:
        """Number of stages actually built; single-stage variants force 1."""
        if self.variant in SINGLE_STAGE_VARIANTS:
            return 1
        return self.num_stages

    @property
    def uses_graph(self) -> bool:
        return self.variant in GRAPH_VARIANTS

    @property
    def receptive_field(self) -> int:
        return (self.kernel_size - 1) * sum(self.dilations) + 1

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class LossConfig:
    smoothing_weight: float = 0.15
    tau: float = 4.0
    num_classes: int = 2

    def __post_init__(self) -> None:
        _require(
            self.smoothing_weight >= 0,
            f"smoothing weight (lambda) must be >= 0, got {self.smoothing_weight}",
        )
        _require(self.tau > 0, f"tau must be > 0, got {self.tau}")

    def to_dict(self) -> Dict[str, Any]:
        return {"smoothing_weight": self.smoothing_weight, "tau": self.tau}


@dataclass(frozen=True)
class TrainConfig:
    """Optimization recipe plus the model and loss it trains."""

    epochs: int = 100
    batch_size: int = 16
    learning_rate: float = 0.0005
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    log_every: int = 1
    seed: int = 0
    precision: str = "float64"
    model: ModelConfig = field(default_factory=ModelConfig)
    loss: LossConfig = field(default_factory=LossConfig)

    def __post_init__(self) -> None:
        _require(self.epochs >= 1, f"epochs must be >= 1, got {self.epochs}")
        _require(self.batch_size >= 1, f"batch_size must be >= 1, got {self.batch_size}")
        _require(self.learning_rate > 0, f"learning_rate must be > 0, got {self.learning_rate}")
        _require(0 <= self.beta1 < 1, f"beta1 must be in [0, 1), got {self.beta1}")
        _require(0 <= self.beta2 < 1, f"beta2 must be in [0, 1), got {self.beta2}")
        _require(
            self.precision in PRECISIONS,
            f"Precision '{self.precision}' is not valid. Must be one of: {', '.join(PRECISIONS)}",
        )
        _require(
            self.loss.num_classes == self.model.num_classes,
            f"loss num_classes ({self.loss.num_classes}) must equal model num_classes "
            f"({self.model.num_classes})",
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "adam_eps": self.adam_eps,
            "log_every": self.log_every,
        }


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic dataset recipe; every band is [min, max]."""

    seed: int = 0
    subjects: int = 3
    trials_per_subject: int = 4
    sample_rate: float = 100.0
    trial_duration_min: float = 15.0
    trial_duration_max: float = 25.0
    stride_freq_min: float = 0.8
    stride_freq_max: float = 1.2
    stride_amplitude: float = 150.0
    walking_speed: float = 10.0
    fog_rate: float = 0.5
    episodes_min: int = 1
    episodes_max: int = 3
    episode_duration_mean: float = 3.0
    episode_duration_sd: float = 1.5
    episode_duration_min: float = 0.5
    trembling_fraction: float = 0.5
    tremble_freq_min: float = 3.0
    tremble_freq_max: float = 8.0
    tremble_amplitude_ratio: float = 0.2
    noise: float = 0.5

    def __post_init__(self) -> None:
        _require(self.subjects >= 1, f"subjects must be >= 1, got {self.subjects}")
        _require(
            self.trials_per_subject >= 1,
            f"trials_per_subject must be >= 1, got {self.trials_per_subject}",
        )
        _require(self.sample_rate > 0, f"sample_rate must be > 0, got {self.sample_rate}")
        for name in ("trial_duration", "stride_freq", "tremble_freq"):
            low = getattr(self, f"{name}_min")
            high = getattr(self, f"{name}_max")
            _require(
                0 < low <= high,
                f"{name} band must satisfy 0 < min <= max, got [{low}, {high}]",
            )
        _require(
            0 <= self.episodes_min <= self.episodes_max,
            f"episode count band must satisfy 0 <= min <= max, got "
            f"[{self.episodes_min}, {self.episodes_max}]",
        )
        _require(0.0 <= self.fog_rate <= 1.0, f"fog_rate must be in [0, 1], got {self.fog_rate}")
        _require(
            self.episode_duration_mean > 0 and self.episode_duration_min > 0,
            "episode durations must be > 0",
        )
        _require(self.episode_duration_sd >= 0, "episode_duration_sd must be >= 0")
        _require(
            0.0 <= self.trembling_fraction <= 1.0,
            f"trembling_fraction must be in [0, 1], got {self.trembling_fraction}",
        )
        _require(
            0.0 <= self.tremble_amplitude_ratio <= 0.2,
            f"tremble_amplitude_ratio must be in [0, 0.2], got {self.tremble_amplitude_ratio}",
        )
        _require(self.stride_amplitude > 0, "stride_amplitude must be > 0")
        _require(self.noise >= 0, "noise must be >= 0")
        shortest = int(round(self.trial_duration_min * self.sample_rate))
        required = self.episodes_min * (self.min_episode_samples + 1) - 1
        _require(
            required <= shortest,
            f"{self.episodes_min} episodes of at least {self.episode_duration_min} s do not fit "
            f"in the shortest trial of {self.trial_duration_min} s",
            samples=shortest,
            episode_samples=required,
        )

    @property
    def min_episode_samples(self) -> int:
        return max(1, int(round(self.episode_duration_min * self.sample_rate)))

    def to_dict(self) -> Dict[str, Any]:
        values = asdict(self)
        values.pop("seed")
        return values


@dataclass(frozen=True)
class RunConfig:
    """Effective configuration of one command invocation."""

    seed: int = 0
    jobs: int = 1
    precision: str = "float64"
    log_level: str = "WARNING"
    train: TrainConfig = field(default_factory=TrainConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    paths: Dict[str, Any] = field(default_factory=dict)

    @property
    def model(self) -> ModelConfig:
        return self.train.model

    @property
    def loss(self) -> LossConfig:
        return self.train.loss

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "jobs": self.jobs,
            "precision": self.precision,
            "log_level": self.log_level,
            "model": self.model.to_dict(),
            "loss": self.loss.to_dict(),
            "train": self.train.to_dict(),
            "synth": self.synth.to_dict(),
            "paths": dict(self.paths),
        }


def deep_merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    """
    Recursively merge ``override`` into ``base``; override values win.

    ``None`` values in ``override`` are ignored so unset flags never mask file values.
    """
    merged = dict(base)
    for key, value in override.items():
        if value is None:
            continue
        if isinstance(value, Mapping):
            current = merged.get(key)
            merged[key] = deep_merge(current if isinstance(current, Mapping) else {}, value)
        else:
            merged[key] = value
    return merged


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    """
    Read a JSON configuration file.

    Args:
        path: File path, or None for an empty configuration

    Returns:
        The decoded configuration mapping

    Raises:
        ConfigurationError: If the file cannot be read or is not a JSON object
    """
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            content = json.load(handle)
    except (OSError, ValueError) as e:
        raise ConfigurationError(
            f"Unable to read configuration file {path}: {to_text(e)}", path=path
        )
    if not isinstance(content, dict):
        raise ConfigurationError(
            f"Configuration file {path} must contain a JSON object", path=path
        )
    return content


def validate_params(params: Mapping[str, Any]) -> Dict[str, Any]:
    """
    Validate raw parameters against ``run_argument_spec()``.

    Environment fallbacks and defaults are applied here.

    Raises:
        ConfigurationError: Listing every validation message
    """
    validator = ArgumentSpecValidator(run_argument_spec())
    result = validator.validate(dict(params))
    if result.error_messages:
        raise ConfigurationError(
            "Invalid run configuration: " + "; ".join(result.error_messages),
            errors=list(result.error_messages),
        )
    return result.validated_parameters


def run_config_from_params(params: Mapping[str, Any]) -> RunConfig:
    """Build a RunConfig from already validated parameters."""
    precision = params["precision"]
    model = ModelConfig(**params["model"])
    loss_section = dict(params["loss"])
    loss_section.pop("lambda", None)
    loss = LossConfig(num_classes=model.num_classes, **loss_section)
    train_section = dict(params["train"])
    train_section.pop("lr", None)
    train = TrainConfig(
        seed=params["seed"],
        precision=precision,
        model=model,
        loss=loss,
        **train_section,
    )
    synth_section = dict(params["synth"])
    synth_section.pop("trials", None)
    synth = SynthConfig(seed=params["seed"], **synth_section)
    if params["jobs"] < 1:
        raise ConfigurationError(f"jobs must be >= 1, got {params['jobs']}")
    return RunConfig(
        seed=params["seed"],
        jobs=params["jobs"],
        precision=precision,
        log_level=params["log_level"],
        train=train,
        synth=synth,
        paths=dict(params.get("paths") or {}),
    )


def build_run_config(
    config_path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None
) -> RunConfig:
    """
    Merge a configuration file with explicit overrides and validate the result.

    Args:
        config_path: Optional JSON configuration file
        overrides: Values that take precedence over the file (None entries ignored)

    Returns:
        The frozen effective configuration

    Raises:
        ConfigurationError: If the file or the merged configuration is invalid
    """
    merged = deep_merge(load_config_file(config_path), overrides or {})
    config = run_config_from_params(validate_params(merged))
    logger.debug(f"Effective configuration: {config.to_dict()}")
    return config


def dump_config(config: RunConfig, directory: str) -> str:
    """
    Write ``config.json`` into an output directory.

    Returns:
        Path of the written snapshot
    """
    path = os.path.join(directory, CONFIG_FILENAME)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(config.to_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")
    logger.info(f"Configuration snapshot written to {path}")
    return path
