"""Flat run configuration shared by every pipeline stage.

One key-value document holds every tunable default. Unknown keys are
rejected and each value is range-checked against the preconditions of the
stage that consumes it, so a bad config fails at load time with the
offending key named.
"""

import dataclasses
import json
import os


class ConfigError(ValueError):
    """Invalid configuration value or unknown key."""


@dataclasses.dataclass
class RunConfig:
    # synthetic dataset
    classes: int = 8
    train_per_class: int = 32
    test_per_class: int = 8
    frames: int = 4
    noise_sigma: float = 0.1

    # shared embedding space
    embed_dim: int = 32

    # contrastive alignment
    tau: float = 0.07
    alpha: float = 0.4
    batch_size: int = 32
    epochs: int = 30
    lr: float = 1e-3
    weight_decay: float = 0.02
    momentum: float = 0.995
    exclude_positive_denominator: bool = False

    # diffusion backbone
    timesteps: int = 100
    beta_start: float = 1e-4
    beta_end: float = 0.02
    diffusion_steps: int = 2400
    diffusion_lr: float = 2e-3
    diffusion_batch: int = 32

    # pseudo-token adaptation
    references: int = 4
    adapt_steps: int = 400
    adapt_lr: float = 5e-3
    adapter_init_scale: float = 0.01

    # injection
    injection_fraction: float = 1.0
    renormalize: bool = True
    reweight_before_merge: bool = False

    seed: int = 7

    def validate(self) -> "RunConfig":
        def require(ok, key, why):
            if not ok:
                raise ConfigError(f"invalid value for '{key}': {getattr(self, key)!r} ({why})")

        require(self.classes >= 2, "classes", "need at least 2 classes")
        require(self.train_per_class >= 1, "train_per_class", "must be positive")
        require(self.test_per_class >= 1, "test_per_class", "must be positive")
        require(self.frames >= 1, "frames", "need at least one frame")
        require(self.noise_sigma >= 0, "noise_sigma", "must be nonnegative")
        require(self.embed_dim >= 2, "embed_dim", "must be at least 2")
        require(self.tau > 0, "tau", "temperature must be positive")
        require(0.0 <= self.alpha <= 1.0, "alpha", "must lie in [0, 1]")
        require(self.batch_size >= 2, "batch_size", "contrastive batches need >= 2 items")
        require(self.epochs >= 1, "epochs", "must be positive")
        require(self.lr > 0, "lr", "must be positive")
        require(self.weight_decay >= 0, "weight_decay", "must be nonnegative")
        require(0.0 <= self.momentum <= 1.0, "momentum", "must lie in [0, 1]")
        require(self.timesteps >= 2, "timesteps", "need at least 2 steps")
        require(0 < self.beta_start < 1, "beta_start", "must lie in (0, 1)")
        require(self.beta_start <= self.beta_end < 1, "beta_end",
                "must lie in [beta_start, 1)")
        require(self.diffusion_steps >= 1, "diffusion_steps", "must be positive")
        require(self.diffusion_lr > 0, "diffusion_lr", "must be positive")
        require(self.diffusion_batch >= 1, "diffusion_batch", "must be positive")
        require(self.references >= 1, "references", "must be positive")
        require(self.adapt_steps >= 0, "adapt_steps", "must be nonnegative")
        require(self.adapt_lr > 0, "adapt_lr", "must be positive")
        require(self.adapter_init_scale >= 0, "adapter_init_scale", "must be nonnegative")
        require(0.0 <= self.injection_fraction <= 1.0, "injection_fraction",
                "must lie in [0, 1]")
        require(self.seed >= 0, "seed", "must be nonnegative")
        return self

    def merged(self, overrides: dict) -> "RunConfig":
        """New config with overrides applied; unknown keys raise ConfigError."""
        fields = {f.name: f for f in dataclasses.fields(self)}
        values = dataclasses.asdict(self)
        for key, value in overrides.items():
            if key not in fields:
                raise ConfigError(f"unknown config key '{key}'")
            target = fields[key].type
            if target == "bool" and not isinstance(value, bool):
                raise ConfigError(f"invalid value for '{key}': {value!r} (expected a boolean)")
            try:
                if target == "int":
                    if isinstance(value, float) and not value.is_integer():
                        raise ValueError
                    value = int(value)
                elif target == "float":
                    value = float(value)
            except (TypeError, ValueError):
                raise ConfigError(f"invalid value for '{key}': {value!r}") from None
            values[key] = value
        return RunConfig(**values).validate()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def load_config(path: str | None, overrides: dict | None = None) -> RunConfig:
    """Defaults <- config file <- explicit overrides, validated at each step."""
    cfg = RunConfig().validate()
    if path:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"config file {path} must contain a JSON object")
        cfg = cfg.merged(doc)
    if overrides:
        cfg = cfg.merged(overrides)
    return cfg


def default_seed() -> int:
    """Global default seed; the AAI_SEED environment variable overrides it."""
    env = os.environ.get("AAI_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"AAI_SEED must be an integer, got {env!r}") from None
    return RunConfig.seed
