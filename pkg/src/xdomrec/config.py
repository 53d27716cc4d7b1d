"""Declarative experiment configuration: one JSON file drives every command.

Paths are kept as written (relative paths resolve against the working
directory). Command-line flags override individual fields; the file is the
baseline.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .metrics import DEFAULT_KS
from .types import AdaptationConfig, Domain, Variant

__all__ = ["ExperimentConfig", "load_config", "save_config"]


@dataclass(frozen=True)
class ExperimentConfig:
    # data paths
    source_interactions: str = ""
    target_interactions: str = ""
    source_user_textual: str = ""
    source_item_textual: str = ""
    source_item_visual: str = ""
    target_user_textual: str = ""
    target_item_textual: str = ""
    target_item_visual: str = ""
    source_split_dir: str = ""
    target_split_dir: str = ""
    output_dir: str = "out"
    # model
    variant: str = Variant.FCF.value
    feature_dim: int = 300
    latent_dim: int = 128
    # rates and regularization
    source_lr: float = 0.2
    target_lr: float = 0.2
    classifier_lr: float = 0.2
    adversarial_lr: float = 0.2
    source_reg: float = 0.005
    target_reg: float = 0.005
    # schedule
    cf_epochs: int = 50
    cf_learning_rate: float = 0.01
    batch_size: int = 1024
    negatives_per_positive: int = 1
    epochs: int = 100
    runs: int = 1
    top_m: int = 1
    ks: tuple = tuple(DEFAULT_KS)
    seed: int = 0

    def __post_init__(self):
        Variant(self.variant)  # validates
        if self.feature_dim <= 0 or self.latent_dim <= 0:
            raise ValueError("feature_dim and latent_dim must be positive")
        ks = tuple(int(k) for k in self.ks)
        if not ks or list(ks) != sorted(ks) or len(set(ks)) != len(ks) or ks[0] < 1:
            raise ValueError("ks must be a nonempty, strictly ascending list of cutoffs >= 1")
        object.__setattr__(self, "ks", ks)
        if self.runs < 1 or self.top_m < 1 or self.top_m > self.runs:
            raise ValueError("need runs >= top_m >= 1")
        if self.cf_epochs < 0 or self.epochs < 0:
            raise ValueError("epoch counts must be >= 0")

    @property
    def variant_enum(self) -> Variant:
        return Variant(self.variant)

    def adaptation(self, seed=None) -> AdaptationConfig:
        """The alignment-loop slice of this configuration."""
        return AdaptationConfig(
            source_lr=self.source_lr,
            target_lr=self.target_lr,
            classifier_lr=self.classifier_lr,
            adversarial_lr=self.adversarial_lr,
            source_reg=self.source_reg,
            target_reg=self.target_reg,
            epochs=self.epochs,
            negatives_per_positive=self.negatives_per_positive,
            seed=self.seed if seed is None else seed,
            cf_learning_rate=self.cf_learning_rate,
            batch_size=self.batch_size,
        )

    def interactions_path(self, domain: Domain) -> str:
        return self.source_interactions if domain is Domain.SOURCE else self.target_interactions

    def split_dir(self, domain: Domain) -> str:
        return self.source_split_dir if domain is Domain.SOURCE else self.target_split_dir

    def feature_path(self, domain: Domain, name: str) -> str:
        prefix = "source" if domain is Domain.SOURCE else "target"
        return getattr(self, f"{prefix}_{name}")

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **overrides) if overrides else self


def load_config(path) -> ExperimentConfig:
    with Path(path).open("r", encoding="utf-8") as fh:
        data = json.load(fh)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"{path}: unknown config fields {sorted(unknown)}")
    return ExperimentConfig(**data)


def save_config(config: ExperimentConfig, path):
    data = asdict(config)
    data["ks"] = list(config.ks)
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
