"""Run configuration for decoding, classification and evaluation runs."""

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional, Union

from config.settings import settings
from models.lm.ngram import FusionConfig
from utils.errors import ConfigError

DECODERS = ("greedy", "beam")
CLASSIFIERS = ("scansion", "head")


@dataclass
class RunConfig:
    """
    One system configuration.

    `ablation` feeds ground-truth transcripts straight to the classifier,
    bypassing decoding. The synthetic fields (frames_per_char, noise,
    blank_prob) only apply to emissions generated from transcripts.
    """

    decoder: str = "beam"
    use_lm: bool = False
    fusion: FusionConfig = field(default_factory=FusionConfig.from_settings)
    classifier: str = "scansion"
    seed: int = field(default_factory=lambda: settings.DEFAULT_SEED)
    beam_width: int = field(default_factory=lambda: settings.BEAM_WIDTH)
    n_best: int = 1
    token_prune: Optional[float] = field(default_factory=lambda: settings.CTC_TOKEN_PRUNE)
    prune_margin: Optional[float] = field(default_factory=lambda: settings.CTC_PRUNE_MARGIN)
    lm_path: Optional[str] = None
    head_path: Optional[str] = None
    prose_threshold: float = field(default_factory=lambda: settings.PROSE_THRESHOLD)
    diacritic_threshold: float = field(default_factory=lambda: settings.DIACRITIC_THRESHOLD)
    ablation: bool = False
    frames_per_char: int = 3
    noise: float = 0.0
    blank_prob: float = 0.3
    n_jobs: int = field(default_factory=lambda: settings.N_JOBS)

    def validate(self) -> "RunConfig":
        """
        Check the configuration invariants.

        Raises:
            ConfigError: listing every violated invariant
        """
        errors = []
        if self.decoder not in DECODERS:
            errors.append(f"decoder must be one of {DECODERS}, got {self.decoder!r}")
        if self.classifier not in CLASSIFIERS:
            errors.append(f"classifier must be one of {CLASSIFIERS}, got {self.classifier!r}")
        if self.beam_width < 1:
            errors.append("beam_width must be at least 1")
        if self.n_best < 1:
            errors.append("n_best must be at least 1")
        if self.prune_margin is not None and self.prune_margin <= 0:
            errors.append("prune_margin must be positive")
        if self.use_lm and not self.lm_path:
            errors.append("use_lm requires lm_path")
        if self.use_lm and self.decoder != "beam":
            errors.append("use_lm requires the beam decoder")
        if self.classifier == "head" and not self.head_path:
            errors.append("classifier 'head' requires head_path")
        if self.frames_per_char < 1:
            errors.append("frames_per_char must be at least 1")
        if not 0.0 <= self.noise < 1.0:
            errors.append("noise must lie in [0, 1)")
        if not 0.0 <= self.blank_prob <= 1.0:
            errors.append("blank_prob must lie in [0, 1]")
        if errors:
            raise ConfigError("invalid run configuration: " + "; ".join(errors))
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """
        Build from a mapping mirroring the field names.

        Fusion weights may be nested ({"fusion": {"alpha": ..}}) or flat
        ("alpha", "beta").
        """
        data = dict(data)
        fusion = dict(data.pop("fusion", None) or {})
        for key in ("alpha", "beta"):
            if key in data:
                fusion[key] = data.pop(key)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        try:
            if fusion:
                defaults = FusionConfig.from_settings()
                data["fusion"] = FusionConfig(
                    alpha=float(fusion.get("alpha", defaults.alpha)),
                    beta=float(fusion.get("beta", defaults.beta)),
                )
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid run configuration: {exc}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        """Read a JSON configuration file."""
        try:
            with open(path, encoding="utf-8") as handle:
                data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})")
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: configuration must be a JSON object")
        return cls.from_dict(data)

    def replace(self, **changes) -> "RunConfig":
        return RunConfig.from_dict({**self.to_dict(), **changes})
