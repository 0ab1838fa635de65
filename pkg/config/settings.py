"""Centralized configuration management using environment variables."""

import os
from pathlib import Path
from typing import Optional
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Project root directory
ROOT_DIR = Path(__file__).parent.parent


def _get_bool(key: str, default: str) -> bool:
    return os.getenv(key, default).lower() == "true"


def _get_optional_float(key: str, default: str) -> Optional[float]:
    value = os.getenv(key, default)
    if value.lower() in ("", "none"):
        return None
    return float(value)


class Settings:
    """Application settings loaded from environment variables."""

    def __init__(self):
        """Initialize settings from the environment (no variable is required)."""
        # App Settings
        self.APP_NAME: str = os.getenv("APP_NAME", "Recited Meter")
        self.DEBUG: bool = _get_bool("DEBUG", "True")
        self.LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO").upper()

        # Storage
        self.DATA_DIR: Path = Path(os.getenv("DATA_DIR", str(ROOT_DIR / "data")))
        self.MODEL_DIR: Path = Path(os.getenv("MODEL_DIR", str(ROOT_DIR / "models" / "trained")))

        # Scansion
        self.DIACRITIC_THRESHOLD: float = float(os.getenv("DIACRITIC_THRESHOLD", "0.8"))
        self.PROSE_THRESHOLD: float = float(os.getenv("PROSE_THRESHOLD", "0.15"))

        # Language model
        self.LM_ORDER: int = int(os.getenv("LM_ORDER", "4"))
        self.LM_MIN_COUNT: int = int(os.getenv("LM_MIN_COUNT", "1"))

        # Decoding
        self.BEAM_WIDTH: int = int(os.getenv("BEAM_WIDTH", "64"))
        self.LM_ALPHA: float = float(os.getenv("LM_ALPHA", "0.5"))
        self.LM_BETA: float = float(os.getenv("LM_BETA", "1.0"))
        # Natural-log cut-off below which a symbol is not expanded in a frame
        self.CTC_TOKEN_PRUNE: Optional[float] = _get_optional_float("CTC_TOKEN_PRUNE", "-7.0")
        # Symbols further than this below the frame's best log probability are skipped
        self.CTC_PRUNE_MARGIN: Optional[float] = _get_optional_float("CTC_PRUNE_MARGIN", "4.0")

        # Runs
        self.N_JOBS: int = int(os.getenv("N_JOBS", "1"))
        self.DEFAULT_SEED: int = int(os.getenv("DEFAULT_SEED", "13"))

    def ensure_directories(self) -> None:
        """Create data and model directories on demand."""
        self.DATA_DIR.mkdir(parents=True, exist_ok=True)
        self.MODEL_DIR.mkdir(parents=True, exist_ok=True)

    def is_production(self) -> bool:
        """Check if running in production mode."""
        return not self.DEBUG


# Global settings instance
settings = Settings()


def validate_settings():
    """Validate all settings are correctly configured."""
    errors = []

    if not 0.0 <= settings.DIACRITIC_THRESHOLD <= 1.0:
        errors.append("DIACRITIC_THRESHOLD must lie in [0, 1]")

    if settings.PROSE_THRESHOLD < 0:
        errors.append("PROSE_THRESHOLD must be non-negative")

    if settings.LM_ORDER < 1:
        errors.append("LM_ORDER must be at least 1")

    if settings.LM_MIN_COUNT < 1:
        errors.append("LM_MIN_COUNT must be at least 1")

    if settings.BEAM_WIDTH < 1:
        errors.append("BEAM_WIDTH must be at least 1")

    if settings.LM_ALPHA < 0:
        errors.append("LM_ALPHA must be non-negative")

    if settings.CTC_PRUNE_MARGIN is not None and settings.CTC_PRUNE_MARGIN <= 0:
        errors.append("CTC_PRUNE_MARGIN must be positive")

    if errors:
        error_msg = "\n".join([f"  - {err}" for err in errors])
        raise ValueError(f"Configuration errors:\n{error_msg}\n\nPlease update your .env file.")

    return True
