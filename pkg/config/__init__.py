"""Configuration module for the recited meter classifier."""

from config.settings import settings, validate_settings

__all__ = ["settings", "validate_settings"]
