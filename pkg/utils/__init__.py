"""Text processing, metrics, logging and benchmark utilities."""

from utils.logger import get_logger

__all__ = ["get_logger"]
