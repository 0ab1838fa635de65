"""Command-line entry points and training scripts."""
