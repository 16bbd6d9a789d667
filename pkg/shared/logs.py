"""Logging configuration shared by the engine and the CLI."""

from collections.abc import Iterator
from contextlib import contextmanager
import logging
import os
import sys
import time

# Create a logger instance
logger = logging.getLogger("riesz-bounds")

# Configure default handler if not already configured
if not logger.handlers:
    handler = logging.StreamHandler(sys.stderr)
    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )
    handler.setFormatter(formatter)
    logger.addHandler(handler)
    logger.setLevel(os.getenv("RIESZ_BOUNDS_LOG_LEVEL", "WARNING").upper())


def get_logger(name: str = "riesz-bounds") -> logging.Logger:
    """
    Get a logger under the riesz-bounds hierarchy.

    Module names (``engine.staircase``) are nested below the package logger
    so the handler configured here applies to them.

    Args:
        name: Logger name (defaults to 'riesz-bounds')

    Returns:
        Configured logger instance
    """
    if name != "riesz-bounds" and not name.startswith("riesz-bounds."):
        name = f"riesz-bounds.{name}"
    return logging.getLogger(name)


def set_level(level: int | str) -> None:
    """Set the level of the package logger (used by the CLI --verbose flag)."""
    logger.setLevel(level)


@contextmanager
def log_duration(log: logging.Logger, what: str) -> Iterator[None]:
    """Log the wall time of a block at INFO, also when it raises."""
    start = time.perf_counter()
    try:
        yield
    finally:
        log.info(f"{what} finished in {time.perf_counter() - start:.3f}s")
