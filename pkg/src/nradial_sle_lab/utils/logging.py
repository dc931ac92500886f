"""Logging setup on top of loguru."""

import sys
from typing import Any, Optional

from loguru import logger

LOG_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>"
)


def configure_logging(level: str = "INFO", sink: Optional[Any] = None) -> int:
    """
    Replace loguru's default handler with a single configured sink.

    Args:
        level: Minimum level name
        sink: Destination (defaults to stderr)

    Returns:
        Handler id of the installed sink
    """
    logger.remove()
    return logger.add(sink if sink is not None else sys.stderr, level=level.upper(), format=LOG_FORMAT)
