"""
Logging for the lab.

Everything goes to stderr through rich, so --json output and CSV payloads
stay clean. NumPy/SciPy warnings (sparse efficiency, overflow in exp) are
captured into the same handler instead of printing raw to the terminal.
"""

import logging
from typing import Literal, cast, get_args

from rich.console import Console
from rich.logging import RichHandler

LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]

LOG_LEVELS: tuple[str, ...] = get_args(LogLevel)

_QUIET_LOGGERS = ("hypothesis", "scipy")


def resolve_level(configured: str, verbose: bool = False) -> LogLevel:
    """--verbose wins; otherwise ELLIP_LOG_LEVEL, falling back to INFO when unrecognized."""
    if verbose:
        return "DEBUG"
    level = configured.strip().upper()
    return cast(LogLevel, level) if level in LOG_LEVELS else "INFO"


def setup_logging(level: LogLevel = "INFO") -> logging.Logger:
    """
    Configure the rich handler on stderr.

    Safe to call more than once; the last call wins.
    """
    handler = RichHandler(
        console=Console(stderr=True),
        show_time=True,
        show_path=False,
        rich_tracebacks=True,
        tracebacks_show_locals=False,
    )
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[handler],
        force=True,
    )
    logging.captureWarnings(True)

    for name in _QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)

    return logging.getLogger("ellip")


def get_logger(name: str) -> logging.Logger:
    """Logger under the ellip namespace, e.g. get_logger("semigroup.evolve")."""
    return logging.getLogger(f"ellip.{name}")
