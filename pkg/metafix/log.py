# -*- coding: utf-8; -*-
"""Logging setup for the command-line harness.

Library modules only ever do `logger = logging.getLogger(__name__)`; nothing
here runs on import. The CLI calls `setup_logging` once.
"""

__all__ = ["ColorizedFormatter", "setup_logging"]

import logging
import sys

from .colorizer import ColorScheme, colorize

_level_colors = {logging.DEBUG: "LOGDEBUG",
                 logging.INFO: "LOGINFO",
                 logging.WARNING: "LOGWARNING",
                 logging.ERROR: "LOGERROR",
                 logging.CRITICAL: "LOGERROR"}


class ColorizedFormatter(logging.Formatter):
    """Format log records as `LEVEL name: message`, with the level colored."""
    def __init__(self, color=True):
        super().__init__()
        self.color = color

    def format(self, record):
        message = record.getMessage()
        if record.exc_info:
            message = f"{message}\n{self.formatException(record.exc_info)}"
        level = record.levelname
        name = record.name
        if self.color:
            scheme_entry = _level_colors.get(record.levelno, "LOGINFO")
            level = colorize(level, getattr(ColorScheme, scheme_entry))
            name = colorize(name, ColorScheme.LOGGERNAME)
        return f"{level} {name}: {message}"


def setup_logging(level=logging.WARNING, stream=None, color=None):
    """Install one handler on the `metafix` logger, replacing any previous one.

    `color=None` means: color if `stream` is a terminal.

    Returns the `metafix` logger.
    """
    stream = stream if stream is not None else sys.stderr
    if color is None:
        color = hasattr(stream, "isatty") and stream.isatty()
    logger = logging.getLogger("metafix")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    handler = logging.StreamHandler(stream)
    handler.setFormatter(ColorizedFormatter(color=color))
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    return logger
