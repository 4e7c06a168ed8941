"""Module loggers for the package.

Every module obtains its logger with `get_logger(__name__)`. The level of the
package logger is read from the `STARGRAPH_SSF_LOG_LEVEL` environment variable
(default `WARNING`); the command line `--verbose` flag calls `set_level("DEBUG")`.
"""

from __future__ import annotations

import logging
import os
import sys

PACKAGE_LOGGER = "stargraph_ssf"
LOG_LEVEL_ENV = "STARGRAPH_SSF_LOG_LEVEL"
LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"

_configured = False


def _configure() -> None:
    global _configured
    if _configured:
        return
    root = logging.getLogger(PACKAGE_LOGGER)
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)
    root.setLevel(os.environ.get(LOG_LEVEL_ENV, "WARNING").upper())
    _configured = True


def get_logger(name: str) -> logging.Logger:
    """Return the logger for module `name`, configuring the package logger once."""
    _configure()
    return logging.getLogger(name)


def set_level(level: str) -> None:
    """Set the level of the package logger."""
    _configure()
    logging.getLogger(PACKAGE_LOGGER).setLevel(level.upper())
