# modules/logs.py
from __future__ import annotations

import logging
import sys

from pythonjsonlogger.json import JsonFormatter

from modules.settings import get_settings

_CONFIGURED = False


def configure_logging(level: str | None = None, fmt: str | None = None) -> None:
    """
    Attach one stderr handler to the root logger.
    Library modules only call logging.getLogger(__name__); the CLI calls this once.
    """
    global _CONFIGURED

    settings = get_settings()
    level = (level or settings.log_level).upper()
    fmt = (fmt or settings.log_format).lower()

    handler = logging.StreamHandler(sys.stderr)
    if fmt == "json":
        handler.setFormatter(
            JsonFormatter(
                "%(asctime)s %(levelname)s %(name)s %(message)s",
                rename_fields={"levelname": "level", "asctime": "ts"},
            )
        )
    else:
        handler.setFormatter(
            logging.Formatter("%(asctime)s %(levelname)-7s %(name)s: %(message)s")
        )

    root = logging.getLogger()
    if _CONFIGURED:
        for h in list(root.handlers):
            root.removeHandler(h)
    root.addHandler(handler)
    root.setLevel(level)
    _CONFIGURED = True
