"""Shared plumbing: logging setup driven by the PKCHAT_LOG env var."""

from __future__ import annotations

import logging
import os

_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def configure_logging(default: str = "info") -> None:
    level = os.environ.get("PKCHAT_LOG", default).strip().lower()
    logging.basicConfig(
        level=_LEVELS.get(level, logging.INFO),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
