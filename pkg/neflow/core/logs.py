"""
Logging setup for the CLI. Library modules only create loggers.
"""

import logging
import sys

LOG_FORMAT = "[%(name)s] %(levelname)s %(message)s"


def configure_logging(level: str = "INFO") -> None:
    """Install one stderr handler on the neflow logger (idempotent)."""
    root = logging.getLogger("neflow")
    root.setLevel(level.upper())
    if not any(getattr(h, "_neflow", False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._neflow = True
        root.addHandler(handler)
