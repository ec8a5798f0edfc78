"""
Command-line entry point.

Usage:
    python -m neflow run configs/sensor_single_partial_im.json
    python -m neflow check configs/sensor_single_partial_im.json
    python -m neflow ne sensor
    python -m neflow sweep configs/sensor_single_partial_im.json --key graph.seed --values 1,2,3 --jobs 3
"""

import json
import logging
import sys
from typing import List, Optional

import pydantic

from neflow.cli import build_parser
from neflow.cli.common import emit_error
from neflow.config import get_validated_settings
from neflow.core.errors import NeflowError
from neflow.core.logs import configure_logging

logger = logging.getLogger(__name__)

EXIT_ERROR = 1


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        settings = get_validated_settings()
        configure_logging(args.log_level or settings.log_level)
        return args.handler(args)
    except pydantic.ValidationError as e:
        emit_error(f"invalid config: {e}")
    except json.JSONDecodeError as e:
        emit_error(f"malformed JSON: {e}")
    except NeflowError as e:
        logger.debug("command failed", exc_info=True)
        emit_error(f"{type(e).__name__}: {e}")
    except OSError as e:
        emit_error(str(e))
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
