"""
Utility functions for array-pooling.
"""

import json
import logging
import math
import sys
from dataclasses import asdict, is_dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from enum import Enum
from typing import Any, Dict, Iterable, List, Mapping

import yaml

DECIMALS = 6
_QUANTUM = Decimal(1).scaleb(-DECIMALS)


def setup_logging(verbose: bool = False) -> None:
    """Set up logging configuration.

    Records go to stderr; stdout carries results only.

    :param verbose: Whether to enable verbose logging.
    """
    log_level = logging.DEBUG if verbose else logging.INFO
    log_format = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    logging.basicConfig(
        level=log_level,
        format=log_format,
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )


def format_decimal(value: float, decimals: int = DECIMALS) -> str:
    """Fixed-point text with round-half-even on the exact binary value.

    :param value: Number to format.
    :param decimals: Digits after the point.
    :return: Text such as ``0.606440``; negative zero is printed as ``0.000000``.
    """
    if not math.isfinite(value):
        return str(value)
    quantum = _QUANTUM if decimals == DECIMALS else Decimal(1).scaleb(-decimals)
    text = Decimal(value).quantize(quantum, rounding=ROUND_HALF_EVEN)
    if text.is_zero():
        text = abs(text)
    return f"{text:f}"


def _plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        return float(format_decimal(value)) if value == value else "nan"
    if is_dataclass(value) and not isinstance(value, type):
        return _plain(asdict(value))
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return str(value)


def format_value(value: Any) -> str:
    """Text of one record field: lowercase booleans, six-decimal reals, comma-joined lists."""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format_decimal(value) if value == value else "nan"
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    if value is None:
        return "none"
    return str(value)


def format_records(records: Iterable[Mapping[str, Any]], output_format: str = "records") -> str:
    """Format result records for display.

    :param records: Mappings of field name to value; field order is preserved.
    :param output_format: Output format ('records', 'json' or 'yaml').
    :return: Formatted string representation of the records.
    """
    rows: List[Dict[str, Any]] = [dict(r) for r in records]
    if output_format == "json":
        return json.dumps([_plain(r) for r in rows], indent=2)

    elif output_format == "yaml":
        return yaml.safe_dump([_plain(r) for r in rows], default_flow_style=False, sort_keys=False)

    else:  # key=value lines, one blank line between records
        blocks = [
            "\n".join(f"{key}={format_value(value)}" for key, value in row.items()) for row in rows
        ]
        return "\n\n".join(blocks)
