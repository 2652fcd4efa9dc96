"""
Date utility functions for interaction timestamps and run directory names.
"""
from datetime import datetime, timezone
from typing import Union

from dateutil import parser as date_parser


def parse_timestamp(value: Union[str, int, float]) -> float:
    """
    Convert an interaction timestamp to epoch seconds.

    Args:
        value: Epoch seconds (int/float or numeric string) or a date string
               in any format dateutil understands (ISO-8601, "2021-03-04", ...)

    Returns:
        float: Seconds since the epoch; naive dates are taken as UTC

    Raises:
        ValueError: If the value cannot be interpreted as a timestamp
    """
    if isinstance(value, bool):
        raise ValueError(f"Invalid timestamp: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)

    text = str(value).strip()
    if not text:
        raise ValueError("Empty timestamp")

    try:
        return float(text)
    except ValueError:
        pass

    try:
        parsed = date_parser.parse(text)
    except (ValueError, OverflowError) as e:
        raise ValueError(f"Invalid timestamp: {value!r}") from e

    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.timestamp()


def run_stamp() -> str:
    """
    Get the current time formatted for run directory names.

    Returns:
        str: Current local time as YYYYmmdd-HHMMSS
    """
    return datetime.now().strftime("%Y%m%d-%H%M%S")
