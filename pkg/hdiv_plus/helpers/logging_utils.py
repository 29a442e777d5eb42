"""Logging utilities for hdiv-plus."""

from __future__ import annotations

import logging
from typing import Any

import numpy as np

# Arrays with at most this many entries are logged verbatim
_INLINE_SIZE = 8


def summarize(data: Any) -> Any:
    """Replace a numpy array by a one-line summary string."""
    if not isinstance(data, np.ndarray):
        return data
    if data.size <= _INLINE_SIZE:
        return np.array2string(data, precision=4, separator=",")
    if not np.issubdtype(data.dtype, np.number):
        return f"array(shape={data.shape}, dtype={data.dtype})"
    return (
        f"array(shape={data.shape}, min={data.min():.4g}, "
        f"max={data.max():.4g}, norm={np.linalg.norm(data):.4g})"
    )


class ArraySummaryFilter(logging.Filter):
    """Filter to compact numpy arrays in log record arguments."""

    def filter(self, record: logging.LogRecord) -> bool:
        """Summarize array arguments of the record."""
        if record.args and isinstance(record.args, tuple):
            # Only allocate new list if an array is present
            new_args: list[Any] | None = None
            for i, arg in enumerate(record.args):
                if isinstance(arg, np.ndarray):
                    if new_args is None:
                        new_args = list(record.args[:i])
                    new_args.append(summarize(arg))
                elif new_args is not None:
                    new_args.append(arg)

            if new_args is not None:
                record.args = tuple(new_args)

        return True


def get_summarizing_logger(name: str) -> logging.Logger:
    """Get a logger with the array summary filter attached."""
    logger = logging.getLogger(name)
    if not any(isinstance(f, ArraySummaryFilter) for f in logger.filters):
        logger.addFilter(ArraySummaryFilter())
    return logger
