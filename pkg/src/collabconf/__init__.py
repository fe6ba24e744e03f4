#!/usr/bin/env python
# coding: utf-8
"""Runtime prediction and cluster configuration from shared runtime data."""

# native
import os

# lib
from dotenv import load_dotenv

# pkg
from .__about__ import (
    __version__,
    __pubdate__,
    __author__,
    __email__,
    __copyright__,
    __license__,
)

load_dotenv()

SEED = int(os.getenv("COLLABCONF_SEED", "0"))
"""Master seed used when no `--seed` is given."""

CPUS = os.getenv("COLLABCONF_CPUS", "1")
"""Worker processes; `all` means one per CPU."""

MAX_SPLITS = int(os.getenv("COLLABCONF_MAX_SPLITS", "50"))
"""Default cap on leave-one-out splits during model selection."""

THRESHOLD = float(os.getenv("COLLABCONF_THRESHOLD", "0.10"))
"""Default relative MAPE growth that rejects a contribution."""

HEADROOM = float(os.getenv("COLLABCONF_HEADROOM", "1.5"))
"""Default memory headroom for the bottleneck heuristic."""

LOG_LEVEL = os.getenv("COLLABCONF_LOG_LEVEL", "WARNING")
"""Root log level configured by the command-line tool."""


def num_cpus(value=None) -> int:
    """Return the number of worker processes to use.

    >>> num_cpus("3")
    3
    >>> num_cpus("0")
    1
    >>> num_cpus("all") >= 1
    True
    """
    value = str(value or CPUS)
    count = (os.cpu_count() or 1) if value == "all" else int(value)
    return max(count, 1)
