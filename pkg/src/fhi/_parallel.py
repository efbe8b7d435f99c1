"""Thread-pool helper honouring the ``FHI_THREADS`` cap."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from fhi.errors import ConfigError


def worker_count() -> int:
    raw = os.environ.get("FHI_THREADS", "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"not an integer: {raw!r}", field="FHI_THREADS") from None
    if n < 1:
        raise ConfigError("must be >= 1", field="FHI_THREADS")
    return n


def thread_map(fn, items) -> list:
    """``[fn(i) for i in items]``, spread over at most :func:`worker_count` threads.

    Order of results matches ``items``; with one worker no pool is created.
    """
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
