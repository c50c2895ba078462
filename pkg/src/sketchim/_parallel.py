import os
from contextlib import contextmanager
from typing import Optional

import numba

# the bundled TBB is too old for numba and only produces a warning
if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


def max_threads() -> int:
    return numba.config.NUMBA_NUM_THREADS


def resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        env = os.environ.get("SKETCHIM_THREADS")
        threads = int(env) if env else max_threads()
    return max(1, min(int(threads), max_threads()))


@contextmanager
def thread_limit(threads: Optional[int]):
    prev = numba.get_num_threads()
    numba.set_num_threads(resolve_threads(threads))
    try:
        yield
    finally:
        numba.set_num_threads(prev)
