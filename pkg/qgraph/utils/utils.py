from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

import numpy as np

from qgraph.config import settings

T = TypeVar("T")
R = TypeVar("R")


def format_float(value: float) -> str:
    """Render a float with 17 significant digits (bit-stable round trip)."""
    return format(float(value), ".17g")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """
    Map fn over items, fanning out over a thread pool capped by QGRAPH_THREADS.

    Order of the results matches the order of items.
    """
    items = list(items)
    workers = threads if threads is not None else settings.QGRAPH_THREADS
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def matrix_from_pairs(rows: Sequence[Sequence[Sequence[float]]]) -> np.ndarray:
    """
    Build a complex matrix from nested [re, im] pairs.

    Plain real numbers are accepted in place of pairs.
    """
    out = []
    for row in rows:
        out_row = []
        for entry in row:
            if isinstance(entry, (int, float)):
                out_row.append(complex(entry, 0.0))
            else:
                re, im = entry
                out_row.append(complex(re, im))
        out.append(out_row)
    return np.array(out, dtype=complex)


def matrix_to_pairs(matrix: np.ndarray) -> List[List[List[float]]]:
    """Inverse of matrix_from_pairs."""
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(matrix, dtype=complex)]
