"""Grid evaluation with optional thread partitioning and deterministic reassembly."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np


def grid_map(imm, resolution: Sequence[int], fn: Callable, order: int = 2,
             threads: int = 1, points: np.ndarray = None) -> dict:
    """Evaluate ``fn(jet) -> dict of arrays`` over a parameter grid.

    Points are split into contiguous chunks; results are concatenated in
    chunk order, so the output does not depend on ``threads``.  Arrays come
    back shaped ``(*resolution, ...)``.
    """
    pts = imm.domain.grid(resolution) if points is None else np.asarray(points, dtype=float)
    grid_shape = pts.shape[:-1]
    flat = pts.reshape(-1, pts.shape[-1])

    def work(chunk):
        return fn(imm.jet(chunk, order))

    if threads <= 1:
        parts = [work(flat)]
    else:
        chunks = np.array_split(flat, threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    out = {}
    for key in parts[0]:
        arr = np.concatenate([np.asarray(p[key]) for p in parts], axis=0)
        out[key] = arr.reshape(grid_shape + arr.shape[1:])
    out["t"] = pts
    return out
