"""Reference engines and synthetic data.

``scan_topk`` is the ground truth every other engine is checked against.
``ta_topk`` is the classic threshold-algorithm adaptation: one sorted
stream per queried dimension (farthest-first for repulsive, closest-first
for attractive) with random access for full scoring.  ``generate``
produces the three standard benchmark distributions, deterministically
per seed.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from .columns import SortedColumn, iter_attractive, iter_repulsive
from .engine import QuerySpec, rank_topk, score_batch, score_point
from .exceptions import InvalidQueryError

GENERATOR_NAME = "numpy-pcg64"

DISTRIBUTIONS = ("uniform", "correlated", "anticorrelated")


def scan_topk(coords: np.ndarray, spec: QuerySpec) -> list[tuple[int, float]]:
    """Exhaustive top-k: score every row, rank by (score desc, id asc)."""
    coords = np.asarray(coords, dtype=np.float64)
    spec.validate(coords.shape[1])
    return rank_topk(score_batch(coords, spec), spec.k)


def build_columns(coords: np.ndarray, dims) -> dict[int, SortedColumn]:
    """One sorted column per requested dimension index."""
    coords = np.asarray(coords, dtype=np.float64)
    return {int(d): SortedColumn.from_unsorted(coords[:, int(d)]) for d in dims}


def ta_topk(
    columns: dict[int, SortedColumn], coords: np.ndarray, spec: QuerySpec
) -> list[tuple[int, float]]:
    """Threshold algorithm over per-dimension sorted streams.

    Stops once the k-th best fully-scored point reaches the sum of the
    per-dimension frontier contributions, which bounds every unseen point.
    """
    spec.validate(coords.shape[1])
    cursors = []
    weights = []
    for d, w in zip(spec.repulsive, spec.alpha):
        cursors.append(iter_repulsive(columns[d], spec.coords[d]))
        weights.append(w)
    for s, w in zip(spec.attractive, spec.beta):
        cursors.append(iter_attractive(columns[s], spec.coords[s]))
        weights.append(-w)
    n = coords.shape[0]
    kk = min(spec.k, n)
    frontier = [math.inf] * len(cursors)
    exhausted = [False] * len(cursors)
    seen: set[int] = set()
    heap: list[tuple[float, int, int]] = []
    while True:
        alive = False
        for ci, cur in enumerate(cursors):
            if exhausted[ci]:
                continue
            item = next(cur, None)
            if item is None:
                exhausted[ci] = True
                continue
            alive = True
            pid, dist = item
            w = weights[ci]
            frontier[ci] = w * dist if w >= 0 else 0.0 - (-w) * dist
            if pid not in seen:
                seen.add(pid)
                full = score_point(coords[pid], spec)
                entry = (full, -pid, pid)
                if len(heap) < kk:
                    heapq.heappush(heap, entry)
                elif entry > heap[0]:
                    heapq.heapreplace(heap, entry)
        if any(exhausted):
            threshold = -math.inf
        else:
            threshold = 0.0
            for f in frontier:
                threshold += f
        if len(heap) == kk and heap[0][0] >= threshold:
            break
        if not alive:
            break
    return [(pid, score) for score, _, pid in sorted(heap, key=lambda t: (-t[0], t[2]))]


def generate(
    dist: str, n: int, dims: int, sigma: float = 0.05, seed: int = 0
) -> np.ndarray:
    """Deterministic (n, dims) sample in [0, 1] from a named distribution.

    uniform: i.i.d. coordinates.  correlated: one base value per point,
    each coordinate jittered around it.  anticorrelated: coordinates
    alternate between the base and its complement, jittered.
    """
    if dist not in DISTRIBUTIONS:
        raise InvalidQueryError(f"unknown distribution {dist!r}; expected one of {DISTRIBUTIONS}")
    if n < 1 or dims < 1:
        raise InvalidQueryError(f"need n >= 1 and dims >= 1, got n={n}, dims={dims}")
    if sigma < 0:
        raise InvalidQueryError(f"sigma must be non-negative, got {sigma}")
    rng = np.random.default_rng(seed)
    if dist == "uniform":
        return rng.random((n, dims))
    base = rng.random(n)
    jitter = rng.normal(0.0, sigma, (n, dims)) if sigma > 0 else np.zeros((n, dims))
    coords = np.empty((n, dims), dtype=np.float64)
    for d in range(dims):
        if dist == "correlated" or d % 2 == 0:
            coords[:, d] = base + jitter[:, d]
        else:
            coords[:, d] = 1.0 - base + jitter[:, d]
    return np.clip(coords, 0.0, 1.0)
