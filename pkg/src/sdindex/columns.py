"""Sorted single-dimension columns with bidirectional frontier cursors.

A column stores one dimension's values sorted ascending (ties by id).
Two cursor flavours walk it relative to a query value:

* attractive: nearest values first, starting from the insertion position
  and expanding outward;
* repulsive: farthest values first, starting at both extremes and moving
  inward.

Both emit ``(id, distance)`` with non-increasing relevance, which is what
threshold-style aggregation needs.
"""

from __future__ import annotations

from typing import Iterator, Tuple

import numpy as np


class SortedColumn:
    """One dimension's values, sorted ascending with id tie-break."""

    __slots__ = ("values", "ids")

    def __init__(self, values: np.ndarray, ids: np.ndarray):
        self.values = values
        self.ids = ids

    @classmethod
    def from_unsorted(cls, values, ids=None) -> "SortedColumn":
        vals = np.asarray(values, dtype=np.float64)
        if ids is None:
            ids = np.arange(len(vals), dtype=np.int64)
        else:
            ids = np.asarray(ids, dtype=np.int64)
        order = np.lexsort((ids, vals))
        return cls(vals[order], ids[order])

    def __len__(self) -> int:
        return len(self.values)


def iter_attractive(col: SortedColumn, q: float) -> Iterator[Tuple[int, float]]:
    """Yield (id, |value - q|) in non-decreasing distance, ties by smaller id."""
    vals = col.values
    ids = col.ids
    n = len(vals)
    right = int(np.searchsorted(vals, q, side="left"))
    left = right - 1
    while left >= 0 or right < n:
        if left < 0:
            take_right = True
        elif right >= n:
            take_right = False
        else:
            dl = abs(vals[left] - q)
            dr = abs(vals[right] - q)
            take_right = dr < dl or (dr == dl and ids[right] < ids[left])
        if take_right:
            yield int(ids[right]), float(abs(vals[right] - q))
            right += 1
        else:
            yield int(ids[left]), float(abs(vals[left] - q))
            left -= 1


def iter_repulsive(col: SortedColumn, q: float) -> Iterator[Tuple[int, float]]:
    """Yield (id, |value - q|) in non-increasing distance, ties by smaller id."""
    vals = col.values
    ids = col.ids
    left = 0
    right = len(vals) - 1
    while left <= right:
        dl = abs(vals[left] - q)
        dr = abs(vals[right] - q)
        if dl > dr or (dl == dr and ids[left] <= ids[right]):
            yield int(ids[left]), float(dl)
            left += 1
        else:
            yield int(ids[right]), float(dr)
            right -= 1
