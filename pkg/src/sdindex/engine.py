"""Multidimensional query engine.

An m-dimensional query splits into 2-D subproblems (one repulsive
dimension paired with one attractive dimension, answered by a projection
tree) plus 1-D subproblems for the leftover dimensions (answered by
bidirectional cursors over sorted columns).  Each subproblem emits
(point, partial score) best-first; aggregation fully scores every newly
seen point and stops once the k-th best full score reaches the sum of the
stream frontiers, which upper-bounds everything unseen.
"""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass, field
from itertools import islice
from typing import Iterable, Optional

import numpy as np
from sklearn.base import BaseEstimator

from .columns import SortedColumn, iter_attractive, iter_repulsive
from .exceptions import InvalidQueryError
from .geometry import Query2, Weights2
from .projection_tree import ProjectionTreeIndex
from .region_index import Top1RegionIndex
from .validation import check_coordinates, check_k


@dataclass(frozen=True)
class QuerySpec:
    """One query: coordinates, dimension roles, weights, and k.

    ``repulsive`` and ``attractive`` are disjoint dimension indices;
    ``alpha`` and ``beta`` align positionally with them and must be
    positive.
    """

    coords: tuple[float, ...]
    repulsive: tuple[int, ...]
    attractive: tuple[int, ...]
    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    k: int

    def validate(self, n_dims: int) -> None:
        if len(self.coords) != n_dims:
            raise InvalidQueryError(
                f"query has {len(self.coords)} coordinates, dataset has {n_dims}"
            )
        if not all(math.isfinite(c) for c in self.coords):
            raise InvalidQueryError("query coordinates must be finite")
        dims = self.repulsive + self.attractive
        if not dims:
            raise InvalidQueryError("at least one dimension role is required")
        if len(set(dims)) != len(dims):
            raise InvalidQueryError("repulsive and attractive dimensions must be disjoint")
        if any(d < 0 or d >= n_dims for d in dims):
            raise InvalidQueryError(f"dimension index out of range for {n_dims} dims")
        if len(self.alpha) != len(self.repulsive) or len(self.beta) != len(self.attractive):
            raise InvalidQueryError("one weight per dimension is required")
        if any(not (w > 0.0 and math.isfinite(w)) for w in self.alpha + self.beta):
            raise InvalidQueryError("weights must be positive and finite")
        check_k(self.k)


@dataclass(frozen=True)
class Pairing:
    """Positional pairing of repulsive with attractive dimensions."""

    pairs: tuple[tuple[int, int], ...]
    residual_repulsive: tuple[int, ...]
    residual_attractive: tuple[int, ...]


def pair_dimensions(repulsive: Iterable[int], attractive: Iterable[int]) -> Pairing:
    """Pair the i-th repulsive with the i-th attractive dimension.

    Leftovers of the longer role become residual 1-D subproblems; this
    maximizes the number of 2-D subproblems by construction.
    """
    rep = tuple(int(d) for d in repulsive)
    att = tuple(int(d) for d in attractive)
    m = min(len(rep), len(att))
    return Pairing(
        pairs=tuple(zip(rep[:m], att[:m])),
        residual_repulsive=rep[m:],
        residual_attractive=att[m:],
    )


def score_point(coords, spec: QuerySpec) -> float:
    """Full score of one point: paired terms first, then residuals.

    The accumulation order matches the subproblem decomposition exactly,
    so partial scores sum to this value without rounding slack, and the
    vectorized batch scorer applies the identical operation sequence.
    """
    q = spec.coords
    rep = spec.repulsive
    att = spec.attractive
    alpha = spec.alpha
    beta = spec.beta
    m = min(len(rep), len(att))
    total = 0.0
    for t in range(m):
        d = rep[t]
        s = att[t]
        total += alpha[t] * abs(coords[d] - q[d]) - beta[t] * abs(coords[s] - q[s])
    for t in range(m, len(rep)):
        d = rep[t]
        total += alpha[t] * abs(coords[d] - q[d])
    for t in range(m, len(att)):
        s = att[t]
        total -= beta[t] * abs(coords[s] - q[s])
    return float(total)


def score_batch(coords: np.ndarray, spec: QuerySpec) -> np.ndarray:
    """Vectorized ``score_point`` over an (n, m) array, bit-identical per row."""
    q = spec.coords
    rep = spec.repulsive
    att = spec.attractive
    alpha = spec.alpha
    beta = spec.beta
    m = min(len(rep), len(att))
    total = np.zeros(coords.shape[0], dtype=np.float64)
    for t in range(m):
        total += alpha[t] * np.abs(coords[:, rep[t]] - q[rep[t]]) - beta[t] * np.abs(
            coords[:, att[t]] - q[att[t]]
        )
    for t in range(m, len(rep)):
        total += alpha[t] * np.abs(coords[:, rep[t]] - q[rep[t]])
    for t in range(m, len(att)):
        total -= beta[t] * np.abs(coords[:, att[t]] - q[att[t]])
    return total


def rank_topk(scores: np.ndarray, k: int) -> list[tuple[int, float]]:
    """Top-k row indices by (score desc, index asc), exact under ties."""
    n = len(scores)
    kk = min(k, n)
    if kk == 0:
        return []
    if kk == n:
        cand = np.arange(n)
    else:
        part = np.argpartition(-scores, kk - 1)[:kk]
        kth = scores[part].min()
        cand = np.flatnonzero(scores >= kth)
    order = np.lexsort((cand, -scores[cand]))
    chosen = cand[order][:kk]
    return [(int(i), float(scores[i])) for i in chosen]


@dataclass
class SolveStats:
    """Trace of one aggregation run (useful for tests and diagnostics)."""

    mode: str = "aggregate"
    iterations: int = 0
    scored: int = 0
    thresholds: list[float] = field(default_factory=list)


class _PairStream:
    """Best-first (id, partial) stream for one 2-D pair.

    Backed by the pair tree's incremental ranking, which reuses a single
    separating path and overlay across the whole drain.
    """

    __slots__ = ("_it",)

    def __init__(self, tree: ProjectionTreeIndex, q2: Query2):
        w = q2.weights
        self._it = tree.ranked_stream(q2.x, q2.y, w.alpha, w.beta)

    def next(self) -> Optional[tuple[int, float]]:
        return next(self._it, None)


class _ResidualStream:
    """Best-first (id, partial) stream for one leftover dimension."""

    __slots__ = ("_it", "_weight", "_repulsive")

    def __init__(self, col: SortedColumn, q_d: float, weight: float, repulsive: bool):
        self._it = iter_repulsive(col, q_d) if repulsive else iter_attractive(col, q_d)
        self._weight = weight
        self._repulsive = repulsive

    def next(self) -> Optional[tuple[int, float]]:
        item = next(self._it, None)
        if item is None:
            return None
        pid, dist = item
        if self._repulsive:
            return pid, self._weight * dist
        return pid, 0.0 - self._weight * dist


class SDIndex(BaseEstimator):
    """Index for top-k queries mixing repulsive and attractive dimensions.

    Dimension roles and their pairing are fixed at fit time; weights and k
    stay free per query.  A query declaring a different role partition
    falls back to a sequential scan with a warning.

    Parameters
    ----------
    repulsive, attractive : sequences of dimension indices
        Build-time role declaration; the i-th repulsive dimension is
        paired with the i-th attractive one.
    branching, angles, rebuild_threshold
        Passed through to each pair's projection tree.
    """

    def __init__(
        self,
        repulsive=(0,),
        attractive=(1,),
        branching: int = 16,
        angles: tuple[float, ...] = (0.0, 23.0, 45.0, 67.0),
        rebuild_threshold: float = 0.1,
    ):
        self.repulsive = repulsive
        self.attractive = attractive
        self.branching = branching
        self.angles = angles
        self.rebuild_threshold = rebuild_threshold

    def fit(self, X) -> "SDIndex":
        coords = check_coordinates(X)
        n, m = coords.shape
        rep = tuple(int(d) for d in self.repulsive)
        att = tuple(int(d) for d in self.attractive)
        overlap = set(rep) & set(att)
        if overlap:
            raise InvalidQueryError(f"dimensions {sorted(overlap)} declared in both roles")
        if any(d < 0 or d >= m for d in rep + att):
            raise InvalidQueryError(f"declared dimension out of range for {m} columns")
        self.coords_ = coords
        self.n_points_ = n
        self.n_dims_ = m
        self._repulsive = rep
        self._attractive = att
        self.pairing_ = pair_dimensions(rep, att)
        self.trees_ = []
        self.top1_ = []
        for d, s in self.pairing_.pairs:
            xy = np.column_stack((coords[:, s], coords[:, d]))
            self.trees_.append(
                ProjectionTreeIndex(
                    branching=self.branching,
                    angles=self.angles,
                    rebuild_threshold=self.rebuild_threshold,
                ).fit(xy)
            )
            self.top1_.append(Top1RegionIndex(slope=1.0).fit(xy))
        self.columns_ = {
            dim: SortedColumn.from_unsorted(coords[:, dim]) for dim in rep + att
        }
        return self

    # -- scan fallback --------------------------------------------------

    def _scan(self, spec: QuerySpec) -> list[tuple[int, float]]:
        return rank_topk(score_batch(self.coords_, spec), spec.k)

    # -- aggregation ----------------------------------------------------

    def solve(self, spec: QuerySpec, return_stats: bool = False):
        """Exact top-k for ``spec``: list of (id, score), best first."""
        spec.validate(self.n_dims_)
        stats = SolveStats()
        if set(spec.repulsive) != set(self._repulsive) or set(spec.attractive) != set(
            self._attractive
        ):
            warnings.warn(
                "query role partition differs from the fitted declaration; "
                "answering by sequential scan",
                stacklevel=2,
            )
            stats.mode = "scan-fallback"
            result = self._scan(spec)
            return (result, stats) if return_stats else result

        alpha_of = dict(zip(spec.repulsive, spec.alpha))
        beta_of = dict(zip(spec.attractive, spec.beta))
        pairing = self.pairing_
        k = spec.k

        if len(pairing.pairs) == 1 and not (
            pairing.residual_repulsive or pairing.residual_attractive
        ):
            d, s = pairing.pairs[0]
            a = alpha_of[d]
            b = beta_of[s]
            if k == 1 and b / a == 1.0:
                stats.mode = "top1-region"
                pid, score = self.top1_[0].query(spec.coords[s], spec.coords[d], a, b)
                result = [(pid, score)]
            else:
                stats.mode = "pair-tree"
                result = self.trees_[0].query_topk(spec.coords[s], spec.coords[d], a, b, k)
            return (result, stats) if return_stats else result

        streams: list = []
        for (d, s), tree in zip(pairing.pairs, self.trees_):
            q2 = Query2(spec.coords[s], spec.coords[d], Weights2(alpha_of[d], beta_of[s]))
            streams.append(_PairStream(tree, q2))
        for d in pairing.residual_repulsive:
            streams.append(_ResidualStream(self.columns_[d], spec.coords[d], alpha_of[d], True))
        for s in pairing.residual_attractive:
            streams.append(_ResidualStream(self.columns_[s], spec.coords[s], beta_of[s], False))

        coords = self.coords_
        kk = min(k, self.n_points_)
        frontier = [math.inf] * len(streams)
        exhausted = [False] * len(streams)
        seen: set[int] = set()
        heap: list[tuple[float, int, int]] = []  # (score, -id, id); root is worst kept
        while True:
            stats.iterations += 1
            alive = False
            for si, stream in enumerate(streams):
                if exhausted[si]:
                    continue
                item = stream.next()
                if item is None:
                    exhausted[si] = True
                    continue
                alive = True
                pid, partial = item
                frontier[si] = partial
                if pid not in seen:
                    seen.add(pid)
                    full = score_point(coords[pid], spec)
                    stats.scored += 1
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
            stats.thresholds.append(threshold)
            if len(heap) == kk and heap[0][0] >= threshold:
                break
            if not alive:
                break
        result = [(pid, score) for score, _, pid in sorted(heap, key=lambda t: (-t[0], t[2]))]
        return (result, stats) if return_stats else result
