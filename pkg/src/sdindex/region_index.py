"""Region index answering top-1 queries for a slope fixed at build time.

Every point's lower rays form a "tent" peaking at the point; the provider
of the highest lower crossing on any vertical axis is the upper envelope
of those tents.  Since all tents share one slope, each point can own at
most one contiguous x-interval of the envelope, so the whole plane splits
into at most ``2n`` regions with a constant (highest-lower, lowest-upper)
provider pair.  A query is then a binary search plus two score evaluations.
"""

from __future__ import annotations

import bisect
import math
from typing import NamedTuple, Optional

from sklearn.base import BaseEstimator

from .exceptions import (
    DuplicateIdError,
    EmptyDatasetError,
    UnknownIdError,
    WrongSlopeError,
)
from .geometry import (
    LLP,
    LUP,
    RLP,
    RUP,
    Point2,
    ProjectionRay,
    Query2,
    Weights2,
    ray_intersection,
    sd_score_2d,
)
from .validation import check_coordinates, check_finite_scalar, check_ids, check_weight_pair


class RegionCell(NamedTuple):
    """One region: valid up to (excluding) ``boundary_x``."""

    boundary_x: float
    lower_id: int
    upper_id: int


def _sweep_envelope(order: list[Point2], slope: float, lower: bool) -> list[tuple[Point2, float]]:
    """Line sweep producing ``(provider, right_boundary)`` runs.

    ``order`` holds points sorted by their left-ray intercept (descending
    for the lower envelope, ascending for the upper), ties by id.  A
    candidate replaces the current provider exactly where its left ray cuts
    the provider's right ray; candidates that never do are discarded.  When
    the two right rays coincide, the smaller id keeps the envelope so that
    query results match the exhaustive scan's tie-break.
    """
    cur = order[0]
    right_kind, left_kind = (RLP, LLP) if lower else (RUP, LUP)
    sign = -1.0 if lower else 1.0
    d_cur = cur.y + sign * slope * cur.x  # right-ray intercept of the provider
    env: list[tuple[Point2, float]] = []
    for cand in order[1:]:
        hit = ray_intersection(
            ProjectionRay(cur, right_kind, slope), ProjectionRay(cand, left_kind, slope)
        )
        if hit is None:
            continue
        d_cand = cand.y + sign * slope * cand.x
        if d_cand == d_cur and cand.id > cur.id:
            continue
        env.append((cur, hit[0]))
        cur = cand
        d_cur = d_cand
    env.append((cur, math.inf))
    return env


def _merge_envelopes(
    lower: list[tuple[Point2, float]], upper: list[tuple[Point2, float]]
) -> list[RegionCell]:
    cells: list[RegionCell] = []
    i = j = 0
    while i < len(lower) and j < len(upper):
        b_low = lower[i][1]
        b_up = upper[j][1]
        b = min(b_low, b_up)
        cells.append(RegionCell(b, lower[i][0].id, upper[j][0].id))
        if b_low == b:
            i += 1
        if b_up == b:
            j += 1
    return cells


class Top1RegionIndex(BaseEstimator):
    """Top-1 index for weight ratios fixed at build time.

    Parameters
    ----------
    slope : float
        The ray slope ``beta / alpha`` the index is specialized for.
        Queries must use weights with exactly this ratio.
    """

    def __init__(self, slope: float = 1.0):
        self.slope = slope

    # -- construction -------------------------------------------------

    def fit(self, X, ids=None) -> "Top1RegionIndex":
        """Index the points in ``X`` (an (n, 2) array of (x, y) rows)."""
        arr = check_coordinates(X, n_cols=2)
        id_list = check_ids(ids, arr.shape[0])
        s = check_finite_scalar("slope", self.slope)
        if s < 0:
            raise WrongSlopeError(f"slope must be non-negative, got {s}")
        self._slope = s
        self._points = {
            pid: Point2(pid, float(x), float(y)) for pid, (x, y) in zip(id_list, arr)
        }
        if len(self._points) != len(id_list):
            raise DuplicateIdError("duplicate point ids")
        self._lower_keys: list[tuple[float, int]] = []
        self._lower_order: list[Point2] = []
        self._upper_keys: list[tuple[float, int]] = []
        self._upper_order: list[Point2] = []
        for p in sorted(self._points.values(), key=self._lower_key):
            self._lower_keys.append(self._lower_key(p))
            self._lower_order.append(p)
        for p in sorted(self._points.values(), key=self._upper_key):
            self._upper_keys.append(self._upper_key(p))
            self._upper_order.append(p)
        self._rebuild(lower=True, upper=True)
        return self

    def _lower_key(self, p: Point2) -> tuple[float, int]:
        # Highest left-lower intercept first.
        return (-(p.y - self._slope * p.x), p.id)

    def _upper_key(self, p: Point2) -> tuple[float, int]:
        # Lowest left-upper intercept first.
        return (p.y + self._slope * p.x, p.id)

    def _rebuild(self, lower: bool, upper: bool) -> None:
        if lower:
            self._lower_env = _sweep_envelope(self._lower_order, self._slope, lower=True)
            self._lower_provider_ids = {p.id for p, _ in self._lower_env}
            self._lower_env_bounds = [b for _, b in self._lower_env]
        if upper:
            self._upper_env = _sweep_envelope(self._upper_order, self._slope, lower=False)
            self._upper_provider_ids = {p.id for p, _ in self._upper_env}
            self._upper_env_bounds = [b for _, b in self._upper_env]
        self.cells_ = _merge_envelopes(self._lower_env, self._upper_env)
        self._boundaries = [c.boundary_x for c in self.cells_]

    # -- queries ------------------------------------------------------

    @property
    def point_count(self) -> int:
        return len(getattr(self, "_points", ()))

    def query(self, x, y, alpha: float = 1.0, beta: float = 1.0) -> tuple[int, float]:
        """Best point id and its score for query ``(x, y)``.

        Ties between the two candidate providers go to the smaller id.
        """
        if not getattr(self, "_points", None):
            raise EmptyDatasetError("query on an empty index")
        a, b = check_weight_pair(alpha, beta)
        if b / a != self._slope:
            raise WrongSlopeError(
                f"index built for slope {self._slope}, query has beta/alpha = {b / a}"
            )
        xq = check_finite_scalar("x", x)
        yq = check_finite_scalar("y", y)
        q = Query2(xq, yq, Weights2(a, b))
        i = bisect.bisect_right(self._boundaries, xq)
        cand_ids = {self.cells_[i].lower_id, self.cells_[i].upper_id}
        if i > 0 and self._boundaries[i - 1] == xq:
            # On an exact region boundary the neighbouring providers tie in
            # projected value; include them so id tie-breaks stay exact.
            cand_ids.add(self.cells_[i - 1].lower_id)
            cand_ids.add(self.cells_[i - 1].upper_id)
        best_id = -1
        best_score = -math.inf
        for pid in sorted(cand_ids):
            score = sd_score_2d(self._points[pid], q)
            if score > best_score:
                best_id, best_score = pid, score
        return best_id, best_score

    # -- updates ------------------------------------------------------

    def _envelope_value(self, env, bounds: list[float], x: float, lower: bool) -> float:
        idx = bisect.bisect_right(bounds, x)
        p, _ = env[min(idx, len(env) - 1)]
        rise = self._slope * abs(x - p.x)
        return p.y - rise if lower else p.y + rise

    def _init_empty(self) -> None:
        s = check_finite_scalar("slope", self.slope)
        if s < 0:
            raise WrongSlopeError(f"slope must be non-negative, got {s}")
        self._slope = s
        self._points = {}
        self._lower_keys, self._lower_order = [], []
        self._upper_keys, self._upper_order = [], []
        self._lower_env, self._upper_env = [], []
        self._lower_provider_ids, self._upper_provider_ids = set(), set()
        self.cells_, self._boundaries = [], []

    def insert(self, point_id: int, x, y) -> "Top1RegionIndex":
        """Add one point; the region array changes only if it can provide."""
        if not hasattr(self, "_points"):
            self._init_empty()
        pid = int(point_id)
        if pid in self._points:
            raise DuplicateIdError(f"id {pid} already indexed")
        p = Point2(pid, check_finite_scalar("x", x), check_finite_scalar("y", y))
        need_lower = need_upper = True
        if self._points:
            # Strictly inside both envelopes: the sweeps would skip p, so
            # the cell array is provably unchanged.
            if p.y < self._envelope_value(self._lower_env, self._lower_env_bounds, p.x, lower=True):
                need_lower = False
            if p.y > self._envelope_value(self._upper_env, self._upper_env_bounds, p.x, lower=False):
                need_upper = False
        self._points[pid] = p
        lk = self._lower_key(p)
        pos = bisect.bisect_left(self._lower_keys, lk)
        self._lower_keys.insert(pos, lk)
        self._lower_order.insert(pos, p)
        uk = self._upper_key(p)
        pos = bisect.bisect_left(self._upper_keys, uk)
        self._upper_keys.insert(pos, uk)
        self._upper_order.insert(pos, p)
        if need_lower or need_upper:
            self._rebuild(lower=need_lower, upper=need_upper)
        return self

    def delete(self, point_id: int) -> "Top1RegionIndex":
        """Remove one point; regions are recomputed only if it provided."""
        pid = int(point_id)
        p = getattr(self, "_points", {}).get(pid)
        if p is None:
            raise UnknownIdError(pid)
        del self._points[pid]
        for keys, order, key in (
            (self._lower_keys, self._lower_order, self._lower_key(p)),
            (self._upper_keys, self._upper_order, self._upper_key(p)),
        ):
            pos = bisect.bisect_left(keys, key)
            keys.pop(pos)
            order.pop(pos)
        if not self._points:
            self._lower_env = []
            self._upper_env = []
            self._lower_provider_ids = set()
            self._upper_provider_ids = set()
            self.cells_ = []
            self._boundaries = []
            return self
        need_lower = pid in self._lower_provider_ids
        need_upper = pid in self._upper_provider_ids
        if need_lower or need_upper:
            self._rebuild(lower=need_lower, upper=need_upper)
        return self
