"""Balanced b-ary tree over x-values answering top-k queries.

Non-leaf nodes carry, per indexed ray slope, the extreme supporting-line
intercepts of the four ray directions over their subtree, giving the tree
a heap-like property per direction.  A query first finds the root-to-leaf
"separating path" for its axis, restricting left-ray bounds to subtrees at
or right of the path (and right-ray bounds symmetrically); best-first
descents then drain each direction's points in projected order without
touching shared state: all bound updates live in a per-query overlay.

Arbitrary weight ratios are answered through the neighbouring indexed
slopes: the exact answer at the lower slope is contained in the shortest
best-first prefix of the upper slope's ranking that covers it (one-shot
queries), and the lower slope's ranking alone bounds the true score of
everything it has not yet emitted (incremental streams).
"""

from __future__ import annotations

import bisect
import heapq
import math
from itertools import islice
from typing import Iterator, Optional

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import (
    DuplicateIdError,
    InvalidQueryError,
    UnknownIdError,
    WrongSlopeError,
)
from .geometry import EXTENDS_LEFT, Point2, selected_kind
from .validation import (
    check_coordinates,
    check_finite_scalar,
    check_ids,
    check_k,
    check_weight_pair,
)

_ALL_KINDS = (0, 1, 2, 3)


def slope_of_degrees(deg: float) -> float:
    """Ray slope for an angle in degrees, with exact anchors at 0 and 45."""
    if deg == 0.0:
        return 0.0
    if deg == 45.0:
        return 1.0
    return math.tan(math.radians(deg))


class _Leaf:
    __slots__ = ("point", "parent", "depth")

    def __init__(self, point: Point2, parent, depth: int):
        self.point = point
        self.parent = parent
        self.depth = depth


class _Node:
    __slots__ = ("children", "separators", "max_x", "bounds", "order", "parent")

    def __init__(self):
        self.parent = None


def _leaf_entries(p: Point2, s: float):
    """(intercept, id, -1) per direction; llp/rup share a line, rlp/lup the other."""
    sx = s * p.x
    lo = (p.y - sx, p.id, -1)
    hi = (p.y + sx, p.id, -1)
    return (lo, hi, hi, lo)


class _Overlay:
    """Per-query view: separating path plus bound overrides per slope.

    The shared tree is never written during a query; consumed leaves and
    recalculated ancestor bounds live here, one state dict per indexed
    slope actually used.  Entries are (value, id, child_index) with the
    index naming the providing child, so descents follow pointers.
    """

    __slots__ = ("x_q", "y_q", "path", "path_child_idx", "leaf", "states", "accepted", "filtered")

    def __init__(self, x_q: float, y_q: float):
        self.x_q = x_q
        self.y_q = y_q
        self.path: list[tuple[_Node, int]] = []
        self.path_child_idx: dict = {}
        self.leaf: Optional[_Leaf] = None
        self.states: dict[int, dict] = {}
        self.accepted = 0
        self.filtered = 0


class ProjectionTreeIndex(BaseEstimator):
    """Top-k index over 2-D points for runtime-chosen k and weights.

    Parameters
    ----------
    branching : int
        Fan-out b of the balanced tree.
    angles : sequence of float
        Indexed ray angles in degrees, strictly increasing within [0, 90).
        Queries at non-indexed ratios are answered through the bracketing
        indexed slopes; a ratio steeper than the largest angle brackets
        against the vertical (nearest-by-x) ranking, and vertical queries
        themselves (alpha == 0) bypass the tree entirely.
    rebuild_threshold : float
        Rebuild when the fraction of leaves deeper than the balanced height
        exceeds this value.
    """

    def __init__(
        self,
        branching: int = 16,
        angles: tuple[float, ...] = (0.0, 23.0, 45.0, 67.0),
        rebuild_threshold: float = 0.1,
    ):
        self.branching = branching
        self.angles = angles
        self.rebuild_threshold = rebuild_threshold

    # -- construction -------------------------------------------------

    def fit(self, X, ids=None) -> "ProjectionTreeIndex":
        arr = check_coordinates(X, n_cols=2)
        id_list = check_ids(ids, arr.shape[0])
        self._validate_params()
        pts = sorted(
            (Point2(pid, float(x), float(y)) for pid, (x, y) in zip(id_list, arr)),
            key=lambda p: (p.x, p.id),
        )
        self._points_by_x = pts
        self._x_only = [p.x for p in pts]
        self._depth_counts: dict[int, int] = {}
        self.root_ = self._build(pts, 0, len(pts), 0)
        self._leaf_map: Optional[dict[int, _Leaf]] = None
        self._orders = None
        self._ensure_orders()
        return self

    def _validate_params(self) -> None:
        b = int(self.branching)
        if not 2 <= b <= 255:
            raise InvalidQueryError(f"branching must be in [2, 255], got {self.branching}")
        self._b = b
        angles = tuple(float(a) for a in self.angles)
        if not angles:
            raise InvalidQueryError("at least one indexed angle is required")
        if any(not (0.0 <= a < 90.0) for a in angles):
            raise InvalidQueryError(f"angles must lie in [0, 90), got {angles}")
        if any(a2 <= a1 for a1, a2 in zip(angles, angles[1:])):
            raise InvalidQueryError("angles must be strictly increasing")
        thr = float(self.rebuild_threshold)
        if not 0.0 < thr <= 1.0:
            raise InvalidQueryError(f"rebuild_threshold must be in (0, 1], got {thr}")
        self._thr = thr
        self.slopes_ = tuple(slope_of_degrees(a) for a in angles)
        self._slope_pos = {s: i for i, s in enumerate(self.slopes_)}

    def _build(self, pts: list[Point2], lo: int, hi: int, depth: int):
        if hi - lo == 1:
            leaf = _Leaf(pts[lo], None, depth)
            self._depth_counts[depth] = self._depth_counts.get(depth, 0) + 1
            return leaf
        chunk = -(-(hi - lo) // self._b)
        node = _Node()
        children = []
        i = lo
        while i < hi:
            child = self._build(pts, i, min(i + chunk, hi), depth + 1)
            child.parent = node
            children.append(child)
            i += chunk
        node.children = children
        self._refresh_node(node)
        return node

    def _refresh_node(self, node: _Node) -> None:
        """Recompute max_x, separators, per-slope bounds, and child ranks.

        ``order`` ranks the children best-first per (slope, direction), so
        query-time recalculations only walk until the first child whose
        static bound is still live.
        """
        children = node.children
        nb = len(children)
        maxima = [ch.max_x if type(ch) is _Node else ch.point.x for ch in children]
        node.max_x = maxima[-1]
        node.separators = maxima[:-1]
        bounds = []
        order = bytearray(len(self.slopes_) * 4 * nb)
        for ai, s in enumerate(self.slopes_):
            row = []
            for kind in _ALL_KINDS:
                entries = []
                for j, ch in enumerate(children):
                    if type(ch) is _Node:
                        e = ch.bounds[ai][kind]
                        entries.append((e[0], e[1], j))
                    else:
                        p = ch.point
                        v = p.y - s * p.x if kind == 0 or kind == 3 else p.y + s * p.x
                        entries.append((v, p.id, j))
                if kind < 2:
                    entries.sort(key=lambda t: (-t[0], t[1]))
                else:
                    entries.sort(key=lambda t: (t[0], t[1]))
                base = (ai * 4 + kind) * nb
                for t, (_, _, j) in enumerate(entries):
                    order[base + t] = j
                row.append(entries[0])
            bounds.append(row)
        node.bounds = bounds
        node.order = bytes(order)

    # -- query plumbing -----------------------------------------------

    @property
    def point_count(self) -> int:
        return len(getattr(self, "_points_by_x", ()))

    @property
    def height(self) -> int:
        counts = getattr(self, "_depth_counts", None)
        return max(counts) if counts else 0

    def _make_overlay(self, x_q: float, y_q: float) -> _Overlay:
        ov = _Overlay(x_q, y_q)
        node = self.root_
        while type(node) is _Node:
            i = bisect.bisect_left(node.separators, x_q)
            ov.path.append((node, i))
            ov.path_child_idx[node] = i
            node = node.children[i]
        ov.leaf = node
        return ov

    def _effective(self, ch, kind: int, ai: int, st: dict):
        e = st.get(ch)
        if e is not None:
            return e[kind]
        if type(ch) is _Leaf:
            p = ch.point
            s = self.slopes_[ai]
            if kind == 0 or kind == 3:
                return (p.y - s * p.x, p.id, -1)
            return (p.y + s * p.x, p.id, -1)
        return ch.bounds[ai][kind]

    def _visible_best(self, node: _Node, kind: int, ci, ai: int, st: dict):
        """Extreme entry over the children this direction may use.

        Children are visited in the build-time static rank; the walk stops
        at the first in-range child without an overlay entry (its static
        bound is live and dominates everything ranked after it), so the
        cost tracks the number of overridden children, not the fan-out.
        """
        children = node.children
        nb = len(children)
        if ci is None:
            lo, hi = 0, nb
        elif EXTENDS_LEFT[kind]:
            lo, hi = ci, nb
        else:
            lo, hi = 0, ci + 1
        order = node.order
        base = (ai * 4 + kind) * nb
        get = st.get
        s = self.slopes_[ai]
        low_line = kind == 0 or kind == 3
        is_max = kind < 2
        best = None
        for t in range(nb):
            j = order[base + t]
            if j < lo or j >= hi:
                continue
            ch = children[j]
            if type(ch) is _Node:
                se = ch.bounds[ai][kind]
                sv = se[0]
                sid = se[1]
            else:
                p = ch.point
                sv = p.y - s * p.x if low_line else p.y + s * p.x
                sid = p.id
            if best is not None:
                # Static claims only shrink under overlays, so once the
                # running best beats the next claim the walk is done.
                bv = best[0]
                if is_max:
                    if bv > sv or (bv == sv and best[1] < sid):
                        return best
                elif bv < sv or (bv == sv and best[1] < sid):
                    return best
            ent = get(ch)
            if ent is None:
                return (sv, sid, j)
            e = ent[kind]
            if e is not None:
                if best is None:
                    best = (e[0], e[1], j)
                elif is_max:
                    if e[0] > best[0] or (e[0] == best[0] and e[1] < best[1]):
                        best = (e[0], e[1], j)
                elif e[0] < best[0] or (e[0] == best[0] and e[1] < best[1]):
                    best = (e[0], e[1], j)
        return best

    def _init_state(self, ov: _Overlay, ai: int) -> dict:
        s = self.slopes_[ai]
        st: dict = {}
        leaf = ov.leaf
        p = leaf.point
        ent = list(_leaf_entries(p, s))
        if p.x < ov.x_q:
            ent[0] = None  # left rays do not reach the axis
            ent[2] = None
        if p.x > ov.x_q:
            ent[1] = None
            ent[3] = None
        st[leaf] = ent
        for node, ci in reversed(ov.path):
            st[node] = [self._visible_best(node, kind, ci, ai, st) for kind in _ALL_KINDS]
        ov.states[ai] = st
        return st

    def _consume(self, ov: _Overlay, ai: int, leaf: _Leaf, st: dict, kinds) -> None:
        """Remove ``leaf`` from the given direction streams in the overlay.

        An accepted point leaves every stream; a wrong-direction point
        leaves only the stream that surfaced it and stays available to its
        own.  Ancestor bounds are recalculated along the parent chain until
        they stop changing.
        """
        prev_old = st.get(leaf)
        if prev_old is None:
            prev_old = _leaf_entries(leaf.point, self.slopes_[ai])
        new_leaf = list(prev_old)
        changed = [False, False, False, False]
        any_change = False
        for k in kinds:
            if prev_old[k] is not None:
                new_leaf[k] = None
                changed[k] = True
                any_change = True
        st[leaf] = new_leaf
        node = leaf.parent
        path_idx = ov.path_child_idx
        while node is not None and any_change:
            cur = st.get(node)
            if cur is None:
                cur = node.bounds[ai]
            ci = path_idx.get(node)
            new = list(cur)
            nxt = [False, False, False, False]
            any_change = False
            for kind in _ALL_KINDS:
                if not changed[kind]:
                    continue
                old = cur[kind]
                po = prev_old[kind]
                if old is None or po is None or old[0] != po[0] or old[1] != po[1]:
                    # The consumed branch never provided this bound here,
                    # so nothing above can change either.
                    continue
                new[kind] = self._visible_best(node, kind, ci, ai, st)
                nxt[kind] = True
                any_change = True
            st[node] = new
            prev_old = cur
            changed = nxt
            node = node.parent

    def _fetch(self, ov: _Overlay, ai: int, kind: int, st: dict):
        """Next point of one direction's stream: (point, projected y) or None.

        Points whose selected direction for this query differs from the
        stream's are consumed from this stream and skipped; the descent
        follows the provider indexes recorded in the bound entries.
        """
        root = self.root_
        s = self.slopes_[ai]
        x_q = ov.x_q
        y_q = ov.y_q
        get = st.get
        while True:
            ent = get(root)
            if ent is not None:
                e = ent[kind]
            elif type(root) is _Leaf:
                e = self._effective(root, kind, ai, st)
            else:
                e = root.bounds[ai][kind]
            if e is None:
                return None
            node = root
            while type(node) is _Node:
                node = node.children[e[2]]
                if type(node) is _Node:
                    ent = get(node)
                    e = ent[kind] if ent is not None else node.bounds[ai][kind]
            p = node.point
            if selected_kind(p.x, p.y, x_q, y_q) == kind:
                self._consume(ov, ai, node, st, _ALL_KINDS)
                ov.accepted += 1
                rise = s * abs(x_q - p.x)
                return p, (p.y - rise if kind < 2 else p.y + rise)
            self._consume(ov, ai, node, st, (kind,))
            ov.filtered += 1

    def _ranked_at_slope(self, ov: _Overlay, ai: int, w_alpha: float, w_beta: float) -> Iterator:
        """Yield (point, score) best-first at indexed slope ``ai``.

        Scores are evaluated with the given weights; within one direction
        the projected order already agrees with the score order, so a
        4-way merge by (score, id) emits the global ranking.
        """
        st = ov.states.get(ai)
        if st is None:
            st = self._init_state(ov, ai)
        x_q = ov.x_q
        y_q = ov.y_q
        heads = []
        for kind in _ALL_KINDS:
            got = self._fetch(ov, ai, kind, st)
            if got is None:
                heads.append(None)
            else:
                p = got[0]
                heads.append((p, w_alpha * abs(p.y - y_q) - w_beta * abs(p.x - x_q)))
        while True:
            best_kind = -1
            best_key = None
            for kind in _ALL_KINDS:
                h = heads[kind]
                if h is None:
                    continue
                key = (-h[1], h[0].id)
                if best_key is None or key < best_key:
                    best_key = key
                    best_kind = kind
            if best_kind < 0:
                return
            yield heads[best_kind]
            got = self._fetch(ov, ai, best_kind, st)
            if got is None:
                heads[best_kind] = None
            else:
                p = got[0]
                heads[best_kind] = (p, w_alpha * abs(p.y - y_q) - w_beta * abs(p.x - x_q))

    def _ensure_orders(self) -> None:
        """Per-(slope, direction) presorted walking orders.

        For deep best-first drains a presorted list beats repeated bound
        maintenance: one int32 position array per direction, sorted by
        projected order with the id tie-break baked in.  Rebuilt lazily
        after updates.
        """
        if self._orders is not None:
            return
        pts = self._points_by_x
        n = len(pts)
        xs = np.fromiter((p.x for p in pts), dtype=np.float64, count=n)
        ys = np.fromiter((p.y for p in pts), dtype=np.float64, count=n)
        ids = np.fromiter((p.id for p in pts), dtype=np.int64, count=n)
        self._xs_np = xs
        self._ys_np = ys
        orders = []
        for s in self.slopes_:
            low = ys - s * xs
            high = ys + s * xs
            orders.append(
                (
                    np.lexsort((ids, -low)).astype(np.int32),  # llp: low desc
                    np.lexsort((ids, -high)).astype(np.int32),  # rlp: high desc
                    np.lexsort((ids, high)).astype(np.int32),  # lup: high asc
                    np.lexsort((ids, low)).astype(np.int32),  # rup: low asc
                )
            )
        self._orders = orders

    _CHUNK = 512

    def _array_stream(self, ai: int, kind: int, x_q: float, y_q: float) -> Iterator:
        """One direction's points in projected order from the presorted list.

        Entries outside the direction's query quadrant are filtered out a
        chunk at a time with vectorized masks; the walk pointer only ever
        advances, so a full drain stays linear.
        """
        order = self._orders[ai][kind]
        xs = self._xs_np
        ys = self._ys_np
        pts = self._points_by_x
        n = len(order)
        step = self._CHUNK
        i = 0
        while i < n:
            idx = order[i : i + step]
            gx = xs[idx]
            gy = ys[idx]
            if kind == 0:
                mask = (gx >= x_q) & (gy >= y_q)
            elif kind == 1:
                mask = (gx < x_q) & (gy >= y_q)
            elif kind == 2:
                mask = (gx >= x_q) & (gy < y_q)
            else:
                mask = (gx < x_q) & (gy < y_q)
            for j in idx[mask].tolist():
                yield pts[j]
            i += step

    def _ranked_arrays(self, ai: int, x_q: float, y_q: float, w_alpha: float, w_beta: float) -> Iterator:
        """4-way merge of the presorted direction walks by (score desc, id asc)."""
        self._ensure_orders()
        gens = [self._array_stream(ai, kind, x_q, y_q) for kind in _ALL_KINDS]
        pts: list = [None, None, None, None]
        scores = [0.0, 0.0, 0.0, 0.0]
        for kind in _ALL_KINDS:
            p = next(gens[kind], None)
            pts[kind] = p
            if p is not None:
                scores[kind] = w_alpha * abs(p.y - y_q) - w_beta * abs(p.x - x_q)
        while True:
            best = -1
            for kind in _ALL_KINDS:
                p = pts[kind]
                if p is None:
                    continue
                if best < 0:
                    best = kind
                else:
                    sk = scores[kind]
                    sb = scores[best]
                    if sk > sb or (sk == sb and p.id < pts[best].id):
                        best = kind
            if best < 0:
                return
            yield pts[best], scores[best]
            p = next(gens[best], None)
            pts[best] = p
            if p is not None:
                scores[best] = w_alpha * abs(p.y - y_q) - w_beta * abs(p.x - x_q)

    def _vertical_ranked(self, x_q: float, y_q: float, beta: float) -> Iterator:
        """Nearest-by-x ranking: the 90-degree limit where isolines are vertical."""
        pts = self._points_by_x
        xs = self._x_only
        n = len(pts)
        right = bisect.bisect_left(xs, x_q)
        left = right - 1
        while left >= 0 or right < n:
            if left < 0:
                take_right = True
            elif right >= n:
                take_right = False
            else:
                dl = abs(xs[left] - x_q)
                dr = abs(xs[right] - x_q)
                take_right = dr < dl or (dr == dl and pts[right].id < pts[left].id)
            p = pts[right] if take_right else pts[left]
            yield p, 0.0 - beta * abs(p.x - x_q)
            if take_right:
                right += 1
            else:
                left -= 1

    # -- public queries -----------------------------------------------

    def ranked_stream(self, x, y, alpha: float, beta: float) -> Iterator:
        """Lazily yield every point as (id, score), best score first.

        At an indexed ratio the per-direction streams already emit the
        exact order.  Otherwise points are drawn from two rankings that
        jointly bound everything unseen: the next-lower indexed slope's
        ranking (head score L) and the nearest-by-x column walk (head
        distance dx).  Any point in neither has

            score <= alpha * (L - (beta/alpha - slope_l) * dx),

        so a buffered point is emitted exactly when it strictly beats that
        bound; ties are safe because an equally-scored unseen point keeps
        the bound at its own score until it, too, is buffered, after which
        ids order them.
        """
        x_q = check_finite_scalar("x", x)
        y_q = check_finite_scalar("y", y)
        a, b = check_weight_pair(alpha, beta, allow_zero_alpha=True)
        if not getattr(self, "_points_by_x", None):
            return
        if a == 0.0:
            for p, score in self._vertical_ranked(x_q, y_q, b):
                yield p.id, score
            return
        s_q = b / a
        idx = self._slope_pos.get(s_q)
        if idx is not None:
            for p, score in self._ranked_arrays(idx, x_q, y_q, a, b):
                yield p.id, score
            return
        il = bisect.bisect_right(self.slopes_, s_q) - 1
        if il < 0:
            raise WrongSlopeError(
                f"query slope {s_q} lies below the smallest indexed slope {self.slopes_[0]}"
            )
        gap = s_q - self.slopes_[il]
        gen_l = self._ranked_arrays(il, x_q, y_q, 1.0, self.slopes_[il])
        gen_v = self._vertical_ranked(x_q, y_q, 1.0)
        head_l = next(gen_l, None)
        head_v = next(gen_v, None)
        seen: set[int] = set()
        buf: list[tuple[float, int]] = []
        heappush = heapq.heappush
        heappop = heapq.heappop
        while True:
            while True:
                if head_l is None or head_v is None:
                    # One ranking is exhausted, so every point is buffered.
                    break
                # Margin over the bound absorbs its rounding; buffered
                # points wait slightly longer but their emitted order is
                # still decided by exact scores.
                bound = a * (head_l[1] + gap * head_v[1])  # head_v score is -dx
                bound += 1e-9 * (1.0 + abs(bound))
                if buf and -buf[0][0] > bound:
                    break
                p = head_v[0]
                if p.id not in seen:
                    seen.add(p.id)
                    true = a * abs(p.y - y_q) - b * abs(p.x - x_q)
                    heappush(buf, (-true, p.id, true))
                head_v = next(gen_v, None)
                p = head_l[0]
                if p.id not in seen:
                    seen.add(p.id)
                    true = a * abs(p.y - y_q) - b * abs(p.x - x_q)
                    heappush(buf, (-true, p.id, true))
                head_l = next(gen_l, None)
            if not buf:
                return
            entry = heappop(buf)
            yield entry[1], entry[2]

    def query_topk(self, x, y, alpha: float, beta: float, k: int, stats: dict | None = None):
        """Exact top-k ids and scores for a query point and weights.

        Ranking is by score descending, ties to the smaller id.  ``alpha``
        may be zero (vertical isolines); the answer then comes from the
        sorted x-column rather than the tree.  Non-indexed ratios compute
        the top-k at the next-lower indexed slope, then fetch the
        next-higher slope's ranking until it contains that answer set;
        rescoring the fetched prefix at the true weights is exact.
        """
        k = check_k(k)
        x_q = check_finite_scalar("x", x)
        y_q = check_finite_scalar("y", y)
        a, b = check_weight_pair(alpha, beta, allow_zero_alpha=True)
        if not getattr(self, "_points_by_x", None):
            return []
        if a == 0.0:
            out = list(islice(self._vertical_ranked(x_q, y_q, b), k))
            if stats is not None:
                stats.update(accepted_fetches=0, filtered_fetches=0, mode="vertical")
            return [(p.id, score) for p, score in out]
        s_q = b / a
        idx = self._slope_pos.get(s_q)
        if idx is not None:
            ov = self._make_overlay(x_q, y_q)
            ranked = list(islice(self._ranked_at_slope(ov, idx, a, b), k))
            if stats is not None:
                stats.update(
                    accepted_fetches=ov.accepted, filtered_fetches=ov.filtered, mode="indexed"
                )
            return [(p.id, score) for p, score in ranked]

        il = bisect.bisect_right(self.slopes_, s_q) - 1
        if il < 0:
            raise WrongSlopeError(
                f"query slope {s_q} lies below the smallest indexed slope {self.slopes_[0]}"
            )
        self._ensure_orders()
        s_l = self.slopes_[il]
        gen_l = self._ranked_arrays(il, x_q, y_q, 1.0, s_l)
        if il + 1 < len(self.slopes_):
            s_u = self.slopes_[il + 1]
            gen_u = self._ranked_arrays(il + 1, x_q, y_q, 1.0, s_u)
            lam = (s_u - s_q) / (s_u - s_l)
            mu = 1.0 - lam
            gap = 0.0
        else:
            gen_u = self._vertical_ranked(x_q, y_q, 1.0)
            lam = mu = 0.0
            gap = s_q - s_l
        # Two-list threshold stop: the score at the query slope is the
        # convex combination of the bracket scores (slope-affine), so the
        # bracket heads bound everything unfetched.  A relative margin
        # absorbs rounding in the bound, costing at most a few extra
        # fetches and never reordering anything.
        kk = min(k, len(self._points_by_x))
        seen: set[int] = set()
        heap: list[tuple[float, int, int]] = []  # (score, -id, id); root = worst kept
        head_l = next(gen_l, None)
        head_u = next(gen_u, None)
        while True:
            if head_l is None or head_u is None:
                break  # one ranking ran dry: every point has been offered
            if gap:
                thr = a * (head_l[1] + gap * head_u[1])
            else:
                thr = a * (lam * head_l[1] + mu * head_u[1])
            if len(heap) == kk and heap[0][0] > thr + 1e-9 * (1.0 + abs(thr)):
                break
            for p, _ in (head_l, head_u):
                if p.id not in seen:
                    seen.add(p.id)
                    true = a * abs(p.y - y_q) - b * abs(p.x - x_q)
                    entry = (true, -p.id, p.id)
                    if len(heap) < kk:
                        heapq.heappush(heap, entry)
                    elif entry > heap[0]:
                        heapq.heapreplace(heap, entry)
            head_l = next(gen_l, None)
            head_u = next(gen_u, None)
        if stats is not None:
            stats.update(mode="bracketed", candidates=len(seen))
        return [(pid, score) for score, _, pid in sorted(heap, key=lambda t: (-t[0], t[2]))]

    # -- updates ------------------------------------------------------

    def _ensure_leaf_map(self) -> dict[int, _Leaf]:
        if self._leaf_map is None:
            self._leaf_map = {}
            if self.root_ is not None:
                stack = [self.root_]
                while stack:
                    nd = stack.pop()
                    if type(nd) is _Leaf:
                        self._leaf_map[nd.point.id] = nd
                    else:
                        stack.extend(nd.children)
        return self._leaf_map

    def _insort_point(self, p: Point2) -> None:
        pos = bisect.bisect_left(self._x_only, p.x)
        n = len(self._x_only)
        while pos < n and self._x_only[pos] == p.x and self._points_by_x[pos].id < p.id:
            pos += 1
        self._x_only.insert(pos, p.x)
        self._points_by_x.insert(pos, p)

    def _remove_point(self, p: Point2) -> None:
        pos = bisect.bisect_left(self._x_only, p.x)
        while self._points_by_x[pos].id != p.id:
            pos += 1
        self._x_only.pop(pos)
        self._points_by_x.pop(pos)

    def _count_depth(self, depth: int, delta: int) -> None:
        c = self._depth_counts.get(depth, 0) + delta
        if c:
            self._depth_counts[depth] = c
        else:
            self._depth_counts.pop(depth, None)

    def insert(self, point_id: int, x, y) -> "ProjectionTreeIndex":
        """Add one point and refresh bounds along its root path."""
        pid = int(point_id)
        x_f = check_finite_scalar("x", x)
        y_f = check_finite_scalar("y", y)
        leaf_map = self._ensure_leaf_map()
        if pid in leaf_map:
            raise DuplicateIdError(f"id {pid} already indexed")
        p = Point2(pid, x_f, y_f)
        self._insort_point(p)
        self._orders = None
        if self.root_ is None:
            leaf = _Leaf(p, None, 0)
            self.root_ = leaf
            leaf_map[pid] = leaf
            self._count_depth(0, +1)
            return self
        if type(self.root_) is _Leaf:
            self.root_ = self._join_leaves(self.root_, _Leaf(p, None, 0), None, 0)
            return self
        node = self.root_
        depth = 0
        while True:
            i = bisect.bisect_left(node.separators, x_f)
            child = node.children[i]
            if type(child) is _Node:
                node = child
                depth += 1
                continue
            if len(node.children) < self._b:
                leaf = _Leaf(p, node, depth + 1)
                at = i if (x_f, pid) < (child.point.x, child.point.id) else i + 1
                node.children.insert(at, leaf)
                leaf_map[pid] = leaf
                self._count_depth(depth + 1, +1)
            else:
                node.children[i] = self._join_leaves(child, _Leaf(p, None, 0), node, depth + 1)
            break
        self._refresh_upward(node)
        return self

    def _join_leaves(self, existing: _Leaf, fresh: _Leaf, parent, node_depth: int) -> _Node:
        """Internal node replacing a colliding leaf; children sorted by (x, id)."""
        self._count_depth(existing.depth, -1)
        a, b = existing, fresh
        if (b.point.x, b.point.id) < (a.point.x, a.point.id):
            a, b = b, a
        node = _Node()
        node.parent = parent
        for leaf in (a, b):
            leaf.parent = node
            leaf.depth = node_depth + 1
            self._leaf_map[leaf.point.id] = leaf
            self._count_depth(leaf.depth, +1)
        node.children = [a, b]
        self._refresh_node(node)
        return node

    def _refresh_upward(self, node: Optional[_Node]) -> None:
        while node is not None:
            self._refresh_node(node)
            node = node.parent

    def delete(self, point_id: int) -> "ProjectionTreeIndex":
        """Remove one point, collapsing a single-child parent if left behind."""
        pid = int(point_id)
        leaf = self._ensure_leaf_map().pop(pid, None)
        if leaf is None:
            raise UnknownIdError(pid)
        self._remove_point(leaf.point)
        self._orders = None
        self._count_depth(leaf.depth, -1)
        parent = leaf.parent
        if parent is None:
            self.root_ = None
            return self
        parent.children.remove(leaf)
        if len(parent.children) == 1:
            survivor = parent.children[0]
            grand = parent.parent
            survivor.parent = grand
            self._shift_depths(survivor, -1)
            if grand is None:
                self.root_ = survivor
                return self
            grand.children[grand.children.index(parent)] = survivor
            self._refresh_upward(grand)
        else:
            self._refresh_upward(parent)
        return self

    def _shift_depths(self, node, delta: int) -> None:
        stack = [node]
        while stack:
            nd = stack.pop()
            if type(nd) is _Leaf:
                self._count_depth(nd.depth, -1)
                nd.depth += delta
                self._count_depth(nd.depth, +1)
            else:
                stack.extend(nd.children)

    def balanced_height(self, n: Optional[int] = None) -> int:
        """Smallest h with branching**h >= n: the height a fresh build gets."""
        if n is None:
            n = self.point_count
        h = 0
        cap = 1
        while cap < n:
            cap *= self._b
            h += 1
        return h

    def maybe_rebuild(self) -> bool:
        """Rebuild when too many leaves sit below the balanced height."""
        n = self.point_count
        if n == 0 or self.root_ is None:
            return False
        limit = self.balanced_height(n)
        overdeep = sum(c for d, c in self._depth_counts.items() if d > limit)
        if overdeep / n <= self._thr:
            return False
        self._depth_counts = {}
        self.root_ = self._build(self._points_by_x, 0, n, 0)
        self._leaf_map = None
        self._orders = None
        return True
