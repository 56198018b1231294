"""Scoring and projection primitives for the 2-D plane.

The score rewards distance from the query on the repulsive axis (y) and
penalizes distance on the attractive axis (x):

    score(p, q) = alpha * |y_p - y_q| - beta * |x_p - x_q|

Its isolines are rays of slope ``beta / alpha`` emitted from each point,
one per quadrant direction.  Where a point's selected ray crosses the
query's vertical axis, the signed offset from the query reproduces the
score exactly; every index in this package is built on that equivalence.

All functions here are pure and operate on immutable values.
"""

from __future__ import annotations

import math
from enum import IntEnum
from typing import NamedTuple, Optional, Tuple

from .exceptions import InvalidWeightsError, NoIntersectionError


class ProjectionKind(IntEnum):
    """The four ray directions a point emits.

    Lower kinds descend away from their origin, upper kinds ascend.
    Left kinds extend toward smaller x, right kinds toward larger x.
    """

    LLP = 0
    RLP = 1
    LUP = 2
    RUP = 3


LLP, RLP, LUP, RUP = ProjectionKind

# Indexable by the plain int value of a kind (hot paths avoid enum lookups).
EXTENDS_LEFT = (True, False, True, False)
IS_LOWER = (True, True, False, False)
# Sign of the slope*x term in the supporting-line intercept at x = 0.
_INTERCEPT_SIGN = (-1.0, 1.0, 1.0, -1.0)


class Point2(NamedTuple):
    id: int
    x: float
    y: float


class Weights2(NamedTuple):
    """Repulsive weight ``alpha`` and attractive weight ``beta``.

    ``alpha > 0`` is required by projection-based operations; ``alpha == 0``
    (vertical isolines) is answered by 1-D machinery instead.
    """

    alpha: float
    beta: float

    @property
    def slope(self) -> float:
        return self.beta / self.alpha


class Query2(NamedTuple):
    x: float
    y: float
    weights: Weights2


class ProjectionRay(NamedTuple):
    """A ray from ``origin`` in the direction given by ``kind``.

    ``slope`` is the magnitude beta/alpha >= 0; the ray terminates at its
    origin, so same-kind rays are parallel and never intersect.
    """

    origin: Point2
    kind: ProjectionKind
    slope: float


def sd_score_2d(p: Point2, q: Query2) -> float:
    """Direct evaluation of the mixed attractive/repulsive score."""
    w = q.weights
    return w.alpha * abs(p.y - q.y) - w.beta * abs(p.x - q.x)


def projection_angle(w: Weights2) -> float:
    """Ray angle in degrees, ``arctan(beta / alpha)``; 90 when alpha == 0."""
    if w.alpha == 0.0 and w.beta == 0.0:
        raise InvalidWeightsError("both weights are zero; the angle is undefined")
    return math.degrees(math.atan2(w.beta, w.alpha))


def selected_kind(px: float, py: float, qx: float, qy: float) -> int:
    """Plain-int form of the ray selection rule (hot-path helper)."""
    if py >= qy:
        return 0 if px >= qx else 1
    return 2 if px >= qx else 3


def select_projection(p: Point2, q: Query2) -> ProjectionKind:
    """The unique ray of ``p`` whose axis crossing carries the score of ``p``.

    Ties on either coordinate resolve toward the lower/left kinds.
    """
    return ProjectionKind(selected_kind(p.x, p.y, q.x, q.y))


def project_onto_axis(p: Point2, kind: ProjectionKind, slope: float, axis_x: float) -> float:
    """The y-value where ``p``'s ``kind`` ray crosses the vertical line ``axis_x``.

    Raises ``NoIntersectionError`` when the ray extends away from the axis.
    """
    if EXTENDS_LEFT[kind]:
        if axis_x > p.x:
            raise NoIntersectionError(f"left ray from x={p.x} does not reach axis x={axis_x}")
    elif axis_x < p.x:
        raise NoIntersectionError(f"right ray from x={p.x} does not reach axis x={axis_x}")
    rise = slope * abs(axis_x - p.x)
    return p.y - rise if IS_LOWER[kind] else p.y + rise


def score_from_projection(p: Point2, q: Query2) -> float:
    """Score ``p`` through its selected ray's crossing with the query axis.

    Equals ``sd_score_2d(p, q)`` for every finite input: the crossing lies on
    the score's isoline when the query is outside the straddle band, and the
    signed vertical offset still reproduces the (negative) score inside it.
    """
    w = q.weights
    if w.alpha <= 0.0:
        raise InvalidWeightsError("projection scoring requires alpha > 0")
    kind = select_projection(p, q)
    y_proj = project_onto_axis(p, kind, w.beta / w.alpha, q.x)
    if IS_LOWER[kind]:
        return w.alpha * (y_proj - q.y)
    return w.alpha * (q.y - y_proj)


def intercept_at_reference(ray: ProjectionRay) -> float:
    """Supporting-line y-value at the reference line x = 0.

    Parallel rays keep one fixed vertical order everywhere, so ordering by
    this finite intercept equals ordering the rays at any axis they reach.
    """
    return ray.origin.y + _INTERCEPT_SIGN[ray.kind] * ray.slope * ray.origin.x


def ray_intersection(r1: ProjectionRay, r2: ProjectionRay) -> Optional[Tuple[float, float]]:
    """Crossing point of two rays, or ``None``.

    Only opposite-horizontal-direction rays of equal slope magnitude can
    cross; the crossing must lie within both rays' extents (rays terminate
    at their origins).  Parallel supporting lines yield ``None``.
    """
    s1 = _INTERCEPT_SIGN[r1.kind] * -r1.slope  # line slope: llp/rup rise with x
    s2 = _INTERCEPT_SIGN[r2.kind] * -r2.slope
    if s1 == s2:
        return None
    c1 = intercept_at_reference(r1)
    c2 = intercept_at_reference(r2)
    x = (c2 - c1) / (s1 - s2)
    for ray in (r1, r2):
        if EXTENDS_LEFT[ray.kind]:
            if x > ray.origin.x:
                return None
        elif x < ray.origin.x:
            return None
    return x, c1 + s1 * x
