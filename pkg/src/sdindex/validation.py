"""Input validation helpers shared by the estimator classes."""

from __future__ import annotations

import numpy as np

from .exceptions import EmptyDatasetError, InvalidQueryError, InvalidWeightsError


def check_coordinates(X, *, min_rows: int = 1, n_cols: int | None = None) -> np.ndarray:
    """Coerce ``X`` to a finite 2-D float64 array.

    Raises ``EmptyDatasetError`` when there are fewer than ``min_rows`` rows
    and ``InvalidQueryError`` on shape or finiteness problems.
    """
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InvalidQueryError(f"expected a 2-D array of coordinates, got ndim={arr.ndim}")
    if arr.shape[0] < min_rows:
        raise EmptyDatasetError(f"need at least {min_rows} point(s), got {arr.shape[0]}")
    if n_cols is not None and arr.shape[1] != n_cols:
        raise InvalidQueryError(f"expected {n_cols} column(s), got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidQueryError("coordinates must be finite")
    return arr


def check_ids(ids, n: int) -> list[int]:
    """Validate ``n`` unique integer point ids; default to ``0..n-1``."""
    if ids is None:
        return list(range(n))
    out = [int(i) for i in ids]
    if len(out) != n:
        raise InvalidQueryError(f"got {len(out)} ids for {n} points")
    if len(set(out)) != n:
        raise InvalidQueryError("point ids must be unique")
    return out


def check_finite_scalar(name: str, value) -> float:
    v = float(value)
    if not np.isfinite(v):
        raise InvalidQueryError(f"{name} must be finite, got {value!r}")
    return v


def check_weight_pair(alpha, beta, *, allow_zero_alpha: bool = False) -> tuple[float, float]:
    """Validate one (repulsive, attractive) weight pair."""
    a = check_finite_scalar("alpha", alpha)
    b = check_finite_scalar("beta", beta)
    if a < 0.0 or b < 0.0:
        raise InvalidWeightsError(f"weights must be non-negative, got alpha={a}, beta={b}")
    if a == 0.0 and not allow_zero_alpha:
        raise InvalidWeightsError("alpha must be positive for projection-based queries")
    if a == 0.0 and b == 0.0:
        raise InvalidWeightsError("alpha and beta cannot both be zero")
    return a, b


def check_k(k) -> int:
    kk = int(k)
    if kk < 1:
        raise InvalidQueryError(f"k must be >= 1, got {k}")
    return kk
