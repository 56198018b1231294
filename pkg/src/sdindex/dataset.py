"""Dataset container and its CSV file format.

Files carry optional ``#`` comment lines (generator provenance), then a
header ``id,<dim_0>,...``, then one row per point.  External id tokens
are kept as labels; engines work on the dense row ordinals, which also
serve as the deterministic tie-break.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import InvalidQueryError


@dataclass
class Dataset:
    dim_names: list[str]
    labels: list[str]
    coords: np.ndarray
    comments: list[str] = field(default_factory=list)

    @property
    def n_points(self) -> int:
        return self.coords.shape[0]

    @property
    def n_dims(self) -> int:
        return self.coords.shape[1]

    def dim_index(self, name: str) -> int:
        try:
            return self.dim_names.index(name)
        except ValueError:
            raise InvalidQueryError(
                f"unknown column {name!r}; available: {', '.join(self.dim_names)}"
            ) from None

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in self.comments:
                fh.write(f"# {line}\n")
            fh.write("id," + ",".join(self.dim_names) + "\n")
            for label, row in zip(self.labels, self.coords):
                fh.write(label + "," + ",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        comments: list[str] = []
        header: list[str] | None = None
        labels: list[str] = []
        rows: list[list[float]] = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    comments.append(line.lstrip("# "))
                    continue
                parts = line.split(",")
                if header is None:
                    if parts[0] != "id" or len(parts) < 2:
                        raise InvalidQueryError(
                            f"{path}:{lineno}: expected header 'id,<dim>,...', got {line!r}"
                        )
                    header = parts[1:]
                    continue
                if len(parts) != len(header) + 1:
                    raise InvalidQueryError(
                        f"{path}:{lineno}: expected {len(header) + 1} fields, got {len(parts)}"
                    )
                labels.append(parts[0])
                try:
                    rows.append([float(v) for v in parts[1:]])
                except ValueError as exc:
                    raise InvalidQueryError(f"{path}:{lineno}: {exc}") from None
        if header is None or not rows:
            raise InvalidQueryError(f"{path}: no data rows")
        if len(set(labels)) != len(labels):
            raise InvalidQueryError(f"{path}: duplicate point ids")
        coords = np.asarray(rows, dtype=np.float64)
        if not np.all(np.isfinite(coords)):
            raise InvalidQueryError(f"{path}: coordinates must be finite")
        return cls(dim_names=list(header), labels=labels, coords=coords, comments=comments)

    @classmethod
    def from_coords(
        cls,
        coords: np.ndarray,
        dim_names: Sequence[str] | None = None,
        comments: Sequence[str] = (),
    ) -> "Dataset":
        coords = np.asarray(coords, dtype=np.float64)
        n, m = coords.shape
        if dim_names is None:
            dim_names = [f"d{j}" for j in range(m)]
        return cls(
            dim_names=list(dim_names),
            labels=[str(i) for i in range(n)],
            coords=coords,
            comments=list(comments),
        )
