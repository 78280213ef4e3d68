"""Point sets: CSV I/O, synthetic Gaussian mixtures and basic statistics."""
from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _rng
from .errors import InconsistentDimension, InvalidParam, NonFiniteInput, ParseError


@dataclass(frozen=True, eq=False)
class PointSet:
    """An immutable ``n x d`` float64 matrix of data points with optional integer labels."""

    points: np.ndarray
    labels: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InvalidParam(f"points must be a non-empty n x d matrix, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise NonFiniteInput("points contain NaN or Inf")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.array(self.labels, dtype=np.int64, copy=True)
            if lab.shape != (pts.shape[0],):
                raise InvalidParam(f"labels must have length {pts.shape[0]}")
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n

    def content_hash(self) -> str:
        """sha256 over the shape and little-endian float64 bytes; labels excluded."""
        h = hashlib.sha256()
        h.update(f"{self.n}x{self.d}:".encode())
        h.update(np.ascontiguousarray(self.points, dtype="<f8").tobytes())
        return h.hexdigest()

    def subset(self, rows) -> "PointSet":
        rows = np.asarray(rows, dtype=np.int64)
        labels = None if self.labels is None else self.labels[rows]
        return PointSet(self.points[rows], labels)


def _parse_cell(text: str, row: int, col: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(row, col, f"not a number: {text.strip()!r}") from None
    if not math.isfinite(value):
        raise ParseError(row, col, f"non-finite value {text.strip()!r}")
    return value


def load_csv(path: str | os.PathLike, has_header: bool = False) -> PointSet:
    """Read a numeric CSV into a PointSet.

    Row numbers in errors count data rows from 1 (the header is not counted).
    Blank lines are skipped.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if has_header and lines:
        lines = lines[1:]
    rows = []
    d = None
    for line in lines:
        line = line.rstrip("\r")
        if not line.strip():
            continue
        r = len(rows) + 1
        cells = line.split(",")
        if d is None:
            d = len(cells)
        elif len(cells) != d:
            raise InconsistentDimension(r, len(cells), d)
        rows.append([_parse_cell(c, r, j + 1) for j, c in enumerate(cells)])
    if not rows:
        raise InvalidParam(f"{os.fspath(path)}: no data rows")
    return PointSet(np.array(rows, dtype=np.float64))


def format_float(x: float) -> str:
    # repr is the shortest string that round-trips a float64
    return repr(float(x))


def write_csv(ps: PointSet, path: str | os.PathLike, header: Optional[Sequence[str]] = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in ps.points:
            fh.write(",".join(format_float(v) for v in row) + "\n")


def gen_gmm(means, stdev: float, n_per_mode: int, seed: int = 0) -> PointSet:
    """Sample ``n_per_mode`` points around each row of ``means``.

    Row ``j`` belongs to mode ``j // n_per_mode``; its noise comes from the
    per-row stream ``(seed, j)`` so rows can be generated in any order.
    """
    means = np.atleast_2d(np.asarray(means, dtype=np.float64))
    if means.size == 0:
        raise InvalidParam("means must be non-empty")
    if not stdev >= 0:
        raise InvalidParam(f"stdev must be >= 0, got {stdev}")
    if n_per_mode < 1:
        raise InvalidParam(f"n_per_mode must be >= 1, got {n_per_mode}")
    k, d = means.shape
    labels = np.repeat(np.arange(k), n_per_mode)
    pts = means[labels].copy()
    if stdev > 0:
        pts += stdev * _rng.normal_rows(seed, k * n_per_mode, d, tag=_rng.TAG_GMM)
    return PointSet(pts, labels)


def dataset_mean(ps: PointSet) -> np.ndarray:
    return ps.points.mean(axis=0)


def row_norms(ps: PointSet) -> np.ndarray:
    return np.linalg.norm(ps.points, axis=1)
