"""Shared value types and dataset CSV I/O.

Point clouds are stored as read-only ``(k, d)`` float64 arrays; a single
point is a length-``d`` array.  All containers are frozen after construction
so they can be shared between worker processes without copying concerns.
"""

from __future__ import annotations

import csv
import enum
import math
import os
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "DatasetError",
    "ParseError",
    "ValidationError",
    "SchemaError",
    "Fallback",
    "LabeledSet",
    "UnlabeledSet",
    "ProblemClass",
    "EstimatorSpec",
    "as_points",
    "load_dataset",
    "save_dataset",
]


class DatasetError(Exception):
    """Base class for dataset construction and I/O failures."""


class ParseError(DatasetError):
    """A CSV row could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(DatasetError, ValueError):
    """Data parsed but violates a value invariant (non-finite, empty, ...)."""


class SchemaError(DatasetError):
    """Header does not match the requested dataset kind."""


class Fallback(str, enum.Enum):
    """What a kernel regressor returns when no labeled point is within ``h``."""

    LABELED_MEAN = "labeled_mean"
    UNDEFINED = "undefined"


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def as_points(x, d=None):
    """Coerce ``x`` to a ``(k, d)`` float array.

    A 1-D input is read as a single point when ``d`` is ``None`` or equals its
    length, and as ``k`` one-dimensional points when ``d == 1``.
    """
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        if d == 1 and a.shape[0] != 1:
            a = a.reshape(-1, 1)
        else:
            a = a.reshape(1, -1)
    elif a.ndim != 2:
        raise ValueError(f"expected points of shape (k, d), got {a.shape}")
    if d is not None and a.shape[1] != d:
        raise ValueError(f"expected dimension {d}, got {a.shape[1]}")
    return a


@dataclass(frozen=True, eq=False)
class UnlabeledSet:
    """Unlabeled sample ``{X_i}``, ``m >= 1`` points in ``R^d``."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ValidationError(f"points must have shape (m, d), got {pts.shape}")
        if pts.shape[0] < 1:
            raise ValidationError("an unlabeled set needs m >= 1 points")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("non-finite coordinate in points")
        object.__setattr__(self, "points", _frozen(pts))

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.m

    def __eq__(self, other):
        return (
            isinstance(other, UnlabeledSet)
            and self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
        )


@dataclass(frozen=True, eq=False)
class LabeledSet:
    """Labeled sample ``{X_i, Y_i}`` with real labels, ``n >= 1``."""

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        y = np.asarray(self.labels, dtype=np.float64).reshape(-1)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ValidationError(f"points must have shape (n, d), got {pts.shape}")
        if pts.shape[0] < 1:
            raise ValidationError("a labeled set needs n >= 1 points")
        if y.shape[0] != pts.shape[0]:
            raise ValidationError(f"{pts.shape[0]} points but {y.shape[0]} labels")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("non-finite coordinate in points")
        if not np.all(np.isfinite(y)):
            raise ValidationError("non-finite label")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "labels", _frozen(y))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def subset(self, idx) -> "LabeledSet":
        idx = np.asarray(idx, dtype=np.intp)
        return LabeledSet(self.points[idx], self.labels[idx])

    def __eq__(self, other):
        return (
            isinstance(other, LabeledSet)
            and self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True)
class ProblemClass:
    """Constants describing a distribution class ``P_XY(alpha)``.

    Carried as metadata by synthetic instances; never estimated from data.
    """

    d: int
    lambda0: float
    Lambda0: float
    M: float
    sigma: float
    K: int
    tau0: float
    beta: float
    C1: float
    eta: float
    C2: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not (0 < self.lambda0 <= self.Lambda0 < math.inf):
            raise ValueError(
                f"need 0 < lambda0 <= Lambda0 < inf, got {self.lambda0}, {self.Lambda0}"
            )
        if self.M <= 0:
            raise ValueError("M must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.tau0 <= 0:
            raise ValueError("tau0 must be positive")
        if self.beta <= 0 or self.eta <= 0:
            raise ValueError("beta and eta must be positive")

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class EstimatorSpec:
    """Density sensitivity ``alpha`` and bandwidth ``h`` (in D_alpha units)."""

    alpha: float
    h: float
    fallback: Fallback = Fallback.LABELED_MEAN

    def __post_init__(self):
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")
        if not self.h > 0:
            raise ValueError(f"h must be > 0, got {self.h}")
        object.__setattr__(self, "fallback", Fallback(self.fallback))


# --------------------------------------------------------------------------
# CSV I/O
# --------------------------------------------------------------------------

Dataset = Union[LabeledSet, UnlabeledSet]


def _parse_header(header, kind, path):
    cols = [c.strip() for c in header]
    has_y = bool(cols) and cols[-1] == "y"
    xcols = cols[:-1] if has_y else cols
    if not xcols:
        raise SchemaError(f"{path}: header has no coordinate columns")
    expected = [f"x{i + 1}" for i in range(len(xcols))]
    if xcols != expected:
        raise SchemaError(f"{path}: header must be {','.join(expected)}[,y], got {','.join(cols)}")
    if kind == "labeled" and not has_y:
        raise SchemaError(f"{path}: labeled dataset needs a 'y' column")
    if kind == "unlabeled" and has_y:
        raise SchemaError(f"{path}: unlabeled dataset must not have a 'y' column")
    return len(xcols), has_y


def load_dataset(path, kind="labeled") -> Dataset:
    """Read a dataset CSV with header ``x1,...,xd[,y]``.

    Parameters
    ----------
    path : str or os.PathLike
    kind : {"labeled", "unlabeled"}

    Raises
    ------
    ParseError
        Malformed row; the message names the 1-based file line.
    ValidationError
        Non-finite value, or no data rows.
    SchemaError
        Header inconsistent with ``kind``.
    """
    if kind not in ("labeled", "unlabeled"):
        raise ValueError(f"kind must be 'labeled' or 'unlabeled', got {kind!r}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, header row is mandatory") from None
        d, has_y = _parse_header(header, kind, path)
        width = d + int(has_y)
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise ParseError(f"expected {width} fields, got {len(row)}", line)
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise ParseError(str(exc), line) from None
            if not all(math.isfinite(v) for v in vals):
                raise ValidationError(f"{path}: line {line}: non-finite value")
            rows.append(vals)
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    data = np.array(rows, dtype=np.float64).reshape(len(rows), width)
    if has_y:
        return LabeledSet(data[:, :d], data[:, d])
    return UnlabeledSet(data)


def save_dataset(ds: Dataset, path) -> None:
    """Write ``ds`` as CSV; floats use ``repr`` so a reload is bit-exact."""
    if not isinstance(ds, (LabeledSet, UnlabeledSet)):
        raise TypeError(f"cannot save {type(ds).__name__}")
    if len(ds) < 1:
        raise ValidationError("refusing to save an empty dataset")
    d = ds.d
    header = [f"x{i + 1}" for i in range(d)]
    labeled = isinstance(ds, LabeledSet)
    if labeled:
        header.append("y")
    with open(os.fspath(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(len(ds)):
            row = [repr(float(v)) for v in ds.points[i]]
            if labeled:
                row.append(repr(float(ds.labels[i])))
            w.writerow(row)
