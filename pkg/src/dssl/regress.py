"""Boxcar kernel regression over the plug-in metric, plus a Euclidean baseline.

With the indicator kernel the estimate at ``x`` is the plain average of the
labels ``Y_i`` whose distance to ``x`` is at most ``h``.  Unreachable labeled
points sit at distance ``inf`` and never contribute.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from .core import EstimatorSpec, Fallback, LabeledSet, as_points
from .geodesic import GeodesicGraph

__all__ = [
    "UncoveredQueryError",
    "ConfigurationError",
    "FittedRegressor",
    "EuclideanRegressor",
    "boxcar_average",
    "fit",
    "predict",
    "predict_baseline",
    "empirical_risk",
]


class UncoveredQueryError(RuntimeError):
    """No labeled point within ``h`` and the fallback policy is ``UNDEFINED``."""


class ConfigurationError(ValueError):
    pass


def boxcar_average(dist, labels, h, fallback=Fallback.LABELED_MEAN, m_trunc=None):
    """Kernel average from a ``(n_labeled, n_query)`` distance matrix.

    Returns ``(values, covered)``.  Uncovered queries receive the mean label
    under ``LABELED_MEAN``; under ``UNDEFINED`` they raise
    :class:`UncoveredQueryError`.
    """
    dist = np.asarray(dist, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    inside = (dist <= h) & np.isfinite(dist)
    counts = inside.sum(axis=0)
    # row-by-row accumulation keeps the reduction order fixed (index order)
    sums = np.where(inside, labels[:, None], 0.0).sum(axis=0)
    covered = counts > 0
    if not covered.all() and Fallback(fallback) is Fallback.UNDEFINED:
        k = int(np.count_nonzero(~covered))
        raise UncoveredQueryError(f"{k} quer{'y' if k == 1 else 'ies'} without a labeled point within h")
    values = np.full(dist.shape[1], float(np.mean(labels)))
    np.divide(sums, counts, out=values, where=covered)
    if m_trunc is not None:
        np.clip(values, -m_trunc, m_trunc, out=values)
    return values, covered


@dataclass(frozen=True, eq=False)
class FittedRegressor:
    """Semisupervised kernel estimator closed over its labeled data.

    ``fields[i]`` holds the plug-in distance from labeled point ``i`` to every
    graph node; ``label_nodes[i]`` is the node that point snapped to.
    """

    spec: EstimatorSpec
    labeled: LabeledSet
    graph: GeodesicGraph
    fields: np.ndarray
    label_nodes: np.ndarray
    m_trunc: Optional[float] = None
    snap: str = "strict"

    def distances_to(self, x) -> np.ndarray:
        """``(n, k)`` matrix of plug-in distances from labeled points to queries."""
        nodes = self.graph.locate(as_points(x, self.graph.grid.d), self.snap)
        out = np.full((self.labeled.n, nodes.shape[0]), np.inf)
        ok = nodes >= 0
        out[:, ok] = self.fields[:, nodes[ok]]
        return out

    def predict_many(self, x):
        return boxcar_average(
            self.distances_to(x), self.labeled.labels, self.spec.h, self.spec.fallback, self.m_trunc
        )

    def __call__(self, x):
        return self.predict_many(x)[0]


def fit(
    labeled: LabeledSet,
    g: GeodesicGraph,
    spec: EstimatorSpec,
    m_trunc=None,
    snap="strict",
) -> FittedRegressor:
    """Precompute one single-source distance field per labeled point.

    Labels play no part in the distance computation.
    """
    if not isinstance(labeled, LabeledSet) or labeled.n < 1:
        raise ValueError("fit needs a LabeledSet with n >= 1")
    if g.alpha != float(spec.alpha):
        raise ConfigurationError(f"graph built with alpha={g.alpha}, spec has alpha={spec.alpha}")
    if labeled.d != g.grid.d:
        raise ConfigurationError("labeled data dimension differs from the graph grid")
    if m_trunc is not None and not m_trunc > 0:
        raise ValueError("m_trunc must be positive")
    nodes = g.locate(labeled.points, snap)
    fields = g.node_distances(nodes)
    fields.setflags(write=False)
    return FittedRegressor(spec, labeled, g, fields, nodes, m_trunc, snap)


def predict(r: FittedRegressor, x):
    """Prediction at a single point as ``(value, covered)``."""
    values, covered = r.predict_many(as_points(x, r.graph.grid.d))
    return float(values[0]), bool(covered[0])


@dataclass(frozen=True, eq=False)
class EuclideanRegressor:
    """Supervised comparator: boxcar Nadaraya-Watson in Euclidean distance."""

    labeled: LabeledSet
    h: float
    fallback: Fallback = Fallback.LABELED_MEAN
    m_trunc: Optional[float] = None

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be > 0")

    def distances_to(self, x) -> np.ndarray:
        return cdist(self.labeled.points, as_points(x, self.labeled.d))

    def predict_many(self, x):
        return boxcar_average(
            self.distances_to(x), self.labeled.labels, self.h, self.fallback, self.m_trunc
        )

    def __call__(self, x):
        return self.predict_many(x)[0]


def predict_baseline(labeled: LabeledSet, x, h, fallback=Fallback.LABELED_MEAN):
    """Euclidean boxcar prediction at a single point as ``(value, covered)``."""
    values, covered = EuclideanRegressor(labeled, h, fallback).predict_many(
        as_points(x, labeled.d)
    )
    return float(values[0]), bool(covered[0])


def empirical_risk(predictor, data: LabeledSet) -> float:
    """Mean squared prediction error of ``predictor`` over ``data``.

    ``predictor`` maps a ``(k, d)`` array to ``k`` predictions.
    """
    if data.n < 1:
        raise ValueError("empirical risk needs at least one point")
    pred = np.asarray(predictor(data.points), dtype=np.float64)
    return float(np.mean((pred - data.labels) ** 2))
