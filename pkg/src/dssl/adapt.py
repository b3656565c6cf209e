"""Choosing ``(alpha, h)`` by hold-out validation.

The labeled sample is split once into a training part ``T`` and a
validation part ``V``.  Every candidate is fitted on ``T`` and scored by its
mean squared error on ``V``; the candidate with the smallest score wins,
ties going to the lexicographically smallest ``(alpha, h)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.spatial.distance import cdist, pdist

from .core import EstimatorSpec, Fallback, LabeledSet
from .density import SCHEMA_VERSION, DensityModel
from .geodesic import build_graph
from .regress import UncoveredQueryError, boxcar_average, fit

__all__ = [
    "SelectionError",
    "CandidateGrid",
    "Candidate",
    "SelectionReport",
    "default_alphas",
    "split",
    "select",
    "select_euclidean",
    "excess_risk",
]

N_BANDWIDTHS = 8


class SelectionError(RuntimeError):
    """Split impossible, or every candidate failed."""


def default_alphas(m: int):
    """``{0, 1, 2, 4, 8, log m}``, sorted and deduplicated."""
    vals = {0.0, 1.0, 2.0, 4.0, 8.0}
    if m >= 2:
        vals.add(math.log(m))
    return tuple(sorted(vals))


@dataclass(frozen=True)
class CandidateGrid:
    """Finite candidate sets for ``alpha`` and ``h``.

    ``bandwidths=None`` asks for a data-driven grid per ``alpha``: 8
    log-spaced values between the smallest positive plug-in distance among
    training points and the largest finite distance reached from them.
    """

    alphas: Sequence[float] = (0.0, 1.0, 2.0, 4.0, 8.0)
    bandwidths: Optional[Sequence[float]] = None
    split_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        a = tuple(float(v) for v in self.alphas)
        if not a:
            raise ValueError("need at least one alpha")
        if any(not (math.isfinite(v) and v >= 0) for v in a):
            raise ValueError("alphas must be finite and >= 0")
        if list(a) != sorted(set(a)):
            raise ValueError("alphas must be strictly ascending")
        if 0.0 not in a:
            raise ValueError("alpha = 0 must be a candidate")
        object.__setattr__(self, "alphas", a)
        if self.bandwidths is not None:
            h = tuple(float(v) for v in self.bandwidths)
            if not h:
                raise ValueError("need at least one bandwidth")
            if any(not (math.isfinite(v) and v > 0) for v in h):
                raise ValueError("bandwidths must be finite and > 0")
            if list(h) != sorted(set(h)):
                raise ValueError("bandwidths must be strictly ascending")
            object.__setattr__(self, "bandwidths", h)
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError("split_fraction must lie in (0, 1)")

    @classmethod
    def default(cls, m: int, **kw):
        return cls(alphas=default_alphas(m), **kw)


@dataclass(frozen=True)
class Candidate:
    alpha: float
    h: float
    risk: float


@dataclass(frozen=True, eq=False)
class SelectionReport:
    """Outcome of :func:`select`.

    ``table`` lists every candidate in ``(alpha, h)`` order.  ``fits`` maps
    each alpha to its fitted training regressor (``None`` when the graph
    could not be built) and is not part of the serialized form.
    """

    chosen: EstimatorSpec
    table: tuple
    n_train: int
    n_val: int
    seed: int
    train: LabeledSet = field(repr=False)
    val: LabeledSet = field(repr=False)
    fits: dict = field(default_factory=dict, repr=False)
    method: str = "semisupervised"

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "method": self.method,
            "chosen": {"alpha": self.chosen.alpha, "h": self.chosen.h},
            "table": [{"alpha": c.alpha, "h": c.h, "risk": _json_float(c.risk)} for c in self.table],
            "n_train": self.n_train,
            "n_val": self.n_val,
            "seed": self.seed,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def __eq__(self, other):
        return isinstance(other, SelectionReport) and self.to_dict() == other.to_dict()

    def predict_many(self, x, alpha=None, h=None):
        """``(values, covered)`` for a candidate fitted on ``T``; defaults to the chosen one."""
        alpha = self.chosen.alpha if alpha is None else float(alpha)
        h = self.chosen.h if h is None else float(h)
        reg = self.fits.get(alpha)
        if reg is None:
            raise KeyError(f"no fitted regressor for alpha={alpha}")
        return boxcar_average(
            reg.distances_to(x), self.train.labels, h, self.chosen.fallback, reg.m_trunc
        )

    def predictor(self, alpha=None, h=None):
        """Callable ``x -> predictions`` for a candidate fitted on ``T``."""
        return lambda x: self.predict_many(x, alpha, h)[0]


def _json_float(v):
    return v if math.isfinite(v) else "inf"


def split(labeled: LabeledSet, fraction=0.5, seed=0):
    """Uniformly random disjoint split into ``(T, V)`` with ``|T| = round(fraction n)``."""
    n = labeled.n
    k = int(round(fraction * n))
    if n < 2 or k < 1 or k > n - 1:
        raise SelectionError(f"fraction {fraction} of n={n} leaves T or V empty")
    perm = np.random.default_rng(seed).permutation(n)
    return labeled.subset(np.sort(perm[:k])), labeled.subset(np.sort(perm[k:]))


def _risk(pred, y) -> float:
    return math.fsum(((pred - y) ** 2).tolist()) / y.shape[0]


def _auto_bandwidths(train_dist, field_max):
    pos = train_dist[np.isfinite(train_dist) & (train_dist > 0)]
    if pos.size == 0 or not math.isfinite(field_max) or field_max <= 0:
        return None
    lo, hi = float(pos.min()), float(field_max)
    if hi <= lo:
        return (lo,)
    return tuple(np.geomspace(lo, hi, N_BANDWIDTHS).tolist())


def _score_alpha(alpha, T, V, model, bandwidths, connectivity, fallback, m_trunc, snap):
    """Fit one alpha on T and score it on V for every bandwidth."""
    try:
        g = build_graph(model, alpha, connectivity)
    except ValueError:
        return None, bandwidths or (), [math.inf] * len(bandwidths or ())
    reg = fit(T, g, EstimatorSpec(alpha, 1.0, fallback), m_trunc=m_trunc, snap=snap)
    hs = bandwidths
    if hs is None:
        tt = reg.fields[:, reg.label_nodes[reg.label_nodes >= 0]]
        finite = reg.fields[np.isfinite(reg.fields)]
        hs = _auto_bandwidths(tt, float(finite.max()) if finite.size else math.inf)
        if hs is None:
            return reg, (), []
    dist_v = reg.distances_to(V.points)
    risks = []
    for h in hs:
        try:
            pred, _ = boxcar_average(dist_v, T.labels, h, fallback, m_trunc)
        except UncoveredQueryError:
            risks.append(math.inf)
            continue
        risks.append(_risk(pred, V.labels))
    return reg, tuple(hs), risks


def _argmin(table):
    # table is sorted by (alpha, h); the first minimum is the lexicographic tie-break
    best = None
    for c in table:
        if math.isfinite(c.risk) and (best is None or c.risk < best.risk):
            best = c
    return best


def select(
    labeled: LabeledSet,
    model: DensityModel,
    grid: CandidateGrid,
    *,
    connectivity=16,
    fallback=Fallback.LABELED_MEAN,
    m_trunc=None,
    snap="strict",
    n_jobs=1,
) -> SelectionReport:
    """Hold-out selection of ``(alpha, h)`` for the plug-in kernel regressor.

    Parameters
    ----------
    labeled : LabeledSet
        Full labeled sample; split internally with ``grid.seed``.
    model : DensityModel
        Density estimate shared by every candidate.
    grid : CandidateGrid
    connectivity, fallback, m_trunc, snap
        Passed to graph construction and fitting.
    n_jobs : int
        joblib workers over alpha values.

    Returns
    -------
    SelectionReport

    Raises
    ------
    SelectionError
        Every candidate scored ``inf``.
    """
    fallback = Fallback(fallback)
    T, V = split(labeled, grid.split_fraction, grid.seed)
    jobs = (
        delayed(_score_alpha)(a, T, V, model, grid.bandwidths, connectivity, fallback, m_trunc, snap)
        for a in grid.alphas
    )
    results = Parallel(n_jobs=n_jobs)(jobs)
    table, fits = [], {}
    for a, (reg, hs, risks) in zip(grid.alphas, results):
        fits[a] = reg
        table.extend(Candidate(a, h, r) for h, r in zip(hs, risks))
    table.sort(key=lambda c: (c.alpha, c.h))
    best = _argmin(table)
    if best is None:
        raise SelectionError("every candidate failed (infinite validation risk)")
    return SelectionReport(
        EstimatorSpec(best.alpha, best.h, fallback), tuple(table), T.n, V.n, grid.seed, T, V, fits
    )


class _EuclideanFit:
    """Precomputed Euclidean distances with the interface used by the report."""

    def __init__(self, train: LabeledSet, m_trunc):
        self.train = train
        self.m_trunc = m_trunc

    def distances_to(self, x):
        return cdist(self.train.points, np.asarray(x, dtype=np.float64).reshape(-1, self.train.d))


def select_euclidean(
    labeled: LabeledSet,
    bandwidths=None,
    split_fraction=0.5,
    seed=0,
    *,
    fallback=Fallback.LABELED_MEAN,
    m_trunc=None,
) -> SelectionReport:
    """Same hold-out scheme for the Euclidean boxcar baseline.

    Candidates are reported with ``alpha = 0``; without ``bandwidths`` the
    grid spans the smallest positive to the largest training distance.
    """
    fallback = Fallback(fallback)
    T, V = split(labeled, split_fraction, seed)
    if bandwidths is None:
        dt = pdist(T.points) if T.n > 1 else np.zeros(0)
        hs = _auto_bandwidths(dt, float(dt.max()) if dt.size else 0.0)
        if hs is None:
            hs = (float(np.max(cdist(T.points, V.points))) or 1.0,)
    else:
        hs = tuple(float(h) for h in bandwidths)
    reg = _EuclideanFit(T, m_trunc)
    dist_v = reg.distances_to(V.points)
    table = []
    for h in hs:
        try:
            pred, _ = boxcar_average(dist_v, T.labels, h, fallback, m_trunc)
            risk = _risk(pred, V.labels)
        except UncoveredQueryError:
            risk = math.inf
        table.append(Candidate(0.0, h, risk))
    best = _argmin(table)
    if best is None:
        raise SelectionError("every candidate failed (infinite validation risk)")
    return SelectionReport(
        EstimatorSpec(0.0, best.h, fallback),
        tuple(table),
        T.n,
        V.n,
        seed,
        T,
        V,
        {0.0: reg},
        method="euclidean",
    )


def excess_risk(predictor, instance, n_mc: int, seed=0) -> float:
    """Monte-Carlo estimate of ``E[(f(X) - f*(X))**2]`` with fresh ``X ~ p``."""
    if int(n_mc) < 1:
        raise ValueError("n_mc must be >= 1")
    x = instance.sample_x(int(n_mc), seed)
    diff = np.asarray(predictor(x), dtype=np.float64) - np.asarray(instance.f_star(x), dtype=np.float64)
    return math.fsum((diff**2).tolist()) / int(n_mc)
