"""Boxcar kernel density estimation on a regular grid.

The estimate is

    phat(x) = #{i : ||x - X_i|| <= h_m} / (m * v_d * h_m**d)

with ``v_d`` the volume of the unit ball, so ``phat`` integrates to one.
The estimated support is ``{phat > 0}``; interior nodes are support nodes
whose Euclidean distance to every non-support node exceeds ``2 * delta_m``.
Nodes outside the grid box are not nodes, so the grid faces never erode
the interior by themselves: the box is treated as the ambient domain.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree
from scipy.special import gamma

from .core import UnlabeledSet, as_points

__all__ = [
    "SCHEMA_VERSION",
    "GridSpec",
    "DensityModel",
    "Schedule",
    "SupError",
    "unit_ball_volume",
    "schedule",
    "fit_kde",
    "sup_error",
    "default_resolution",
]

SCHEMA_VERSION = 1


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / gamma(d / 2 + 1)


def default_resolution(d: int, max_nodes: int = 10**6) -> int:
    """Cells per axis: 100 for d <= 2, shrunk so ``(res + 1)**d <= max_nodes``."""
    res = 100
    while res > 1 and (res + 1) ** d > max_nodes:
        res -= 1
    return res


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Vertex grid over the box ``[lower, upper]``.

    ``resolution[k]`` counts cells along axis ``k``; there are
    ``resolution[k] + 1`` nodes on that axis, the first at ``lower[k]`` and
    the last at ``upper[k]``.  Flat node indices follow C order.
    """

    lower: np.ndarray
    upper: np.ndarray
    resolution: tuple

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=np.float64)).copy()
        hi = np.atleast_1d(np.asarray(self.upper, dtype=np.float64)).copy()
        res = self.resolution
        if np.isscalar(res):
            res = (int(res),) * lo.shape[0]
        res = tuple(int(r) for r in res)
        if lo.shape != hi.shape or lo.ndim != 1 or len(res) != lo.shape[0]:
            raise ValueError("lower, upper and resolution must all have length d")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("grid bounds must be finite")
        if not np.all(lo < hi):
            raise ValueError("need lower < upper componentwise")
        if any(r < 1 for r in res):
            raise ValueError("resolution must be >= 1 cell per axis")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "resolution", res)

    @classmethod
    def around(cls, points, pad=0.0, resolution=None):
        """Bounding box of ``points`` grown by ``pad`` on every side."""
        pts = as_points(points)
        lo = pts.min(axis=0) - pad
        hi = pts.max(axis=0) + pad
        flat = hi <= lo
        hi = np.where(flat, lo + 1.0, hi)
        if resolution is None:
            resolution = default_resolution(pts.shape[1])
        return cls(lo, hi, resolution)

    @property
    def d(self) -> int:
        return self.lower.shape[0]

    @property
    def shape(self) -> tuple:
        return tuple(r + 1 for r in self.resolution)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def spacing(self) -> np.ndarray:
        return (self.upper - self.lower) / np.asarray(self.resolution, dtype=np.float64)

    def axes(self):
        return [
            self.lower[k] + self.spacing[k] * np.arange(self.shape[k])
            for k in range(self.d)
        ]

    def nodes(self) -> np.ndarray:
        """All node coordinates, shape ``(size, d)``, C order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    def coords(self, flat_idx) -> np.ndarray:
        multi = np.unravel_index(np.asarray(flat_idx), self.shape)
        return np.stack(
            [self.lower[k] + self.spacing[k] * multi[k] for k in range(self.d)], axis=-1
        )

    def snap(self, points) -> np.ndarray:
        """Flat index of the nearest node for each point, ``-1`` off the grid.

        A point is off the grid when it lies more than half a cell outside
        the box along some axis.
        """
        pts = as_points(points, self.d)
        rel = (pts - self.lower) / self.spacing
        idx = np.rint(rel).astype(np.int64)
        hi = np.asarray(self.resolution)
        ok = np.all((rel >= -0.5) & (rel <= hi + 0.5), axis=1)
        idx = np.clip(idx, 0, hi)
        flat = np.ravel_multi_index(tuple(idx.T), self.shape)
        return np.where(ok, flat, -1)

    def quadrature_weights(self) -> np.ndarray:
        """Trapezoid weights over the node grid (flattened)."""
        w = np.ones(1)
        for k in range(self.d):
            wk = np.full(self.shape[k], self.spacing[k])
            wk[0] *= 0.5
            wk[-1] *= 0.5
            w = np.multiply.outer(w, wk)
        return w.ravel()

    def to_dict(self):
        return {
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "resolution": list(self.resolution),
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(obj["lower"], obj["upper"], tuple(obj["resolution"]))

    def __eq__(self, other):
        return (
            isinstance(other, GridSpec)
            and self.resolution == other.resolution
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
        )

    def __hash__(self):
        return hash((tuple(self.lower), tuple(self.upper), self.resolution))


class Schedule(NamedTuple):
    eps_m: float
    delta_m: float
    h_m: float


def schedule(m, d, c1=1.0, c2=1.0) -> Schedule:
    """Sup-norm error level, boundary strip half-width and KDE bandwidth.

    ``eps_m = c1 / sqrt(log m)``,
    ``delta_m = 2 c2 sqrt(d) (log(m)**2 / m)**(1/d)`` and
    ``h_m = delta_m / (2 sqrt(d))``.
    """
    if m < 2:
        raise ValueError(f"schedule needs m >= 2 (log m > 0), got m={m}")
    if d < 1:
        raise ValueError("d must be >= 1")
    if not (c1 > 0 and c2 > 0):
        raise ValueError(f"c1 and c2 must be positive, got c1={c1}, c2={c2}")
    logm = math.log(m)
    eps = c1 * logm ** -0.5
    base = (logm**2 / m) ** (1.0 / d)
    delta = 2.0 * c2 * math.sqrt(d) * base
    return Schedule(eps, delta, c2 * base)


def _interior_from_support(grid: GridSpec, support: np.ndarray, radius: float) -> np.ndarray:
    if support.all():
        return support.copy()
    if not support.any():
        return support.copy()
    dist = ndimage.distance_transform_edt(support, sampling=grid.spacing)
    return support & (dist > radius)


@dataclass(frozen=True, eq=False)
class DensityModel:
    """Grid-sampled density estimate with support and interior masks.

    Arrays are flat over grid nodes in C order and read-only.
    """

    grid: GridSpec
    phat: np.ndarray
    h_m: float
    delta_m: float
    eps_m: float
    support_mask: np.ndarray
    interior_mask: np.ndarray
    coarse_bandwidth: bool = False

    def __post_init__(self):
        n = self.grid.size
        phat = np.asarray(self.phat, dtype=np.float64).reshape(-1).copy()
        sup = np.asarray(self.support_mask, dtype=bool).reshape(-1).copy()
        inner = np.asarray(self.interior_mask, dtype=bool).reshape(-1).copy()
        if not (phat.shape == sup.shape == inner.shape == (n,)):
            raise ValueError(f"arrays must have one entry per grid node ({n})")
        if np.any(~np.isfinite(phat)) or np.any(phat < 0):
            raise ValueError("phat must be finite and >= 0")
        if np.any(inner & ~sup):
            raise ValueError("interior_mask must imply support_mask")
        if not (self.h_m > 0 and self.delta_m > 0 and self.eps_m > 0):
            raise ValueError("h_m, delta_m and eps_m must be positive")
        for a in (phat, sup, inner):
            a.setflags(write=False)
        object.__setattr__(self, "phat", phat)
        object.__setattr__(self, "support_mask", sup)
        object.__setattr__(self, "interior_mask", inner)

    @classmethod
    def from_values(
        cls,
        grid: GridSpec,
        phat,
        *,
        h_m=None,
        delta_m=None,
        eps_m=1.0,
        interior_mask=None,
    ):
        """Build a model from explicit node values (known densities, tests).

        The support is ``phat > 0``.  Without ``interior_mask`` the interior is
        obtained by erosion with radius ``2 * delta_m``; a supplied mask is
        checked against the same distance invariant.
        """
        phat = np.asarray(phat, dtype=np.float64).reshape(-1)
        if h_m is None and delta_m is None:
            h_m = float(np.min(grid.spacing))
        if delta_m is None:
            delta_m = 2.0 * math.sqrt(grid.d) * h_m
        if h_m is None:
            h_m = delta_m / (2.0 * math.sqrt(grid.d))
        support = phat > 0
        eroded = _interior_from_support(grid, support.reshape(grid.shape), 2 * delta_m).ravel()
        if interior_mask is None:
            interior = eroded
        else:
            interior = np.asarray(interior_mask, dtype=bool).reshape(-1)
            if np.any(interior & ~eroded):
                raise ValueError(
                    "interior_mask contains nodes within 2*delta_m of a non-support node"
                )
        return cls(grid, phat, float(h_m), float(delta_m), float(eps_m), support, interior)

    def with_phat(self, phat) -> "DensityModel":
        """Same grid and masks, different density values on the nodes.

        Used to weight a graph by another density (true ``p``, a rescaled
        ``phat``) over an identical node set.  Values must stay positive on
        the interior.
        """
        phat = np.asarray(phat, dtype=np.float64).reshape(-1)
        if np.any(phat[self.interior_mask] <= 0):
            raise ValueError("replacement density must be positive on interior nodes")
        return DensityModel(
            self.grid,
            phat,
            self.h_m,
            self.delta_m,
            self.eps_m,
            self.support_mask,
            self.interior_mask,
            self.coarse_bandwidth,
        )

    @property
    def n_interior(self) -> int:
        return int(np.count_nonzero(self.interior_mask))

    def phat_grid(self) -> np.ndarray:
        return self.phat.reshape(self.grid.shape)

    def mass(self) -> float:
        """Trapezoid quadrature of ``phat`` over the grid box."""
        return float(np.dot(self.grid.quadrature_weights(), self.phat))

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "grid": self.grid.to_dict(),
            "h_m": self.h_m,
            "delta_m": self.delta_m,
            "eps_m": self.eps_m,
            "coarse_bandwidth": self.coarse_bandwidth,
            "phat": self.phat.tolist(),
            "support_mask": self.support_mask.astype(int).tolist(),
            "interior_mask": self.interior_mask.astype(int).tolist(),
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(
            GridSpec.from_dict(obj["grid"]),
            np.asarray(obj["phat"], dtype=np.float64),
            obj["h_m"],
            obj["delta_m"],
            obj["eps_m"],
            np.asarray(obj["support_mask"], dtype=bool),
            np.asarray(obj["interior_mask"], dtype=bool),
            bool(obj.get("coarse_bandwidth", False)),
        )

    def save_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fit_kde(
    u: UnlabeledSet,
    grid: GridSpec,
    h_m=None,
    *,
    delta_m=None,
    eps_m=None,
    c1=1.0,
    c2=1.0,
) -> DensityModel:
    """Boxcar KDE of ``u`` evaluated at every node of ``grid``.

    Parameters
    ----------
    u : UnlabeledSet
        Sample; every point must lie inside ``[grid.lower, grid.upper]``.
    grid : GridSpec
    h_m : float, optional
        Kernel radius.  Defaults to the schedule value for ``(m, d, c2)``.
    delta_m, eps_m : float, optional
        Boundary strip half-width and nominal sup-norm level.  When ``h_m``
        is given and ``delta_m`` is not, ``delta_m = 2 sqrt(d) h_m``;
        otherwise the schedule values are used.
    c1, c2 : float
        Schedule constants.

    Returns
    -------
    DensityModel
        ``coarse_bandwidth`` is set (and a warning issued) when ``h_m`` is
        below one grid cell, in which case the support mask can fragment.
    """
    pts = u.points
    d = grid.d
    if pts.shape[1] != d:
        raise ValueError(f"sample dimension {pts.shape[1]} != grid dimension {d}")
    if np.any(pts < grid.lower) or np.any(pts > grid.upper):
        raise ValueError("unlabeled points must lie inside the grid box")
    m = u.m
    sched = schedule(m, d, c1, c2) if m >= 2 else None
    if h_m is None:
        if sched is None:
            raise ValueError("m = 1 requires an explicit h_m")
        h_m = sched.h_m
    if not h_m > 0:
        raise ValueError("h_m must be positive")
    if delta_m is None:
        delta_m = 2.0 * math.sqrt(d) * h_m
    if eps_m is None:
        eps_m = sched.eps_m if sched is not None else 1.0

    coarse = bool(h_m < float(np.max(grid.spacing)))
    if coarse:
        warnings.warn(
            f"KDE bandwidth {h_m:.3g} is below the grid cell size; the support "
            "estimate may be spuriously disconnected",
            RuntimeWarning,
            stacklevel=2,
        )

    tree = cKDTree(pts)
    counts = tree.query_ball_point(grid.nodes(), r=h_m, return_length=True)
    phat = counts.astype(np.float64) / (m * unit_ball_volume(d) * h_m**d)
    support = counts > 0
    interior = _interior_from_support(grid, support.reshape(grid.shape), 2.0 * delta_m)
    return DensityModel(
        grid,
        phat,
        float(h_m),
        float(delta_m),
        float(eps_m),
        support,
        interior.ravel(),
        coarse,
    )


class SupError(NamedTuple):
    value: float
    empty_interior: bool


def sup_error(model: DensityModel, truth) -> SupError:
    """Largest ``|truth - phat|`` over interior nodes.

    ``truth`` is a callable mapping an ``(k, d)`` array of points to ``k``
    density values.  An empty interior yields ``(inf, True)``.
    """
    mask = model.interior_mask
    if not mask.any():
        return SupError(math.inf, True)
    flat = np.flatnonzero(mask)
    vals = np.asarray(truth(model.grid.coords(flat)), dtype=np.float64).reshape(-1)
    return SupError(float(np.max(np.abs(vals - model.phat[flat]))), False)
