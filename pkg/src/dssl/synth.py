"""Synthetic problem instances with known density and regression function.

Three generators:

* :func:`make_uniform_components`: uniform density on a union of boxes, a
  constant regression value per connected component;
* :func:`make_lower_bound_instance`: two uniform slabs joined by a row of
  rounded bumps whose ownership is coded by a bit vector ``omega``; hard for
  any method that sees only labeled points;
* :func:`make_smooth_instance`: a smooth bump-mixture density on the unit
  square with ``f*`` a clipped power of the density-weighted distance to an
  anchor point.

Samplers accept either an integer seed or a ``numpy.random.Generator``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect, minimize
from scipy.special import erf

from .core import LabeledSet, ProblemClass, UnlabeledSet, as_points
from .density import SCHEMA_VERSION, DensityModel, GridSpec, unit_ball_volume
from .geodesic import build_graph

__all__ = [
    "GeometryError",
    "ProblemInstance",
    "UniformComponents",
    "LowerBoundInstance",
    "SmoothInstance",
    "make_uniform_components",
    "make_lower_bound_instance",
    "make_smooth_instance",
    "make_comb_instance",
    "bump_profile",
    "solve_bump_radius",
    "worker_rng",
    "GENERATORS",
]


class GeometryError(ValueError):
    """Invalid support geometry (overlapping boxes, inconsistent labels)."""


def worker_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for worker ``index`` derived from ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


class ProblemInstance:
    """Ground truth for one distribution of ``(X, Y)``.

    Subclasses provide ``p_true``, ``f_star``, ``_draw_x`` and the
    attributes ``pclass``, ``name``, ``params`` and ``support_descriptor``.
    """

    pclass: ProblemClass
    name: str = "instance"
    batch = 4096

    @property
    def d(self) -> int:
        return self.pclass.d

    @property
    def sigma(self) -> float:
        return self.pclass.sigma

    def p_true(self, x) -> np.ndarray:
        raise NotImplementedError

    def f_star(self, x) -> np.ndarray:
        raise NotImplementedError

    def _draw_x(self, k, rng) -> np.ndarray:
        raise NotImplementedError

    def sample_x(self, n: int, seed=None) -> np.ndarray:
        if n < 0:
            raise ValueError("n must be >= 0")
        return self._draw_x(int(n), _rng(seed))

    def sample_y(self, x, seed=None) -> np.ndarray:
        x = as_points(x, self.d)
        rng = _rng(seed)
        noise = rng.standard_normal(x.shape[0]) * self.sigma
        return self.f_star(x) + noise

    def sample_labeled(self, n: int, seed=None) -> LabeledSet:
        rng = _rng(seed)
        x = self.sample_x(n, rng)
        return LabeledSet(x, self.sample_y(x, rng))

    def sample_unlabeled(self, m: int, seed=None) -> UnlabeledSet:
        return UnlabeledSet(self.sample_x(m, seed))

    def bounding_box(self):
        """Box containing the support, as ``(lower, upper)`` arrays."""
        return np.zeros(self.d), np.ones(self.d)

    def describe(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "generator": self.name,
            "params": self.params,
            "pclass": self.pclass.to_dict(),
            "support_descriptor": self.support_descriptor,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.describe(), **kw)


def _rejection(k, rng, lower, upper, accept, batch):
    """Draw ``k`` points uniformly from the box, kept where ``accept`` is true."""
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    out, have = [], 0
    while have < k:
        u = lower + (upper - lower) * rng.random((batch, lower.shape[0]))
        u = u[accept(u)]
        out.append(u)
        have += u.shape[0]
    if not out:
        return np.zeros((0, lower.shape[0]))
    return np.concatenate(out)[:k]


# --------------------------------------------------------------------------
# uniform density on boxes
# --------------------------------------------------------------------------


def _box_gap(a, b):
    """Euclidean distance between two closed boxes."""
    lo1, hi1 = a
    lo2, hi2 = b
    sep = np.maximum(0.0, np.maximum(lo1 - hi2, lo2 - hi1))
    return float(np.linalg.norm(sep))


class UniformComponents(ProblemInstance):
    name = "uniform_components"

    def __init__(self, boxes, labels, sigma, M, pclass, component_of):
        self.boxes = boxes
        self.labels = labels
        self.pclass = pclass
        self.component_of = component_of
        self.volumes = np.array([float(np.prod(hi - lo)) for lo, hi in boxes])
        self.params = {
            "boxes": [[lo.tolist(), hi.tolist()] for lo, hi in boxes],
            "labels": labels.tolist(),
            "sigma": sigma,
            "M": M,
        }
        self.support_descriptor = {
            "boxes": self.params["boxes"],
            "components": component_of.tolist(),
            "n_components": pclass.K,
            "volume": float(self.volumes.sum()),
        }

    def _which(self, x):
        x = as_points(x, self.d)
        idx = np.full(x.shape[0], -1)
        for k, (lo, hi) in enumerate(self.boxes):
            inside = np.all((x >= lo) & (x <= hi), axis=1) & (idx < 0)
            idx[inside] = k
        return idx

    def p_true(self, x):
        return np.where(self._which(x) >= 0, self.pclass.lambda0, 0.0)

    def f_star(self, x):
        k = self._which(x)
        return np.where(k >= 0, self.labels[np.maximum(k, 0)], 0.0)

    def _draw_x(self, k, rng):
        which = rng.choice(len(self.boxes), size=k, p=self.volumes / self.volumes.sum())
        u = rng.random((k, self.d))
        lo = np.array([b[0] for b in self.boxes])[which]
        hi = np.array([b[1] for b in self.boxes])[which]
        return lo + (hi - lo) * u

    def bounding_box(self):
        lo = np.min([b[0] for b in self.boxes], axis=0)
        hi = np.max([b[1] for b in self.boxes], axis=0)
        return lo, hi


def make_uniform_components(boxes, labels, sigma=0.0, M=None) -> UniformComponents:
    """Uniform density on a union of axis-aligned boxes.

    Parameters
    ----------
    boxes : sequence of (lower, upper)
        Boxes with pairwise disjoint interiors.  Touching boxes form one
        connected component and must carry the same label.
    labels : sequence of float
        Value of ``f*`` on each box.
    sigma : float
        Gaussian noise level.
    M : float, optional
        Label bound; defaults to ``max |labels|`` (or 1 if all are zero).

    Notes
    -----
    ``tau0`` in the attached class is a proxy: half the smallest gap between
    components, capped by half the smallest box side.
    """
    bx = []
    for b in boxes:
        lo, hi = (np.asarray(v, dtype=np.float64).reshape(-1) for v in b)
        if lo.shape != hi.shape or not np.all(hi > lo):
            raise GeometryError("each box needs lower < upper in every coordinate")
        bx.append((lo, hi))
    if not bx:
        raise GeometryError("need at least one box")
    d = bx[0][0].shape[0]
    if any(lo.shape[0] != d for lo, _ in bx):
        raise GeometryError("boxes differ in dimension")
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    if labels.shape[0] != len(bx):
        raise GeometryError(f"{len(bx)} boxes but {labels.shape[0]} labels")
    if M is None:
        M = float(np.max(np.abs(labels))) or 1.0
    if np.any(np.abs(labels) > M):
        raise GeometryError("a label exceeds M in absolute value")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")

    nb = len(bx)
    parent = list(range(nb))

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in itertools.combinations(range(nb), 2):
        overlap = np.minimum(bx[i][1], bx[j][1]) - np.maximum(bx[i][0], bx[j][0])
        if np.all(overlap > 0):
            raise GeometryError(f"boxes {i} and {j} overlap")
        if np.all(overlap >= 0):
            parent[root(i)] = root(j)
    roots = [root(i) for i in range(nb)]
    comp = np.unique(roots, return_inverse=True)[1]
    for c in np.unique(comp):
        if np.unique(labels[comp == c]).size > 1:
            raise GeometryError("touching boxes form one component and must share a label")

    K = int(comp.max()) + 1
    vol = sum(float(np.prod(hi - lo)) for lo, hi in bx)
    tau = min(float(np.min(hi - lo)) for lo, hi in bx) / 2.0
    for i, j in itertools.combinations(range(nb), 2):
        if comp[i] != comp[j]:
            tau = min(tau, _box_gap(bx[i], bx[j]) / 2.0)
    pclass = ProblemClass(
        d=d, lambda0=1.0 / vol, Lambda0=1.0 / vol, M=float(M), sigma=float(sigma), K=K,
        tau0=tau, beta=1.0, C1=1.0, eta=1.0, C2=0.0,
    )
    return UniformComponents(bx, labels, float(sigma), float(M), pclass, comp)


def make_comb_instance(teeth=4, gap=0.04, sigma=0.0, M=1.0) -> UniformComponents:
    """Two interleaved combs in the unit square, labels ``+M`` and ``-M``.

    Vertical teeth of alternating sign are separated by empty corridors of
    width ``gap``; the spine of each comb joins its teeth into one component.
    """
    if teeth < 1 or not 0 < gap < 0.5 / teeth:
        raise GeometryError("need teeth >= 1 and 0 < gap < 1 / (2 teeth)")
    w = (1.0 - (2 * teeth) * gap) / (2 * teeth)
    spine = 0.1
    boxes = [((0.0, 0.0), (1.0, spine))]
    labels = [M]
    top = [((0.0, 1.0 - spine), (1.0, 1.0))]
    tlabels = [-M]
    x = gap / 2
    for k in range(2 * teeth):
        if k % 2 == 0:
            boxes.append(((x, spine), (x + w, 1.0 - spine - gap)))
            labels.append(M)
        else:
            top.append(((x, spine + gap), (x + w, 1.0 - spine)))
            tlabels.append(-M)
        x += w + gap
    return make_uniform_components(boxes + top, labels + tlabels, sigma, M)


# --------------------------------------------------------------------------
# hard instance
# --------------------------------------------------------------------------


def bump_profile(u, r):
    """Rounded bump ``g``: height ``1/2`` at the origin, ``0`` for ``|u| >= 1/2``.

    ``u`` has shape ``(k, d-1)`` (or ``(d-1,)``).  A cap of radius
    ``1/2 - r`` centred at height ``r`` is joined to the floor by a concave
    fillet of radius ``r``.
    """
    u = np.asarray(u, dtype=np.float64)
    s = np.linalg.norm(u, axis=-1) if u.ndim else np.abs(u)
    out = np.zeros_like(s, dtype=np.float64)
    cap = s < 0.5 - r
    fil = (s >= 0.5 - r) & (s < 0.5)
    out[cap] = r + np.sqrt(np.maximum((0.5 - r) ** 2 - s[cap] ** 2, 0.0))
    out[fil] = r - np.sqrt(np.maximum(r**2 - (0.5 - s[fil]) ** 2, 0.0))
    return out


def solve_bump_radius(d: int) -> float:
    """Root in ``(0, 1/4)`` of ``(1 - 2r)**d - (4d / sqrt(pi)) r = 1/2``."""
    k = 4.0 * d / math.sqrt(math.pi)
    return bisect(lambda r: (1 - 2 * r) ** d - k * r - 0.5, 0.0, 0.25, xtol=1e-15, rtol=8.9e-16)


def _elementary_symmetric(vals):
    e = [1.0]
    for v in vals:
        e = [a + v * b for a, b in zip(e + [0.0], [0.0] + e)]
    return e


def _dilated_box_volume(sides, radius):
    """Volume of the set of points within ``radius`` of a box (Steiner formula)."""
    d = len(sides)
    e = _elementary_symmetric(sides)
    return sum(e[k] * unit_ball_volume(d - k) * radius ** (d - k) for k in range(d + 1))


def _dist_to_box(x, lo, hi):
    return np.linalg.norm(np.maximum(0.0, np.maximum(lo - x, x - hi)), axis=1)


class LowerBoundInstance(ProblemInstance):
    name = "lower_bound"

    def __init__(self, d, l, omega, M, r, sigma, c0, n_design, geometry):
        self.l = l
        self.eps = 1.0 / (l + 2)
        self.omega = omega
        self.r = r
        self.M = M
        self.geometry = geometry
        # vertical scale of the bumps: eps for the isotropic reading, 1 otherwise
        self.vscale = self.eps if geometry == "isotropic" else 1.0
        eps = self.eps
        self._lo_core = (np.full(d, eps), np.r_[np.full(d - 1, 1 - eps), 0.125 - eps])
        self._hi_core = (
            np.r_[np.full(d - 1, eps), 0.125 + self.vscale * r + eps],
            np.full(d, 1 - eps),
        )
        vol = 0.0
        for lo, hi in (self._lo_core, self._hi_core):
            vol += _dilated_box_volume((hi - lo).tolist(), eps)
        self.volume = vol
        lam = 1.0 / vol
        gap = eps * (math.sqrt(0.25 + r * r) - 0.5)
        self.gap = gap
        self.pclass = ProblemClass(
            d=d, lambda0=lam, Lambda0=lam, M=float(M), sigma=float(sigma), K=2,
            tau0=gap / 2.0, beta=1.0, C1=1.0, eta=1.0, C2=0.0,
        )
        self.params = {
            "n_design": n_design, "d": d, "c0": c0, "r": r, "M": M, "sigma": sigma,
            "geometry": geometry, "omega": omega.astype(int).tolist(),
        }
        centers = (np.arange(1, l + 1) + 0.5) * eps
        self.support_descriptor = {
            "l": l,
            "q": int(omega.shape[0]),
            "epsilon": eps,
            "r": r,
            "r_root": solve_bump_radius(d),
            "omega": omega.astype(int).tolist(),
            "geometry": geometry,
            "vertical_scale": self.vscale,
            "bump_base_height": 0.125,
            "bump_centers_1d": centers.tolist(),
            "lower_core": [a.tolist() for a in self._lo_core],
            "upper_core": [a.tolist() for a in self._hi_core],
            "tau_lower_bound": gap / 2.0,
            "gap": gap,
            "volume": vol,
        }

    def _bumps(self, x):
        """Membership in the lower bumps and the carved upper bumps (selected by omega)."""
        d = self.d
        xt = x[:, : d - 1] * (self.l + 2)
        idx = np.floor(xt).astype(np.int64)
        u = xt - idx - 0.5
        valid = np.all((idx >= 1) & (idx <= self.l), axis=1)
        lin = np.zeros(x.shape[0], dtype=np.int64)
        for j in range(d - 1):
            lin = lin * self.l + np.clip(idx[:, j] - 1, 0, self.l - 1)
        on = valid & self.omega[lin]
        gv = bump_profile(u, self.r)
        t = (x[:, -1] - 0.125) / self.vscale
        lower = on & (t >= 0) & (t <= gv)
        upper = on & (t >= self.r) & (t <= self.r + gv)
        return lower, upper

    def regions(self, x):
        """Boolean masks ``(lower_set, upper_set)`` for points ``x``."""
        x = as_points(x, self.d)
        b_lo, b_hi = self._bumps(x)
        s_lo = _dist_to_box(x, *self._lo_core) <= self.eps
        s_hi = _dist_to_box(x, *self._hi_core) <= self.eps
        lower = s_lo | b_lo
        upper = s_hi & ~b_hi
        return lower, upper & ~lower

    def p_true(self, x):
        lo, hi = self.regions(x)
        return np.where(lo | hi, self.pclass.lambda0, 0.0)

    def f_star(self, x):
        lo, hi = self.regions(x)
        return np.where(lo, self.M, np.where(hi, -self.M, 0.0))

    def _draw_x(self, k, rng):
        def accept(u):
            lo, hi = self.regions(u)
            return lo | hi

        return _rejection(k, rng, np.zeros(self.d), np.ones(self.d), accept, self.batch)


def make_lower_bound_instance(
    n_design: int,
    d: int = 2,
    omega=None,
    M: float = 1.0,
    c0: float = 3.0,
    r=None,
    sigma: float = 0.0,
    geometry: str = "isotropic",
) -> LowerBoundInstance:
    """Two slabs joined by ``l**(d-1)`` rounded bumps.

    Parameters
    ----------
    n_design : int
        Sample size the construction is tuned to; ``l = floor(c0 n**(1/(d-1)))``.
    d : int
        Dimension, at least 2.
    omega : array of {0, 1}, int or None
        Bump ownership bits (length ``l**(d-1)``); an integer seeds random
        bits; ``None`` means all ones (every bump belongs to the lower set).
    M : float
        ``f*`` is ``+M`` on the lower set and ``-M`` on the upper set.
    c0 : float
        At least 3.
    r : float, optional
        Fillet radius in ``(0, 1/4)``; defaults to the root from
        :func:`solve_bump_radius`.
    sigma : float
        Gaussian label noise (``0`` gives noiseless labels).
    geometry : {"isotropic", "literal"}
        ``"isotropic"`` scales each bump by ``eps`` in every coordinate, so
        the gap between the two sets is ``eps (sqrt(1/4 + r**2) - 1/2)``.
        ``"literal"`` scales only the horizontal coordinates (tall bumps of
        height up to ``1/2``).
    """
    if d < 2:
        raise ValueError("the hard instance needs d >= 2")
    if c0 < 3:
        raise ValueError("c0 must be >= 3")
    if n_design < 1:
        raise ValueError("n_design must be >= 1")
    if geometry not in ("isotropic", "literal"):
        raise ValueError("geometry must be 'isotropic' or 'literal'")
    if r is None:
        r = solve_bump_radius(d)
    if not 0 < r < 0.25:
        raise ValueError(f"r must lie in (0, 1/4), got {r}")
    if M <= 0 or sigma < 0:
        raise ValueError("need M > 0 and sigma >= 0")
    l = int(math.floor(c0 * n_design ** (1.0 / (d - 1)) + 1e-9))
    if 1.0 / (l + 2) > 1.0 / 16:
        raise ValueError("n_design too small: the lower slab core would be empty (need l >= 14)")
    q = l ** (d - 1)
    if omega is None:
        bits = np.ones(q, dtype=bool)
    elif np.ndim(omega) == 0:
        bits = np.random.default_rng(int(omega)).integers(0, 2, size=q).astype(bool)
    else:
        bits = np.asarray(omega).reshape(-1)
        if bits.shape[0] != q or not np.all((bits == 0) | (bits == 1)):
            raise ValueError(f"omega must be {q} bits")
        bits = bits.astype(bool)
    return LowerBoundInstance(d, l, bits, float(M), float(r), float(sigma), c0, n_design, geometry)


# --------------------------------------------------------------------------
# smooth instance
# --------------------------------------------------------------------------


@dataclass
class _Mixture:
    centers: np.ndarray
    widths: np.ndarray
    amps: np.ndarray
    norm: float = field(init=False)

    def __post_init__(self):
        z = 1.0
        for c, s, a in zip(self.centers, self.widths, self.amps):
            k = s * math.sqrt(math.pi / 2)
            z += a * np.prod(k * (erf((1 - c) / (s * math.sqrt(2))) + erf(c / (s * math.sqrt(2)))))
        self.norm = float(z)

    def raw(self, x):
        out = np.ones(x.shape[0])
        for c, s, a in zip(self.centers, self.widths, self.amps):
            out += a * np.exp(-np.sum((x - c) ** 2, axis=1) / (2 * s * s))
        return out

    def grad_norm(self, x):
        g = np.zeros_like(x)
        for c, s, a in zip(self.centers, self.widths, self.amps):
            e = a * np.exp(-np.sum((x - c) ** 2, axis=1) / (2 * s * s))
            g -= e[:, None] * (x - c) / (s * s)
        return np.linalg.norm(g, axis=1) / self.norm


class SmoothInstance(ProblemInstance):
    name = "smooth"

    def __init__(self, mix, alpha, beta, C1, scale, anchor, graph, field_, lam0, lam1, sigma, seed, resolution):
        self.mix = mix
        self.alpha = alpha
        self.beta = beta
        self.C1 = C1
        self.scale = scale
        self.anchor = anchor
        self.graph = graph
        self.field = field_
        self.pclass = ProblemClass(
            d=2, lambda0=lam0, Lambda0=lam1, M=C1 * scale**beta, sigma=sigma, K=1,
            tau0=0.5, beta=beta, C1=C1, eta=1.0,
            C2=float(np.max(mix.grad_norm(graph.grid.nodes()))),
        )
        self.params = {
            "alpha_true": alpha, "beta": beta, "seed": seed, "C1": C1,
            "sigma": sigma, "resolution": resolution,
        }
        self.support_descriptor = {
            "domain": [[0.0, 0.0], [1.0, 1.0]],
            "anchor": anchor.tolist(),
            "scale": scale,
            "bump_centers": mix.centers.tolist(),
            "bump_widths": mix.widths.tolist(),
            "bump_amplitudes": mix.amps.tolist(),
            "reference_resolution": resolution,
        }

    def p_true(self, x):
        x = as_points(x, 2)
        inside = np.all((x >= 0) & (x <= 1), axis=1)
        return np.where(inside, self.mix.raw(x) / self.mix.norm, 0.0)

    def reference_distance(self, x1, x2):
        """Reference-grid distance between the nodes nearest to ``x1`` and ``x2``."""
        n1 = self.graph.locate(as_points(x1, 2))
        n2 = self.graph.locate(as_points(x2, 2))
        out = np.empty(n1.shape[0])
        for u in np.unique(n1):
            sel = n1 == u
            out[sel] = self.graph.node_distances([u])[0, n2[sel]]
        return out

    def f_star(self, x):
        nodes = self.graph.locate(as_points(x, 2))
        if np.any(nodes < 0):
            raise ValueError("f_star is defined on the unit square only")
        return self.C1 * np.clip(self.field[nodes], 0.0, self.scale) ** self.beta

    def _draw_x(self, k, rng):
        top = self.pclass.Lambda0

        def accept(u):
            return rng.random(u.shape[0]) * top < self.p_true(u)

        return _rejection(k, rng, np.zeros(2), np.ones(2), accept, self.batch)


def _extreme(fun, grid_pts, sign):
    vals = sign * fun(grid_pts)
    x0 = grid_pts[int(np.argmin(vals))]
    res = minimize(
        lambda z: sign * fun(z.reshape(1, -1))[0], x0, method="L-BFGS-B", bounds=[(0, 1), (0, 1)]
    )
    return min(float(vals.min()), float(res.fun)) * sign


def make_smooth_instance(
    alpha_true: float,
    beta: float = 1.0,
    seed: int = 0,
    *,
    C1: float = 1.0,
    sigma: float = 0.1,
    n_bumps: int = 3,
    resolution: int = 200,
    scale_quantile: float = 0.75,
) -> SmoothInstance:
    """Smooth density on the unit square with ``f*`` built from ``D_alpha``.

    ``f*(x) = C1 * min(D(x0, x), s)**beta`` where ``D`` is the 16-neighbor
    grid distance for ``alpha_true`` weighted by the true density on a
    ``resolution``-cell reference grid, ``x0`` is a seeded anchor node and
    ``s`` is the ``scale_quantile`` quantile of ``D(x0, .)``.  ``f*`` is
    evaluated at the nearest reference node, so the smoothness condition
    holds exactly for the reference metric whenever ``0 < beta <= 1``.
    """
    if not (alpha_true >= 0 and math.isfinite(alpha_true)):
        raise ValueError("alpha_true must be finite and >= 0")
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    if C1 <= 0 or sigma < 0:
        raise ValueError("need C1 > 0 and sigma >= 0")
    rng = np.random.default_rng(seed)
    mix = _Mixture(
        centers=rng.uniform(0.2, 0.8, size=(n_bumps, 2)),
        widths=rng.uniform(0.08, 0.2, size=n_bumps),
        amps=rng.uniform(1.0, 3.0, size=n_bumps),
    )
    grid = GridSpec((0.0, 0.0), (1.0, 1.0), resolution)
    nodes = grid.nodes()
    dens = mix.raw(nodes) / mix.norm
    lam0 = _extreme(lambda z: mix.raw(z) / mix.norm, nodes, 1.0)
    lam1 = _extreme(lambda z: mix.raw(z) / mix.norm, nodes, -1.0)
    lam1 *= 1 + 1e-9
    model = DensityModel.from_values(grid, dens, interior_mask=np.ones(grid.size, dtype=bool))
    graph = build_graph(model, float(alpha_true), 16)
    anchor = grid.coords(grid.snap(rng.uniform(0.15, 0.85, size=(1, 2))))[0]
    field_ = graph.node_distances(graph.locate(anchor.reshape(1, 2)))[0]
    field_.setflags(write=False)
    scale = float(np.quantile(field_, scale_quantile))
    return SmoothInstance(
        mix, float(alpha_true), float(beta), float(C1), scale, anchor, graph, field_,
        lam0, lam1, float(sigma), seed, resolution,
    )


GENERATORS = {
    "uniform_components": make_uniform_components,
    "lower_bound": make_lower_bound_instance,
    "smooth": make_smooth_instance,
    "comb": make_comb_instance,
}
