"""Plug-in density-sensitive distance as shortest paths on a grid graph.

Nodes are the interior nodes of a :class:`~dssl.density.DensityModel`.  Two
nodes ``u, v = u + o`` are joined when ``o`` belongs to the connectivity
stencil and every lattice node whose cell the segment ``[u, v]`` touches is
interior too (no corner cutting past excluded nodes).  Edge weights apply
the trapezoid rule to the line integral of ``phat**(-alpha)``:

    w(u, v) = ||u - v|| * (phat(u)**-alpha + phat(v)**-alpha) / 2

Stencils, named after their two-dimensional neighbor counts:

* ``4``: axis steps only (``2d`` neighbors);
* ``8``: every step in ``{-1, 0, 1}**d``;
* ``16``: every primitive step in ``{-2, ..., 2}**d`` (knight moves in 2-D).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from .core import as_points
from .density import DensityModel, GridSpec

__all__ = [
    "CONNECTIVITIES",
    "GeodesicGraph",
    "DistanceResult",
    "stencil",
    "build_graph",
    "distance",
    "distances_from",
    "pairwise_distances",
    "oracle_distance",
    "oracle_distances_from",
    "dump_edges",
]

CONNECTIVITIES = (4, 8, 16)
ORACLE_MAX_NODES = 16


class DistanceResult(NamedTuple):
    value: float
    reachable: bool


def _linf_to_segment(p, o):
    """Exact L-infinity distance from lattice point ``p`` to segment ``[0, o]``."""
    p = np.asarray(p, dtype=np.float64)
    o = np.asarray(o, dtype=np.float64)
    ts = {0.0, 1.0}
    for i in range(len(o)):
        if o[i] != 0:
            ts.add(p[i] / o[i])
        for j in range(i + 1, len(o)):
            for s in (1.0, -1.0):
                den = o[i] - s * o[j]
                if den != 0:
                    ts.add((p[i] - s * p[j]) / den)
    best = math.inf
    for t in ts:
        if 0.0 <= t <= 1.0:
            best = min(best, float(np.max(np.abs(t * o - p))))
    return best


def stencil(connectivity: int, d: int):
    """Half stencil as ``[(offset, swept_nodes), ...]``.

    Only offsets whose first nonzero component is positive are listed; the
    mirrored edge is implied.  ``swept_nodes`` are the intermediate lattice
    offsets whose closed unit cell the segment from 0 to ``offset`` meets.
    """
    if connectivity not in CONNECTIVITIES:
        raise ValueError(f"connectivity must be one of {CONNECTIVITIES}, got {connectivity}")
    if connectivity == 4:
        offsets = [tuple(int(k == i) for k in range(d)) for i in range(d)]
    else:
        reach = 1 if connectivity == 8 else 2
        offsets = []
        for o in itertools.product(range(-reach, reach + 1), repeat=d):
            nz = [c for c in o if c != 0]
            if not nz or nz[0] < 0:
                continue
            if math.gcd(*[abs(c) for c in nz]) != 1:
                continue
            offsets.append(o)
    out = []
    for o in offsets:
        ranges = [range(min(0, c), max(0, c) + 1) for c in o]
        swept = []
        for p in itertools.product(*ranges):
            if not any(p) or p == o:
                continue
            if _linf_to_segment(p, o) <= 0.5 + 1e-12:
                swept.append(p)
        out.append((o, tuple(swept)))
    return out


def _shifted(padded, pad, offset, shape):
    sl = tuple(slice(pad + c, pad + c + n) for c, n in zip(offset, shape))
    return padded[sl]


@dataclass(frozen=True, eq=False)
class GeodesicGraph:
    """Weighted graph over interior grid nodes.

    ``node_ids[k]`` is the flat grid index of graph node ``k``;
    ``node_of[flat]`` maps back (``-1`` for excluded nodes).  ``matrix`` is a
    symmetric CSR matrix holding both directions of every edge.
    """

    grid: GridSpec
    alpha: float
    connectivity: int
    node_ids: np.ndarray
    node_of: np.ndarray
    matrix: sparse.csr_matrix
    snap_radius: float

    @property
    def n_nodes(self) -> int:
        return int(self.node_ids.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.matrix.nnz // 2)

    def edges(self):
        """``(u, v, w)`` arrays with ``u < v``."""
        coo = sparse.triu(self.matrix, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]

    @cached_property
    def _interior_tree(self):
        return cKDTree(self.grid.coords(self.node_ids))

    @cached_property
    def n_components(self) -> int:
        from scipy.sparse.csgraph import connected_components

        return int(connected_components(self.matrix, directed=False)[0])

    def locate(self, points, snap="strict") -> np.ndarray:
        """Graph node for each query point, ``-1`` when there is none.

        ``snap="strict"`` maps a point to its nearest grid node and rejects it
        unless that node is interior.  ``snap="interior"`` instead falls back to
        the nearest interior node within ``snap_radius``.
        """
        flat = self.grid.snap(points)
        nodes = np.where(flat >= 0, self.node_of[np.maximum(flat, 0)], -1)
        if snap == "strict":
            return nodes
        if snap != "interior":
            raise ValueError(f"snap must be 'strict' or 'interior', got {snap!r}")
        miss = np.flatnonzero(nodes < 0)
        if miss.size and self.n_nodes:
            pts = as_points(points, self.grid.d)[miss]
            dist, k = self._interior_tree.query(pts, distance_upper_bound=self.snap_radius)
            ok = np.isfinite(dist)
            nodes = nodes.copy()
            nodes[miss[ok]] = k[ok]
        return nodes

    def node_distances(self, sources) -> np.ndarray:
        """Shortest-path values from graph nodes ``sources`` to every graph node.

        Rows for ``-1`` sources are all ``inf``.
        """
        sources = np.atleast_1d(np.asarray(sources, dtype=np.int64))
        out = np.full((sources.shape[0], self.n_nodes), np.inf)
        ok = sources >= 0
        if ok.any() and self.n_nodes:
            uniq, inv = np.unique(sources[ok], return_inverse=True)
            rows = dijkstra(self.matrix, directed=True, indices=uniq)
            out[ok] = np.atleast_2d(rows)[inv]
        return out


def build_graph(model: DensityModel, alpha: float, connectivity: int = 16) -> GeodesicGraph:
    """Weighted grid graph realizing the plug-in distance for ``alpha``.

    Raises
    ------
    ValueError
        Empty interior, negative ``alpha``, or weights that over/underflow
        (``alpha`` too large for the range of ``phat``).
    """
    if not (alpha >= 0 and math.isfinite(alpha)):
        raise ValueError(f"alpha must be finite and >= 0, got {alpha}")
    grid = model.grid
    interior = model.interior_mask
    n_nodes = int(np.count_nonzero(interior))
    if n_nodes == 0:
        raise ValueError("density model has no interior nodes; the graph would be empty")
    if np.any(model.phat[interior] <= 0):
        raise AssertionError("interior node with phat <= 0")

    node_ids = np.flatnonzero(interior)
    node_of = np.full(grid.size, -1, dtype=np.int64)
    node_of[node_ids] = np.arange(n_nodes)

    q = np.zeros(grid.size)
    with np.errstate(over="ignore", divide="ignore", under="ignore"):
        q[interior] = model.phat[interior] ** (-float(alpha))
    if not np.all(np.isfinite(q[interior])) or np.any(q[interior] == 0):
        raise ValueError(f"phat**(-alpha) over/underflows for alpha={alpha}")

    shape = grid.shape
    pad = 2
    mask = np.pad(interior.reshape(shape), pad, constant_values=False)
    qg = np.pad(q.reshape(shape), pad)
    ids = np.pad(node_of.reshape(shape), pad, constant_values=-1)
    zero = (0,) * grid.d
    base_mask = _shifted(mask, pad, zero, shape)
    base_q = _shifted(qg, pad, zero, shape)
    base_ids = _shifted(ids, pad, zero, shape)

    rows, cols, vals = [], [], []
    for offset, swept in stencil(connectivity, grid.d):
        ok = base_mask & _shifted(mask, pad, offset, shape)
        for p in swept:
            ok = ok & _shifted(mask, pad, p, shape)
        if not ok.any():
            continue
        length = float(np.linalg.norm(np.asarray(offset) * grid.spacing))
        u = base_ids[ok]
        v = _shifted(ids, pad, offset, shape)[ok]
        w = length * (base_q[ok] + _shifted(qg, pad, offset, shape)[ok]) / 2.0
        rows.append(u)
        cols.append(v)
        vals.append(w)

    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        w = np.concatenate(vals)
    else:
        r = c = np.zeros(0, dtype=np.int64)
        w = np.zeros(0)
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise ValueError(f"edge weights over/underflow for alpha={alpha}")
    mat = sparse.coo_matrix(
        (np.concatenate([w, w]), (np.concatenate([r, c]), np.concatenate([c, r]))),
        shape=(n_nodes, n_nodes),
    ).tocsr()
    node_ids.setflags(write=False)
    node_of.setflags(write=False)
    return GeodesicGraph(
        grid, float(alpha), int(connectivity), node_ids, node_of, mat, 2.0 * model.delta_m
    )


def distance(g: GeodesicGraph, a, b, snap="strict") -> DistanceResult:
    """Plug-in distance between two points; ``inf`` when no admissible path."""
    na, nb = g.locate(np.vstack([as_points(a, g.grid.d), as_points(b, g.grid.d)]), snap)
    if na < 0 or nb < 0:
        return DistanceResult(math.inf, False)
    if na == nb:
        return DistanceResult(0.0, True)
    val = float(g.node_distances([na])[0, nb])
    return DistanceResult(val, math.isfinite(val))


def distances_from(g: GeodesicGraph, source, snap="strict") -> np.ndarray:
    """Single-source distance field over all grid nodes (flat, C order).

    Excluded nodes, unreachable nodes and every node for a non-interior
    source hold ``inf``; ``np.isfinite`` gives the reachability flags.
    """
    node = g.locate(as_points(source, g.grid.d), snap)[0]
    out = np.full(g.grid.size, np.inf)
    if node >= 0:
        out[g.node_ids] = g.node_distances([node])[0]
    return out


def pairwise_distances(g: GeodesicGraph, points, snap="strict") -> np.ndarray:
    """Symmetric matrix of plug-in distances between query points."""
    nodes = g.locate(points, snap)
    field = g.node_distances(nodes)
    out = np.full((nodes.shape[0], nodes.shape[0]), np.inf)
    ok = nodes >= 0
    out[np.ix_(ok, ok)] = field[np.ix_(ok, nodes[ok])]
    return out


def oracle_distances_from(g: GeodesicGraph, a: int) -> np.ndarray:
    """Shortest-path values from node ``a`` by depth-first simple-path enumeration.

    Verification oracle for graphs with at most 16 nodes, sharing no code
    with the Dijkstra route.  Every simple path leaving ``a`` is extended
    edge by edge; a partial path is abandoned when it reaches a node no
    more cheaply than some earlier path did.  Such a path is dominated: the
    earlier, cheaper prefix was itself extended along every edge.  Labels
    are always costs of actual simple paths, and at the end no edge can
    lower any label, so they equal the shortest-path values.
    """
    n = g.n_nodes
    if n > ORACLE_MAX_NODES:
        raise ValueError(f"oracle refuses graphs with more than {ORACLE_MAX_NODES} nodes ({n})")
    if not 0 <= a < n:
        raise IndexError("node index out of range")
    m = g.matrix
    adj = [
        list(zip(m.indices[m.indptr[i]:m.indptr[i + 1]].tolist(),
                 m.data[m.indptr[i]:m.indptr[i + 1]].tolist()))
        for i in range(n)
    ]
    label = [math.inf] * n
    label[a] = 0.0

    def walk(u, cost, visited):
        for v, w in adj[u]:
            c = cost + w
            if visited >> v & 1 or c >= label[v]:
                continue
            label[v] = c
            walk(v, c, visited | (1 << v))

    walk(a, 0.0, 1 << a)
    return np.array(label)


def oracle_distance(g: GeodesicGraph, a: int, b: int) -> float:
    """Single pair version of :func:`oracle_distances_from`."""
    if not 0 <= b < g.n_nodes:
        raise IndexError("node index out of range")
    return float(oracle_distances_from(g, a)[b])


def dump_edges(g: GeodesicGraph, path) -> None:
    """Write ``u v weight`` lines (graph node indices, ``u < v``)."""
    u, v, w = g.edges()
    with open(path, "w") as fh:
        for a, b, c in zip(u.tolist(), v.tolist(), w.tolist()):
            fh.write(f"{a} {b} {c!r}\n")
