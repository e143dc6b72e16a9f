"""Finite lattice volumes: sites, internal edges, and boundary edges.

Sites are points of the d-dimensional integer lattice held in a fixed
lexicographic order; that order is the canonical index for every vector and
matrix built on the volume. Heights outside the volume are fixed to zero, so
each nearest-neighbor bond leaving the volume is kept as a boundary edge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product

import numpy as np

_NEIGHBOR_STEPS_CACHE: dict[int, list[tuple[int, ...]]] = {}


def _neighbor_steps(d: int) -> list[tuple[int, ...]]:
    steps = _NEIGHBOR_STEPS_CACHE.get(d)
    if steps is None:
        steps = []
        for axis in range(d):
            for sign in (1, -1):
                e = [0] * d
                e[axis] = sign
                steps.append(tuple(e))
        _NEIGHBOR_STEPS_CACHE[d] = steps
    return steps


@dataclass(frozen=True)
class Volume:
    """A finite set of lattice sites with its edge structure.

    internal_edges holds index pairs (i, j), i < j, both inside; each
    unordered bond appears exactly once. boundary_edges holds (site index,
    outside coordinate) pairs, one per bond leaving the volume. Every site
    has exactly 2*d incident bonds split between the two lists.
    """

    d: int
    sites: tuple[tuple[int, ...], ...]
    internal_edges: np.ndarray
    boundary_edges: tuple[tuple[int, tuple[int, ...]], ...]
    box_radius: int | None = None
    _index: dict[tuple[int, ...], int] = field(repr=False, default_factory=dict)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def site_index(self, site: tuple[int, ...]) -> int:
        return self._index[tuple(site)]

    def boundary_degree(self) -> np.ndarray:
        deg = np.zeros(self.n_sites, dtype=np.int64)
        for i, _ in self.boundary_edges:
            deg[i] += 1
        return deg

    def internal_degree(self) -> np.ndarray:
        deg = np.zeros(self.n_sites, dtype=np.int64)
        for i, j in self.internal_edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def neighbor_table(self) -> np.ndarray:
        """(n, 2d) array of neighbor indices, -1 marking exterior bonds."""
        cached = getattr(self, "_nbr_table", None)
        if cached is not None:
            return cached
        table = np.full((self.n_sites, 2 * self.d), -1, dtype=np.int64)
        fill = np.zeros(self.n_sites, dtype=np.int64)
        for i, j in self.internal_edges:
            table[i, fill[i]] = j
            fill[i] += 1
            table[j, fill[j]] = i
            fill[j] += 1
        object.__setattr__(self, "_nbr_table", table)
        return table

    def coords_array(self) -> np.ndarray:
        return np.asarray(self.sites, dtype=np.int64)

    def to_json(self) -> str:
        if self.box_radius is not None:
            return json.dumps({"d": self.d, "L": self.box_radius})
        return json.dumps({"d": self.d, "sites": [list(s) for s in self.sites]})

    @staticmethod
    def from_json(text: str) -> "Volume":
        obj = json.loads(text)
        if "L" in obj and obj.get("L") is not None:
            return make_box(obj["d"], obj["L"])
        return volume_from_sites(obj["d"], [tuple(s) for s in obj["sites"]])


def volume_from_sites(d: int, sites) -> Volume:
    """Builds a Volume from an explicit site list (deduplicated, sorted)."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    pts = sorted({tuple(int(c) for c in s) for s in sites})
    if not pts:
        raise ValueError("volume needs at least one site")
    for p in pts:
        if len(p) != d:
            raise ValueError(f"site {p} does not have dimension {d}")
    index = {p: i for i, p in enumerate(pts)}
    steps = _neighbor_steps(d)
    internal = []
    boundary = []
    for i, p in enumerate(pts):
        for e in steps:
            q = tuple(p[a] + e[a] for a in range(d))
            j = index.get(q)
            if j is None:
                boundary.append((i, q))
            elif i < j:
                internal.append((i, j))
    edges = np.asarray(internal, dtype=np.int64).reshape(len(internal), 2)
    vol = Volume(d=d, sites=tuple(pts), internal_edges=edges,
                 boundary_edges=tuple(boundary), _index=index)
    _check_degrees(vol)
    return vol


def make_box(d: int, L: int) -> Volume:
    """Centered box with sides 2L+1: all sites with every |coordinate| <= L."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if L < 0:
        raise ValueError(f"box radius must be >= 0, got {L}")
    n_sites = (2 * L + 1) ** d
    if n_sites > np.iinfo(np.intp).max:
        raise ValueError(f"box with {n_sites} sites overflows the index range")
    sites = list(product(range(-L, L + 1), repeat=d))
    vol = volume_from_sites(d, sites)
    object.__setattr__(vol, "box_radius", L)
    return vol


def make_grid(shape) -> Volume:
    """Axis-aligned box with the given side lengths, anchored at the origin."""
    dims = [int(s) for s in shape]
    if any(s < 1 for s in dims):
        raise ValueError(f"grid sides must be >= 1, got {dims}")
    return volume_from_sites(len(dims), product(*[range(s) for s in dims]))


def _check_degrees(vol: Volume) -> None:
    total = vol.internal_degree() + vol.boundary_degree()
    if not (total == 2 * vol.d).all():
        raise AssertionError("edge bookkeeping violated: site degree != 2d")
