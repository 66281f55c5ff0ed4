"""Domains, shrunk cubic lattices, neighbor tables, and 5-tet cell decompositions.

Node positions are integer triples ``i`` scaled by the mesh step ``h = a/n``.
Everything is deterministic: nodes are stored in lexicographic order of their
integer coordinates and all derived structures inherit that order, so two
builds from identical inputs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np


class EmptyLatticeError(ValueError):
    """The domain contains no lattice nodes at the requested resolution."""


@dataclass(frozen=True)
class DomainSpec:
    """Magnetic domain: an axis-aligned closed box or a closed ball.

    Both shapes must contain the origin in their interior.  Their boundaries
    are piecewise C1 and satisfy an interior-cone condition by construction,
    which is what the averaging machinery relies on; no cone quantities are
    ever computed.
    """

    shape: Literal["box", "ball"]
    lo: tuple[float, float, float] | None = None
    hi: tuple[float, float, float] | None = None
    center: tuple[float, float, float] | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.shape == "box":
            if self.lo is None or self.hi is None:
                raise ValueError("box domain needs lo and hi corners")
            lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
            if not np.all(hi > lo):
                raise ValueError("box must have positive volume")
            if not (np.all(lo < 0.0) and np.all(hi > 0.0)):
                raise ValueError("origin must lie in the interior of the box")
        elif self.shape == "ball":
            if self.center is None or self.radius is None:
                raise ValueError("ball domain needs center and radius")
            if self.radius <= 0.0:
                raise ValueError("ball must have positive radius")
            if np.linalg.norm(np.asarray(self.center, float)) >= self.radius:
                raise ValueError("origin must lie in the interior of the ball")
        else:
            raise ValueError(f"unknown domain shape {self.shape!r}")

    @staticmethod
    def box(lo, hi) -> "DomainSpec":
        return DomainSpec("box", lo=tuple(float(v) for v in lo),
                          hi=tuple(float(v) for v in hi))

    @staticmethod
    def ball(center, radius) -> "DomainSpec":
        return DomainSpec("ball", center=tuple(float(v) for v in center),
                          radius=float(radius))

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.shape == "box":
            return np.asarray(self.lo, float), np.asarray(self.hi, float)
        c = np.asarray(self.center, float)
        r = float(self.radius)
        return c - r, c + r

    def volume(self) -> float:
        if self.shape == "box":
            lo, hi = self.bounding_box()
            return float(np.prod(hi - lo))
        return float(4.0 / 3.0 * np.pi * self.radius ** 3)

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        """Closed-set membership test, vectorized over the leading axes."""
        p = np.asarray(points, float)
        if self.shape == "box":
            lo, hi = self.bounding_box()
            return np.all((p >= lo - tol) & (p <= hi + tol), axis=-1)
        c = np.asarray(self.center, float)
        return np.linalg.norm(p - c, axis=-1) <= self.radius + tol


@dataclass
class Lattice:
    """Integer node set of the shrunk lattice restricted to a domain.

    ``nodes`` holds integer triples i with position ``(a/n) * i`` inside the
    (closed) domain, sorted lexicographically.
    """

    domain: DomainSpec
    a: float
    n: int
    nodes: np.ndarray  # (N, 3) int64, lexicographically sorted

    _imin: np.ndarray = field(init=False, repr=False)
    _dims: np.ndarray = field(init=False, repr=False)
    _keys: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._imin = self.nodes.min(axis=0)
        self._dims = self.nodes.max(axis=0) - self._imin + 1
        self._keys = self._encode(self.nodes)
        if np.any(np.diff(self._keys) <= 0):
            raise AssertionError("lattice nodes must be lex-sorted and unique")

    @property
    def h(self) -> float:
        """Mesh step a/n."""
        return self.a / self.n

    @property
    def count(self) -> int:
        return self.nodes.shape[0]

    @property
    def positions(self) -> np.ndarray:
        return self.nodes * self.h

    def _encode(self, ijk: np.ndarray) -> np.ndarray:
        off = ijk - self._imin
        return (off[..., 0] * self._dims[1] + off[..., 1]) * self._dims[2] + off[..., 2]

    def lookup(self, ijk) -> np.ndarray:
        """Map integer triples to node row indices; -1 where absent."""
        ijk = np.asarray(ijk, dtype=np.int64)
        inside = np.all((ijk >= self._imin) & (ijk <= self._imin + self._dims - 1),
                        axis=-1)
        safe = np.where(inside[..., None], ijk, self._imin)
        key = self._encode(safe)
        pos = np.searchsorted(self._keys, key)
        pos = np.minimum(pos, self._keys.size - 1)
        hit = inside & (self._keys[pos] == key)
        return np.where(hit, pos, -1)


def build_lattice(domain: DomainSpec, a: float, n: int) -> Lattice:
    """Enumerate the integer triples i with (a/n)*i inside the domain.

    Raises EmptyLatticeError when no node falls inside (the origin is always
    interior, so this only happens for degenerate inputs).
    """
    if n < 1:
        raise ValueError("shrink index n must be >= 1")
    if a <= 0.0:
        raise ValueError("mesh size a must be positive")
    h = a / n
    tol = 1e-9 * h
    lo, hi = domain.bounding_box()
    imin = np.ceil((lo - tol) / h).astype(np.int64)
    imax = np.floor((hi + tol) / h).astype(np.int64)
    axes = [np.arange(imin[s], imax[s] + 1, dtype=np.int64) for s in range(3)]
    gi, gj, gk = np.meshgrid(*axes, indexing="ij")
    ijk = np.stack([gi.ravel(), gj.ravel(), gk.ravel()], axis=-1)
    keep = domain.contains(ijk * h, tol=tol)
    nodes = ijk[keep]
    if nodes.shape[0] == 0:
        raise EmptyLatticeError(
            f"no lattice node of step {h} lies inside the {domain.shape} domain")
    # C-order meshgrid flattening is already lexicographic in (i, j, k).
    return Lattice(domain=domain, a=float(a), n=int(n), nodes=nodes)


# Neighbor slot order: -x, +x, -y, +y, -z, +z.
_NEIGHBOR_OFFSETS = np.array(
    [[-1, 0, 0], [1, 0, 0], [0, -1, 0], [0, 1, 0], [0, 0, -1], [0, 0, 1]],
    dtype=np.int64)


@dataclass
class NeighborTable:
    """Axis-adjacent neighbors (distance exactly a/n) present in the lattice."""

    lattice: Lattice
    neighbors: np.ndarray  # (N, 6) int64 node indices, -1 where absent
    degree: np.ndarray     # (N,)
    boundary_nodes: np.ndarray  # sorted indices of nodes with degree < 6


def neighbors(lattice: Lattice) -> NeighborTable:
    nb = np.empty((lattice.count, 6), dtype=np.int64)
    for s, off in enumerate(_NEIGHBOR_OFFSETS):
        nb[:, s] = lattice.lookup(lattice.nodes + off)
    degree = (nb >= 0).sum(axis=1)
    boundary = np.flatnonzero(degree < 6)
    return NeighborTable(lattice=lattice, neighbors=nb, degree=degree,
                         boundary_nodes=boundary)


# Local cell corner ids use the bit code 4*cx + 2*cy + cz.
_CORNER_OFFSETS = np.array(
    [[0, 0, 0], [0, 0, 1], [0, 1, 0], [0, 1, 1],
     [1, 0, 0], [1, 0, 1], [1, 1, 0], [1, 1, 1]], dtype=np.int64)

# Even-parity cells: center tet on the even-parity corners, 4 corner tets with
# apex (first entry) at the odd-parity corners.  Odd-parity cells mirror the
# x-bit (id ^ 4) so that shared faces carry the same diagonal in both cells.
_CORNER_TETS = {
    0: np.array([[4, 0, 6, 5], [2, 0, 6, 3], [1, 0, 5, 3], [7, 6, 5, 3]]),
    1: np.array([[0, 4, 2, 1], [6, 4, 2, 7], [5, 4, 1, 7], [3, 2, 1, 7]]),
}
_CENTER_TET = {
    0: np.array([0, 6, 5, 3]),
    1: np.array([4, 2, 1, 7]),
}
_CENTER_EDGE_PAIRS = np.array(
    [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]])


@dataclass
class TetDecomposition:
    """Corner/center tetrahedra of all full cells plus edge bookkeeping.

    A cell is *full* when its 8 corners all belong to the lattice; cells with
    any missing corner are dropped entirely, so the piecewise-linear space
    lives on the union of full cells only.  Multiplicity tables are literal
    counts: ``edge_corner_mult`` is the number of corner tets an axis edge
    belongs to (4 deep inside), ``diag_center_mult`` the number of center tets
    a face diagonal belongs to (2 deep inside), and ``edge_leg_mult`` the
    number of distinct outer-surface triangles an axis edge is a leg of
    (4 deep inside).
    """

    lattice: Lattice
    table: NeighborTable
    cell_anchor_ijk: np.ndarray   # (C, 3) integer anchor of each full cell
    cell_corners: np.ndarray      # (C, 8) node indices in local-id order
    cell_parity: np.ndarray       # (C,) 0/1
    corner_tets: np.ndarray       # (4C, 4) node indices, apex first
    center_tets: np.ndarray       # (C, 4) node indices
    edges_E: np.ndarray           # (Me, 2) sorted axis-edge node pairs
    edge_corner_mult: np.ndarray  # (Me,)
    edge_leg_mult: np.ndarray     # (Me,)
    edges_C: np.ndarray           # (Mc, 2) sorted face-diagonal node pairs
    diag_center_mult: np.ndarray  # (Mc,)
    surfaces_S: np.ndarray        # (Ms, 3) unique triples (i, j, apex), i < j
    surface_mult: np.ndarray      # (Ms,) 1 or 2

    _cell_keys: np.ndarray = field(init=False, repr=False)
    _cell_order: np.ndarray = field(init=False, repr=False)
    _edge_keys: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.cell_anchor_ijk.shape[0]:
            keys = self.lattice._encode(self.cell_anchor_ijk)
            order = np.argsort(keys)
            self._cell_keys = keys[order]
            self._cell_order = order
        else:
            self._cell_keys = np.empty(0, dtype=np.int64)
            self._cell_order = np.empty(0, dtype=np.int64)
        self._edge_keys = _pair_keys(self.edges_E, self.lattice.count)

    @property
    def is_empty(self) -> bool:
        return self.cell_corners.shape[0] == 0

    @property
    def cell_count(self) -> int:
        return self.cell_corners.shape[0]

    @property
    def corner_tet_volume(self) -> float:
        return self.lattice.h ** 3 / 6.0

    @property
    def center_tet_volume(self) -> float:
        return self.lattice.h ** 3 / 3.0

    @property
    def omega_n_volume(self) -> float:
        """Lebesgue measure of the union of all tetrahedra (exact)."""
        return self.cell_count * self.lattice.h ** 3

    def find_cells(self, anchor_ijk) -> np.ndarray:
        """Map integer cell anchors to rows of the cell arrays; -1 if absent."""
        anchor_ijk = np.asarray(anchor_ijk, dtype=np.int64)
        if self.is_empty:
            return np.full(anchor_ijk.shape[:-1], -1, dtype=np.int64)
        lo = self.lattice._imin
        hi = lo + self.lattice._dims - 1
        inside = np.all((anchor_ijk >= lo) & (anchor_ijk <= hi), axis=-1)
        safe = np.where(inside[..., None], anchor_ijk, lo)
        key = self.lattice._encode(safe)
        pos = np.searchsorted(self._cell_keys, key)
        pos = np.minimum(pos, self._cell_keys.size - 1)
        hit = inside & (self._cell_keys[pos] == key)
        return np.where(hit, self._cell_order[pos], -1)

    def edge_multiplicities(self, pairs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Corner-tet and triangle-leg multiplicities for arbitrary node pairs.

        Pairs not belonging to any full cell report 0 in both tables.
        """
        keys = _pair_keys(np.sort(pairs, axis=1), self.lattice.count)
        out_corner = np.zeros(len(keys), dtype=np.int64)
        out_leg = np.zeros(len(keys), dtype=np.int64)
        if self._edge_keys.size:
            pos = np.searchsorted(self._edge_keys, keys)
            pos = np.minimum(pos, self._edge_keys.size - 1)
            hit = self._edge_keys[pos] == keys
            out_corner[hit] = self.edge_corner_mult[pos[hit]]
            out_leg[hit] = self.edge_leg_mult[pos[hit]]
        return out_corner, out_leg


def _pair_keys(pairs: np.ndarray, n_nodes: int) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64)
    if pairs.size == 0:
        return np.empty(0, dtype=np.int64)
    return pairs[:, 0] * np.int64(n_nodes) + pairs[:, 1]


def _unique_pairs(pairs: np.ndarray, n_nodes: int):
    pairs = np.sort(pairs.reshape(-1, 2), axis=1)
    keys = _pair_keys(pairs, n_nodes)
    ukeys, counts = np.unique(keys, return_counts=True)
    upairs = np.stack([ukeys // n_nodes, ukeys % n_nodes], axis=1)
    return upairs, counts, ukeys


def decompose(lattice: Lattice, table: NeighborTable | None = None) -> TetDecomposition:
    """Split every full cell into 4 corner tets and 1 center tet.

    Adjacent cells use mirrored (parity-alternating) splits so faces are
    conforming.  An empty decomposition (no full cell) is valid and flagged
    via ``is_empty``.
    """
    if table is None:
        table = neighbors(lattice)
    N = lattice.count

    corner_idx = np.empty((N, 8), dtype=np.int64)
    corner_idx[:, 0] = np.arange(N)
    for cid in range(1, 8):
        corner_idx[:, cid] = lattice.lookup(lattice.nodes + _CORNER_OFFSETS[cid])
    full = np.all(corner_idx >= 0, axis=1)
    cell_corners = corner_idx[full]
    cell_anchor = lattice.nodes[full]
    parity = (cell_anchor.sum(axis=1) & 1).astype(np.int64)

    C = cell_corners.shape[0]
    if C == 0:
        empty2 = np.empty((0, 2), dtype=np.int64)
        empty3 = np.empty((0, 3), dtype=np.int64)
        empty4 = np.empty((0, 4), dtype=np.int64)
        z = np.empty(0, dtype=np.int64)
        return TetDecomposition(
            lattice=lattice, table=table, cell_anchor_ijk=empty3,
            cell_corners=np.empty((0, 8), dtype=np.int64), cell_parity=z,
            corner_tets=empty4, center_tets=empty4,
            edges_E=empty2, edge_corner_mult=z, edge_leg_mult=z,
            edges_C=empty2, diag_center_mult=z,
            surfaces_S=empty3, surface_mult=z)

    corner_tets = np.empty((4 * C, 4), dtype=np.int64)
    center_tets = np.empty((C, 4), dtype=np.int64)
    for p in (0, 1):
        rows = np.flatnonzero(parity == p)
        if rows.size == 0:
            continue
        local = _CORNER_TETS[p]
        for t in range(4):
            corner_tets[4 * rows + t] = cell_corners[rows][:, local[t]]
        center_tets[rows] = cell_corners[rows][:, _CENTER_TET[p]]

    # Axis edges: the 3 apex edges of every corner tet.
    apex_pairs = np.stack(
        [np.repeat(corner_tets[:, 0], 3), corner_tets[:, 1:].ravel()], axis=1)
    edges_E, edge_corner_mult, edge_keys = _unique_pairs(apex_pairs, N)

    # Face diagonals: the 6 edges of every center tet.
    diag_pairs = center_tets[:, _CENTER_EDGE_PAIRS].reshape(-1, 2)
    edges_C, diag_center_mult, _ = _unique_pairs(diag_pairs, N)

    # Outer-surface triples (i, j, apex) of corner tets, deduplicated across
    # cells: a triangle interior to the mesh is a face of two corner tets.
    v = corner_tets
    tri = np.concatenate([
        np.stack([v[:, 1], v[:, 2], v[:, 0]], axis=1),
        np.stack([v[:, 1], v[:, 3], v[:, 0]], axis=1),
        np.stack([v[:, 2], v[:, 3], v[:, 0]], axis=1),
    ], axis=0)
    ij = np.sort(tri[:, :2], axis=1)
    tri = np.concatenate([ij, tri[:, 2:3]], axis=1)
    tri_keys = (tri[:, 0] * N + tri[:, 1]) * N + tri[:, 2]
    ukeys, counts = np.unique(tri_keys, return_counts=True)
    surfaces = np.stack(
        [ukeys // (N * N), (ukeys // N) % N, ukeys % N], axis=1)

    # Triangle-leg multiplicity of each axis edge, counted over unique triples.
    legs = np.concatenate([
        np.stack([surfaces[:, 0], surfaces[:, 2]], axis=1),
        np.stack([surfaces[:, 1], surfaces[:, 2]], axis=1)], axis=0)
    leg_keys = _pair_keys(np.sort(legs, axis=1), N)
    leg_ukeys, leg_counts = np.unique(leg_keys, return_counts=True)
    pos = np.searchsorted(edge_keys, leg_ukeys)
    if not np.all(edge_keys[np.minimum(pos, edge_keys.size - 1)] == leg_ukeys):
        raise AssertionError("triangle legs must be corner-tet axis edges")
    edge_leg_mult = np.zeros(edges_E.shape[0], dtype=np.int64)
    edge_leg_mult[pos] = leg_counts

    return TetDecomposition(
        lattice=lattice, table=table,
        cell_anchor_ijk=cell_anchor, cell_corners=cell_corners,
        cell_parity=parity, corner_tets=corner_tets, center_tets=center_tets,
        edges_E=edges_E, edge_corner_mult=edge_corner_mult,
        edge_leg_mult=edge_leg_mult,
        edges_C=edges_C, diag_center_mult=diag_center_mult,
        surfaces_S=surfaces, surface_mult=counts)
