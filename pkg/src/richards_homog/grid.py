"""Structured triangular meshes on squares and coarse-cell patch extraction.

Nodes are numbered row-major on the lattice: node ``(i, j)`` (column ``i`` along
x1, row ``j`` along x2) has index ``j * (n + 1) + i``.  Square cell ``(i, j)`` has
index ``j * n + i`` and owns triangles ``2c`` (below the diagonal) and ``2c + 1``
(above it).  Every square is split along its bottom-left to top-right diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


@dataclass(frozen=True, eq=False)
class StructuredMesh:
    n_side: int
    origin: tuple[float, float]
    side_length: float
    nodes: np.ndarray = field(repr=False)
    triangles: np.ndarray = field(repr=False)
    boundary_nodes: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def n_cells(self) -> int:
        return self.n_side * self.n_side

    @property
    def h(self) -> float:
        """Side length of one square cell."""
        return self.side_length / self.n_side

    def cell_of_triangle(self) -> np.ndarray:
        return np.arange(self.n_triangles) // 2

    def cell_centers(self) -> np.ndarray:
        """Centers of the square cells in cell-index order, shape ``(n*n, 2)``."""
        n = self.n_side
        c = (np.arange(n) + 0.5) * self.h
        x1, x2 = np.meshgrid(c + self.origin[0], c + self.origin[1])
        return np.column_stack([x1.ravel(), x2.ravel()])

    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


@dataclass(frozen=True, eq=False)
class CoarseCellPatch:
    coarse_cell_index: int
    local_mesh: StructuredMesh
    fine_cell_map: np.ndarray = field(repr=False)


def build_mesh(n_side: int, origin=(0.0, 0.0), side_length: float = 1.0) -> StructuredMesh:
    """Uniform ``n_side x n_side`` square grid, two triangles per square."""
    if int(n_side) != n_side or n_side < 1:
        raise ValueError(f"n_side must be a positive integer, got {n_side!r}")
    if side_length <= 0:
        raise ValueError(f"side_length must be positive, got {side_length!r}")
    n = int(n_side)
    ox, oy = float(origin[0]), float(origin[1])
    h = side_length / n

    coords = np.arange(n + 1) * h
    x1, x2 = np.meshgrid(coords + ox, coords + oy)
    nodes = np.column_stack([x1.ravel(), x2.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    i, j = i.ravel(), j.ravel()
    n0 = j * (n + 1) + i
    n1 = n0 + 1
    n2 = n0 + (n + 1) + 1
    n3 = n0 + (n + 1)
    tris = np.empty((2 * n * n, 3), dtype=np.int64)
    tris[0::2] = np.column_stack([n0, n1, n2])
    tris[1::2] = np.column_stack([n0, n2, n3])

    li, lj = np.meshgrid(np.arange(n + 1), np.arange(n + 1))
    on_edge = (li == 0) | (li == n) | (lj == 0) | (lj == n)
    boundary = np.flatnonzero(on_edge.ravel())

    for arr in (nodes, tris, boundary):
        arr.setflags(write=False)
    return StructuredMesh(n, (ox, oy), float(side_length), nodes, tris, boundary)


def extract_patch(fine: StructuredMesh, coarse: StructuredMesh, cell_index: int) -> CoarseCellPatch:
    """Fine sub-mesh covering one coarse cell, plus its local-to-global cell map."""
    if fine.n_side % coarse.n_side != 0:
        raise ValueError(
            f"fine n_side {fine.n_side} is not divisible by coarse n_side {coarse.n_side}")
    if not 0 <= cell_index < coarse.n_cells:
        raise IndexError(f"cell_index {cell_index} out of range [0, {coarse.n_cells})")
    r = fine.n_side // coarse.n_side
    kc, lc = cell_index % coarse.n_side, cell_index // coarse.n_side
    H = coarse.h
    origin = (coarse.origin[0] + kc * H, coarse.origin[1] + lc * H)
    local = build_mesh(r, origin, H)

    li, lj = np.meshgrid(np.arange(r), np.arange(r))
    cell_map = (lc * r + lj.ravel()) * fine.n_side + (kc * r + li.ravel())
    cell_map.setflags(write=False)
    return CoarseCellPatch(cell_index, local, cell_map)


@lru_cache(maxsize=16)
def _pattern(n_side: int) -> tuple[tuple[int, int], ...]:
    mesh = build_mesh(n_side)
    pairs = set()
    for tri in mesh.triangles:
        for a in tri:
            for b in tri:
                if a <= b:
                    pairs.add((int(a), int(b)))
    return tuple(sorted(pairs))


def coarse_sparsity_pattern(coarse: StructuredMesh) -> list[tuple[int, int]]:
    """Upper-triangular ``(i, j)`` node pairs sharing a triangle, row-major.

    Depends only on ``n_side``; its length is ``(2n + 1)**2``.
    """
    return list(_pattern(coarse.n_side))


def pattern_arrays(coarse: StructuredMesh) -> tuple[np.ndarray, np.ndarray]:
    pat = np.asarray(_pattern(coarse.n_side), dtype=np.int64)
    return pat[:, 0], pat[:, 1]


def side_from_pattern_length(length: int) -> int:
    """Invert ``(2n + 1)**2 == length``."""
    root = int(round(np.sqrt(length)))
    if root * root != length or root % 2 == 0:
        raise ValueError(f"{length} is not a valid coarse pattern length")
    return (root - 1) // 2
