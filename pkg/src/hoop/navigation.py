"""Cached shortest-path, reachability and line-of-sight queries on a static map.

Dynamic obstacles (2x2 blocker footprints) are passed as frozensets of cells;
every query is memoised on them, so callers should reuse the same frozenset
objects where possible.
"""
from __future__ import annotations

from collections import deque
from typing import Iterable, Optional

import numpy as np

from .geometry import Cell, bresenham
from .world import GridMap

EMPTY: frozenset = frozenset()


class NavCache:
    def __init__(self, grid: GridMap, range_cells: float = 8.0):
        self.map = grid
        self.h, self.w = grid.height, grid.width
        self.range_cells = range_cells
        self._occ = grid.occupancy.astype(bool).ravel().tolist()
        self._nbrs: list[tuple[int, ...]] = []
        w, h = self.w, self.h
        for idx in range(h * w):
            r, c = divmod(idx, w)
            out = []
            if r > 0:
                out.append(idx - w)
            if c < w - 1:
                out.append(idx + 1)
            if r < h - 1:
                out.append(idx + w)
            if c > 0:
                out.append(idx - 1)
            self._nbrs.append(tuple(out))
        self._dist: dict = {}
        self._los: dict = {}
        self._inrange: dict = {}
        self._stand: dict = {}
        r = int(range_cells)
        self._range_offsets = [
            (dr, dc) for dr in range(-r, r + 1) for dc in range(-r, r + 1) if dr * dr + dc * dc <= range_cells**2 + 1e-9
        ]

    # --- helpers --------------------------------------------------------
    def idx(self, cell: Cell) -> int:
        return cell[0] * self.w + cell[1]

    def cell(self, idx: int) -> Cell:
        return divmod(idx, self.w)

    def free(self, cell: Cell, blocked: frozenset = EMPTY) -> bool:
        r, c = cell
        return 0 <= r < self.h and 0 <= c < self.w and not self._occ[r * self.w + c] and cell not in blocked

    # --- distances ------------------------------------------------------
    def dist_field(self, src: Cell, blocked: frozenset = EMPTY) -> list[int]:
        """BFS step counts from ``src`` (flat list, -1 = unreachable)."""
        key = (src, blocked)
        hit = self._dist.get(key)
        if hit is not None:
            return hit
        n = self.h * self.w
        dist = [-1] * n
        if self.free(src, blocked):
            occ = self._occ
            bl = {self.idx(c) for c in blocked}
            nbrs = self._nbrs
            s = self.idx(src)
            dist[s] = 0
            q = deque([s])
            while q:
                u = q.popleft()
                du = dist[u] + 1
                for v in nbrs[u]:
                    if dist[v] < 0 and not occ[v] and v not in bl:
                        dist[v] = du
                        q.append(v)
        self._dist[key] = dist
        return dist

    def distance(self, a: Cell, b: Cell, blocked: frozenset = EMPTY) -> Optional[int]:
        d = self.dist_field(a, blocked)[self.idx(b)]
        return None if d < 0 else d

    def reachable(self, a: Cell, b: Cell, blocked: frozenset = EMPTY) -> bool:
        return self.free(b, blocked) and self.distance(a, b, blocked) is not None

    def reach_mask(self, src: Cell, blocked: frozenset = EMPTY) -> np.ndarray:
        return (np.asarray(self.dist_field(src, blocked)) >= 0).reshape(self.h, self.w)

    # --- line of sight ----------------------------------------------------
    def los(self, a: Cell, b: Cell, blocked: frozenset = EMPTY) -> bool:
        key = (a, b, blocked)
        hit = self._los.get(key)
        if hit is not None:
            return hit
        occ, w = self._occ, self.w
        r0, c0 = a
        ok = True
        for dr, dc in bresenham(b[0] - r0, b[1] - c0):
            cell = (r0 + dr, c0 + dc)
            if occ[cell[0] * w + cell[1]] or cell in blocked:
                ok = False
                break
        self._los[key] = ok
        return ok

    # --- interaction stand cells --------------------------------------------
    def in_range_cells(self, target: Cell, blocked: frozenset = EMPTY) -> list[Cell]:
        """Free cells within interaction range of ``target`` with a clear ray to it."""
        key = (target, blocked)
        hit = self._inrange.get(key)
        if hit is not None:
            return hit
        tr, tc = target
        out = []
        for dr, dc in self._range_offsets:
            cell = (tr + dr, tc + dc)
            if cell != target and self.free(cell, blocked) and self.los(cell, target, blocked):
                out.append(cell)
        out.sort()
        self._inrange[key] = out
        return out

    def stand_cell(
        self,
        target: Cell,
        agent: Cell,
        blocked: frozenset = EMPTY,
        exclude: frozenset = EMPTY,
    ) -> Optional[Cell]:
        """Reachable in-range cell closest (by path) to ``agent``; row-major tie-break."""
        key = (target, agent, blocked, exclude)
        if key in self._stand:
            return self._stand[key]
        dist = self.dist_field(agent, blocked)
        best, best_d = None, None
        for cell in self.in_range_cells(target, blocked):
            if cell in exclude:
                continue
            d = dist[cell[0] * self.w + cell[1]]
            if d >= 0 and (best_d is None or d < best_d):
                best, best_d = cell, d
        self._stand[key] = best
        return best


def flood_components(free: np.ndarray) -> tuple[np.ndarray, int]:
    """Label 4-connected components of ``free`` cells (labels from 1; 0 = not free)."""
    from scipy import ndimage

    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    labels, n = ndimage.label(free, structure=structure)
    return labels, int(n)


def cells_of(mask: np.ndarray) -> Iterable[Cell]:
    rows, cols = np.nonzero(mask)
    return zip(rows.tolist(), cols.tolist())
