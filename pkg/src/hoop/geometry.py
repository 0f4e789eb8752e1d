"""Grid geometry helpers: headings, rays, view cones.

Cells are ``(row, col)`` tuples. Heading 0 points north (row - 1), 90 east,
180 south, 270 west; positive rotation is clockwise seen from above.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable

Cell = tuple[int, int]

HEADINGS = (0, 90, 180, 270)

FOV_DEGREES = 90.0
_COS_HALF_FOV = math.cos(math.radians(FOV_DEGREES / 2.0))


def heading_vector(heading: int) -> tuple[float, float]:
    rad = math.radians(heading)
    return (-math.cos(rad), math.sin(rad))


def step_vector(heading: int) -> Cell:
    """Unit grid step for a heading (diagonal for odd multiples of 45)."""
    dr, dc = heading_vector(heading)
    return (int(round(dr)), int(round(dc)))


def euclid(a: Cell, b: Cell) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def heading_towards(src: Cell, dst: Cell, step: int = 90) -> int:
    """Heading (a multiple of ``step``) whose direction is closest to ``dst``.

    Ties resolve to the smallest heading value.
    """
    if src == dst:
        return 0
    dr, dc = dst[0] - src[0], dst[1] - src[1]
    best, best_dot = 0, -math.inf
    for h in range(0, 360, step):
        hr, hc = heading_vector(h)
        dot = hr * dr + hc * dc
        if dot > best_dot + 1e-9:
            best, best_dot = h, dot
    return best


def rotation_steps(current: int, target: int, step: int = 90) -> int:
    """Minimal number of ``step``-degree turns between two headings."""
    diff = (target - current) % 360
    return min(diff, 360 - diff) // step


@lru_cache(maxsize=None)
def bresenham(dr: int, dc: int) -> tuple[Cell, ...]:
    """Offsets strictly between the origin and ``(dr, dc)`` on a Bresenham ray."""
    cells = []
    r0, c0 = 0, 0
    adr, adc = abs(dr), abs(dc)
    sr = 1 if dr > 0 else -1
    sc = 1 if dc > 0 else -1
    err = adc - adr
    r, c = r0, c0
    while (r, c) != (dr, dc):
        e2 = 2 * err
        if e2 >= -adr:
            err -= adr
            c += sc
        if e2 <= adc:
            err += adc
            r += sr
        if (r, c) != (dr, dc):
            cells.append((r, c))
    return tuple(cells)


def line_of_sight(src: Cell, dst: Cell, blocked) -> bool:
    """True when no cell strictly between ``src`` and ``dst`` is blocked.

    ``blocked`` is anything indexable by ``[row, col]`` returning truthy for
    occluding cells (a numpy bool array, typically).
    """
    r0, c0 = src
    for dr, dc in bresenham(dst[0] - r0, dst[1] - c0):
        if blocked[r0 + dr, c0 + dc]:
            return False
    return True


def in_cone(src: Cell, heading: int, dst: Cell) -> bool:
    if src == dst:
        return True
    dr, dc = dst[0] - src[0], dst[1] - src[1]
    hr, hc = heading_vector(heading)
    dot = hr * dr + hc * dc
    return dot >= math.hypot(dr, dc) * _COS_HALF_FOV - 1e-9


@lru_cache(maxsize=None)
def cone_offsets(heading: int, radius: float) -> tuple[Cell, ...]:
    """All offsets inside the 90 degree cone of ``heading`` within ``radius`` cells."""
    rmax = int(math.floor(radius))
    out = []
    for dr in range(-rmax, rmax + 1):
        for dc in range(-rmax, rmax + 1):
            if math.hypot(dr, dc) <= radius + 1e-9 and in_cone((0, 0), heading, (dr, dc)):
                out.append((dr, dc))
    return tuple(out)


def cone_size(radius: float) -> int:
    """|cells in a 90 degree cone within ``radius``|; identical for all grid headings."""
    return len(cone_offsets(0, radius))


def neighbors4(cell: Cell) -> Iterable[Cell]:
    r, c = cell
    return ((r - 1, c), (r, c + 1), (r + 1, c), (r, c - 1))
