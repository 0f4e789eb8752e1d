from collections import deque

import numpy as np
import pytest

from hoop.world import GridMap, GridWorld, ReceptacleInfo, WorldObject, start


def walled(h: int, w: int, walls=(), receptacles=()) -> GridMap:
    """Open room with a one-cell border wall plus extra wall cells."""
    occ = np.zeros((h, w), dtype=bool)
    occ[0, :] = occ[-1, :] = True
    occ[:, 0] = occ[:, -1] = True
    for c in walls:
        occ[c] = True
    rooms = np.where(occ, -1, 0)
    recs = []
    for cls, c in receptacles:
        occ[c] = True
        recs.append(ReceptacleInfo(cls, c, 0))
    return GridMap(occ, rooms, recs)


def make_world(grid: GridMap, objects=(), agent=(1, 1), heading=0, **kw) -> GridWorld:
    w = GridWorld(grid, [WorldObject(*o) for o in objects], **kw)
    w.step(start(agent))
    w.pose = type(w.pose)(tuple(agent), heading, 0)
    return w


def bfs_dist(occ: np.ndarray, src, dst, blocked=frozenset()):
    """Plain BFS on 4-connected free cells; None if unreachable."""
    h, w = occ.shape
    seen = {src: 0}
    q = deque([src])
    while q:
        c = q.popleft()
        if c == dst:
            return seen[c]
        for d in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            n = (c[0] + d[0], c[1] + d[1])
            if 0 <= n[0] < h and 0 <= n[1] < w and not occ[n] and n not in blocked and n not in seen:
                seen[n] = seen[c] + 1
                q.append(n)
    return None


@pytest.fixture
def room():
    return walled(10, 10)
