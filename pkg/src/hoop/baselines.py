"""Comparison methods: frontier exploration with a confidence threshold, and
the perfect-knowledge / perfect-detector oracle settings.

The depth-1 ablation needs no code here: it is the standard planner run with
``PlannerConfig.depth = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .abstraction import AbstractState, nearest_receptacles
from .belief import BeliefState
from .errors import Exhausted
from .geometry import Cell
from .navigation import NavCache, flood_components
from .planner import DONE_ACTION, AbstractAction
from .world import GridMap, footprint

UNKNOWN, FREE, OCCUPIED = 0, 1, 2


@dataclass
class Cluster:
    cells: list[Cell]
    centroid: Cell


@dataclass
class FrontierState:
    known: np.ndarray  # int8 (H, W): UNKNOWN / FREE / OCCUPIED
    truth: np.ndarray  # static occupancy used to label observed cells
    clusters: list[Cluster] = field(default_factory=list)
    found: set[str] = field(default_factory=set)
    placed: set[str] = field(default_factory=set)
    given_up: set[str] = field(default_factory=set)
    exhausted: set[tuple[str, Cell]] = field(default_factory=set)
    place_tried: set[str] = field(default_factory=set)
    bad_frontier: set[Cell] = field(default_factory=set)

    @classmethod
    def initial(cls, grid: GridMap, mode: str = "static") -> "FrontierState":
        """``static``: walls known up front; ``unknown``: every cell starts unknown."""
        occ = grid.occupancy
        known = np.zeros(occ.shape, dtype=np.int8)
        if mode == "static":
            known[occ] = OCCUPIED
        elif mode != "unknown":
            raise ValueError("known-map mode must be 'static' or 'unknown'")
        return cls(known, occ.copy())

    def observe(self, view: np.ndarray, agent: Cell) -> None:
        self.known[view & ~self.truth] = FREE
        self.known[view & self.truth] = OCCUPIED
        self.known[agent] = FREE


def frontier_clusters(known: np.ndarray) -> list[Cluster]:
    """4-connected groups of known-free cells touching an unknown cell."""
    free = known == FREE
    unk = known == UNKNOWN
    touch = np.zeros_like(unk)
    touch[1:, :] |= unk[:-1, :]
    touch[:-1, :] |= unk[1:, :]
    touch[:, 1:] |= unk[:, :-1]
    touch[:, :-1] |= unk[:, 1:]
    frontier = free & touch
    labels, n = flood_components(frontier)
    out = []
    for k in range(1, n + 1):
        rows, cols = np.nonzero(labels == k)
        cells = list(zip(rows.tolist(), cols.tolist()))
        mr, mc = rows.mean(), cols.mean()
        centroid = min(cells, key=lambda c: ((c[0] - mr) ** 2 + (c[1] - mc) ** 2, c))
        out.append(Cluster(cells, centroid))
    return out


def _closest(nav: NavCache, agent: Cell, cells: list[Cell], blocked: frozenset) -> Optional[Cell]:
    dist = nav.dist_field(agent, blocked)
    best, best_d = None, None
    for c in cells:
        d = dist[nav.idx(c)]
        if d >= 0 and (best_d is None or d < best_d):
            best, best_d = c, d
    return best


def fhc_step(
    fs: FrontierState,
    b: BeliefState,
    nav: NavCache,
    s: AbstractState,
    theta: float = 0.7,
    blocked: frozenset = frozenset(),
) -> AbstractAction:
    """Next sub-goal of the frontier heuristic."""
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    robot = s.robot
    held = b.held

    # finish (or abandon) a carry that is in progress
    if held is not None:
        goal = b.goals[held]
        ob = s.obj(held)
        if held not in fs.place_tried:
            fs.place_tried.add(held)
            stand = nav.stand_cell(goal, robot, blocked, frozenset(footprint(goal, ob.size)))
            if stand is not None:
                return AbstractAction("PickPlace", held, robot, goal, stand)
        fs.given_up.add(held)
        fs.found.discard(held)
        for t in nearest_receptacles(nav, robot, nav.map.receptacles, 5) if ob.size == 1 else []:
            stand = nav.stand_cell(t, robot, blocked, frozenset([t]))
            if stand is not None:
                return AbstractAction("PickPlace", held, robot, t, stand)
        raise Exhausted(f"cannot put down {held}")

    for oid in sorted(b.per_object):
        ob = b.per_object[oid]
        if oid in fs.placed or oid in fs.given_up or ob.is_held:
            continue
        if ob.at_goal:
            fs.placed.add(oid)
            fs.found.discard(oid)
            continue
        cell = ob.argmax()
        if ob.max() > theta and (oid, cell) not in fs.exhausted:
            if cell == b.goals[oid]:
                fs.placed.add(oid)  # already where it belongs
                continue
            fs.found.add(oid)
        elif oid in fs.found and (oid, cell) in fs.exhausted:
            fs.found.discard(oid)

    # interaction phase: closest found object
    dist = nav.dist_field(robot, blocked)
    best = None
    for oid in sorted(fs.found):
        ob = b.per_object[oid]
        cell = ob.argmax()
        size = s.obj(oid).size
        own = frozenset(footprint(cell, size))
        stand = nav.stand_cell(cell, robot, blocked - own, own)
        if stand is None:
            fs.exhausted.add((oid, cell))
            continue
        d = dist[nav.idx(stand)]
        if best is None or d < best[0]:
            best = (d, oid, cell, stand)
    if best is not None:
        _, oid, cell, stand = best
        size = s.obj(oid).size
        if stand == robot:
            goal = b.goals[oid]
            own = frozenset(footprint(cell, size))
            place_stand = nav.stand_cell(goal, robot, blocked - own, frozenset(footprint(goal, size)))
            fs.exhausted.add((oid, cell))  # a miss here is not retried
            fs.found.discard(oid)
            if place_stand is None:
                fs.given_up.add(oid)
                return fhc_step(fs, b, nav, s, theta, blocked)
            fs.place_tried.add(oid)
            return AbstractAction("PickPlace", oid, robot, goal, place_stand)
        return AbstractAction("Move", oid, stand, cell)

    # exploration phase: closest reachable frontier cluster
    fs.clusters = frontier_clusters(fs.known)
    cents = [c.centroid for c in fs.clusters if c.centroid not in fs.bad_frontier]
    target = _closest(nav, robot, cents, blocked)
    if target is not None:
        if target == robot:
            fs.bad_frontier.add(target)
        return AbstractAction("Explore", stand=target)
    remaining = [oid for oid in b.per_object if oid not in fs.placed and oid not in fs.given_up]
    if not remaining:
        return DONE_ACTION
    raise Exhausted("no reachable frontier and nothing found")


def make_oracle_config(kind: str) -> dict:
    """Belief initialisation and detector mode for the oracle settings."""
    kind = kind.lower()
    if kind == "pk":
        return {"belief": "delta", "perfect_detector": True}
    if kind == "pd":
        return {"belief": "uniform", "perfect_detector": True}
    raise ValueError(f"unknown oracle setting {kind!r}")
