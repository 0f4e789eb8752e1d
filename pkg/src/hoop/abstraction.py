"""Belief -> abstract planner state.

For every tracked object this derives where it probably is, from which free
cells it could be picked, where it could be put down (its goal plus nearby
receptacles as alternates), and the held / at-goal bookkeeping.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .belief import BeliefState
from .geometry import Cell, euclid
from .navigation import EMPTY, NavCache
from .world import LowLevelAction, ReceptacleInfo, footprint


@dataclass(frozen=True)
class AbstractObjectState:
    obj_id: str
    class_name: str
    loc: Cell
    candidates: tuple[Cell, ...]  # believed object cells, reachable or not
    picks: tuple[tuple[Cell, Cell], ...]  # (stand cell, believed object cell)
    place_locs: tuple[tuple[Cell, Cell], ...]  # (stand cell, target cell)
    place_targets: tuple[Cell, ...]  # goal first, then alternates
    is_held: bool
    at_goal: bool
    goal: Cell
    size: int = 1

    def to_json(self) -> dict:
        return {
            "id": self.obj_id,
            "loc": list(self.loc),
            "picks": [[list(s), list(t)] for s, t in self.picks],
            "place_locs": [[list(s), list(t)] for s, t in self.place_locs],
            "is_held": self.is_held,
            "at_goal": self.at_goal,
            "goal": list(self.goal),
        }


@dataclass(frozen=True)
class AbstractState:
    robot: Cell
    heading: int
    objects: tuple[AbstractObjectState, ...]

    def obj(self, oid: str) -> AbstractObjectState:
        for o in self.objects:
            if o.obj_id == oid:
                return o
        raise KeyError(oid)

    def to_json(self) -> dict:
        return {
            "robot": list(self.robot),
            "heading": self.heading,
            "objects": [o.to_json() for o in self.objects],
        }


@dataclass
class AbstractionConfig:
    concentration: float = 0.5  # max mass above which a belief counts as located
    k_max: int = 3
    min_separation: float = 8.0  # cells between sampled candidate object cells
    n_alternates: int = 3


def reachable(nav: NavCache, dynamic_obstacles: Iterable[Cell], src: Cell, dst: Cell) -> bool:
    """4-connected path of free cells between ``src`` and ``dst``."""
    blocked = frozenset(dynamic_obstacles)
    if not nav.free(src, blocked):
        return False
    return src == dst or nav.reachable(src, dst, blocked)


def candidate_cells(
    prob: np.ndarray,
    rng: np.random.Generator,
    k_max: int = 3,
    concentration: float = 0.5,
    min_separation: float = 8.0,
) -> list[Cell]:
    """Believed object cells worth visiting.

    Concentrated beliefs yield their argmax only; spread beliefs yield up to
    ``k_max`` weighted draws, each at least ``min_separation`` from the others.
    """
    flat = prob.ravel()
    w = prob.shape[1]
    top = int(np.argmax(flat))
    if flat[top] >= concentration:
        return [divmod(top, w)]
    weights = flat.copy()
    rows, cols = np.indices(prob.shape)
    out: list[Cell] = []
    for _ in range(k_max):
        total = weights.sum()
        if total <= 0:
            break
        idx = int(rng.choice(flat.size, p=weights / total))
        cell = divmod(idx, w)
        out.append(cell)
        near = (rows - cell[0]) ** 2 + (cols - cell[1]) ** 2 < min_separation**2
        weights[near.ravel()] = 0.0
    return out


def sample_pick_locations(
    prob: np.ndarray,
    nav: NavCache,
    agent_cell: Cell,
    rng: np.random.Generator,
    k_max: int = 3,
    blocked: frozenset = EMPTY,
    cfg: AbstractionConfig | None = None,
    size: int = 1,
) -> list[tuple[Cell, Cell]]:
    """(stand cell, believed object cell) pairs; unreachable candidates dropped."""
    cfg = cfg or AbstractionConfig()
    cands = candidate_cells(prob, rng, k_max, cfg.concentration, cfg.min_separation)
    return _picks_for(cands, nav, agent_cell, blocked, size)


def _picks_for(cands: Sequence[Cell], nav: NavCache, agent: Cell, blocked: frozenset, size: int) -> list[tuple[Cell, Cell]]:
    out = []
    for c in cands:
        own = frozenset(footprint(c, size))
        stand = nav.stand_cell(c, agent, blocked - own if size > 1 else blocked, own)
        if stand is not None:
            out.append((stand, c))
    return out


def nearest_receptacles(nav: NavCache, goal: Cell, receptacles: Sequence[ReceptacleInfo], n: int = 3) -> list[Cell]:
    """Receptacle cells ranked by walking distance from ``goal``."""
    dist = nav.dist_field(goal)
    ranked = []
    for rec in receptacles:
        best = None
        r, c = rec.cell
        for nb in ((r - 1, c), (r, c + 1), (r + 1, c), (r, c - 1)):
            if nav.free(nb):
                d = dist[nav.idx(nb)]
                if d >= 0 and (best is None or d < best):
                    best = d
        if best is not None:
            ranked.append((best + 1, rec.cell))
    ranked.sort()
    return [cell for _, cell in ranked[:n]]


def parking_squares(nav: NavCache, goal: Cell, agent: Cell, n: int = 3, min_gap: float = 3.0) -> list[Cell]:
    """Anchors of free 2x2 squares near ``goal`` that do not cut the free space."""
    key = ("parking", goal, agent, n)
    hit = nav._stand.get(key)
    if hit is not None:
        return hit
    dist = nav.dist_field(goal)
    base = sum(1 for d in nav.dist_field(agent) if d >= 0)
    order = sorted((d, nav.cell(i)) for i, d in enumerate(dist) if d >= 0)
    out: list[Cell] = []
    for _, anchor in order:
        if len(out) >= n:
            break
        cells = footprint(anchor, 2)
        if not all(nav.free(c) for c in cells):
            continue
        if any(euclid(anchor, g) < min_gap for g in [goal, *out]):
            continue
        if agent in cells:
            continue
        fs = frozenset(cells)
        if sum(1 for d in nav.dist_field(agent, fs) if d >= 0) != base - 4:
            continue
        out.append(anchor)
    nav._stand[key] = out
    return out


def sample_place_locations(
    goal: Cell,
    receptacles: Sequence[ReceptacleInfo],
    nav: NavCache,
    agent_cell: Cell | None = None,
    blocked: frozenset = EMPTY,
    n_alternates: int = 3,
    size: int = 1,
) -> list[tuple[Cell, Cell]]:
    """Goal plus up to ``n_alternates`` nearby targets, each with a reachable stand cell."""
    agent = agent_cell if agent_cell is not None else goal
    targets = place_targets(goal, receptacles, nav, agent, n_alternates, size)
    return _places_for(targets, nav, agent, blocked, size)


def place_targets(goal: Cell, receptacles: Sequence[ReceptacleInfo], nav: NavCache, agent: Cell, n_alternates: int, size: int) -> list[Cell]:
    if size > 1:
        return [goal, *parking_squares(nav, goal, agent, n_alternates)]
    return [goal, *nearest_receptacles(nav, goal, receptacles, n_alternates)]


def _places_for(targets: Sequence[Cell], nav: NavCache, agent: Cell, blocked: frozenset, size: int) -> list[tuple[Cell, Cell]]:
    out = []
    for t in targets:
        stand = nav.stand_cell(t, agent, blocked, frozenset(footprint(t, size)))
        if stand is not None:
            out.append((stand, t))
    return out


def dynamic_obstacles(b: BeliefState, concentration: float = 0.5, extra: Iterable[Cell] = ()) -> frozenset:
    """Believed 2x2 blocker footprints (located ones only) plus known bump cells."""
    cells = set(extra)
    for oid, ob in b.per_object.items():
        if b.sizes.get(oid, 1) > 1 and not ob.is_held and ob.max() >= concentration:
            cells.update(footprint(ob.argmax(), b.sizes[oid]))
    return frozenset(cells)


def generate_abstract_state(
    b: BeliefState,
    nav: NavCache,
    receptacles: Sequence[ReceptacleInfo],
    robot: Cell,
    heading: int,
    last_action: Optional[LowLevelAction] = None,
    last_success: bool = False,
    prev: Optional[AbstractState] = None,
    rng: np.random.Generator | None = None,
    cfg: AbstractionConfig | None = None,
    extra_obstacles: Iterable[Cell] = (),
    last_place_target: Optional[Cell] = None,
) -> AbstractState:
    cfg = cfg or AbstractionConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    blocked = dynamic_obstacles(b, cfg.concentration, extra_obstacles)
    blocked = blocked - {robot}

    objs = []
    for oid in sorted(b.per_object):
        ob = b.per_object[oid]
        size = b.sizes.get(oid, 1)
        goal = b.goals[oid]
        prev_o = None if prev is None else next((o for o in prev.objects if o.obj_id == oid), None)

        if prev_o is None:
            is_held, at_goal = ob.is_held, ob.at_goal
        else:
            is_held, at_goal = prev_o.is_held, prev_o.at_goal
            if last_action is not None and last_success:
                if last_action.kind == "Pick" and last_action.object_id == oid and not prev_o.is_held:
                    is_held, at_goal = True, False
                elif last_action.kind == "Place" and prev_o.is_held:
                    is_held = False
                    target = last_place_target if last_place_target is not None else last_action.cell
                    at_goal = target is not None and tuple(target) == goal

        own = frozenset(footprint(ob.argmax(), size)) if size > 1 and ob.max() >= cfg.concentration else EMPTY
        blocked_i = blocked - own
        if is_held:
            loc, cands, picks = robot, (), ()
        else:
            loc = ob.argmax()
            prob = ob.prob
            if not at_goal and ob.max() < cfg.concentration:
                # an unplaced object is not searched for on its own goal, which
                # would read as already solved inside the planner
                prob = prob.copy()
                for c in footprint(goal, size):
                    prob[c] = 0.0
                if prob.sum() <= 0.0:
                    prob = ob.prob
            cands = tuple(candidate_cells(prob, rng, cfg.k_max, cfg.concentration, cfg.min_separation))
            picks = tuple(_picks_for(cands, nav, robot, blocked_i, size))
        n_alt = cfg.n_alternates
        targets = tuple(place_targets(goal, receptacles, nav, robot, n_alt, size))
        places = tuple(_places_for(targets, nav, robot, blocked_i, size))
        if not places:
            # goal side sealed off: offer spots near the robot so a held object can be set down
            near = [t for t in place_targets(robot, receptacles, nav, robot, n_alt, size)[1:] if t not in targets]
            targets += tuple(near)
            places = tuple(_places_for(targets, nav, robot, blocked_i, size))
        objs.append(
            AbstractObjectState(
                oid, b.classes[oid], loc, cands, picks, places, targets, is_held, at_goal, goal, size
            )
        )
    return AbstractState(robot, heading, tuple(objs))
