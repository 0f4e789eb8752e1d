"""Low-level executors: A* navigation, rotation and the pick-then-place routine."""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import NoPath, PickFailed
from .geometry import Cell, euclid, heading_towards
from .planner import AbstractAction
from .world import (
    GridMap,
    LowLevelAction,
    MOVE_AHEAD,
    MOVE_BACK,
    MOVE_LEFT,
    MOVE_RIGHT,
    ROTATE_LEFT,
    ROTATE_RIGHT,
    pick,
    place,
)

# neighbour offsets in row-major order
_NEIGHBOURS = ((-1, 0), (0, -1), (0, 1), (1, 0))
# translation chosen for a world-frame step, indexed by (heading, offset)
_MOVE_FOR = {}
for _h in (0, 90, 180, 270):
    for _kind, _off in ((MOVE_AHEAD, 0), (MOVE_RIGHT, 90), (MOVE_BACK, 180), (MOVE_LEFT, 270)):
        _d = (_h + _off) % 360
        _vec = {0: (-1, 0), 90: (0, 1), 180: (1, 0), 270: (0, -1)}[_d]
        _MOVE_FOR[(_h, _vec)] = _kind

PHASES = ("navigate_to_pick", "pick", "navigate_to_place", "place", "done")


def rotate_plan(current: int, target: int) -> list[LowLevelAction]:
    """Shortest turn sequence; a half turn goes left."""
    if current % 90 or target % 90:
        raise ValueError("headings must be multiples of 90")
    diff = (target - current) % 360
    if diff == 0:
        return []
    if diff == 90:
        return [ROTATE_RIGHT]
    if diff == 270:
        return [ROTATE_LEFT]
    return [ROTATE_LEFT, ROTATE_LEFT]


def astar_path(
    grid: GridMap | np.ndarray,
    dynamic_obstacles: Iterable[Cell],
    start: tuple[Cell, int],
    goal_cell: Cell,
    goal_heading: Optional[int] = None,
) -> list[LowLevelAction]:
    """Minimum action-count route over (cell, heading) states.

    Every translation and every 90 degree turn costs one action; the
    Euclidean distance to ``goal_cell`` is the (admissible) heuristic.
    """
    occ = grid.occupancy if isinstance(grid, GridMap) else np.asarray(grid, dtype=bool)
    h, w = occ.shape
    blocked = set(dynamic_obstacles)
    cell0, head0 = tuple(start[0]), int(start[1]) % 360
    goal_cell = tuple(goal_cell)

    def free(c: Cell) -> bool:
        return 0 <= c[0] < h and 0 <= c[1] < w and not occ[c] and c not in blocked

    if not free(cell0):
        raise NoPath(f"start {cell0} is not free")
    if not free(goal_cell):
        raise NoPath(f"goal {goal_cell} is not free")

    def is_goal(state) -> bool:
        return state[0] == goal_cell and (goal_heading is None or state[1] == goal_heading % 360)

    s0 = (cell0, head0)
    g = {s0: 0}
    parent: dict = {s0: None}
    counter = 0
    heap = [(euclid(cell0, goal_cell), 0, counter, s0)]
    while heap:
        _, gs, _, state = heapq.heappop(heap)
        if gs > g[state]:
            continue
        if is_goal(state):
            out = []
            while parent[state] is not None:
                state, act = parent[state]
                out.append(act)
            return out[::-1]
        cell, head = state
        succ = []
        for off in _NEIGHBOURS:
            nxt = (cell[0] + off[0], cell[1] + off[1])
            if free(nxt):
                succ.append(((nxt, head), _MOVE_FOR[(head, off)]))
        succ.append(((cell, (head - 90) % 360), ROTATE_LEFT))
        succ.append(((cell, (head + 90) % 360), ROTATE_RIGHT))
        for ns, act in succ:
            ng = gs + 1
            if ng < g.get(ns, 1 << 30):
                g[ns] = ng
                parent[ns] = (state, act)
                counter += 1
                heapq.heappush(heap, (ng + euclid(ns[0], goal_cell), ng, counter, ns))
    raise NoPath(f"no route from {cell0} to {goal_cell}")


@dataclass
class ActionPlan:
    """Queue of low-level actions realising one sub-goal."""

    subgoal: AbstractAction
    queue: deque = field(default_factory=deque)
    phase: str = "navigate_to_pick"
    alternatives: list[tuple[Cell, Cell]] = field(default_factory=list)
    place_target: Optional[Cell] = None

    def next_action(self) -> Optional[LowLevelAction]:
        return self.queue[0] if self.queue else None

    @property
    def finished(self) -> bool:
        return self.phase == "done"


def _approach(grid, blocked, pose: tuple[Cell, int], stand: Cell, face: Cell) -> list[LowLevelAction]:
    route = astar_path(grid, blocked, pose, stand)
    heading = pose[1]
    for a in route:
        if a.kind == "RotateLeft":
            heading = (heading - 90) % 360
        elif a.kind == "RotateRight":
            heading = (heading + 90) % 360
    return route + rotate_plan(heading, heading_towards(stand, face))


def navigation_plan(subgoal: AbstractAction, pose: tuple[Cell, int], grid, blocked: Iterable[Cell]) -> ActionPlan:
    """Plan for a Move or Rotate sub-goal."""
    if subgoal.kind == "Move":
        acts = _approach(grid, set(blocked), pose, subgoal.stand, subgoal.target)
    elif subgoal.kind == "Rotate":
        acts = rotate_plan(pose[1], subgoal.angle)
    else:
        raise ValueError(f"not a navigation sub-goal: {subgoal}")
    return ActionPlan(subgoal, deque(acts), "navigate_to_pick" if acts else "done")


def pick_place_execute(
    subgoal: AbstractAction,
    pose: tuple[Cell, int],
    believed_cell: Cell,
    grid,
    blocked: Iterable[Cell],
    alternatives: Iterable[tuple[Cell, Cell]] = (),
    holding: bool = False,
) -> ActionPlan:
    """Start a pick-then-place routine.

    When the object is already held (an earlier routine was interrupted) the
    plan starts straight at the carry phase.
    """
    plan = ActionPlan(subgoal, deque(), "pick", [p for p in alternatives if p[1] != subgoal.target])
    if holding:
        _to_place(plan, pose, grid, set(blocked), subgoal.place_stand, subgoal.target)
        return plan
    plan.queue.extend(rotate_plan(pose[1], heading_towards(pose[0], believed_cell)))
    plan.queue.append(pick(subgoal.object_id))
    return plan


def _to_place(plan: ActionPlan, pose, grid, blocked: set, stand: Cell, target: Cell) -> None:
    plan.phase = "navigate_to_place"
    plan.place_target = target
    plan.queue = deque(_approach(grid, blocked, pose, stand, target))
    plan.queue.append(place(target))
    if len(plan.queue) == 1:
        plan.phase = "place"


def advance(
    plan: ActionPlan,
    action: LowLevelAction,
    success: bool,
    pose: tuple[Cell, int],
    grid,
    blocked: Iterable[Cell],
) -> ActionPlan:
    """Consume the result of ``action`` and move the phase machine on.

    Raises PickFailed when the pick misses and NoPath when the carry route is
    cut; in both cases the caller replans from the updated belief.
    """
    if plan.queue and plan.queue[0] == action:
        plan.queue.popleft()
    if action.kind == "Pick":
        if not success:
            plan.phase = "done"
            raise PickFailed(f"pick of {action.object_id} failed")
        _to_place(plan, pose, grid, set(blocked), plan.subgoal.place_stand, plan.subgoal.target)
        return plan
    if action.kind == "Place":
        if success:
            plan.phase = "done"
            return plan
        while plan.alternatives:
            stand, target = plan.alternatives.pop(0)
            try:
                _to_place(plan, pose, grid, set(blocked), stand, target)
                return plan
            except NoPath:
                continue
        plan.phase = "done"
        return plan
    if not plan.queue:
        plan.phase = "done"
    elif plan.queue[0].kind == "Place":
        plan.phase = "place"
    elif plan.queue[0].kind == "Pick":
        plan.phase = "pick"
    return plan
