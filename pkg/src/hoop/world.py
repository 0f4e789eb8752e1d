"""Deterministic multi-room grid environment.

Holds ground truth (static occupancy, receptacles, objects, agent pose),
executes low-level actions and reports what the agent can currently see.
"""
from __future__ import annotations

import copy
import logging
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InvalidAction
from .geometry import (
    Cell,
    cone_offsets,
    euclid,
    line_of_sight,
    step_vector,
)

log = logging.getLogger(__name__)

MOVE_KINDS = ("MoveAhead", "MoveBack", "MoveLeft", "MoveRight")
ROTATE_KINDS = ("RotateLeft", "RotateRight")
LOOK_KINDS = ("LookUp", "LookDown")
ACTION_KINDS = MOVE_KINDS + ROTATE_KINDS + LOOK_KINDS + ("Pick", "Place", "Start", "Done")

# heading offset applied to the agent heading for each translation
_MOVE_OFFSET = {"MoveAhead": 0, "MoveRight": 90, "MoveBack": 180, "MoveLeft": 270}
TILTS = (-30, 0, 30)


@dataclass(frozen=True)
class ReceptacleInfo:
    class_name: str
    cell: Cell
    room_id: int


@dataclass
class GridMap:
    """Flattened 2D occupancy map of the static house geometry."""

    occupancy: np.ndarray  # bool (H, W); True = blocked by static geometry
    room_id: np.ndarray  # int (H, W); -1 on walls
    receptacles: list[ReceptacleInfo] = field(default_factory=list)
    cell_size: float = 0.25

    @property
    def height(self) -> int:
        return int(self.occupancy.shape[0])

    @property
    def width(self) -> int:
        return int(self.occupancy.shape[1])

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.height and 0 <= cell[1] < self.width

    def is_free(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and not self.occupancy[cell]

    def free_cells(self) -> list[Cell]:
        rows, cols = np.nonzero(~self.occupancy)
        return list(zip(rows.tolist(), cols.tolist()))

    def receptacle_cells(self) -> set[Cell]:
        return {r.cell for r in self.receptacles}

    def copy(self) -> "GridMap":
        return GridMap(self.occupancy.copy(), self.room_id.copy(), list(self.receptacles), self.cell_size)


@dataclass(frozen=True)
class AgentPose:
    cell: Cell
    heading: int = 0
    camera_tilt: int = 0


@dataclass
class WorldObject:
    id: str
    class_name: str
    cell: Optional[Cell]
    size: int = 1  # footprint is size x size anchored at the top-left cell
    held: bool = False

    @property
    def footprint(self) -> tuple[Cell, ...]:
        if self.cell is None:
            return ()
        return footprint(self.cell, self.size)


def footprint(anchor: Cell, size: int) -> tuple[Cell, ...]:
    r, c = anchor
    return tuple((r + i, c + j) for i in range(size) for j in range(size))


@dataclass(frozen=True)
class LowLevelAction:
    kind: str
    object_id: Optional[str] = None
    cell: Optional[Cell] = None

    def __post_init__(self):
        if self.kind not in ACTION_KINDS:
            raise InvalidAction(f"unknown action kind {self.kind!r}")

    def __str__(self) -> str:
        if self.kind == "Pick":
            return f"Pick({self.object_id})"
        if self.kind in ("Place", "Start") and self.cell is not None:
            return f"{self.kind}({self.cell[0]},{self.cell[1]})"
        return self.kind

    @property
    def is_navigation(self) -> bool:
        return self.kind not in ("Pick", "Place")


def pick(object_id: str) -> LowLevelAction:
    return LowLevelAction("Pick", object_id=object_id)


def place(target: Optional[Cell] = None) -> LowLevelAction:
    return LowLevelAction("Place", cell=target)


def start(cell: Cell) -> LowLevelAction:
    return LowLevelAction("Start", cell=tuple(cell))


MOVE_AHEAD = LowLevelAction("MoveAhead")
MOVE_BACK = LowLevelAction("MoveBack")
MOVE_LEFT = LowLevelAction("MoveLeft")
MOVE_RIGHT = LowLevelAction("MoveRight")
ROTATE_LEFT = LowLevelAction("RotateLeft")
ROTATE_RIGHT = LowLevelAction("RotateRight")
LOOK_UP = LowLevelAction("LookUp")
LOOK_DOWN = LowLevelAction("LookDown")
DONE = LowLevelAction("Done")


@dataclass(frozen=True)
class StepResult:
    success: bool
    agent_pose: AgentPose
    visible: tuple[tuple[str, Cell], ...]


@dataclass
class WorldConfig:
    interact_range_cells: float = 8.0  # 2 m at 0.25 m per cell
    max_view_cells: float = 16.0  # 4 m
    rotation_step: int = 90
    p_manip: float = 0.0  # probability that a geometrically valid pick/place fails


def view_mask(occluders: np.ndarray, pose_cell: Cell, heading: int, radius: float) -> np.ndarray:
    """Cells inside the view cone with an unobstructed ray from ``pose_cell``."""
    h, w = occluders.shape
    mask = np.zeros((h, w), dtype=bool)
    r0, c0 = pose_cell
    for dr, dc in cone_offsets(heading, radius):
        r, c = r0 + dr, c0 + dc
        if 0 <= r < h and 0 <= c < w and line_of_sight(pose_cell, (r, c), occluders):
            mask[r, c] = True
    return mask


class GridWorld:
    """Ground-truth house with a single agent."""

    def __init__(
        self,
        grid: GridMap,
        objects: list[WorldObject] | None = None,
        config: WorldConfig | None = None,
        seed: int = 0,
    ):
        self.map = grid
        self.objects: dict[str, WorldObject] = {o.id: o for o in (objects or [])}
        self.config = config or WorldConfig()
        self.pose: Optional[AgentPose] = None
        self.done = False
        self._rng = np.random.default_rng(seed)

    # --- state queries -------------------------------------------------
    @property
    def held(self) -> Optional[str]:
        for o in self.objects.values():
            if o.held:
                return o.id
        return None

    def blocker_cells(self, exclude: Optional[str] = None) -> set[Cell]:
        cells: set[Cell] = set()
        for o in self.objects.values():
            if o.size > 1 and not o.held and o.id != exclude:
                cells.update(o.footprint)
        return cells

    def occluders(self) -> np.ndarray:
        occ = self.map.occupancy.copy()
        for cell in self.blocker_cells():
            occ[cell] = True
        return occ

    def clone(self) -> "GridWorld":
        return copy.deepcopy(self)

    # --- perception ----------------------------------------------------
    def visible_objects(self) -> list[tuple[str, Cell]]:
        if self.pose is None:
            return []
        occ = self.occluders()
        mask = view_mask(occ, self.pose.cell, self.pose.heading, self.config.max_view_cells)
        out = []
        for oid in sorted(self.objects):
            o = self.objects[oid]
            if o.held or o.cell is None:
                continue
            if any(self.map.in_bounds(c) and mask[c] for c in o.footprint):
                out.append((oid, o.cell))
        return out

    def _distance_to(self, obj: WorldObject) -> float:
        return min(euclid(self.pose.cell, c) for c in obj.footprint)

    # --- dynamics ------------------------------------------------------
    def _free_for_agent(self, cell: Cell) -> bool:
        return self.map.is_free(cell) and cell not in self.blocker_cells()

    def _accepts(self, obj: WorldObject, target: Cell) -> bool:
        receptacles = self.map.receptacle_cells()
        others = set()
        for o in self.objects.values():
            if o.id != obj.id and not o.held and o.cell is not None and o.cell not in receptacles:
                others.update(o.footprint)
        cells = footprint(target, obj.size)
        if obj.size == 1:
            if target in receptacles:
                return True
            return self.map.is_free(target) and target not in others
        return all(self.map.is_free(c) and c not in others and c != self.pose.cell for c in cells)

    def _result(self, success: bool) -> StepResult:
        return StepResult(success, self.pose, tuple(self.visible_objects()))

    def step(self, action: LowLevelAction) -> StepResult:
        if action.kind == "Start":
            if action.cell is None or not self.map.is_free(action.cell):
                raise InvalidAction(f"cannot start at {action.cell}")
            self.pose = AgentPose(tuple(action.cell), 0 if self.pose is None else self.pose.heading, 0)
            self.done = False
            return self._result(True)
        if self.pose is None:
            raise InvalidAction("world not started")
        if action.kind == "Pick" and action.object_id not in self.objects:
            raise InvalidAction(f"no object {action.object_id!r}")
        if self.done:
            return self._result(False)

        kind = action.kind
        pose = self.pose
        if kind in _MOVE_OFFSET:
            dr, dc = step_vector((pose.heading + _MOVE_OFFSET[kind]) % 360)
            target = (pose.cell[0] + dr, pose.cell[1] + dc)
            if not self._free_for_agent(target):
                return self._result(False)
            self.pose = replace(pose, cell=target)
            return self._result(True)
        if kind in ROTATE_KINDS:
            delta = self.config.rotation_step * (1 if kind == "RotateRight" else -1)
            self.pose = replace(pose, heading=(pose.heading + delta) % 360)
            return self._result(True)
        if kind in LOOK_KINDS:
            tilt = pose.camera_tilt + (30 if kind == "LookUp" else -30)
            if tilt not in TILTS:
                return self._result(False)
            self.pose = replace(pose, camera_tilt=tilt)
            return self._result(True)
        if kind == "Pick":
            return self._result(self._pick(self.objects[action.object_id]))
        if kind == "Place":
            return self._result(self._place(action.cell))
        if kind == "Done":
            self.done = True
            return self._result(True)
        raise InvalidAction(kind)  # unreachable: kinds validated on construction

    def _manip_ok(self) -> bool:
        p = self.config.p_manip
        return p <= 0.0 or self._rng.random() >= p

    def _pick(self, obj: WorldObject) -> bool:
        if self.held is not None or obj.held or obj.cell is None:
            return False
        if self._distance_to(obj) > self.config.interact_range_cells + 1e-9:
            return False
        if obj.id not in {oid for oid, _ in self.visible_objects()}:
            return False
        if not self._manip_ok():
            return False
        obj.held = True
        obj.cell = None
        return True

    def _place(self, target: Optional[Cell]) -> bool:
        held = self.held
        if held is None:
            return False
        obj = self.objects[held]
        if target is None:
            dr, dc = step_vector(self.pose.heading)
            target = (self.pose.cell[0] + dr, self.pose.cell[1] + dc)
        target = tuple(target)
        if not self.map.in_bounds(target):
            return False
        if euclid(self.pose.cell, target) > self.config.interact_range_cells + 1e-9:
            return False
        occ = self.occluders()
        mask = view_mask(occ, self.pose.cell, self.pose.heading, self.config.max_view_cells)
        if not mask[target]:
            return False
        if not self._accepts(obj, target):
            return False
        if not self._manip_ok():
            return False
        obj.held = False
        obj.cell = target
        return True

    def object_cells(self) -> dict[str, Optional[Cell]]:
        return {oid: o.cell for oid, o in self.objects.items()}


def reachable_mask(occupancy: np.ndarray, source: Cell, blocked: set[Cell] | None = None) -> np.ndarray:
    """4-connected flood fill over free cells from ``source``."""
    h, w = occupancy.shape
    seen = np.zeros((h, w), dtype=bool)
    if occupancy[source] or (blocked and source in blocked):
        return seen
    blocked = blocked or set()
    seen[source] = True
    queue = deque([source])
    while queue:
        r, c = queue.popleft()
        for nr, nc in ((r - 1, c), (r, c + 1), (r + 1, c), (r, c - 1)):
            if 0 <= nr < h and 0 <= nc < w and not seen[nr, nc] and not occupancy[nr, nc] and (nr, nc) not in blocked:
                seen[nr, nc] = True
                queue.append((nr, nc))
    return seen


@dataclass
class WalkthroughTrace:
    visited: list[Cell]
    skipped: list[Cell]


def walkthrough(world: GridWorld, n_points: Optional[int] = None, seed: int = 0) -> tuple[GridMap, list[ReceptacleInfo], WalkthroughTrace]:
    """Scripted traversal exporting the static map and the receptacles seen.

    Uniformly samples target cells, visits the reachable ones and looks around
    at each. Cells that cannot be reached from the agent are returned as
    occupied so that later planning never targets them.
    """
    if world.pose is None:
        raise InvalidAction("walkthrough needs a started world")
    grid = world.map
    rng = np.random.default_rng(seed)
    reach = reachable_mask(grid.occupancy, world.pose.cell)
    n_free = int((~grid.occupancy).sum())
    n = n_points if n_points is not None else max(8, n_free // 12)

    visited: list[Cell] = [world.pose.cell]
    skipped: list[Cell] = []
    for _ in range(n):
        cell = (int(rng.integers(grid.height)), int(rng.integers(grid.width)))
        if grid.occupancy[cell]:
            continue
        if not reach[cell]:
            log.debug("walkthrough: %s unreachable, skipped", cell)
            skipped.append(cell)
            continue
        visited.append(cell)

    seen: set[Cell] = set()
    by_cell = {r.cell: r for r in grid.receptacles}
    for cell in visited:
        for heading in range(0, 360, world.config.rotation_step):
            mask = view_mask(grid.occupancy, cell, heading, world.config.max_view_cells)
            seen.update(c for c in by_cell if mask[c])

    occupancy = grid.occupancy | ~reach
    for c in by_cell:
        occupancy[c] = True
    static = GridMap(occupancy, grid.room_id.copy(), [by_cell[c] for c in sorted(seen)], grid.cell_size)
    return static, static.receptacles, WalkthroughTrace(visited, skipped)
