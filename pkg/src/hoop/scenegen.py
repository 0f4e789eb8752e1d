"""Procedural multi-room rearrangement instances.

Floorplans are grids of rectangular rooms separated by one-cell walls with
two-cell door gaps. Objects and goals are placed under displacement,
cross-room and per-room coverage constraints; optional blocked-goal, swap and
blocked-path (2x2 blocker sealing a door) configurations are inserted on top.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConstraintUnsatisfiable, NoCutFound
from .geometry import Cell
from .navigation import NavCache, flood_components
from .world import AgentPose, GridMap, GridWorld, ReceptacleInfo, WorldConfig, WorldObject, footprint, start, view_mask

SCHEMA_VERSION = 1

OBJECT_CLASSES = (
    "AlarmClock", "Apple", "BaseballBat", "BasketBall", "Book", "Bottle", "Bowl", "Bread", "ButterKnife", "CD",
    "Candle", "CellPhone", "CreditCard", "Cup", "DishSponge", "Kettle", "KeyChain", "Knife", "Ladle", "Laptop",
    "Lettuce", "Mug", "Newspaper", "Pan", "PaperTowelRoll", "Pen", "Pencil", "PepperShaker", "Pillow", "Plate",
    "Plunger", "Pot", "Potato", "RemoteControl", "SaltShaker", "SoapBottle", "Spatula", "SprayBottle", "Statue",
    "TeddyBear", "TennisRacket", "TissueBox", "ToiletPaper", "Vase", "Watch", "WineBottle",
)
BLOCKER_CLASS = "Box"
RECEPTACLE_CLASSES = ("CounterTop", "DiningTable", "Shelf", "SideTable", "Dresser", "Desk", "CoffeeTable", "Cabinet")
LAYOUTS = {1: (1, 1), 2: (1, 2), 3: (1, 3), 4: (2, 2)}


@dataclass
class GenConfig:
    n_rooms: int = 2
    n_objects: int = 5
    blocked_path: bool = False
    blocked_goal: bool = False
    swap: bool = False
    min_avg_displacement: float = 25.0
    cross_room_fraction: float = 0.5
    seed: int = 0
    room_size: int = 16
    receptacles_per_room: int = 3
    blocker_at_goal: bool = False  # blocker starts on its own goal square
    extra_doors: int = 0  # doors beyond the spanning tree (creates loops, removes cuts)
    goal_samples: int = 8
    max_retries: int = 200

    def __post_init__(self):
        if self.n_rooms not in LAYOUTS:
            raise ValueError("n_rooms must be between 1 and 4")
        if self.n_objects < 1:
            raise ValueError("n_objects must be >= 1")
        if self.room_size < 12:
            raise ValueError("rooms need at least 12x12 interior cells")


@dataclass(frozen=True)
class SceneObject:
    id: str
    class_name: str
    start: Cell
    goal: Cell
    size: int = 1


@dataclass
class SceneMetadata:
    n_rooms: int
    n_objects: int
    has_blocked_path: bool = False
    has_blocked_goal: bool = False
    has_swap: bool = False
    visibility_fraction: float = 0.0
    seed: int = 0
    blocker_at_goal: bool = False


@dataclass
class SceneInstance:
    scene_id: str
    map: GridMap
    objects: list[SceneObject]
    agent_start: Cell
    metadata: SceneMetadata
    agent_heading: int = 0

    @property
    def blockers(self) -> list[tuple[str, tuple[Cell, ...]]]:
        return [(o.id, footprint(o.start, o.size)) for o in self.objects if o.size > 1]

    def object(self, oid: str) -> SceneObject:
        return next(o for o in self.objects if o.id == oid)

    def to_world(self, config: WorldConfig | None = None, seed: int = 0) -> GridWorld:
        objs = [WorldObject(o.id, o.class_name, o.start, o.size) for o in self.objects]
        world = GridWorld(self.map.copy(), objs, config, seed)
        world.step(start(self.agent_start))
        world.pose = AgentPose(self.agent_start, self.agent_heading, 0)
        return world

    # --- serialization ---------------------------------------------------
    def to_json(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "scene_id": self.scene_id,
            "cell_size": self.map.cell_size,
            "occupancy": [_rle(row) for row in self.map.occupancy.astype(int).tolist()],
            "room_id": [_rle(row) for row in self.map.room_id.tolist()],
            "receptacles": [{"class": r.class_name, "cell": list(r.cell), "room": r.room_id} for r in self.map.receptacles],
            "objects": [
                {"id": o.id, "class": o.class_name, "start": list(o.start), "goal": list(o.goal), "size": o.size}
                for o in self.objects
            ],
            "agent_start": list(self.agent_start),
            "agent_heading": self.agent_heading,
            "metadata": asdict(self.metadata),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, d: dict) -> "SceneInstance":
        if d.get("version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported scene schema version {d.get('version')!r}")
        occ = np.array([_unrle(r) for r in d["occupancy"]], dtype=bool)
        rooms = np.array([_unrle(r) for r in d["room_id"]], dtype=int)
        recs = [ReceptacleInfo(r["class"], tuple(r["cell"]), r["room"]) for r in d["receptacles"]]
        objs = [SceneObject(o["id"], o["class"], tuple(o["start"]), tuple(o["goal"]), o["size"]) for o in d["objects"]]
        return cls(
            d["scene_id"],
            GridMap(occ, rooms, recs, d["cell_size"]),
            objs,
            tuple(d["agent_start"]),
            SceneMetadata(**d["metadata"]),
            d.get("agent_heading", 0),
        )


def _rle(row: list[int]) -> list[list[int]]:
    out: list[list[int]] = []
    for v in row:
        if out and out[-1][0] == v:
            out[-1][1] += 1
        else:
            out.append([v, 1])
    return out


def _unrle(runs: list[list[int]]) -> list[int]:
    out: list[int] = []
    for v, n in runs:
        out.extend([v] * n)
    return out


def save_scene(scene: SceneInstance, path: str | Path) -> None:
    Path(path).write_text(scene.dumps() + "\n")


def load_scene(path: str | Path) -> SceneInstance:
    return SceneInstance.from_json(json.loads(Path(path).read_text()))


# --- floorplans ------------------------------------------------------------
def build_floorplan(n_rooms: int, room_size: int, rng: np.random.Generator, extra_doors: int = 0) -> GridMap:
    """Rooms on a grid with a random spanning tree of two-cell doors."""
    rows, cols = LAYOUTS[n_rooms]
    step = room_size + 1
    h, w = rows * step + 1, cols * step + 1
    occ = np.ones((h, w), dtype=bool)
    room_id = -np.ones((h, w), dtype=int)
    for i in range(rows):
        for j in range(cols):
            r0, c0 = i * step + 1, j * step + 1
            occ[r0 : r0 + room_size, c0 : c0 + room_size] = False
            room_id[r0 : r0 + room_size, c0 : c0 + room_size] = i * cols + j

    edges = []
    for i in range(rows):
        for j in range(cols):
            if j + 1 < cols:
                edges.append(((i, j), (i, j + 1)))
            if i + 1 < rows:
                edges.append(((i, j), (i + 1, j)))
    order = [edges[k] for k in rng.permutation(len(edges))]
    parent = {(i, j): (i, j) for i in range(rows) for j in range(cols)}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    doors, spare = [], []
    for a, b in order:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            doors.append((a, b))
        else:
            spare.append((a, b))
    doors.extend(spare[:extra_doors])

    for (i, j), (i2, j2) in doors:
        off = int(rng.integers(2, room_size - 3))
        if i == i2:  # vertical wall between horizontally adjacent rooms
            wc = (j + 1) * step
            r = i * step + 1 + off
            cells = [(r, wc), (r + 1, wc)]
        else:
            wr = (i + 1) * step
            c = j * step + 1 + off
            cells = [(wr, c), (wr, c + 1)]
        for cell in cells:
            occ[cell] = False
            room_id[cell] = -2  # door
    return GridMap(occ, room_id, [], 0.25)


def _near_door(grid: GridMap, cell: Cell, radius: int = 2) -> bool:
    r, c = cell
    sub = grid.room_id[max(0, r - radius) : r + radius + 1, max(0, c - radius) : c + radius + 1]
    return bool((sub == -2).any())


def place_receptacles(grid: GridMap, per_room: int, rng: np.random.Generator) -> GridMap:
    """Receptacles on wall-adjacent cells, spaced apart and clear of doors."""
    n_rooms = int(grid.room_id.max()) + 1
    occ = grid.occupancy.copy()
    recs: list[ReceptacleInfo] = []
    for room in range(n_rooms):
        rows, cols = np.nonzero(grid.room_id == room)
        cand = []
        for r, c in zip(rows.tolist(), cols.tolist()):
            wall_adj = any(grid.occupancy[r + dr, c + dc] for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)))
            if wall_adj and not _near_door(grid, (r, c)):
                cand.append((r, c))
        chosen: list[Cell] = []
        for k in rng.permutation(len(cand)):
            cell = cand[int(k)]
            if all(max(abs(cell[0] - o[0]), abs(cell[1] - o[1])) > 2 for o in chosen):
                chosen.append(cell)
            if len(chosen) >= per_room:
                break
        for cell in sorted(chosen):
            occ[cell] = True
            cls = RECEPTACLE_CLASSES[int(rng.integers(len(RECEPTACLE_CLASSES)))]
            recs.append(ReceptacleInfo(cls, cell, room))
    return GridMap(occ, grid.room_id, recs, grid.cell_size)


# --- checks ------------------------------------------------------------------
def room_of(grid: GridMap, cell: Cell) -> int:
    return int(grid.room_id[cell])


def displacements(scene: SceneInstance, nav: NavCache | None = None) -> list[int]:
    """Walking distance start -> goal for every object that has to move."""
    nav = nav or NavCache(scene.map)
    out = []
    for o in scene.objects:
        if o.start == o.goal:
            continue
        d = nav.distance(o.start, o.goal)
        out.append(-1 if d is None else d)
    return out


def check_constraints(scene: SceneInstance, cfg: GenConfig, nav: NavCache | None = None) -> Optional[str]:
    """Name of the first violated placement constraint, or None."""
    nav = nav or NavCache(scene.map)
    grid = scene.map
    movers = [o for o in scene.objects if o.start != o.goal]
    goals = [o.goal for o in scene.objects]
    if len(set(goals)) != len(goals):
        return "distinct_goals"
    for o in scene.objects:
        for c in footprint(o.start, o.size) + footprint(o.goal, o.size):
            if not grid.is_free(c):
                return "free_cells"
    d = displacements(scene, nav)
    if any(x < 0 for x in d):
        return "goal_reachable"
    if not d or float(np.mean(d)) <= cfg.min_avg_displacement:
        return "displacement"
    small = [o for o in movers if o.size == 1]
    cross = sum(room_of(grid, o.start) != room_of(grid, o.goal) for o in small)
    if grid.room_id.max() > 0 and small and cross < cfg.cross_room_fraction * len(small) - 1e-9:
        return "cross_room"
    rooms = {room_of(grid, o.start) for o in small}
    if any(r not in rooms for r in range(int(grid.room_id.max()) + 1)):
        return "room_coverage"
    return None


def sealed_objects(scene: SceneInstance) -> list[str]:
    """Ids of objects whose start cell the agent cannot reach past the blockers."""
    blocked = frozenset(c for _, fp in scene.blockers for c in fp)
    nav = NavCache(scene.map)
    dist = nav.dist_field(scene.agent_start, blocked)
    out = []
    for o in scene.objects:
        if o.size > 1:
            continue
        if dist[nav.idx(o.start)] < 0:
            out.append(o.id)
    return out


def blocked_path_certificate(scene: SceneInstance) -> bool:
    """True iff some object is sealed off by blockers and none is without them."""
    if not scene.blockers:
        return False
    nav = NavCache(scene.map)
    dist = nav.dist_field(scene.agent_start)
    all_reach = all(dist[nav.idx(o.start)] >= 0 for o in scene.objects)
    return bool(sealed_objects(scene)) and all_reach


def visibility_fraction(scene: SceneInstance, max_view_cells: float = 16.0) -> float:
    """Share of target objects inside the initial view cone with a clear ray."""
    world = scene.to_world(WorldConfig(max_view_cells=max_view_cells))
    seen = {oid for oid, _ in world.visible_objects()}
    return len(seen) / len(scene.objects) if scene.objects else 0.0


# --- generation --------------------------------------------------------------
def _sample_cell(cells: list[Cell], rng: np.random.Generator) -> Cell:
    return cells[int(rng.integers(len(cells)))]


def _attempt(cfg: GenConfig, rng: np.random.Generator, scene_id: str) -> SceneInstance:
    grid = build_floorplan(cfg.n_rooms, cfg.room_size, rng, cfg.extra_doors)
    grid = place_receptacles(grid, cfg.receptacles_per_room, rng)
    nav = NavCache(grid)
    n_rooms = cfg.n_rooms
    floor = {r: [] for r in range(n_rooms)}
    for cell in grid.free_cells():
        rid = room_of(grid, cell)
        if rid >= 0:
            floor[rid].append(cell)
    if cfg.n_objects < n_rooms:
        raise ConstraintUnsatisfiable("room_coverage", "fewer objects than rooms")

    used: set[Cell] = set()
    starts: list[Cell] = []
    for k in range(cfg.n_objects):
        room = k if k < n_rooms else int(rng.integers(n_rooms))
        while True:
            c = _sample_cell(floor[room], rng)
            if c not in used:
                break
        used.add(c)
        starts.append(c)

    n_cross = int(np.ceil(cfg.cross_room_fraction * cfg.n_objects)) if n_rooms > 1 else 0
    cross = set(rng.permutation(cfg.n_objects)[:n_cross].tolist())
    goals: list[Cell] = []
    for k, s in enumerate(starts):
        sr = room_of(grid, s)
        if k in cross:
            rooms = [r for r in range(n_rooms) if r != sr]
        else:
            rooms = list(range(n_rooms))
        dist = nav.dist_field(s)
        best, best_d = None, -1
        for _ in range(cfg.goal_samples):
            c = _sample_cell(floor[rooms[int(rng.integers(len(rooms)))]], rng)
            if c in used:
                continue
            d = dist[nav.idx(c)]
            if d > best_d:
                best, best_d = c, d
        if best is None:
            raise ConstraintUnsatisfiable("free_cells", "could not sample a goal")
        used.add(best)
        goals.append(best)

    classes = rng.choice(len(OBJECT_CLASSES), size=cfg.n_objects, replace=cfg.n_objects > len(OBJECT_CLASSES))
    names: dict[str, int] = {}
    objs = []
    for k in range(cfg.n_objects):
        cls = OBJECT_CLASSES[int(classes[k])]
        idx = names.get(cls, 0)
        names[cls] = idx + 1
        objs.append(SceneObject(f"{cls}_{idx}", cls, starts[k], goals[k]))

    has_swap = has_bg = False
    if cfg.swap:
        objs = _make_swap(objs, grid)
        has_swap = True
    if cfg.blocked_goal:
        objs = _make_blocked_goal(objs, grid, rng)
        has_bg = True

    taken = {o.start for o in objs} | {o.goal for o in objs}
    agent_cells = [c for r in range(n_rooms) for c in floor[r] if c not in taken]
    agent = _sample_cell(agent_cells, rng)
    heading = int(rng.choice([0, 90, 180, 270]))
    meta = SceneMetadata(n_rooms, cfg.n_objects, False, has_bg, has_swap, 0.0, cfg.seed, False)
    scene = SceneInstance(scene_id, grid, objs, agent, meta, heading)
    if cfg.blocked_path:
        scene = insert_blocked_path(scene, rng, at_goal=cfg.blocker_at_goal)
    bad = check_constraints(scene, cfg, nav)
    if bad:
        raise ConstraintUnsatisfiable(bad)
    scene.metadata.visibility_fraction = round(visibility_fraction(scene), 6)
    if scripted_solution(scene) is None:
        raise ConstraintUnsatisfiable("solvable", "scripted solver failed")
    return scene


def _make_swap(objs: list[SceneObject], grid: GridMap) -> list[SceneObject]:
    """Make the first cross-room pair occupy each other's goals."""
    for a in range(len(objs)):
        for b in range(a + 1, len(objs)):
            if room_of(grid, objs[a].start) != room_of(grid, objs[b].start) or grid.room_id.max() == 0:
                out = list(objs)
                out[a] = replace(objs[a], goal=objs[b].start)
                out[b] = replace(objs[b], goal=objs[a].start)
                return out
    raise ConstraintUnsatisfiable("swap", "no pair of objects to swap")


def _make_blocked_goal(objs: list[SceneObject], grid: GridMap, rng: np.random.Generator) -> list[SceneObject]:
    """Move one object's goal onto another object's start cell."""
    swapped = {o.id for o in objs if any(p.start == o.goal for p in objs)}
    order = [int(k) for k in rng.permutation(len(objs))]
    for a in order:
        for b in order:
            if a == b or objs[a].id in swapped or objs[b].id in swapped:
                continue
            if room_of(grid, objs[a].goal) == room_of(grid, objs[b].start):
                out = list(objs)
                out[a] = replace(objs[a], goal=objs[b].start)
                return out
    a, b = order[0], order[1]
    out = list(objs)
    out[a] = replace(objs[a], goal=objs[b].start)
    return out


def cut_squares(grid: GridMap, agent: Cell, avoid: set[Cell]) -> list[tuple[Cell, set[int], np.ndarray]]:
    """2x2 free squares whose removal splits the agent's free region.

    Returns ``(anchor, labels cut off from the agent, label grid)`` in
    row-major order of the anchor.
    """
    free = ~grid.occupancy
    h, w = free.shape
    out = []
    for r in range(h - 1):
        for c in range(w - 1):
            sq = footprint((r, c), 2)
            if not all(free[x] for x in sq) or any(x in avoid for x in sq):
                continue
            trial = free.copy()
            for x in sq:
                trial[x] = False
            labels, n = flood_components(trial)
            if n < 2 or labels[agent] == 0:
                continue
            cut = set(range(1, n + 1)) - {int(labels[agent])}
            out.append(((r, c), cut, labels))
    return out


def insert_blocked_path(scene: SceneInstance, rng: np.random.Generator | None = None, at_goal: bool = False) -> SceneInstance:
    """Add a 2x2 blocker on the square that seals off the most objects."""
    rng = rng if rng is not None else np.random.default_rng(scene.metadata.seed)
    grid = scene.map
    avoid = {scene.agent_start} | {o.start for o in scene.objects} | {o.goal for o in scene.objects}
    best, best_n = None, 0
    for anchor, cut, labels in cut_squares(grid, scene.agent_start, avoid):
        n = sum(1 for o in scene.objects if int(labels[o.start]) in cut)
        if n > best_n:
            best, best_n = anchor, n
    if best is None:
        raise NoCutFound("no 2x2 square disconnects an object from the agent")

    if at_goal:
        goal = best
    else:
        goal = _blocker_goal(scene, best, avoid, rng)
    k = sum(1 for o in scene.objects if o.class_name == BLOCKER_CLASS)
    blocker = SceneObject(f"{BLOCKER_CLASS}_{k}", BLOCKER_CLASS, best, goal, 2)
    meta = replace(scene.metadata, has_blocked_path=True, blocker_at_goal=at_goal)
    out = replace(scene, objects=[*scene.objects, blocker], metadata=meta)
    if not blocked_path_certificate(out):
        raise NoCutFound("blocker does not seal any object")
    return out


def _blocker_goal(scene: SceneInstance, anchor: Cell, avoid: set[Cell], rng: np.random.Generator) -> Cell:
    """A non-cutting free square in the agent's component, away from the door."""
    nav = NavCache(scene.map)
    blocked = frozenset(footprint(anchor, 2))
    dist = nav.dist_field(scene.agent_start, blocked)
    base = sum(1 for d in nav.dist_field(scene.agent_start) if d >= 0)
    cands = [nav.cell(i) for i, d in enumerate(dist) if d >= 0]
    for k in rng.permutation(len(cands)):
        a = cands[int(k)]
        sq = footprint(a, 2)
        if any(not nav.free(x) or dist[nav.idx(x)] < 0 or x in avoid or _near_door(scene.map, x) for x in sq):
            continue
        if sum(1 for d in nav.dist_field(scene.agent_start, frozenset(sq)) if d >= 0) != base - 4:
            continue
        return a
    raise ConstraintUnsatisfiable("blocker_goal", "no free square for the blocker goal")


def generate_scene(cfg: GenConfig, scene_id: str | None = None) -> SceneInstance:
    """Deterministic scene for ``cfg``; retries with derived seeds on failure."""
    scene_id = scene_id or f"scene_{cfg.seed:05d}"
    last = None
    for attempt in range(cfg.max_retries):
        rng = np.random.default_rng([cfg.seed, attempt])
        try:
            return _attempt(cfg, rng, scene_id)
        except (ConstraintUnsatisfiable, NoCutFound) as exc:
            last = exc
    if isinstance(last, ConstraintUnsatisfiable):
        raise ConstraintUnsatisfiable(last.constraint, f"after {cfg.max_retries} attempts")
    raise ConstraintUnsatisfiable("blocked_path", f"after {cfg.max_retries} attempts: {last}")


# --- scripted omniscient solver --------------------------------------------------
def scripted_solution(scene: SceneInstance, max_moves: int | None = None) -> Optional[list[tuple[str, Cell]]]:
    """Sequence of (object id, target) placements reaching every goal, or None.

    Knows all object cells. Each step places a reachable object on its free
    goal; otherwise clears an occupied goal onto a receptacle, or parks a
    blocker on a square that does not cut the free space.
    """
    from .abstraction import nearest_receptacles, parking_squares

    nav = NavCache(scene.map)
    recs = scene.map.receptacles
    rec_cells = scene.map.receptacle_cells()
    locs = {o.id: o.start for o in scene.objects}
    size = {o.id: o.size for o in scene.objects}
    goal = {o.id: o.goal for o in scene.objects}
    order = [o.id for o in scene.objects]
    agent = scene.agent_start
    max_moves = max_moves or 4 * len(order) + 8
    plan: list[tuple[str, Cell]] = []

    def blocked(skip=None):
        return frozenset(c for oid in order if size[oid] > 1 and oid != skip for c in footprint(locs[oid], 2))

    def occupied_by(cell: Cell, me: str) -> Optional[str]:
        for oid in order:
            if oid != me and locs[oid] not in rec_cells and cell in footprint(locs[oid], size[oid]):
                return oid
        return None

    def stand_for(oid: str, cell: Cell, agent_cell: Cell) -> Optional[Cell]:
        K = blocked(skip=oid)
        own = frozenset(footprint(cell, size[oid]))
        return nav.stand_cell(cell, agent_cell, K, own)

    def fits(oid: str, t: Cell) -> bool:
        if size[oid] == 1 and t in rec_cells:
            return True
        cells = footprint(t, size[oid])
        return all(nav.free(c) and occupied_by(c, oid) is None for c in cells)

    def do(oid: str, t: Cell) -> bool:
        nonlocal agent
        s1 = stand_for(oid, locs[oid], agent)
        if s1 is None:
            return False
        s2 = stand_for(oid, t, s1)
        if s2 is None:
            return False
        locs[oid] = t
        agent = s2
        plan.append((oid, t))
        return True

    for _ in range(max_moves):
        todo = [oid for oid in order if locs[oid] != goal[oid]]
        if not todo:
            return plan
        progressed = False
        for oid in todo:
            if fits(oid, goal[oid]) and do(oid, goal[oid]):
                progressed = True
                break
        if progressed:
            continue
        for oid in todo:
            holder = None
            for c in footprint(goal[oid], size[oid]):
                holder = holder or occupied_by(c, oid)
            if holder is None:
                continue
            alts = nearest_receptacles(nav, goal[holder], recs, 3) if size[holder] == 1 else parking_squares(nav, goal[holder], agent, 3)
            if any(fits(holder, t) and do(holder, t) for t in alts):
                progressed = True
                break
        if progressed:
            continue
        # something is sealed: park a blocker away
        for oid in order:
            if size[oid] > 1:
                for t in parking_squares(nav, locs[oid], agent, 3):
                    if t != locs[oid] and fits(oid, t) and do(oid, t):
                        progressed = True
                        break
            if progressed:
                break
        if not progressed:
            return None
    return None


def verify_scene(scene: SceneInstance, cfg: GenConfig | None = None) -> dict[str, bool]:
    """Recheck every generator certificate from the instance alone."""
    cfg = cfg or GenConfig(n_rooms=scene.metadata.n_rooms, n_objects=scene.metadata.n_objects)
    nav = NavCache(scene.map)
    d = displacements(scene, nav)
    small = [o for o in scene.objects if o.size == 1 and o.start != o.goal]
    cross = sum(room_of(scene.map, o.start) != room_of(scene.map, o.goal) for o in small)
    rooms = {room_of(scene.map, o.start) for o in small}
    return {
        "displacement": bool(d) and min(d) >= 0 and float(np.mean(d)) > cfg.min_avg_displacement,
        "cross_room": scene.metadata.n_rooms == 1 or cross >= cfg.cross_room_fraction * len(small) - 1e-9,
        "room_coverage": all(r in rooms for r in range(scene.metadata.n_rooms)),
        "blocked_path": blocked_path_certificate(scene) == scene.metadata.has_blocked_path,
        "solvable": scripted_solution(scene) is not None,
    }
