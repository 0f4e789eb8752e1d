"""Episode runner, metrics and report tables.

One episode is: walkthrough, then the perceive / update belief / abstract /
plan / execute cycle until the planner says Done, the step budget runs out or
a baseline has nothing left to try. Success is judged on ground truth.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .abstraction import AbstractionConfig, dynamic_obstacles, generate_abstract_state
from .baselines import FrontierState, fhc_step, make_oracle_config
from .belief import BeliefState, init_belief, update
from .errors import Exhausted, NoPath, PickFailed
from .geometry import Cell, step_vector
from .navigation import NavCache
from .planner import DONE_ACTION, AbstractAction, PlannerConfig, plan
from .policies import ActionPlan, advance, astar_path, navigation_plan, pick_place_execute
from .scenegen import SceneInstance
from .sensor import SensorModel, load_params, view_cells
from .world import DONE, ROTATE_RIGHT, GridWorld, LowLevelAction, WorldConfig, walkthrough

log = logging.getLogger(__name__)

METHODS = ("hoop", "fhc", "hoop_depth1", "pk", "pd")
LOG_VERSION = 1


@dataclass
class RunConfig:
    method: str = "hoop"
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    step_budget: int = 3000
    seed: int = 0
    scenes: list[str] = field(default_factory=list)
    replan: str = "subgoal"  # "subgoal": after each finished sub-goal; "step": after every action
    p_manip: float = 0.0
    fhc_theta: float = 0.7
    fhc_known: str = "static"  # or "unknown"
    sensor_params: Optional[str] = None
    abstraction: AbstractionConfig = field(default_factory=AbstractionConfig)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.step_budget <= 0:
            raise ValueError("step_budget must be positive")
        if self.replan not in ("subgoal", "step"):
            raise ValueError("replan must be 'subgoal' or 'step'")

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("scenes")
        return d


@dataclass
class EpisodeLog:
    scene_id: str
    method: str
    seed: int
    steps: list[dict] = field(default_factory=list)
    outcome: dict = field(default_factory=dict)
    termination: str = "step_budget"
    config: dict = field(default_factory=dict)
    wall_time: float = 0.0  # kept out of the canonical log

    @property
    def total_actions(self) -> int:
        return len(self.steps)

    def lines(self, include_wall_time: bool = False) -> list[str]:
        dump = lambda d: json.dumps(d, sort_keys=True, separators=(",", ":"))
        header = {"type": "header", "version": LOG_VERSION, "scene_id": self.scene_id, "method": self.method,
                  "seed": self.seed, "config": self.config}
        out = [dump(header)]
        out.extend(dump({"type": "step", **s}) for s in self.steps)
        tail = {"type": "outcome", "termination": self.termination, **self.outcome}
        if include_wall_time:
            tail["wall_time"] = round(self.wall_time, 3)
        out.append(dump(tail))
        return out

    def dumps(self, include_wall_time: bool = False) -> str:
        return "\n".join(self.lines(include_wall_time)) + "\n"

    def save(self, path: str | Path, include_wall_time: bool = False) -> None:
        Path(path).write_text(self.dumps(include_wall_time))

    @classmethod
    def loads(cls, text: str) -> "EpisodeLog":
        recs = [json.loads(line) for line in text.splitlines() if line.strip()]
        head, tail = recs[0], recs[-1]
        steps = [{k: v for k, v in r.items() if k != "type"} for r in recs[1:-1]]
        outcome = {k: v for k, v in tail.items() if k not in ("type", "termination", "wall_time")}
        return cls(head["scene_id"], head["method"], head["seed"], steps, outcome, tail["termination"],
                   head.get("config", {}), tail.get("wall_time", 0.0))

    @classmethod
    def load(cls, path: str | Path) -> "EpisodeLog":
        return cls.loads(Path(path).read_text())


def ground_truth(world: GridWorld, scene: SceneInstance) -> tuple[int, int]:
    """(objects at goal, objects in total)."""
    placed = 0
    for o in scene.objects:
        wo = world.objects[o.id]
        if not wo.held and wo.cell == o.goal:
            placed += 1
    return placed, len(scene.objects)


class Episode:
    """State of one running episode; ``run`` drives it to termination."""

    def __init__(self, scene: SceneInstance, cfg: RunConfig):
        self.scene = scene
        self.cfg = cfg
        oracle = make_oracle_config(cfg.method) if cfg.method in ("pk", "pd") else None
        self.world = scene.to_world(WorldConfig(p_manip=cfg.p_manip), seed=cfg.seed)
        self.static, self.receptacles, _ = walkthrough(self.world, seed=cfg.seed)
        self.nav = NavCache(self.static)
        params = load_params(cfg.sensor_params)
        perfect = bool(oracle and oracle["perfect_detector"])
        self.sensor = SensorModel(params, self.static.cell_size, perfect=perfect)
        self.tracked = {o.id: o.class_name for o in scene.objects}
        self.sizes = {o.id: o.size for o in scene.objects}
        mode = oracle["belief"] if oracle else "uniform"
        self.belief: BeliefState = init_belief(
            self.static,
            [(o.id, o.class_name) for o in scene.objects],
            {o.id: o.goal for o in scene.objects},
            mode=mode,
            true_locations={o.id: o.start for o in scene.objects},
            agent_cell=scene.agent_start,
            sizes=self.sizes,
        )
        self.pcfg = PlannerConfig(**{**asdict(cfg.planner), "depth": 1}) if cfg.method == "hoop_depth1" else cfg.planner
        self.sense_rng = np.random.default_rng([cfg.seed, 1])
        self.abs_rng = np.random.default_rng([cfg.seed, 2])
        self.bumps: set[Cell] = set()
        self.prev_abs = None
        self.last_action: Optional[LowLevelAction] = None
        self.last_success = False
        self.last_place: Optional[Cell] = None
        self.n_plans = 0
        self.frontier = FrontierState.initial(self.static, cfg.fhc_known) if cfg.method == "fhc" else None
        self.log = EpisodeLog(scene.scene_id, cfg.method, cfg.seed, config=cfg.to_json())
        self._perceive(LowLevelAction("Start", cell=scene.agent_start), True)

    # --- perception ----------------------------------------------------------
    def blocked(self) -> frozenset:
        return dynamic_obstacles(self.belief, self.cfg.abstraction.concentration, self.bumps) - {self.world.pose.cell}

    def _occluders(self) -> np.ndarray:
        occ = self.static.occupancy.copy()
        for c in dynamic_obstacles(self.belief, self.cfg.abstraction.concentration):
            occ[c] = True
        return occ

    def _perceive(self, action: LowLevelAction, success: bool) -> None:
        pose = self.world.pose
        view = self.sensor.view(self._occluders(), pose)
        z = self.sensor.detect(self.world.visible_objects(), self.tracked, pose, view_cells(view), self.sense_rng)
        miss = self._miss_likelihood(action, view) if action.kind == "Pick" and not success else None
        grown = {oid: _grow(view, n) for oid, n in self.sizes.items() if n > 1}
        self.belief = update(self.belief, action, success, z, self.sensor, view, self.last_place, miss, grown)
        if self.frontier is not None:
            self.frontier.observe(view, pose.cell)

    def _miss_likelihood(self, action: LowLevelAction, view: np.ndarray) -> np.ndarray:
        # a pick fails for sure when the object is out of reach or unseen, and
        # with probability p_manip otherwise
        pose = self.world.pose
        rows, cols = np.indices(view.shape)
        near = np.hypot(rows - pose.cell[0], cols - pose.cell[1]) <= self.world.config.interact_range_cells + 1e-9
        ok = _grow(view & near, self.sizes.get(action.object_id, 1))
        return np.where(ok, self.cfg.p_manip, 1.0)

    # --- planning --------------------------------------------------------------
    def _abstract(self):
        # held / at-goal flags are tracked step by step inside the belief, so
        # no previous abstract state is needed here
        pose = self.world.pose
        s = generate_abstract_state(
            self.belief, self.nav, self.receptacles, pose.cell, pose.heading,
            rng=self.abs_rng, cfg=self.cfg.abstraction, extra_obstacles=self.bumps,
        )
        self.prev_abs = s
        return s

    def _subgoal(self) -> AbstractAction:
        s = self._abstract()
        self.n_plans += 1
        if self.cfg.method == "fhc":
            return fhc_step(self.frontier, self.belief, self.nav, s, self.cfg.fhc_theta, self.blocked())
        pcfg = PlannerConfig(**{**asdict(self.pcfg), "seed": self.cfg.seed * 100_003 + self.n_plans})
        return plan(self.belief, s, pcfg, self.nav)

    def _make_plan(self, g: AbstractAction) -> ActionPlan:
        pose = (self.world.pose.cell, self.world.pose.heading)
        blocked = self.blocked()
        if g.kind in ("Move", "Rotate"):
            return navigation_plan(g, pose, self.static, blocked)
        if g.kind == "Explore":
            acts = _explore_actions(self.static, blocked, pose, g.stand)
            return ActionPlan(g, deque(acts), "navigate_to_pick")
        if g.kind == "PickPlace":
            ob = self.prev_abs.obj(g.object_id)
            alts = [] if self.cfg.method == "fhc" else list(ob.place_locs)
            return pick_place_execute(g, pose, ob.loc, self.static, blocked, alts, holding=ob.is_held)
        raise ValueError(f"cannot execute sub-goal {g}")

    # --- main loop ---------------------------------------------------------------
    def run(self) -> EpisodeLog:
        t0 = time.perf_counter()
        cfg = self.cfg
        current: Optional[ActionPlan] = None
        stalls = 0
        while len(self.log.steps) < cfg.step_budget:
            if current is None or current.finished or not current.queue:
                try:
                    g = self._subgoal()
                except Exhausted:
                    self.log.termination = "exhausted"
                    break
                if g.kind == "Done":
                    self._execute(DONE, g)
                    self.log.termination = "done_action"
                    break
                try:
                    current = self._make_plan(g)
                except NoPath:
                    current = None
                if current is None or not current.queue:
                    stalls += 1
                    if stalls >= 3:
                        self._execute(ROTATE_RIGHT, g)
                        stalls = 0
                    current = None
                    continue
                stalls = 0
            a = current.queue[0]
            before = self._concentrated()
            ok = self._execute(a, current.subgoal)
            pose = (self.world.pose.cell, self.world.pose.heading)
            if a.kind in ("MoveAhead", "MoveBack", "MoveLeft", "MoveRight") and not ok:
                self.bumps.add(_bump_cell(a, self.world.pose))
                current = None
                continue
            try:
                advance(current, a, ok, pose, self.static, self.blocked())
            except (PickFailed, NoPath):
                current = None
                continue
            if cfg.replan == "step":
                current = None
            elif current.phase == "navigate_to_pick" and self._concentrated() - before:
                current = None
        else:
            self.log.termination = "step_budget"
        placed, total = ground_truth(self.world, self.scene)
        self.log.outcome = {"SS": int(placed == total), "OS": placed / total, "placed": placed,
                            "n_objects": total, "total_actions": len(self.log.steps),
                            "belief_recoveries": self.belief.recoveries}
        self.log.wall_time = time.perf_counter() - t0
        return self.log

    def _concentrated(self) -> set[str]:
        th = self.cfg.abstraction.concentration
        return {oid for oid, ob in self.belief.per_object.items() if not ob.is_held and ob.max() >= th}

    def _execute(self, a: LowLevelAction, g: AbstractAction) -> bool:
        self.last_place = tuple(a.cell) if a.kind == "Place" and a.cell is not None else None
        res = self.world.step(a)
        self._perceive(a, res.success)
        if a.kind == "Pick" and res.success and self.sizes.get(a.object_id, 1) > 1:
            self.bumps.clear()
        self.last_action, self.last_success = a, res.success
        self.log.steps.append({
            "t": len(self.log.steps),
            "action": str(a),
            "success": bool(res.success),
            "subgoal": str(g),
            "pose": [*self.world.pose.cell, self.world.pose.heading],
            "belief_max": {oid: round(ob.max(), 6) for oid, ob in sorted(self.belief.per_object.items())},
        })
        return res.success


def _grow(mask: np.ndarray, size: int) -> np.ndarray:
    """Anchor cells whose ``size`` x ``size`` footprint touches ``mask``."""
    out = mask.copy()
    for i in range(size):
        for j in range(size):
            if i or j:
                out[: out.shape[0] - i, : out.shape[1] - j] |= mask[i:, j:]
    return out


def _bump_cell(a: LowLevelAction, pose) -> Cell:
    off = {"MoveAhead": 0, "MoveRight": 90, "MoveBack": 180, "MoveLeft": 270}[a.kind]
    dr, dc = step_vector((pose.heading + off) % 360)
    return (pose.cell[0] + dr, pose.cell[1] + dc)


def _explore_actions(grid, blocked, pose, cell) -> list[LowLevelAction]:
    route = astar_path(grid, blocked, pose, cell)
    return route + [ROTATE_RIGHT] * 3


def run_episode(scene: SceneInstance, cfg: RunConfig) -> EpisodeLog:
    return Episode(scene, cfg).run()


# --- metrics ---------------------------------------------------------------------
@dataclass
class Summary:
    method: str
    dataset: str
    n_episodes: int
    SS: float
    OS: float
    TA: Optional[int]

    def row(self) -> dict:
        return {"dataset": self.dataset, "method": self.method, "episodes": self.n_episodes,
                "SS": round(self.SS, 4), "OS": round(self.OS, 4), "TA": "NA" if self.TA is None else self.TA}


def metrics(logs: Sequence[EpisodeLog], dataset: str = "") -> Summary:
    if not logs:
        raise ValueError("metrics need at least one episode")
    ss = [int(l.outcome["SS"]) for l in logs]
    os_ = [float(l.outcome["OS"]) for l in logs]
    solved = [l.outcome["total_actions"] for l in logs if l.outcome["SS"]]
    ta = math.ceil(sum(solved) / len(solved) - 1e-9) if solved else None
    methods = sorted({l.method for l in logs})
    return Summary(",".join(methods), dataset, len(logs), sum(ss) / len(ss), sum(os_) / len(os_), ta)


def report(summaries: Iterable[Summary], fmt: str = "md") -> str:
    rows = [s.row() for s in summaries]
    if not rows:
        raise ValueError("report needs at least one summary")
    cols = ["dataset", "method", "episodes", "SS", "OS", "TA"]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, cols, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    if fmt != "md":
        raise ValueError("format must be csv or md")
    head = "| dataset | method | episodes | SS ↑ | OS ↑ | TA ↓ |"
    sep = "|---|---|---|---|---|---|"
    body = [f"| {r['dataset']} | {r['method']} | {r['episodes']} | {r['SS']} | {r['OS']} | {r['TA']} |" for r in rows]
    return "\n".join([head, sep, *body]) + "\n"
