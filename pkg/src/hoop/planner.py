"""Abstract rearrangement model and POUCT search over it.

The abstract model works on sampled states: every object has a concrete cell
drawn from the belief, and the dynamics are deterministic given that sample.
States and actions are interned to integers so the search only hashes ints.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .abstraction import AbstractState
from .belief import BeliefState
from .errors import IllegalAbstractAction, NoActions
from .geometry import Cell, euclid, heading_towards, rotation_steps
from .navigation import EMPTY, NavCache
from .world import footprint

FAIL = "fail"


class AbstractAction(NamedTuple):
    kind: str  # Move | Rotate | PickPlace | Done
    object_id: Optional[str] = None
    stand: Optional[Cell] = None  # Move: destination; PickPlace: pick stand (agent cell)
    target: Optional[Cell] = None  # Move: cell to face on arrival; PickPlace: placement cell
    place_stand: Optional[Cell] = None
    angle: Optional[int] = None

    def __str__(self) -> str:
        if self.kind == "Move":
            return f"Move({self.stand[0]},{self.stand[1]}->{self.object_id})"
        if self.kind == "Rotate":
            return f"Rotate({self.angle})"
        if self.kind == "PickPlace":
            return f"PickPlace({self.object_id}->{self.target[0]},{self.target[1]})"
        return self.kind

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        for key in ("object_id", "stand", "target", "place_stand", "angle"):
            v = getattr(self, key)
            if v is not None:
                out[key] = list(v) if isinstance(v, tuple) else v
        return out


DONE_ACTION = AbstractAction("Done")


@dataclass
class PlannerConfig:
    simulations: int = 1000
    depth: int = 12
    gamma: float = 0.95
    epsilon: float = 0.005
    exploration_c: float = 100.0
    seed: int = 0
    cost_pick: float = 1.0
    cost_place: float = 1.0
    goal_reward: float = 50.0
    range_cells: float = 8.0
    rollout_policy: str = "preferred"  # or "uniform"

    def __post_init__(self):
        if self.simulations < 1:
            raise ValueError("simulations must be >= 1")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.rollout_policy not in ("preferred", "uniform"):
            raise ValueError("rollout_policy must be 'preferred' or 'uniform'")


# sim state: (robot, heading, locs, held index or -1, moved bitmask, done)
SimState = tuple


class AbstractModel:
    """Legal actions, transitions and rewards over sampled abstract states."""

    def __init__(self, s: AbstractState, nav: NavCache, cfg: PlannerConfig | None = None):
        self.cfg = cfg or PlannerConfig()
        self.nav = nav
        self.abstract = s
        self.ids = [o.obj_id for o in s.objects]
        self.sizes = [o.size for o in s.objects]
        self.goals = [o.goal for o in s.objects]
        self.candidates = [o.candidates or (o.loc,) for o in s.objects]
        self.targets = [o.place_targets for o in s.objects]
        self.receptacles = frozenset(nav.map.receptacle_cells())
        self.actions: list[AbstractAction] = []
        self._aid: dict[AbstractAction, int] = {}
        self.states: list[SimState] = []
        self._sid: dict[SimState, int] = {}
        self._legal: dict[int, tuple[int, ...]] = {}
        self._legal_set: dict[int, frozenset] = {}
        self._step: dict[tuple[int, int], tuple[int, float, object, bool]] = {}
        self._pref: dict[int, tuple[int, ...]] = {}

    # --- interning --------------------------------------------------------
    def action_id(self, a: AbstractAction) -> int:
        aid = self._aid.get(a)
        if aid is None:
            aid = self._aid[a] = len(self.actions)
            self.actions.append(a)
        return aid

    def state_id(self, st: SimState) -> int:
        sid = self._sid.get(st)
        if sid is None:
            sid = self._sid[st] = len(self.states)
            self.states.append(st)
        return sid

    def root_state(self, locs: Optional[Sequence[Cell]] = None) -> SimState:
        s = self.abstract
        held = -1
        out = []
        for i, o in enumerate(s.objects):
            if o.is_held:
                held = i
                out.append(s.robot)
            else:
                out.append(tuple(locs[i]) if locs is not None else self._nearest_candidate(i, o.loc))
        return (s.robot, s.heading, tuple(out), held, 0, False)

    def _nearest_candidate(self, i: int, cell: Cell) -> Cell:
        return min(self.candidates[i], key=lambda c: ((c[0] - cell[0]) ** 2 + (c[1] - cell[1]) ** 2, c))

    # --- geometry on sim states ---------------------------------------------
    def blocked(self, locs, held: int, skip: int = -1) -> frozenset:
        cells = []
        for i, loc in enumerate(locs):
            if self.sizes[i] > 1 and i != held and i != skip:
                cells.extend(footprint(loc, self.sizes[i]))
        return frozenset(cells) if cells else EMPTY

    def at_goal(self, locs, held: int, i: int) -> bool:
        return i != held and locs[i] == self.goals[i]

    def in_range(self, robot: Cell, loc: Cell, size: int, blocked: frozenset) -> bool:
        rng = self.cfg.range_cells + 1e-9
        cells = footprint(loc, size)
        own = frozenset(cells) if size > 1 else EMPTY
        bl = blocked - own if own else blocked
        return any(euclid(robot, c) <= rng and (c == robot or self.nav.los(robot, c, bl)) for c in cells)

    def objects_in_range(self, st: SimState) -> tuple[int, ...]:
        robot, _, locs, held, _, _ = st
        K = self.blocked(locs, held)
        return tuple(i for i, loc in enumerate(locs) if i != held and self.in_range(robot, loc, self.sizes[i], K))

    def accepts(self, locs, held: int, i: int, target: Cell) -> bool:
        if target == locs[i] and i != held:
            return False
        size = self.sizes[i]
        if size == 1 and target in self.receptacles:
            return True
        cells = footprint(target, size)
        if not all(self.nav.free(c) for c in cells):
            return False
        occupied = set()
        for j, loc in enumerate(locs):
            if j != i and j != held and loc not in self.receptacles:
                occupied.update(footprint(loc, self.sizes[j]))
        return not any(c in occupied for c in cells)

    def place_stand(self, st: SimState, i: int, target: Cell) -> Optional[Cell]:
        robot, _, locs, held, _, _ = st
        K = self.blocked(locs, held, skip=i)
        own = frozenset(footprint(target, self.sizes[i]))
        return self.nav.stand_cell(target, robot, K, own)

    # --- action enumeration -----------------------------------------------
    def enumerate(self, st: SimState) -> list[AbstractAction]:
        robot, heading, locs, held, moved, done = st
        if done:
            return []
        out: list[AbstractAction] = []
        if held >= 0:
            for t in self.targets[held]:
                if self.accepts(locs, held, held, t):
                    ps = self.place_stand(st, held, t)
                    if ps is not None:
                        out.append(AbstractAction("PickPlace", self.ids[held], robot, t, ps))
            out.append(DONE_ACTION)
            return out

        K = self.blocked(locs, held)
        n = len(locs)
        looks: list[list[tuple[Cell, Cell]]] = []
        sealed = False
        for i in range(n):
            cands = (locs[i],) if moved >> i & 1 else self.candidates[i]
            pairs = []
            for c in cands:
                own = frozenset(footprint(c, self.sizes[i])) if self.sizes[i] > 1 else EMPTY
                stand = self.nav.stand_cell(c, robot, K - own if own else K, own)
                if stand is not None:
                    pairs.append((stand, c))
            looks.append(pairs)
            if not pairs and not self.at_goal(locs, held, i):
                sealed = True

        seen_stands = set()
        for i in range(n):
            if self.at_goal(locs, held, i) and not (sealed and self.sizes[i] > 1):
                continue
            for stand, c in looks[i]:
                if stand != robot and stand not in seen_stands:
                    seen_stands.add(stand)
                    out.append(AbstractAction("Move", self.ids[i], stand, c))

        near = [i for i in range(n) if self.in_range(robot, locs[i], self.sizes[i], K)]
        angles = set()
        for i in near:
            # turning only pays off as a look at an object whose cell is still uncertain
            if moved >> i & 1 or len(self.candidates[i]) < 2:
                continue
            h = heading_towards(robot, locs[i])
            if h != heading and h not in angles:
                angles.add(h)
                out.append(AbstractAction("Rotate", angle=h))
        for i in near:
            if self.at_goal(locs, held, i) and self.sizes[i] == 1:
                continue
            for t in self.targets[i]:
                if self.accepts(locs, held, i, t):
                    ps = self.place_stand(st, i, t)
                    if ps is not None:
                        out.append(AbstractAction("PickPlace", self.ids[i], robot, t, ps))
        out.append(DONE_ACTION)
        return out

    def preferred(self, sid: int) -> tuple[int, ...]:
        """Rollout candidates: goal placements if any, else progress-making actions."""
        hit = self._pref.get(sid)
        if hit is not None:
            return hit
        acts = self.legal(sid)
        st = self.states[sid]
        locs, held = st[2], st[3]
        goal_moves = tuple(
            aid for aid in acts
            if self.actions[aid].kind == "PickPlace" and self.actions[aid].target == self.goals[self.ids.index(self.actions[aid].object_id)]
        )
        if goal_moves:
            hit = goal_moves
        elif held < 0 and all(locs[i] == self.goals[i] for i in range(len(locs))):
            hit = tuple(aid for aid in acts if self.actions[aid].kind == "Done")
        else:
            # rotations and moving a placed object only lose reward in the abstract model
            useful = []
            for aid in acts:
                a = self.actions[aid]
                if a.kind in ("Done", "Rotate"):
                    continue
                if a.kind == "PickPlace":
                    i = self.ids.index(a.object_id)
                    if held != i and locs[i] == self.goals[i]:
                        continue
                useful.append(aid)
            hit = tuple(useful) or tuple(aid for aid in acts if self.actions[aid].kind != "Done") or acts
        self._pref[sid] = hit
        return hit

    def legal(self, sid: int) -> tuple[int, ...]:
        hit = self._legal.get(sid)
        if hit is None:
            hit = tuple(self.action_id(a) for a in self.enumerate(self.states[sid]))
            self._legal[sid] = hit
            self._legal_set[sid] = frozenset(hit)
        return hit

    # --- dynamics --------------------------------------------------------
    def step(self, sid: int, aid: int) -> tuple[int, float, object, bool]:
        """(next state id, reward, observation, terminal); memoised."""
        key = (sid, aid)
        hit = self._step.get(key)
        if hit is not None:
            return hit
        self.legal(sid)
        if aid not in self._legal_set[sid]:
            out = (sid, -1.0, FAIL, False)
        else:
            nxt, r, term = self._transition(self.states[sid], self.actions[aid])
            nsid = self.state_id(nxt)
            obs = None if term else self.objects_in_range(nxt)
            out = (nsid, r, obs, term)
        self._step[key] = out
        return out

    def _transition(self, st: SimState, a: AbstractAction) -> tuple[SimState, float, bool]:
        robot, heading, locs, held, moved, done = st
        cfg = self.cfg
        if a.kind == "Done":
            ok = held < 0 and all(locs[i] == self.goals[i] for i in range(len(locs)))
            return (robot, heading, locs, held, moved, True), (cfg.goal_reward if ok else -cfg.goal_reward), True
        if a.kind == "Move":
            # same blocked set the stand was found with: a blocker's own footprint is passable
            i = self.ids.index(a.object_id)
            K = self.blocked(locs, held)
            if self.sizes[i] > 1:
                K = K - frozenset(footprint(a.target, self.sizes[i]))
            d = self.nav.distance(robot, a.stand, K)
            h = heading_towards(a.stand, a.target)
            cost = d + rotation_steps(heading, h)
            return (a.stand, h, locs, held, moved, False), -float(cost), False
        if a.kind == "Rotate":
            return (robot, a.angle, locs, held, moved, False), -float(rotation_steps(heading, a.angle)), False
        # PickPlace
        i = self.ids.index(a.object_id)
        ps = self.place_stand(st, i, a.target)
        K = self.blocked(locs, held, skip=i)
        d = self.nav.distance(robot, ps, K)
        r = -float(d) - cfg.cost_place - (0.0 if held == i else cfg.cost_pick)
        was_goal = locs[i] == self.goals[i] and held != i
        if a.target == self.goals[i]:
            r += cfg.goal_reward
        elif was_goal:
            r -= cfg.goal_reward
        new_locs = locs[:i] + (a.target,) + locs[i + 1 :]
        nxt = (ps, heading_towards(ps, a.target), new_locs, -1, moved | (1 << i), False)
        return nxt, r, False

    # --- public helpers ----------------------------------------------------
    def transition(self, st: SimState, a: AbstractAction) -> SimState:
        if a not in self.enumerate(st):
            raise IllegalAbstractAction(str(a))
        return self._transition(st, a)[0]

    def reward(self, st: SimState, a: AbstractAction) -> float:
        if a not in self.enumerate(st):
            raise IllegalAbstractAction(str(a))
        return self._transition(st, a)[1]


def enumerate_actions(s: AbstractState, nav: NavCache, cfg: PlannerConfig | None = None) -> list[AbstractAction]:
    model = AbstractModel(s, nav, cfg)
    return model.enumerate(model.root_state())


class HistoryNode:
    __slots__ = ("N", "actions", "n", "v", "children")

    def __init__(self, actions: tuple[int, ...]):
        self.N = 0
        self.actions = actions
        self.n = [0] * len(actions)
        self.v = [0.0] * len(actions)
        self.children: dict = {}


def sample_locations(b: BeliefState, ids: Sequence[str], count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` joint samples of object cells, shape (count, n_objects) of flat indices."""
    out = np.empty((count, len(ids)), dtype=np.int64)
    for j, oid in enumerate(ids):
        cdf = np.cumsum(b[oid].prob.ravel())
        u = rng.random(count) * cdf[-1]
        out[:, j] = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    return out


def snap_to_candidates(samples: np.ndarray, candidates: Sequence[Sequence[Cell]], w: int) -> np.ndarray:
    """Move every sampled cell onto its nearest candidate cell of the same object.

    The abstract actions only reach the candidate cells, so a sample elsewhere
    could never be picked inside the simulation. Snapping keeps the belief mass
    of each candidate's neighbourhood.
    """
    out = samples.copy()
    for j, cands in enumerate(candidates):
        c = np.asarray(cands, dtype=int).reshape(-1, 2)
        r, col = np.divmod(samples[:, j], w)
        d2 = (r[:, None] - c[None, :, 0]) ** 2 + (col[:, None] - c[None, :, 1]) ** 2
        out[:, j] = c[d2.argmin(axis=1), 0] * w + c[d2.argmin(axis=1), 1]
    return out


class POUCT:
    def __init__(self, model: AbstractModel, cfg: PlannerConfig | None = None):
        self.model = model
        self.cfg = cfg or model.cfg
        self.rand = random.Random(self.cfg.seed)
        self.root: Optional[HistoryNode] = None
        self._log_cache = [0.0] + [math.log(k) for k in range(1, self.cfg.simulations + 2)]

    def _cut(self, depth: int) -> bool:
        return depth >= self.cfg.depth or self.cfg.gamma**depth < self.cfg.epsilon

    def rollout(self, sid: int, depth: int) -> float:
        model, gamma = self.model, self.cfg.gamma
        choose = model.preferred if self.cfg.rollout_policy == "preferred" else model.legal
        total, disc = 0.0, 1.0
        while not self._cut(depth):
            acts = choose(sid)
            if not acts:
                break
            aid = acts[self.rand.randrange(len(acts))]
            sid, r, _, term = model.step(sid, aid)
            total += disc * r
            disc *= gamma
            depth += 1
            if term:
                break
        return total

    def simulate(self, sid: int, node: HistoryNode, depth: int) -> float:
        if self._cut(depth):
            return 0.0
        k = self._select(node)
        aid = node.actions[k]
        nsid, r, obs, term = self.model.step(sid, aid)
        if term:
            ret = r
        else:
            key = (k, obs)
            child = node.children.get(key)
            if child is None:
                child = node.children[key] = HistoryNode(self.model.legal(nsid))
                ret = r + self.cfg.gamma * self.rollout(nsid, depth + 1)
            else:
                ret = r + self.cfg.gamma * self.simulate(nsid, child, depth + 1)
        node.N += 1
        node.n[k] += 1
        node.v[k] += (ret - node.v[k]) / node.n[k]
        return ret

    def _select(self, node: HistoryNode) -> int:
        n, v = node.n, node.v
        for k, cnt in enumerate(n):
            if cnt == 0:
                return k
        logn = self._log_cache[node.N] if node.N < len(self._log_cache) else math.log(node.N)
        c = self.cfg.exploration_c
        best, best_val = 0, -math.inf
        for k in range(len(n)):
            val = v[k] + c * math.sqrt(logn / n[k])
            if val > best_val:
                best, best_val = k, val
        return best

    def search(self, b: BeliefState) -> AbstractAction:
        model, cfg = self.model, self.cfg
        root_sid = model.state_id(model.root_state())
        actions = model.legal(root_sid)
        if not actions:
            raise NoActions("no abstract actions available")
        self.root = HistoryNode(actions)
        rng = np.random.default_rng(cfg.seed)
        w = model.nav.w
        samples = snap_to_candidates(sample_locations(b, model.ids, cfg.simulations, rng), model.candidates, w)
        held = model.root_state()[3]
        for row in samples:
            locs = [divmod(int(x), w) for x in row]
            if held >= 0:
                locs[held] = model.abstract.robot
            sid = model.state_id(model.root_state(locs))
            self.simulate(sid, self.root, 0)
        return self.best_action()

    def best_action(self) -> AbstractAction:
        root = self.root
        best, best_v = 0, -math.inf
        for k, aid in enumerate(root.actions):
            if root.n[k] > 0 and root.v[k] > best_v:
                best, best_v = k, root.v[k]
        return self.model.actions[root.actions[best]]


def plan(
    b: BeliefState,
    s: AbstractState,
    cfg: PlannerConfig | None = None,
    nav: NavCache | None = None,
) -> AbstractAction:
    """Next sub-goal chosen by POUCT from belief ``b`` and abstract state ``s``."""
    cfg = cfg or PlannerConfig()
    if nav is None:
        raise ValueError("plan needs the navigation cache of the static map")
    model = AbstractModel(s, nav, cfg)
    return POUCT(model, cfg).search(b)


def rollout(model: AbstractModel, st: SimState, depth: int, cfg: PlannerConfig | None = None) -> float:
    """Discounted return of a uniform-random rollout from ``st`` at tree depth ``depth``."""
    search = POUCT(model, cfg or model.cfg)
    return search.rollout(model.state_id(st), depth)
