"""Independent reference implementations used as test oracles."""
from collections import deque
import itertools
import math

import numpy as np

from hoop.sensor import Observation
from hoop.world import AgentPose


def joint_filter_run(sensor, classes, shape, steps):
    """Brute-force Bayes filter over the joint cell assignment of all objects.

    ``steps`` is a list of (action, success, z, view, place_target, miss) with
    ``miss`` an (H, W) array of p(pick failed | object there) or None.
    Returns the per-step marginals as a list of {oid: (H, W) array}.
    """
    ids = sorted(classes)
    cells = [(r, c) for r in range(shape[0]) for c in range(shape[1])]
    n = len(cells)
    joint = {combo: 1.0 / n ** len(ids) for combo in itertools.product(range(n), repeat=len(ids))}
    held = None
    out = []
    for action, success, z, view, target, miss in steps:
        agent = cells.index(z.robot.cell)
        collapsed = None
        new = {}
        for combo, p in joint.items():
            combo = list(combo)
            if success and action.kind == "Pick":
                combo[ids.index(action.object_id)] = agent
            elif success and action.kind == "Place" and held is not None:
                combo[ids.index(held)] = cells.index(tuple(target))
            elif not success and action.kind == "Pick" and miss is not None and action.object_id != held:
                p *= miss[cells[combo[ids.index(action.object_id)]]]
            if held is not None and not (success and action.kind == "Place"):
                combo[ids.index(held)] = agent
            key = tuple(combo)
            new[key] = new.get(key, 0.0) + p
        if success and action.kind == "Pick":
            held = collapsed = action.object_id
        elif success and action.kind == "Place" and held is not None:
            collapsed, held = held, None
        for combo in list(new):
            w = new[combo]
            for j, oid in enumerate(ids):
                if oid == held or oid == collapsed:
                    continue
                cell = cells[combo[j]]
                w *= sensor.likelihood(z.per_object.get(oid), cell, z.robot, classes[oid], bool(view[cell]))
            new[combo] = w
        total = sum(new.values())
        joint = {k: v / total for k, v in new.items()}
        marg = {}
        for j, oid in enumerate(ids):
            m = np.zeros(shape)
            for combo, p in joint.items():
                m[cells[combo[j]]] += p
            marg[oid] = m
        out.append(marg)
    return out


def random_sequence(rng, shape, ids, length, p_manip=0.2):
    """Random executed steps for the joint-filter comparison."""
    from hoop.world import LowLevelAction

    cells = [(r, c) for r in range(shape[0]) for c in range(shape[1])]
    held = None
    steps = []
    for _ in range(length):
        robot = AgentPose(cells[rng.integers(len(cells))], int(rng.choice([0, 90, 180, 270])))
        view = rng.random(shape) < 0.5
        per = {}
        for oid in ids:
            per[oid] = None if rng.random() < 0.5 else cells[rng.integers(len(cells))]
        z = Observation(robot, per)
        u = rng.random()
        target, miss = None, None
        if held is None and u < 0.2:
            oid = ids[rng.integers(len(ids))]
            action, success = LowLevelAction("Pick", object_id=oid), True
            held = oid
        elif held is not None and u < 0.4:
            target = cells[rng.integers(len(cells))]
            action, success = LowLevelAction("Place", cell=target), True
            held = None
        elif u < 0.6:
            oid = ids[rng.integers(len(ids))]
            action, success = LowLevelAction("Pick", object_id=oid), False
            miss = np.where(rng.random(shape) < 0.4, p_manip, 1.0)
        else:
            action = LowLevelAction(str(rng.choice(["MoveAhead", "RotateLeft", "MoveLeft"])))
            success = bool(rng.random() < 0.8)
        steps.append((action, success, z, view, target, miss))
    return steps


def bfs_pose_cost(occ, blocked, start, goal_cell, goal_heading=None):
    """BFS over (cell, heading) with unit-cost strafes and 90-degree turns."""
    h, w = occ.shape
    offs = {0: (-1, 0), 90: (0, 1), 180: (1, 0), 270: (0, -1)}
    s0 = (tuple(start[0]), start[1] % 360)
    dist = {s0: 0}
    q = deque([s0])
    while q:
        s = q.popleft()
        cell, head = s
        if cell == goal_cell and (goal_heading is None or head == goal_heading):
            return dist[s]
        nxt = [(cell, (head + 90) % 360), (cell, (head - 90) % 360)]
        for d in offs.values():
            c = (cell[0] + d[0], cell[1] + d[1])
            if 0 <= c[0] < h and 0 <= c[1] < w and not occ[c] and c not in blocked:
                nxt.append((c, head))
        for ns in nxt:
            if ns not in dist:
                dist[ns] = dist[s] + 1
                q.append(ns)
    return None


def exhaustive_q(model, sid, cfg):
    """Optimal depth-limited action values at ``sid`` by full enumeration."""
    memo = {}

    def value(s, d):
        if d >= cfg.depth or cfg.gamma ** d < cfg.epsilon:
            return 0.0
        key = (s, d)
        if key not in memo:
            best = -math.inf
            for a in model.legal(s):
                best = max(best, q(s, a, d))
            memo[key] = 0.0 if best == -math.inf else best
        return memo[key]

    def q(s, a, d):
        n, r, _, term = model.step(s, a)
        return r if term else r + cfg.gamma * value(n, d + 1)

    return {a: q(sid, a, 0) for a in model.legal(sid)}
