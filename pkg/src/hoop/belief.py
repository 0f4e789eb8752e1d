"""Object-oriented factored belief over object cells."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import EmptyFreeSpace
from .geometry import Cell
from .sensor import Observation, SensorModel
from .world import GridMap, LowLevelAction, reachable_mask

log = logging.getLogger(__name__)


@dataclass
class ObjectBelief:
    prob: np.ndarray  # (H, W), sums to one
    is_held: bool = False
    at_goal: bool = False

    def argmax(self) -> Cell:
        r, c = np.unravel_index(int(np.argmax(self.prob)), self.prob.shape)
        return (int(r), int(c))

    def max(self) -> float:
        return float(self.prob.max())

    def copy(self) -> "ObjectBelief":
        return ObjectBelief(self.prob.copy(), self.is_held, self.at_goal)


@dataclass
class BeliefState:
    per_object: dict[str, ObjectBelief]
    goals: dict[str, Cell]
    classes: dict[str, str]
    support: np.ndarray  # cells that may carry mass after re-uniformisation
    recoveries: int = 0
    sizes: dict[str, int] = field(default_factory=dict)

    def __getitem__(self, oid: str) -> ObjectBelief:
        return self.per_object[oid]

    def __iter__(self):
        return iter(sorted(self.per_object))

    @property
    def held(self) -> Optional[str]:
        for oid, b in self.per_object.items():
            if b.is_held:
                return oid
        return None

    def copy(self) -> "BeliefState":
        return BeliefState(
            {k: v.copy() for k, v in self.per_object.items()},
            dict(self.goals),
            dict(self.classes),
            self.support,
            self.recoveries,
            dict(self.sizes),
        )

    def uniform(self) -> np.ndarray:
        return self.support / self.support.sum()

    def to_json(self, min_mass: float = 0.0) -> dict:
        out = {}
        for oid in sorted(self.per_object):
            b = self.per_object[oid]
            rows, cols = np.nonzero(b.prob > min_mass)
            out[oid] = {
                "is_held": b.is_held,
                "at_goal": b.at_goal,
                "cells": [[int(r), int(c), float(b.prob[r, c])] for r, c in zip(rows, cols)],
            }
        return out


def init_belief(
    grid: GridMap,
    objects: Sequence[tuple[str, str]],
    goals: Mapping[str, Cell],
    mode: str = "uniform",
    true_locations: Mapping[str, Cell] | None = None,
    agent_cell: Cell | None = None,
    sizes: Mapping[str, int] | None = None,
) -> BeliefState:
    """Initial belief: uniform over reachable free cells, or a delta at the truth.

    ``mode="delta"`` requires ``true_locations``.
    """
    free = ~grid.occupancy
    support = reachable_mask(grid.occupancy, agent_cell) if agent_cell is not None else free.copy()
    if not support.any():
        raise EmptyFreeSpace("map has no free cells to hold objects")
    for oid, g in goals.items():
        if not grid.is_free(g):
            raise ValueError(f"goal of {oid} at {g} is not a free cell")
    per = {}
    for oid, _cls in objects:
        if mode == "uniform":
            prob = support / support.sum()
        elif mode == "delta":
            if true_locations is None:
                raise ValueError("delta mode needs true_locations")
            prob = np.zeros(grid.occupancy.shape)
            prob[tuple(true_locations[oid])] = 1.0
        else:
            raise ValueError(f"unknown belief mode {mode!r}")
        per[oid] = ObjectBelief(prob.astype(float))
    return BeliefState(per, {k: tuple(v) for k, v in goals.items()}, dict(objects), support, 0, dict(sizes or {}))


def _delta(shape, cell: Cell) -> np.ndarray:
    p = np.zeros(shape)
    p[cell] = 1.0
    return p


def update(
    b: BeliefState,
    action: LowLevelAction,
    success: bool,
    z: Observation,
    sensor: SensorModel,
    view: np.ndarray,
    place_target: Optional[Cell] = None,
    miss_likelihood: Optional[np.ndarray] = None,
    object_views: Optional[Mapping[str, np.ndarray]] = None,
) -> BeliefState:
    """Posterior after executing ``action`` and receiving ``z``.

    A successful pick collapses the picked object onto the agent cell, a
    successful place collapses the held object onto ``place_target``; every
    other object gets the Bayes update ``b'(s) ∝ p(z|s) b(s)``. ``view`` is the
    agent's view mask for the pose in ``z``. ``miss_likelihood`` is
    p(pick failed | object at cell) and is applied to the target of a failed
    pick before the sensor update. ``object_views`` overrides ``view`` per
    object (large objects count as seen when any footprint cell is).
    """
    out = b.copy()
    agent = z.robot.cell
    shape = view.shape
    collapsed: Optional[str] = None

    if success and action.kind == "Pick" and action.object_id in out.per_object:
        oid = action.object_id
        ob = out.per_object[oid]
        ob.prob = _delta(shape, agent)
        ob.is_held = True
        ob.at_goal = False
        collapsed = oid
    elif success and action.kind == "Place":
        oid = b.held
        if oid is not None:
            target = place_target if place_target is not None else action.cell
            if target is None:
                raise ValueError("place update needs the placement cell")
            ob = out.per_object[oid]
            ob.prob = _delta(shape, tuple(target))
            ob.is_held = False
            ob.at_goal = tuple(target) == out.goals.get(oid)
            collapsed = oid
    elif not success and action.kind == "Pick" and miss_likelihood is not None:
        ob = out.per_object.get(action.object_id)
        if ob is not None and not ob.is_held:
            post = ob.prob * miss_likelihood
            if post.sum() > 0.0:
                ob.prob = post / post.sum()

    for oid in sorted(out.per_object):
        if oid == collapsed:
            continue
        ob = out.per_object[oid]
        if ob.is_held:
            ob.prob = _delta(shape, agent)
            continue
        v = object_views.get(oid, view) if object_views else view
        like = sensor.likelihood_grid(z.per_object.get(oid), out.classes[oid], z.robot, v)
        post = like * ob.prob
        total = post.sum()
        if not total > 0.0:
            log.warning("belief for %s annihilated; re-uniformising", oid)
            out.recoveries += 1
            ob.prob = out.uniform()
        else:
            ob.prob = post / total
    return out
