"""Parametric noisy object detector and its observation likelihood."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import MissingParams
from .geometry import Cell, cone_size, euclid
from .world import AgentPose, GridMap, view_mask


@dataclass(frozen=True)
class ClassSensorParams:
    class_name: str
    tp: float
    fp: float
    r: float  # metres; mean distance of true-positive detections

    def __post_init__(self):
        if not (0.0 <= self.tp <= 1.0 and 0.0 <= self.fp <= 1.0):
            raise ValueError(f"{self.class_name}: tp/fp must lie in [0, 1]")
        if self.r <= 0:
            raise ValueError(f"{self.class_name}: r must be positive")


def load_params(path: str | Path | None = None) -> dict[str, ClassSensorParams]:
    """Read a ``class,r,tp,fp`` table; defaults to the packaged detector table."""
    if path is None:
        text = resources.files("hoop").joinpath("data/sensor_params.csv").read_text()
    else:
        path = Path(path)
        text = path.read_text()
        if path.suffix == ".json":
            import json

            rows = json.loads(text)
            return {
                row["class"]: ClassSensorParams(row["class"], float(row["tp"]), float(row["fp"]), float(row["r"]))
                for row in rows
            }
    out = {}
    for row in csv.DictReader(io.StringIO(text)):
        out[row["class"]] = ClassSensorParams(row["class"], float(row["tp"]), float(row["fp"]), float(row["r"]))
    return out


@dataclass(frozen=True)
class Observation:
    robot: AgentPose
    per_object: Mapping[str, Optional[Cell]]


@lru_cache(maxsize=256)
def _distance_grid(shape: tuple[int, int], cell: Cell) -> np.ndarray:
    rows, cols = np.indices(shape)
    d = np.hypot(rows - cell[0], cols - cell[1])
    d.setflags(write=False)
    return d


class SensorModel:
    """Detector sampling plus the matching five-case observation likelihood.

    ``perfect=True`` gives the oracle detector: tp=1, fp=0 and no distance
    attenuation.
    """

    def __init__(
        self,
        params: Mapping[str, ClassSensorParams] | None = None,
        cell_size: float = 0.25,
        sigma_cells: float = 0.3,
        max_view_cells: float = 16.0,
        perfect: bool = False,
    ):
        self.params = dict(params) if params is not None else load_params()
        self.cell_size = cell_size
        self.sigma_cells = sigma_cells
        self.max_view_cells = max_view_cells
        self.perfect = perfect

    def params_for(self, class_name: str) -> ClassSensorParams:
        try:
            p = self.params[class_name]
        except KeyError:
            raise MissingParams(f"no detector parameters for class {class_name!r}") from None
        if self.perfect:
            return ClassSensorParams(p.class_name, 1.0, 0.0, p.r)
        return p

    def delta(self, dist_m: float, r: float) -> float:
        if self.perfect or dist_m <= r:
            return 1.0
        return 1.0 / dist_m

    def ve_size(self, r: float) -> int:
        return cone_size(r / self.cell_size)

    # --- sampling ------------------------------------------------------
    def detect(
        self,
        visible: Sequence[tuple[str, Cell]],
        tracked: Mapping[str, str],
        robot: AgentPose,
        view_cells: Sequence[Cell],
        rng: np.random.Generator,
    ) -> Observation:
        """Sample one detection (or None) per tracked object.

        ``tracked`` maps object id to class name; ``view_cells`` lists the cells
        of the current view cone, used to place false positives.
        """
        for cls in tracked.values():
            self.params_for(cls)
        seen = dict(visible)
        out: dict[str, Optional[Cell]] = {}
        for oid in sorted(tracked):
            p = self.params_for(tracked[oid])
            u = rng.random()
            if oid in seen:
                cell = seen[oid]
                d = euclid(robot.cell, cell) * self.cell_size
                out[oid] = cell if u < p.tp * self.delta(d, p.r) else None
            elif u < p.fp and view_cells:
                out[oid] = tuple(view_cells[int(rng.integers(len(view_cells)))])
            else:
                out[oid] = None
        return Observation(robot, out)

    # --- likelihood ----------------------------------------------------
    def likelihood(self, z: Optional[Cell], candidate: Cell, robot: AgentPose, class_name: str, in_view: bool) -> float:
        p = self.params_for(class_name)
        if z is None:
            return 1.0 - p.tp if in_view else 1.0 - p.fp
        d = euclid(robot.cell, candidate) * self.cell_size
        delta = self.delta(d, p.r)
        if in_view and euclid(z, candidate) <= 3.0 * self.sigma_cells:
            return delta * p.tp
        return delta * p.fp / self.ve_size(p.r)

    def likelihood_grid(self, z: Optional[Cell], class_name: str, robot: AgentPose, view: np.ndarray) -> np.ndarray:
        """Vectorised ``likelihood`` over every cell of the map."""
        p = self.params_for(class_name)
        if z is None:
            return np.where(view, 1.0 - p.tp, 1.0 - p.fp)
        dist = _distance_grid(view.shape, robot.cell) * self.cell_size
        if self.perfect:
            delta = np.ones_like(dist)
        else:
            with np.errstate(divide="ignore"):
                delta = np.where(dist <= p.r, 1.0, 1.0 / np.maximum(dist, 1e-12))
        near = _distance_grid(view.shape, tuple(z)) <= 3.0 * self.sigma_cells
        return np.where(view & near, delta * p.tp, delta * p.fp / self.ve_size(p.r))

    def view(self, occluders: np.ndarray, robot: AgentPose) -> np.ndarray:
        return view_mask(occluders, robot.cell, robot.heading, self.max_view_cells)


def obs_likelihood(
    z: Optional[Cell],
    candidate: Cell,
    robot: AgentPose,
    params: ClassSensorParams,
    grid: GridMap,
    sigma_cells: float = 0.3,
    max_view_cells: float = 16.0,
    occluders: np.ndarray | None = None,
) -> float:
    """Pr(z | object at ``candidate``, robot pose) for a single detection."""
    model = SensorModel({params.class_name: params}, grid.cell_size, sigma_cells, max_view_cells)
    occ = grid.occupancy if occluders is None else occluders
    in_view = bool(model.view(occ, robot)[candidate])
    return model.likelihood(z, candidate, robot, params.class_name, in_view)


def view_cells(mask: np.ndarray) -> list[Cell]:
    rows, cols = np.nonzero(mask)
    return list(zip(rows.tolist(), cols.tolist()))


def entropy(p: np.ndarray) -> float:
    q = p[p > 0]
    return float(-(q * np.log(q)).sum()) if q.size else 0.0

