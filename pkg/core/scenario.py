"""Cell topology, serving-BS selection and trajectories."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from core.errors import TopologyError, TrajectoryError
from models.scenario import SyntheticTrajectory

logger = logging.getLogger(__name__)

SQRT3 = np.sqrt(3.0)
TRAJECTORY_COLUMNS = ("t_s", "x_m", "y_m")
VELOCITY_COLUMNS = ("vx_mps", "vy_mps")
TIME_STEP_S = 1.0


def lattice_basis(isd_m: float, rotation_rad: float) -> np.ndarray:
    """Columns are the two rotated lattice vectors."""
    c, s = np.cos(rotation_rad), np.sin(rotation_rad)
    rot = np.array([[c, -s], [s, c]])
    return rot @ (isd_m * np.array([[1.0, 0.5], [0.0, SQRT3 / 2.0]]))


@dataclass(frozen=True)
class Topology:
    """Sites on a triangular lattice; each hexagonal cell is served by the
    three sites on its alternating vertices."""

    isd_m: float
    seed: int
    rotation_rad: float
    offset_m: np.ndarray
    center_m: np.ndarray
    extent_m: float
    site_keys: Tuple[Tuple[int, int], ...]
    bs_positions: np.ndarray

    @property
    def cell_side_m(self) -> float:
        return self.isd_m / SQRT3

    @property
    def basis(self) -> np.ndarray:
        return lattice_basis(self.isd_m, self.rotation_rad)

    @property
    def site_ids(self) -> Dict[Tuple[int, int], int]:
        return {key: idx for idx, key in enumerate(self.site_keys)}

    def site_position(self, i: int, j: int) -> np.ndarray:
        return self.offset_m + self.basis @ np.array([i, j], dtype=float)

    def cell_centroid(self, i: int, j: int) -> np.ndarray:
        return self.offset_m + self.basis @ np.array([i + 1.0 / 3.0, j + 1.0 / 3.0])

    def cell_of(self, position: Sequence[float]) -> Tuple[int, int]:
        """Lattice index of the up-triangle whose centroid is nearest."""
        p = np.asarray(position, dtype=float)
        frac = np.linalg.solve(self.basis, p - self.offset_m) - 1.0 / 3.0
        i0, j0 = int(np.floor(frac[0])), int(np.floor(frac[1]))
        best: Optional[Tuple[float, Tuple[float, float], Tuple[int, int]]] = None
        for di in (-1, 0, 1, 2):
            for dj in (-1, 0, 1, 2):
                key = (i0 + di, j0 + dj)
                centroid = self.cell_centroid(*key)
                # distances rounded so boundary ties break on the centroid
                dist = round(float(np.linalg.norm(p - centroid)), 9)
                rank = (dist, (round(centroid[0], 9), round(centroid[1], 9)), key)
                if best is None or rank < best:
                    best = rank
        assert best is not None
        return best[2]

    def colour(self, bs_id: int) -> int:
        """Site colour in {0, 1, 2}; the three sites of any cell differ."""
        i, j = self.site_keys[bs_id]
        return (i - j) % 3

    def contains(self, position: Sequence[float]) -> bool:
        d = np.abs(np.asarray(position, dtype=float) - self.center_m)
        return bool(np.all(d <= self.extent_m))


def build_topology(
    extent_m: float,
    seed: int,
    isd_m: float = 500.0,
    center_m: Sequence[float] = (0.0, 0.0),
) -> Topology:
    """Randomly rotated and offset lattice covering a square of half-width ``extent_m``."""
    if extent_m <= 0 or isd_m <= 0:
        raise TopologyError("extent and inter-site distance must be positive")
    rng = np.random.default_rng(seed)
    rotation = float(rng.uniform(0.0, 2.0 * np.pi))
    center = np.asarray(center_m, dtype=float)
    basis = lattice_basis(isd_m, rotation)
    offset = center + basis @ rng.uniform(0.0, 1.0, 2)

    reach = extent_m * np.sqrt(2.0) + 2.0 * isd_m
    n = int(np.ceil(reach / (isd_m * SQRT3 / 2.0))) + 2
    keys: List[Tuple[int, int]] = []
    positions: List[np.ndarray] = []
    for i in range(-n, n + 1):
        for j in range(-n, n + 1):
            pos = offset + basis @ np.array([i, j], dtype=float)
            if np.linalg.norm(pos - center) <= reach:
                keys.append((i, j))
                positions.append(pos)
    logger.debug("built %d sites for extent %.0f m", len(keys), extent_m)
    return Topology(
        isd_m=isd_m,
        seed=seed,
        rotation_rad=rotation,
        offset_m=offset,
        center_m=center,
        extent_m=extent_m,
        site_keys=tuple(keys),
        bs_positions=np.asarray(positions),
    )


def serving_bs(topology: Topology, position: Sequence[float]) -> Tuple[int, int, int]:
    """Ids of the three sites serving the cell that contains ``position``."""
    if not topology.contains(position):
        raise TopologyError(f"position {tuple(position)} lies outside the deployed area")
    i, j = topology.cell_of(position)
    ids = topology.site_ids
    try:
        return ids[(i, j)], ids[(i + 1, j)], ids[(i, j + 1)]
    except KeyError as exc:
        raise TopologyError(f"cell {(i, j)} has no deployed site {exc}") from exc


@dataclass(frozen=True)
class TrajectoryPoint:
    t_s: float
    xy_m: np.ndarray
    velocity_mps: np.ndarray


def _numeric_column(frame: pd.DataFrame, name: str) -> np.ndarray:
    values = pd.to_numeric(frame[name].str.strip(), errors="coerce")
    bad = np.flatnonzero(values.isna().to_numpy())
    if bad.size:
        # header is line 1
        raise TrajectoryError(f"column {name} is not numeric", line=int(bad[0]) + 2)
    return values.to_numpy(dtype=float)


def load_trajectory(path: Union[str, Path]) -> List[TrajectoryPoint]:
    """Read ``t_s,x_m,y_m[,vx_mps,vy_mps]`` rows; missing velocities use central differences."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError as exc:
        raise TrajectoryError(f"trajectory file not found: {path}") from exc
    except pd.errors.ParserError as exc:
        raise TrajectoryError(f"{path}: {exc}") from exc
    except pd.errors.EmptyDataError as exc:
        raise TrajectoryError(f"{path} is empty") from exc

    frame.columns = [c.strip() for c in frame.columns]
    missing = [c for c in TRAJECTORY_COLUMNS if c not in frame.columns]
    if missing:
        raise TrajectoryError(f"missing columns: {', '.join(missing)}", line=1)
    if len(frame) < 2:
        raise TrajectoryError("a trajectory needs at least two points")

    t = _numeric_column(frame, "t_s")
    xy = np.column_stack([_numeric_column(frame, "x_m"), _numeric_column(frame, "y_m")])
    steps = np.diff(t)
    if np.any(steps <= 0):
        raise TrajectoryError("timestamps are not increasing", line=int(np.argmax(steps <= 0)) + 3)
    if not np.allclose(steps, TIME_STEP_S, atol=1e-6):
        bad = int(np.argmax(~np.isclose(steps, TIME_STEP_S, atol=1e-6)))
        raise TrajectoryError("consecutive points must be 1 s apart", line=bad + 3)

    if all(c in frame.columns for c in VELOCITY_COLUMNS):
        vel = np.column_stack([_numeric_column(frame, c) for c in VELOCITY_COLUMNS])
    else:
        vel = np.column_stack([np.gradient(xy[:, 0], t), np.gradient(xy[:, 1], t)])
    return [TrajectoryPoint(float(ti), p, v) for ti, p, v in zip(t, xy, vel)]


def synthetic_trajectory(params: SyntheticTrajectory) -> List[TrajectoryPoint]:
    """Waypoint path with constant speed and heading per segment."""
    if params.speed_min_mps > params.speed_max_mps:
        raise TrajectoryError("minimum speed exceeds maximum speed")
    rng = np.random.default_rng(params.seed)
    heading = rng.uniform(0.0, 2.0 * np.pi)
    max_turn = np.deg2rad(params.max_turn_deg)
    position = np.zeros(2)
    points: List[TrajectoryPoint] = []
    velocity = np.zeros(2)
    for k in range(params.n_points):
        if k % params.segment_s == 0:
            if k:
                heading += rng.uniform(-max_turn, max_turn)
            speed = rng.uniform(params.speed_min_mps, params.speed_max_mps)
            velocity = speed * np.array([np.cos(heading), np.sin(heading)])
        points.append(TrajectoryPoint(float(k) * TIME_STEP_S, position.copy(), velocity.copy()))
        position = position + velocity * TIME_STEP_S
    return points


def trajectory_extent(points: Sequence[TrajectoryPoint], margin_m: float) -> Tuple[np.ndarray, float]:
    """Centre and half-width of a square covering the path plus ``margin_m``."""
    xy = np.array([p.xy_m for p in points])
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    return (lo + hi) / 2.0, float(np.max(hi - lo) / 2.0 + margin_m)
