"""Phase-portrait data: energy grids, iso-energy contours, separatrix levels.

Contours are computed on the (z, phi) rectangle with the phi = 0 and
phi = 2 pi columns identified, so a closed orbit cut by the seam is still a
single component.  The pole rows are sampled as ordinary rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

import numpy as np

from . import _backend
from .errors import EmptyLevel
from .fixedpoints import Kind, StationaryPoint
from .model import TWO_PI, ReducedParams, energy


@dataclass(frozen=True)
class EnergyGrid:
    """``values[i, j] = H_c(z[i], phi[j])`` on a uniform mesh of [-1, 1] x [0, 2 pi]."""

    z: np.ndarray
    phi: np.ndarray
    values: np.ndarray
    params: Optional[ReducedParams] = None
    t: float = 0.0

    def cell_centers(self) -> np.ndarray:
        """Energy at cell centres: exact when the parameters are known, else the corner mean."""
        if self.params is not None:
            zc = 0.5 * (self.z[:-1] + self.z[1:])
            pc = 0.5 * (self.phi[:-1] + self.phi[1:])
            return energy(zc[:, None], pc[None, :], self.params, self.t)
        v = self.values
        return 0.25 * (v[:-1, :-1] + v[1:, :-1] + v[1:, 1:] + v[:-1, 1:])


@dataclass
class Polyline:
    vertices: np.ndarray     # (k, 2) columns z, phi
    closed: bool
    component: int


@dataclass
class LevelContours:
    level: float
    polylines: List[Polyline] = field(default_factory=list)
    n_components: int = 0
    error: Optional[str] = None


@dataclass
class ContourSet:
    levels: Dict[float, LevelContours]

    def components(self, level: float) -> int:
        return self.levels[level].n_components


def sample_grid(params: ReducedParams, n_z: int = 64, n_phi: int = 64, t: float = 0.0) -> EnergyGrid:
    if n_z < 16 or n_phi < 16:
        raise ValueError("grid needs at least 16 nodes along each axis")
    z = np.linspace(-1.0, 1.0, n_z)
    phi = np.linspace(0.0, TWO_PI, n_phi)
    values = energy(z[:, None], phi[None, :], params, t)
    return EnergyGrid(z, phi, np.ascontiguousarray(values), params, t)


def _edge_coordinates(grid: EnergyGrid, level: float, ids: np.ndarray) -> np.ndarray:
    v = grid.values
    nz, nphi = v.shape
    off = nz * nphi
    out = np.empty((ids.size, 2))

    zed = ids < off
    i = ids[zed] // nphi
    j = ids[zed] % nphi
    w = (level - v[i, j]) / (v[i + 1, j] - v[i, j])
    out[zed, 0] = grid.z[i] + w * (grid.z[i + 1] - grid.z[i])
    out[zed, 1] = grid.phi[j]

    k = ids[~zed] - off
    i = k // (nphi - 1)
    j = k % (nphi - 1)
    w = (level - v[i, j]) / (v[i, j + 1] - v[i, j])
    out[~zed, 0] = grid.z[i]
    out[~zed, 1] = grid.phi[j] + w * (grid.phi[j + 1] - grid.phi[j])
    return out


def _chains(segments: np.ndarray):
    """Split a set of edge-id pairs into maximal paths; yields ``(edge_ids, closed)``."""
    neighbours: Dict[int, List[int]] = {}
    for a, b in segments.tolist():
        neighbours.setdefault(a, []).append(b)
        neighbours.setdefault(b, []).append(a)
    seen = set()

    def walk(start):
        path = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [n for n in neighbours[cur] if n != prev and n not in seen]
            if not nxt:
                closed = len(path) > 2 and start in neighbours[cur] and cur != start
                return path, closed
            prev, cur = cur, nxt[0]
            path.append(cur)
            seen.add(cur)

    # open chains first, starting from their ends
    for node in sorted(neighbours):
        if len(neighbours[node]) == 1 and node not in seen:
            yield walk(node)[0], False
    for node in sorted(neighbours):
        if node not in seen:
            yield walk(node)


def _split_at_seam(points: np.ndarray, closed: bool) -> List[np.ndarray]:
    """Cut a stitched chain into rectangle polylines where it crosses phi = 0 / 2 pi."""
    if closed:
        points = np.vstack([points, points[:1]])
    pieces = []
    current = [points[0]]
    for a, b in zip(points[:-1], points[1:]):
        if abs(b[1] - a[1]) > math.pi:
            if a[1] == 0.0:         # a sits on the seam, b near 2 pi
                pieces.append(np.array(current))
                current = [np.array([a[0], TWO_PI]), b]
            else:                   # b sits on the seam, a near 2 pi
                current.append(np.array([b[0], TWO_PI]))
                pieces.append(np.array(current))
                current = [b]
        else:
            current.append(b)
    pieces.append(np.array(current))
    if closed and len(pieces) > 1:
        # the walk started mid-piece: its tail continues into its head
        pieces[0] = np.vstack([pieces[-1][:-1], pieces[0]])
        pieces.pop()
    return pieces


def extract_contour(grid: EnergyGrid, level: float, centers: Optional[np.ndarray] = None,
                    backend: Optional[str] = None) -> LevelContours:
    """Iso-energy polylines at one level.

    Raises :class:`EmptyLevel` if ``level`` is outside the sampled range.
    """
    lo, hi = float(np.min(grid.values)), float(np.max(grid.values))
    if not lo <= level <= hi:
        raise EmptyLevel(f"level {level} outside data range [{lo}, {hi}]")
    if centers is None:
        centers = grid.cell_centers()
    kern = _backend.get_kernels(backend)
    segments = kern.marching_segments(grid.values, centers, float(level), True)
    out = LevelContours(level=float(level))
    if segments.size == 0:
        return out
    for comp, (ids, closed) in enumerate(_chains(segments)):
        pts = _edge_coordinates(grid, level, np.asarray(ids, dtype=np.int64))
        pieces = _split_at_seam(pts, closed)
        whole = closed and len(pieces) == 1
        for piece in pieces:
            if whole:
                piece = np.vstack([piece, piece[:1]]) if not np.array_equal(piece[0], piece[-1]) else piece
            out.polylines.append(Polyline(piece, whole, comp))
        out.n_components = comp + 1
    return out


def extract_contours(grid: EnergyGrid, levels: Iterable[float],
                     backend: Optional[str] = None) -> ContourSet:
    """Contours for several levels; an empty level is recorded, not raised."""
    centers = grid.cell_centers()
    result = {}
    for level in levels:
        level = float(level)
        try:
            result[level] = extract_contour(grid, level, centers, backend)
        except EmptyLevel as exc:
            result[level] = LevelContours(level=level, error=str(exc))
    return ContourSet(result)


def bilinear(grid: EnergyGrid, z: float, phi: float) -> float:
    """Bilinear interpolant of the grid values at ``(z, phi)``."""
    i = int(np.clip(np.searchsorted(grid.z, z, side="right") - 1, 0, grid.z.size - 2))
    j = int(np.clip(np.searchsorted(grid.phi, phi, side="right") - 1, 0, grid.phi.size - 2))
    u = (z - grid.z[i]) / (grid.z[i + 1] - grid.z[i])
    w = (phi - grid.phi[j]) / (grid.phi[j + 1] - grid.phi[j])
    v = grid.values
    return float((1 - u) * (1 - w) * v[i, j] + u * (1 - w) * v[i + 1, j]
                 + u * w * v[i + 1, j + 1] + (1 - u) * w * v[i, j + 1])


def separatrix_levels(points: Iterable[StationaryPoint], tol: float = 1e-10) -> List[float]:
    """Sorted saddle energies, merged when closer than ``tol``."""
    energies = sorted(p.energy for p in points if p.kind is Kind.SADDLE)
    out: List[float] = []
    for e in energies:
        if not out or e - out[-1] > tol:
            out.append(e)
    return out


def default_levels(grid: EnergyGrid, points: Iterable[StationaryPoint] = (),
                   n_quantiles: int = 16) -> List[float]:
    """Grid quantiles plus every stationary-point energy, sorted and de-duplicated."""
    qs = np.quantile(grid.values, np.linspace(0.0, 1.0, n_quantiles + 2)[1:-1])
    levels = sorted(set(float(q) for q in qs) | {float(p.energy) for p in points})
    lo, hi = float(grid.values.min()), float(grid.values.max())
    return [x for x in levels if lo <= x <= hi]
