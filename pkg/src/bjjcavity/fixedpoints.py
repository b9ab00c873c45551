"""Stationary points of the effective Hamiltonian.

Stationary points lie on the lines phi = 0 and phi = pi, where dH/dz
reduces to

    f1(z) = r z + z / sqrt(1 - z^2) + A~ / ((z - B)^2 + C^2)   (phi = 0)
    f2(z) = r z - z / sqrt(1 - z^2) + A~ / ((z - B)^2 + C^2)   (phi = pi)

Roots are bracketed on a uniform grid, refined by bisection and classified
by the sign of the derivative of f at the root.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import DegenerateRoot, EulerViolation, PoleSingularity
from .model import EPS_POLE, ReducedParams, energy

EDGE_MARGIN = 1e-6
DEFAULT_GRID_N = 20000
MAX_GRID_N = 320000
DEGENERACY_THRESHOLD = 1e-8
BISECTION_ITERATIONS = 60
_DERIVATIVE_STEP = 1e-6


class Branch(enum.Enum):
    ZERO = "zero"
    PI = "pi"

    @property
    def phi(self) -> float:
        return 0.0 if self is Branch.ZERO else math.pi


class Kind(enum.Enum):
    MINIMUM = "minimum"
    SADDLE = "saddle"
    MAXIMUM = "maximum"


@dataclass(frozen=True)
class StationaryPoint:
    z: float
    branch: Branch
    kind: Kind
    energy: float
    f_derivative: float
    degenerate: bool = False

    @property
    def phi(self) -> float:
        return self.branch.phi


@dataclass(frozen=True)
class MorseCount:
    minima: int
    saddles: int
    maxima: int

    @property
    def euler(self) -> int:
        return self.minima - self.saddles + self.maxima

    @property
    def ok(self) -> bool:
        return self.euler == 2

    def as_tuple(self):
        return (self.minima, self.saddles, self.maxima)


def classify(branch: Branch, derivative: float) -> Kind:
    """Kind from the sign of f' at a root of the branch's gradient function."""
    if branch is Branch.ZERO:
        return Kind.MINIMUM if derivative > 0 else Kind.SADDLE
    return Kind.SADDLE if derivative > 0 else Kind.MAXIMUM


def _gradient(z, params: ReducedParams, sign: float, t: float):
    z = np.asarray(z, dtype=float)
    one_minus = 1.0 - z * z
    if np.any(one_minus < EPS_POLE):
        raise PoleSingularity("gradient function evaluated within the pole guard")
    d = z - params.B
    out = params.r * z + sign * z / np.sqrt(one_minus) + params.tilt(t) / (d * d + params.C ** 2)
    return float(out) if out.ndim == 0 else out


def f1(z, params: ReducedParams, t: float = 0.0):
    """dH/dz along phi = 0."""
    return _gradient(z, params, 1.0, t)


def f2(z, params: ReducedParams, t: float = 0.0):
    """dH/dz along phi = pi."""
    return _gradient(z, params, -1.0, t)


def _branch_function(branch: Branch):
    return f1 if branch is Branch.ZERO else f2


def _bisect(f, a: np.ndarray, b: np.ndarray, fa: np.ndarray) -> np.ndarray:
    """Vectorised bisection on sign-change brackets; returns the best endpoint."""
    a = a.copy()
    b = b.copy()
    fa = fa.copy()
    for _ in range(BISECTION_ITERATIONS):
        m = 0.5 * (a + b)
        if np.all((m == a) | (m == b)):
            break
        fm = f(m)
        left = np.sign(fm) == np.sign(fa)
        a = np.where(left, m, a)
        fa = np.where(left, fm, fa)
        b = np.where(left, b, m)
    fb = f(b)
    return np.where(np.abs(fa) <= np.abs(fb), a, b)


def _scan_branch(params: ReducedParams, branch: Branch, grid_n: int, t: float):
    f = _branch_function(branch)

    def g(z):
        return f(z, params, t)

    zs = np.linspace(-1.0 + EDGE_MARGIN, 1.0 - EDGE_MARGIN, grid_n)
    vals = g(zs)
    signs = np.sign(vals)
    exact = zs[signs == 0]
    idx = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
    roots = _bisect(g, zs[idx], zs[idx + 1], vals[idx]) if idx.size else np.empty(0)
    roots = np.sort(np.concatenate([roots, exact]))

    points = []
    for z in roots:
        h = min(_DERIVATIVE_STEP, 0.5 * (1.0 - abs(z)))
        deriv = (g(z + h) - g(z - h)) / (2.0 * h)
        points.append(StationaryPoint(
            z=float(z),
            branch=branch,
            kind=classify(branch, deriv),
            energy=float(energy(z, branch.phi, params, t)),
            f_derivative=float(deriv),
            degenerate=bool(abs(deriv) < DEGENERACY_THRESHOLD),
        ))
    return points


def scan_stationary_points(params: ReducedParams, grid_n: int = DEFAULT_GRID_N,
                           t: float = 0.0) -> List[StationaryPoint]:
    """Single pass at a fixed grid size: no refinement and no degeneracy error."""
    if grid_n < 1000:
        raise ValueError(f"grid_n must be >= 1000, got {grid_n}")
    return _scan_branch(params, Branch.ZERO, grid_n, t) + _scan_branch(params, Branch.PI, grid_n, t)


def find_stationary_points(params: ReducedParams, grid_n: int = DEFAULT_GRID_N,
                           t: float = 0.0, auto_refine: bool = True) -> List[StationaryPoint]:
    """All stationary points, sorted by ``(branch, z)``.

    When the Morse counts violate the Euler relation the grid is doubled up
    to ``MAX_GRID_N`` (only if ``auto_refine``); whatever is found last is
    returned and :func:`euler_check` reports the violation.

    Raises :class:`DegenerateRoot` (with the points attached) if any root
    has ``|f'| < 1e-8``.
    """
    n = grid_n
    while True:
        points = scan_stationary_points(params, n, t)
        if any(p.degenerate for p in points):
            bad = [p for p in points if p.degenerate]
            raise DegenerateRoot(
                f"degenerate stationary point(s) at z={[p.z for p in bad]} "
                f"(|f'| < {DEGENERACY_THRESHOLD}); counts unreliable",
                points=points,
            )
        if morse_count(points).ok or not auto_refine or 2 * n > MAX_GRID_N:
            return points
        n *= 2


def morse_count(points) -> MorseCount:
    kinds = [p.kind for p in points]
    return MorseCount(kinds.count(Kind.MINIMUM), kinds.count(Kind.SADDLE), kinds.count(Kind.MAXIMUM))


def euler_check(points) -> MorseCount:
    """Morse counts of ``points``; raises :class:`EulerViolation` unless m0 - m1 + m2 = 2."""
    counts = morse_count(points)
    if not counts.ok:
        raise EulerViolation(
            f"m0 - m1 + m2 = {counts.euler} for counts {counts.as_tuple()}",
            points=points, counts=counts,
        )
    return counts


def uncoupled_analytic(r: float) -> List[StationaryPoint]:
    """Closed-form stationary points for zero tilt.

    At ``r == 1`` the ``(0, pi)`` point is returned as a maximum flagged
    ``degenerate``.
    """
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    points = [StationaryPoint(0.0, Branch.ZERO, Kind.MINIMUM, -1.0, r + 1.0)]
    if r <= 1.0:
        points.append(StationaryPoint(0.0, Branch.PI, Kind.MAXIMUM, 1.0, r - 1.0,
                                      degenerate=(r == 1.0)))
        return points
    zmax = math.sqrt(r * r - 1.0) / r
    e_max = 0.5 * r + 0.5 / r
    d_max = r * (1.0 - r * r)
    points += [
        StationaryPoint(-zmax, Branch.PI, Kind.MAXIMUM, e_max, d_max),
        StationaryPoint(0.0, Branch.PI, Kind.SADDLE, 1.0, r - 1.0),
        StationaryPoint(zmax, Branch.PI, Kind.MAXIMUM, e_max, d_max),
    ]
    return points


@dataclass
class SweepRow:
    value: float
    points: List[StationaryPoint] = field(default_factory=list)
    counts: Optional[MorseCount] = None
    flag: str = ""

    @property
    def euler_ok(self) -> bool:
        return self.counts is not None and self.counts.ok and not self.flag


def bifurcation_sweep(params: ReducedParams, vary: str, start: float, stop: float,
                      steps: int, grid_n: int = DEFAULT_GRID_N) -> List[SweepRow]:
    """Stationary-point census along a line in parameter space.

    ``vary`` is one of ``r``, ``A_tilde``, ``B``, ``C``.  Rows hitting a
    degenerate root or an Euler violation are flagged, never dropped.
    """
    if steps < 2:
        raise ValueError("a sweep needs at least 2 steps")
    if vary not in ("r", "A_tilde", "B", "C"):
        raise ValueError(f"cannot vary {vary!r}; expected one of r, A_tilde, B, C")
    rows = []
    for value in np.linspace(start, stop, steps):
        row = SweepRow(value=float(value))
        try:
            p = params.with_value(vary, float(value))
            row.points = find_stationary_points(p, grid_n=grid_n)
            row.counts = morse_count(row.points)
            if not row.counts.ok:
                row.flag = "euler_violation"
        except DegenerateRoot as exc:
            row.points = exc.points
            row.counts = morse_count(exc.points)
            row.flag = "degenerate"
        except ValueError as exc:
            row.flag = f"invalid: {exc}"
        rows.append(row)
    return rows
