"""Trajectories of the canonical equations, periods and mode labels."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _backend
from .errors import (DomainError, InsufficientData, NotPeriodic, PoleApproach,
                     StepLimitExceeded, Unclassified)
from .model import EPS_POLE, PhaseState, ReducedParams, energy, photon_number_reduced

DEFAULT_SAMPLES = 2000
PERIOD_SPREAD_LIMIT = 0.01
SELF_TRAPPING_THRESHOLD = 0.1
SEPARATRIX_TOLERANCE = 1e-9
_MAX_CROSSING_LAG = 4

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "dopri5"      # or "rk4"
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = 0.01
    max_steps: int = 10_000_000
    samples: int = DEFAULT_SAMPLES

    def __post_init__(self):
        if self.method not in ("dopri5", "rk4"):
            raise ValueError(f"unknown integration method {self.method!r}")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be > 0")
        if not self.max_step > 0:
            raise ValueError("max_step must be > 0")
        if self.samples < 1 or self.max_steps < 1:
            raise ValueError("samples and max_steps must be >= 1")


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution; ``phi`` is unwrapped (not reduced mod 2 pi)."""

    times: np.ndarray
    z: np.ndarray
    phi: np.ndarray
    energies: np.ndarray
    photons: np.ndarray
    params: ReducedParams
    status: str = "ok"
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return self.times.shape[0]

    def state(self, k: int) -> PhaseState:
        return PhaseState(self.z[k], self.phi[k])

    @property
    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energies - self.energies[0])))


class ModeLabel(enum.Enum):
    ZERO_PHASE_OSCILLATION = "zero_phase_oscillation"
    PI_PHASE_OSCILLATION = "pi_phase_oscillation"
    RUNNING_PHASE = "running_phase"
    SELF_TRAPPED_ZERO_PHASE = "self_trapped_zero_phase"
    SELF_TRAPPED_PI_PHASE = "self_trapped_pi_phase"


@dataclass(frozen=True)
class PeriodEstimate:
    period: float
    spread: float           # (max - min) / mean over the cycle estimates
    cycles: int             # number of cycle estimates
    crossings_per_period: int


_STATUS = {0: "ok", 1: "pole_approach", 2: "step_limit"}


def _build(times, zs, phis, params, status, stats):
    times = np.asarray(times, dtype=float)
    zs = np.asarray(zs, dtype=float)
    phis = np.asarray(phis, dtype=float)
    energies = energy(zs, phis, params, times)
    photons = photon_number_reduced(zs, params, times)
    return Trajectory(times, zs, phis, np.asarray(energies, dtype=float),
                      np.asarray(photons, dtype=float), params, status, stats)


def integrate(state0, params: ReducedParams, t_end: float,
              config: Optional[IntegratorConfig] = None, *,
              record_steps: bool = False, t0: float = 0.0,
              backend: Optional[str] = None) -> Trajectory:
    """Integrate from ``state0`` over ``[t0, t0 + t_end]`` in reduced time.

    Output is sampled uniformly (``config.samples`` intervals); with
    ``record_steps`` the accepted internal steps are merged in.  ``state0``
    is a :class:`PhaseState` or a ``(z, phi)`` pair, the latter keeping
    ``phi`` unreduced.

    Raises :class:`PoleApproach` or :class:`StepLimitExceeded` carrying the
    partial trajectory.
    """
    config = config or IntegratorConfig()
    if not t_end > 0:
        raise ValueError(f"t_end must be > 0, got {t_end}")
    z0, phi0 = (state0.z, state0.phi) if isinstance(state0, PhaseState) else map(float, state0)
    if abs(z0) > 1.0:
        raise DomainError(f"|z0| = {abs(z0)} > 1")
    if not 1.0 - z0 * z0 >= EPS_POLE:
        raise PoleApproach(f"initial state z0={z0} lies within the pole guard")

    kern = _backend.get_kernels(backend)
    sample_times = t0 + np.linspace(0.0, t_end, config.samples + 1)
    kt, ka = params.pump.knots()
    common = (z0, phi0, params.r, params.tilt_scale, params.B, params.C, kt, ka, sample_times)
    if config.method == "dopri5":
        status, filled, zs, phis, steps, counts = kern.integrate_dopri(
            *common, config.rtol, config.atol, config.max_step, config.max_steps,
            EPS_POLE, record_steps)
    else:
        status, filled, zs, phis, steps, counts = kern.integrate_rk4(
            *common, config.max_step, config.max_steps, EPS_POLE, record_steps)

    times, zs, phis = sample_times[:filled], zs[:filled], phis[:filled]
    if record_steps and steps:
        st = np.array(steps, dtype=float)
        times = np.concatenate([times, st[:, 0]])
        zs = np.concatenate([zs, st[:, 1]])
        phis = np.concatenate([phis, st[:, 2]])
        times, idx = np.unique(times, return_index=True)
        zs, phis = zs[idx], phis[idx]

    stats = {"accepted": int(counts[0]), "rejected": int(counts[1]), "evaluations": int(counts[2]),
             "backend": "python" if kern is _backend.pykernels else "cython"}
    traj = _build(times, zs, phis, params, _STATUS[status], stats)
    if status == 1:
        raise PoleApproach(f"trajectory reached the pole guard near t={times[-1]:.6g}", traj)
    if status == 2:
        raise StepLimitExceeded(f"more than {config.max_steps} steps before t={times[-1]:.6g}", traj)
    return traj


def _crossing_times(times: np.ndarray, z: np.ndarray, level: float) -> np.ndarray:
    """Upward crossings of ``level``, linearly interpolated between samples."""
    below = z[:-1] < level
    k = np.nonzero(below & (z[1:] >= level))[0]
    frac = (level - z[k]) / (z[k + 1] - z[k])
    return times[k] + frac * (times[k + 1] - times[k])


def estimate_period(traj: Trajectory) -> PeriodEstimate:
    """Period from successive upward crossings of the time-averaged ``z``.

    If ``z`` crosses its mean more than once per cycle the crossing sequence
    is periodic with a lag > 1; the smallest lag (up to 4) with a cycle
    spread within 1 % is used.  Raises :class:`InsufficientData` with fewer
    than three crossings and :class:`NotPeriodic` when no lag is consistent.
    """
    t, z = traj.times, traj.z
    if len(t) < 3 or np.ptp(z) <= 1e-10 * max(1.0, float(np.max(np.abs(z)))):
        raise InsufficientData("trajectory too short or stationary")
    mean = float(_trapezoid(z, t) / (t[-1] - t[0]))
    cross = _crossing_times(t, z, mean)
    if cross.size < 3:
        raise InsufficientData(f"only {cross.size} mean-level crossings")

    first = None
    for lag in range(1, _MAX_CROSSING_LAG + 1):
        if cross.size < lag + 2:
            break
        periods = cross[lag:] - cross[:-lag]
        mean_p = float(np.mean(periods))
        spread = float(np.ptp(periods) / mean_p)
        est = PeriodEstimate(mean_p, spread, int(periods.size), lag)
        first = first or est
        if spread <= PERIOD_SPREAD_LIMIT:
            return est
    raise NotPeriodic(f"cycle spread {first.spread:.3%} exceeds 1%", first)


def classify_mode(traj: Trajectory, separatrix_energies: Optional[Sequence[float]] = None,
                  t: float = 0.0) -> ModeLabel:
    """Label the orbit family of a (constant-pump) trajectory.

    Winding of the unwrapped phase by at least 2 pi gives a running-phase
    mode.  Otherwise the centre of the phase excursion, near 0 or near pi,
    picks the zero- or pi-phase family, and the orbit counts as
    self-trapped when ``|<z>| > 0.1`` with ``z`` never crossing 0.

    With ``separatrix_energies`` the energy criterion is applied as well: an
    orbit whose energy lies outside the range of ``H`` on the line ``z = 0``
    cannot cross it and must be self-trapped, and an orbit on a separatrix
    level has no well-defined family.  Disagreement raises
    :class:`Unclassified`.
    """
    z, phi, times = traj.z, traj.phi, traj.times
    if len(times) < 2:
        raise Unclassified("trajectory has fewer than two samples")
    e0 = float(traj.energies[0])
    span = times[-1] - times[0]

    if separatrix_energies is not None:
        if any(abs(e0 - es) < SEPARATRIX_TOLERANCE for es in separatrix_energies):
            raise Unclassified(f"orbit energy {e0} lies on a separatrix level")

    if np.ptp(phi) >= 2.0 * math.pi:
        return ModeLabel.RUNNING_PHASE

    # centre of the phase excursion; a time average of cos(phi) is biased
    # towards pi for orbits lingering near the (0, pi) saddle
    center = 0.5 * (float(np.max(phi)) + float(np.min(phi)))
    if abs(math.cos(center)) < 1e-3:
        raise Unclassified(f"phase excursion centred at {center:.4g}, neither 0 nor pi")
    zero_phase = math.cos(center) > 0.0
    mean_z = float(_trapezoid(z, times) / span)
    crosses_center = bool(np.any(z > 0.0) and np.any(z < 0.0))
    trapped = abs(mean_z) > SELF_TRAPPING_THRESHOLD and not crosses_center

    if separatrix_energies is not None:
        params = traj.params
        offset = params.tilt(t) / params.C * math.atan(-params.B / params.C)
        must_be_trapped = not (-1.0 + offset <= e0 <= 1.0 + offset)
        if must_be_trapped and not trapped:
            raise Unclassified(
                f"energy {e0} cannot reach z=0 but the sampled orbit is not self-trapped "
                f"(<z>={mean_z:.4g})")

    if zero_phase:
        return ModeLabel.SELF_TRAPPED_ZERO_PHASE if trapped else ModeLabel.ZERO_PHASE_OSCILLATION
    return ModeLabel.SELF_TRAPPED_PI_PHASE if trapped else ModeLabel.PI_PHASE_OSCILLATION


def photon_series(traj: Trajectory, params: Optional[ReducedParams] = None) -> np.ndarray:
    """Reduced photon number along the trajectory."""
    params = params or traj.params
    return np.asarray(photon_number_reduced(traj.z, params, traj.times), dtype=float)


def local_maxima(series: np.ndarray) -> np.ndarray:
    """Indices of interior local maxima; a plateau counts once, at its first index."""
    s = np.asarray(series)
    d = np.diff(s)
    nz = np.nonzero(d)[0]
    if nz.size < 2:
        return np.empty(0, dtype=int)
    signs = np.sign(d[nz])
    turn = np.nonzero((signs[:-1] > 0) & (signs[1:] < 0))[0]
    return nz[turn] + 1
