"""Mean-field model of a Bose Josephson junction in a driven cavity.

Holds the parameter types, the laboratory-to-dimensionless reduction and
pointwise evaluation of the effective Hamiltonian

    H_c(z, phi, t) = -sqrt(1 - z^2) cos(phi) + r z^2 / 2 + s F(z, t),
    F(z, t)        = A(t)^2 / C * arctan((z - B) / C),

its canonical flow and the reduced intra-cavity photon number.  Time is in
units of ``1 / (2 Omega)`` throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateCoupling, DomainError, PoleSingularity

#: Smallest admissible ``1 - z^2`` for the flow and the integrator.
EPS_POLE = 1e-12

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# parameter types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory-frame parameters, all frequencies in rad/s.

    Either ``U0`` is given directly or it is derived from ``g0`` and
    ``omega_a`` as ``g0**2 / (omega_c - omega_a)``.  If all three are given
    they must agree to a relative 1e-12.
    """

    omega: float          # tunneling Omega
    V: float              # on-site interaction per atom pair
    N: int
    J1: float
    J2: float
    omega_c: float
    omega_p: float
    kappa: float
    eta: float = 0.0
    U0: Optional[float] = None
    g0: Optional[float] = None
    omega_a: Optional[float] = None

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"tunneling omega must be > 0, got {self.omega}")
        if self.V < 0:
            raise ValueError(f"interaction V must be >= 0, got {self.V}")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"atom number N must be an integer >= 2, got {self.N}")
        if not self.kappa > 0:
            raise ValueError(f"loss rate kappa must be > 0, got {self.kappa}")
        if self.eta < 0:
            raise ValueError(f"pump amplitude eta must be >= 0, got {self.eta}")
        for name in ("J1", "J2"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"overlap {name} must lie in [0, 1], got {value}")

        u0 = self.U0
        if self.g0 is not None or self.omega_a is not None:
            if self.g0 is None or self.omega_a is None:
                raise ValueError("g0 and omega_a must be given together")
            atom_detuning = self.omega_c - self.omega_a
            if atom_detuning == 0:
                raise ValueError("omega_c == omega_a: light shift undefined")
            derived = self.g0 ** 2 / atom_detuning
            if u0 is not None and not math.isclose(u0, derived, rel_tol=1e-12, abs_tol=0.0):
                raise ValueError(
                    f"U0={u0} inconsistent with g0^2/(omega_c-omega_a)={derived}"
                )
            u0 = derived
        if u0 is None:
            raise ValueError("either U0 or (g0, omega_a) is required")
        object.__setattr__(self, "U0", float(u0))

    @property
    def delta(self) -> float:
        """Coupling difference J1 - J2 (either sign)."""
        return self.J1 - self.J2

    @property
    def detuning(self) -> float:
        """Pump-cavity detuning shifted by the mean light shift."""
        return self.omega_p - self.omega_c - (self.J1 + self.J2) * self.N * self.U0 / 2.0

    @property
    def reduction_unit(self) -> float:
        """Signed frequency unit ``delta U0 N / 2`` of the reduced pump, detuning and loss."""
        return self.delta * self.U0 * self.N / 2.0


@dataclass(frozen=True)
class PumpSchedule:
    """Reduced pump amplitude A(t) >= 0 versus reduced time.

    Piecewise linear between knots and held constant outside them.  A single
    knot is the constant variant.
    """

    kind: str
    times: Tuple[float, ...]
    values: Tuple[float, ...]

    def __post_init__(self):
        if self.kind not in ("constant", "linear", "table"):
            raise ValueError(f"unknown pump kind {self.kind!r}")
        times = tuple(float(t) for t in self.times)
        values = tuple(float(v) for v in self.values)
        if not times or len(times) != len(values):
            raise ValueError("pump knots and values must be non-empty and equally long")
        if any(v < 0 or not math.isfinite(v) for v in values):
            raise ValueError("pump amplitude must be finite and >= 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("pump time knots must be strictly increasing")
        if self.kind == "constant" and len(values) != 1:
            raise ValueError("constant pump takes exactly one value")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, amplitude: float) -> "PumpSchedule":
        return cls("constant", (0.0,), (amplitude,))

    @classmethod
    def linear_ramp(cls, start: float, stop: float, duration: float,
                    t0: float = 0.0) -> "PumpSchedule":
        if not duration > 0:
            raise ValueError("ramp duration must be > 0")
        return cls("linear", (t0, t0 + duration), (start, stop))

    @classmethod
    def table(cls, times: Sequence[float], values: Sequence[float]) -> "PumpSchedule":
        return cls("table", tuple(times), tuple(values))

    @property
    def is_constant(self) -> bool:
        return len(self.values) == 1

    def amplitude(self, t=0.0):
        if self.is_constant:
            if np.ndim(t) == 0:
                return self.values[0]
            return np.full(np.shape(t), self.values[0])
        out = np.interp(t, self.times, self.values)
        return float(out) if np.ndim(t) == 0 else out

    def knots(self) -> Tuple[np.ndarray, np.ndarray]:
        """Knot arrays in the layout expected by the integration kernels."""
        return (np.array(self.times, dtype=np.float64),
                np.array(self.values, dtype=np.float64))

    def to_dict(self) -> dict:
        if self.is_constant:
            return {"kind": "constant", "amplitude": self.values[0]}
        return {"kind": self.kind, "times": list(self.times), "values": list(self.values)}


@dataclass(frozen=True)
class ReducedParams:
    """Dimensionless model ``(r, A~, B, C)`` plus the pump schedule.

    ``tilt_scale`` is ``s = delta U0 / (2 Omega)`` so that the tilt strength
    is ``A~(t) = s A(t)^2``.  For non-constant pumps :attr:`a_tilde` refers to
    ``A(0)``.
    """

    r: float
    B: float
    C: float
    tilt_scale: float = 1.0
    pump: PumpSchedule = field(default_factory=lambda: PumpSchedule.constant(0.0))

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError(f"reduced loss rate C must be > 0, got {self.C}")
        if self.r < 0:
            raise ValueError(f"interaction r must be >= 0, got {self.r}")

    @classmethod
    def from_tilt(cls, r: float, a_tilde: float, B: float, C: float) -> "ReducedParams":
        """Constant-pump parameters from the tilt strength directly.

        The split of ``A~`` into ``s`` and ``A`` is not unique; this uses
        ``A = 1`` and ``s = A~`` so that ``A~`` is reproduced exactly.
        """
        return cls(r=r, B=B, C=C, tilt_scale=float(a_tilde), pump=PumpSchedule.constant(1.0))

    @property
    def a_tilde(self) -> float:
        return self.tilt_scale * self.pump.amplitude(0.0) ** 2

    def tilt(self, t=0.0):
        """``A~(t) = s A(t)^2``."""
        return self.tilt_scale * self.pump.amplitude(t) ** 2

    def with_value(self, name: str, value: float) -> "ReducedParams":
        """Copy with one of ``r``, ``A_tilde``, ``B``, ``C`` replaced."""
        if name in ("r", "B", "C"):
            return replace(self, **{name: float(value)})
        if name in ("A_tilde", "a_tilde"):
            if not self.pump.is_constant:
                raise ValueError("A_tilde can only be set for a constant pump")
            amp = self.pump.values[0]
            if amp == 0.0 or amp == 1.0:
                return ReducedParams.from_tilt(self.r, value, self.B, self.C)
            return replace(self, tilt_scale=float(value) / amp ** 2)
        raise ValueError(f"cannot vary {name!r}; expected one of r, A_tilde, B, C")

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "A_tilde": self.a_tilde,
            "B": self.B,
            "C": self.C,
            "s": self.tilt_scale,
            "pump": self.pump.to_dict(),
        }


@dataclass(frozen=True)
class PhaseState:
    """Canonical pair ``(z, phi)``; ``phi`` is stored reduced to [0, 2 pi)."""

    z: float
    phi: float

    def __post_init__(self):
        z = float(self.z)
        if not abs(z) <= 1.0:
            raise DomainError(f"population imbalance must satisfy |z| <= 1, got {z}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "phi", canonical_phase(self.phi))


def canonical_phase(phi: float) -> float:
    phi = math.fmod(float(phi), TWO_PI)
    if phi < 0.0:
        phi += TWO_PI
    # fmod of a tiny negative number can round up to exactly 2 pi
    if phi >= TWO_PI:
        phi = 0.0
    return phi


# ---------------------------------------------------------------------------
# reduction
# ---------------------------------------------------------------------------

def reduce_params(p: PhysicalParams) -> ReducedParams:
    """Dimensionless parameters of a laboratory configuration.

    The loss rate is stored as a magnitude; the overall sign of the coupling
    is carried by the tilt scale ``s``.
    """
    unit = p.reduction_unit
    if unit == 0.0:
        raise DegenerateCoupling(
            "delta*U0 == 0: the condensates decouple from the cavity "
            f"(J1={p.J1}, J2={p.J2}, U0={p.U0}); construct ReducedParams with A_tilde=0"
        )
    amplitude = abs(p.eta / unit)
    return ReducedParams(
        r=p.N * p.V / (2.0 * p.omega),
        B=p.detuning / unit,
        C=abs(p.kappa / unit),
        tilt_scale=p.delta * p.U0 / (2.0 * p.omega),
        pump=PumpSchedule.constant(amplitude),
    )


def coupling_from_transverse_offset(waist: float, x1: float, x2: float):
    """Overlaps of two condensates displaced transversely in a Gaussian mode.

    ``J_i = exp(-2 x_i^2 / w^2)``, the intensity profile normalised to its
    on-axis value.  Returns ``(J1, J2, J1 - J2)``.
    """
    if not waist > 0:
        raise ValueError(f"mode waist must be > 0, got {waist}")
    j1 = math.exp(-2.0 * x1 ** 2 / waist ** 2)
    j2 = math.exp(-2.0 * x2 ** 2 / waist ** 2)
    return j1, j2, j1 - j2


def steady_state_field(p: PhysicalParams, N1: float, N2: float, t: float = 0.0) -> complex:
    """Adiabatic intra-cavity amplitude for atom numbers ``N1``, ``N2`` at lab time ``t``."""
    if not math.isclose(N1 + N2, p.N, rel_tol=1e-12, abs_tol=1e-9):
        raise ValueError(f"N1 + N2 = {N1 + N2} differs from N = {p.N}")
    detuning = p.omega_p - p.omega_c - p.U0 * (p.J1 * N1 + p.J2 * N2)
    return p.eta * complex(math.cos(p.omega_p * t), -math.sin(p.omega_p * t)) / complex(detuning, p.kappa)


# ---------------------------------------------------------------------------
# pointwise evaluation
# ---------------------------------------------------------------------------

def _check_domain(z):
    if np.any(np.abs(z) > 1.0):
        raise DomainError("population imbalance must satisfy |z| <= 1")


def tilt_potential(z, params: ReducedParams, t=0.0):
    """``F(z, t)``, the arctangent tilt before scaling by ``s``."""
    C = params.C
    return params.pump.amplitude(t) ** 2 / C * np.arctan((z - params.B) / C)


def energy(z, phi, params: ReducedParams, t=0.0):
    """Vectorised ``H_c``; accepts scalars or broadcastable arrays."""
    _check_domain(z)
    if np.ndim(z) == 0 and np.ndim(phi) == 0 and np.ndim(t) == 0:
        z = float(z)
        C = params.C
        return (-math.sqrt(1.0 - z * z) * math.cos(phi) + 0.5 * params.r * z * z
                + params.tilt(t) / C * math.atan((z - params.B) / C))
    z = np.asarray(z, dtype=float)
    return (-np.sqrt(1.0 - z * z) * np.cos(phi) + 0.5 * params.r * z * z
            + params.tilt(t) / params.C * np.arctan((z - params.B) / params.C))


def hamiltonian(state: PhaseState, params: ReducedParams, t: float = 0.0) -> float:
    """Energy ``H_c`` of a phase-space point."""
    return energy(state.z, state.phi, params, t)


def flow_zphi(z: float, phi: float, params: ReducedParams, t: float = 0.0):
    """``(dz/dt, dphi/dt)`` at raw coordinates; ``phi`` need not be reduced."""
    one_minus = 1.0 - z * z
    if not one_minus >= EPS_POLE:
        raise PoleSingularity(f"1 - z^2 = {one_minus:.3e} below pole guard {EPS_POLE}")
    root = math.sqrt(one_minus)
    d = z - params.B
    dz = -root * math.sin(phi)
    dphi = (z * math.cos(phi) / root + params.r * z
            + params.tilt(t) / (d * d + params.C * params.C))
    return dz, dphi


def flow(state: PhaseState, params: ReducedParams, t: float = 0.0):
    """Canonical equations ``dz/dt = -dH/dphi``, ``dphi/dt = dH/dz``."""
    return flow_zphi(state.z, state.phi, params, t)


def photon_number_reduced(z, params: ReducedParams, t=0.0):
    """Photon number in units of ``2 Omega / (delta U0)``: ``A~(t) / ((z-B)^2 + C^2)``."""
    _check_domain(z)
    d = np.asarray(z, dtype=float) - params.B if np.ndim(z) else float(z) - params.B
    return params.tilt(t) / (d * d + params.C * params.C)
