"""Mean-field analysis of a Bose Josephson junction coupled to a driven cavity."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .dynamics import (IntegratorConfig, ModeLabel, PeriodEstimate, Trajectory, classify_mode,
                       estimate_period, integrate, local_maxima, photon_series)
from .errors import (BJJError, ConfigError, DegenerateCoupling, DegenerateRoot, DomainError,
                     EmptyLevel, EulerViolation, InsufficientData, NotPeriodic, PoleApproach,
                     PoleSingularity, StepLimitExceeded, Unclassified)
from .fixedpoints import (Branch, Kind, MorseCount, StationaryPoint, bifurcation_sweep,
                          euler_check, find_stationary_points, morse_count, uncoupled_analytic)
from .model import (PhaseState, PhysicalParams, PumpSchedule, ReducedParams,
                    coupling_from_transverse_offset, energy, flow, hamiltonian,
                    photon_number_reduced, reduce_params, steady_state_field)
from .portrait import (extract_contour, extract_contours, sample_grid, separatrix_levels)

__all__ = [name for name in dir() if not name.startswith("_")]
