import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from bjjcavity import _backend
from bjjcavity.dynamics import (IntegratorConfig, ModeLabel, Trajectory, classify_mode,
                                estimate_period, integrate, local_maxima, photon_series)
from bjjcavity.errors import (DomainError, InsufficientData, NotPeriodic, PoleApproach,
                              StepLimitExceeded, Unclassified)
from bjjcavity.fixedpoints import Kind, find_stationary_points
from bjjcavity.model import PhaseState, PumpSchedule, ReducedParams, energy, flow_zphi
from bjjcavity.portrait import separatrix_levels

from conftest import uncoupled

backends = ["python"] + (["cython"] if _backend.ckernels is not None else [])


def scipy_reference(p, z0, phi0, t_end, n):
    def rhs(t, y):
        return flow_zphi(y[0], y[1], p, t)
    t = np.linspace(0, t_end, n + 1)
    sol = solve_ivp(rhs, (0, t_end), [z0, phi0], method="DOP853", t_eval=t, rtol=1e-12, atol=1e-13)
    return sol.y


class TestIntegrate:
    @pytest.mark.parametrize("backend", backends)
    def test_matches_scipy(self, fig1, backend):
        tr = integrate(PhaseState(-0.75, 0.0), fig1, 10.0, IntegratorConfig(samples=200), backend=backend)
        ref = scipy_reference(fig1, -0.75, 0.0, 10.0, 200)
        assert np.max(np.abs(tr.z - ref[0])) < 1e-8
        assert np.max(np.abs(tr.phi - ref[1])) < 1e-7

    def test_backends_agree(self, fig1):
        if _backend.ckernels is None:
            pytest.skip("compiled kernels unavailable")
        a = integrate(PhaseState(-0.8, 0.0), fig1, 20.0, backend="python")
        b = integrate(PhaseState(-0.8, 0.0), fig1, 20.0, backend="cython")
        assert np.max(np.abs(a.z - b.z)) < 1e-12
        assert a.stats["accepted"] == b.stats["accepted"]

    @pytest.mark.parametrize("backend", backends)
    def test_rk4_agrees(self, fig1, backend):
        a = integrate(PhaseState(-0.75, 0.0), fig1, 5.0, backend=backend)
        b = integrate(PhaseState(-0.75, 0.0), fig1, 5.0,
                      IntegratorConfig(method="rk4", max_step=1e-3), backend=backend)
        assert np.max(np.abs(a.z - b.z)) < 1e-9

    def test_stationary_point_is_fixed(self, fig1):
        for p in find_stationary_points(fig1):
            # saddles are hyperbolic: rounding-level offsets grow, so hold them briefly
            t_end = 1.0 if p.kind is Kind.SADDLE else 20.0
            tr = integrate((p.z, p.phi), fig1, t_end)
            assert np.ptp(tr.z) < 1e-8
            assert np.ptp(tr.phi) < 1e-6

    def test_tolerance_convergence(self, fig1):
        ref = integrate(PhaseState(-0.75, 0.0), fig1, 20.0, IntegratorConfig(rtol=1e-12, atol=1e-14))
        errs = []
        for rtol in (1e-6, 1e-8, 1e-10):
            tr = integrate(PhaseState(-0.75, 0.0), fig1, 20.0, IntegratorConfig(rtol=rtol, atol=rtol * 1e-2))
            errs.append(np.max(np.abs(tr.z - ref.z)))
        assert errs[0] > errs[1] > errs[2]

    def test_stationary_hold_t10(self, fig1):
        for p in find_stationary_points(fig1):
            tr = integrate((p.z, p.phi), fig1, 10.0)
            assert np.max(np.abs(tr.z - p.z)) < 1e-8
            assert np.max(np.abs(tr.phi - p.phi)) < 1e-8

    def test_random_ic_drift(self, fig1):
        rng = np.random.default_rng(3)
        done = 0
        while done < 20:
            z0, phi0 = rng.uniform(-0.95, 0.95), rng.uniform(0, 2 * math.pi)
            try:
                tr = integrate(PhaseState(z0, phi0), fig1, 100.0)
            except PoleApproach:
                continue
            assert tr.energy_drift < 1e-8, (z0, phi0)
            done += 1

    def test_drift_follows_tolerance(self, fig1):
        # with the step cap lifted the controller sets the error; halving rtol
        # must not raise the drift by more than a factor 2
        drifts = [integrate(PhaseState(-0.8, 0.0), fig1, 100.0,
                            IntegratorConfig(rtol=1e-6 / 2 ** k, atol=1e-8 / 2 ** k, max_step=1.0)).energy_drift
                  for k in range(6)]
        assert all(b <= 2 * a for a, b in zip(drifts, drifts[1:]))
        assert drifts[-1] < drifts[0] / 10

    def test_energy_conserved(self, fig1):
        tr = integrate(PhaseState(-0.8, 0.0), fig1, 50.0)
        assert tr.energy_drift < 1e-8
        assert np.allclose(tr.energies, energy(tr.z, tr.phi, fig1))

    def test_phi_unwrapped(self):
        p = uncoupled(3.0)
        tr = integrate(PhaseState(0.96, 0.0), p, 20.0)
        assert np.ptp(tr.phi) > 2 * math.pi
        assert np.all(np.abs(np.diff(tr.phi)) < 1.0)

    def test_time_dependent_pump(self):
        ramp = ReducedParams(3.0, -0.65, 0.07, 0.02, PumpSchedule.linear_ramp(0.0, 1.0, 10.0))
        tr = integrate(PhaseState(-0.75, 0.0), ramp, 20.0)
        # energy is not conserved under a ramp but the evolution stays on the sphere
        assert np.all(np.abs(tr.z) < 1)
        assert tr.energy_drift > 1e-4
        held = integrate(PhaseState(tr.z[-1], tr.phi[-1]), ReducedParams.from_tilt(3.0, 0.02, -0.65, 0.07), 5.0)
        assert held.energy_drift < 1e-8

    def test_record_steps(self, fig1):
        tr = integrate(PhaseState(-0.75, 0.0), fig1, 2.0, IntegratorConfig(samples=4), record_steps=True)
        assert len(tr) > 5
        assert np.all(np.diff(tr.times) > 0)

    def test_errors(self, fig1):
        with pytest.raises(DomainError):
            integrate((1.2, 0.0), fig1, 1.0)
        with pytest.raises(PoleApproach):
            integrate((1.0, 0.0), fig1, 1.0)
        with pytest.raises(ValueError):
            integrate((0.0, 0.0), fig1, -1.0)
        with pytest.raises(ValueError):
            IntegratorConfig(method="euler")
        with pytest.raises(StepLimitExceeded) as info:
            integrate((-0.75, 0.0), fig1, 10.0, IntegratorConfig(max_steps=50))
        partial = info.value.trajectory
        assert partial.status == "step_limit" and 0 < len(partial) < 2001

    def test_pole_approach_partial(self):
        # uncoupled orbit through z=1 at phi=pi/2: the phase speed diverges there
        p = uncoupled(0.0)
        with pytest.raises(PoleApproach) as info:
            integrate((0.0, math.pi / 2), p, 10.0)
        tr = info.value.trajectory
        assert tr is not None and tr.status == "pole_approach"
        assert abs(tr.z[-1]) > 0.99


class TestPeriod:
    @pytest.mark.parametrize("r", [0.0, 1.0, 3.0, 8.0])
    def test_linearized(self, r):
        tr = integrate(PhaseState(1e-3, 0.0), uncoupled(r), 60.0, IntegratorConfig(samples=6000))
        assert estimate_period(tr).period == pytest.approx(2 * math.pi / math.sqrt(1 + r), rel=1e-4)

    @pytest.mark.parametrize("z0", [0.2, 0.6, 0.95])
    def test_rigid_rotation(self, z0):
        # r = 0: H is minus the x component on the Bloch sphere, so every orbit
        # is a rotation about x with period 2 pi whatever the amplitude
        tr = integrate(PhaseState(z0, 0.0), uncoupled(0.0), 40.0, IntegratorConfig(samples=8000))
        assert estimate_period(tr).period == pytest.approx(2 * math.pi, rel=1e-6)

    def test_fig2_periods(self, fig1):
        a = estimate_period(integrate(PhaseState(-0.75, 0.0), fig1, 100.0)).period
        b = estimate_period(integrate(PhaseState(-0.8, 0.0), fig1, 100.0)).period
        assert a == pytest.approx(1.5251, abs=1e-3)
        assert b == pytest.approx(4.5719, abs=1e-3)

    def test_insufficient(self, fig1):
        tr = integrate(PhaseState(-0.75, 0.0), fig1, 1.0)
        with pytest.raises(InsufficientData):
            estimate_period(tr)

    def test_aperiodic(self):
        t = np.linspace(0, 100, 5001)
        z = 0.3 * np.sin(t) + 0.3 * np.sin(math.sqrt(2) * 3.3 * t)
        p = uncoupled(1.0)
        tr = Trajectory(t, z, np.zeros_like(t), np.zeros_like(t), np.zeros_like(t), p)
        with pytest.raises(NotPeriodic) as info:
            estimate_period(tr)
        assert info.value.estimate is not None


class TestMode:
    def _classify(self, p, z0, phi0=0.0, t_end=40.0):
        tr = integrate(PhaseState(z0, phi0), p, t_end)
        return classify_mode(tr, separatrix_levels(find_stationary_points(p)))

    def test_threshold_uncoupled(self):
        p = uncoupled(3.0)
        zc = 2 * math.sqrt(2) / 3
        assert self._classify(p, zc - 0.01) is ModeLabel.ZERO_PHASE_OSCILLATION
        assert self._classify(p, zc + 0.01) is ModeLabel.RUNNING_PHASE

    def test_threshold_relative(self):
        p = uncoupled(3.0)
        zc = 2 * math.sqrt(2) / 3
        assert self._classify(p, 0.99 * zc) is ModeLabel.ZERO_PHASE_OSCILLATION
        assert self._classify(p, 1.01 * zc) is ModeLabel.RUNNING_PHASE

    def test_pi_families(self):
        assert self._classify(uncoupled(0.5), 0.1, math.pi) is ModeLabel.PI_PHASE_OSCILLATION
        zmax = math.sqrt(8) / 3
        assert self._classify(uncoupled(3.0), zmax - 0.05, math.pi) is ModeLabel.SELF_TRAPPED_PI_PHASE

    def test_fig2_modes(self, fig1):
        assert self._classify(fig1, -0.75, t_end=100) is ModeLabel.SELF_TRAPPED_ZERO_PHASE
        assert self._classify(fig1, -0.8, t_end=100) is ModeLabel.ZERO_PHASE_OSCILLATION

    def test_on_separatrix(self):
        p = uncoupled(3.0)
        tr = integrate(PhaseState(0.0, math.pi), p, 5.0)
        with pytest.raises(Unclassified):
            classify_mode(tr, [1.0])

    def test_short(self, fig1):
        tr = integrate(PhaseState(-0.75, 0.0), fig1, 1.0, IntegratorConfig(samples=1))
        tr = Trajectory(tr.times[:1], tr.z[:1], tr.phi[:1], tr.energies[:1], tr.photons[:1], fig1)
        with pytest.raises(Unclassified):
            classify_mode(tr)


class TestPhotons:
    def test_series(self, fig1):
        tr = integrate(PhaseState(-0.75, 0.0), fig1, 5.0)
        assert np.allclose(photon_series(tr), tr.photons)
        assert np.all(tr.photons <= 0.02 / 0.07 ** 2 + 1e-12)

    def test_peak_only_when_crossing_b(self, fig1):
        peak = fig1.a_tilde / fig1.C ** 2
        away = integrate(PhaseState(0.3, 0.0), fig1, 20.0)
        assert away.z.min() > fig1.B and away.photons.max() < peak
        through = integrate(PhaseState(-0.8, 0.0), fig1, 20.0)
        assert through.photons.max() == pytest.approx(peak, rel=1e-3)

    def test_local_maxima(self):
        s = np.array([0, 1, 0, 2, 2, 0, 3])
        assert list(local_maxima(s)) == [1, 3]
        assert local_maxima(np.ones(5)).size == 0


class TestFig2Structure:
    """Diagnostics behind the Fig. 2 comparison; they supplement the acceptance checks."""

    def test_reversal_closes_at_tighter_tolerance(self, fig1):
        # phase error accumulates along the orbit near the lower saddle; one more
        # decade of rtol brings the round trip below 1e-6
        cfg = IntegratorConfig(rtol=1e-12, atol=1e-14)
        fwd = integrate(PhaseState(-0.75, 0.0), fig1, 100.0, cfg)
        back = integrate((fwd.z[-1], -fwd.phi[-1]), fig1, 100.0, cfg)
        assert abs(back.z[-1] + 0.75) < 1e-8
        assert abs(back.phi[-1]) < 1e-6

    def test_photon_minima_differ(self, fig1):
        # both orbits sweep through z = B, so the maxima coincide at A~/C^2;
        # the orbits differ in how far from resonance they swing
        lows = []
        for z0 in (-0.75, -0.8):
            tr = integrate(PhaseState(z0, 0.0), fig1, 100.0)
            lows.append(float(np.min(tr.photons)))
        assert lows[0] > 10 * lows[1]
