import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from collapse_lab.dynamics import (
    IntegrationFailureError,
    InvalidStateError,
    ModelParams,
    Outcome,
    PairState,
    sigma_expect,
    simulate_trajectory,
    step_deterministic,
    step_white,
)

SQ34 = math.sqrt(0.75)
SQ12 = math.sqrt(0.5)

# Independent high-resolution reference values (DOP853, rtol 1e-13) for
# the closed amplitude ODEs; regenerate with `reference_alpha2` below.
ORACLE_ONE_STEP = 0.5005005001662491       # a0^2 = 1/2, xi = 0.5, t = 1e-3
ORACLE_XI03_T1 = 0.9967902717847246        # a0^2 = 3/4, xi = 0.3, t = 1
ORACLE_XI1 = {0.5: 0.9916219586069553,     # a0^2 = 3/4, xi = 1
              1.0: 0.9998439900875946,
              2.0: 0.999999947648176}


def _rhs(t, y, J, G, xi):
    a, b = y
    a2, b2 = a * a, b * b
    s = (a2 - b2) / (a2 + b2)
    f = J * s + G * xi
    return [f * (1 - s) * a, -f * (1 + s) * b]


def reference_alpha2(alpha0_sq, xi, t_eval, J=1.0, G=1.0):
    sol = solve_ivp(_rhs, (0.0, max(t_eval)),
                    [math.sqrt(alpha0_sq), math.sqrt(1 - alpha0_sq)],
                    args=(J, G, xi), method="DOP853", rtol=1e-13, atol=1e-16,
                    t_eval=t_eval)
    a, b = sol.y
    return a * a / (a * a + b * b)


class TestSigmaExpect:
    def test_basis_state(self):
        assert sigma_expect(PairState(1.0, 0.0)) == 1.0

    def test_equal_superposition(self):
        assert sigma_expect(PairState(SQ12, SQ12)) == 0.0

    def test_direct_arithmetic(self):
        assert sigma_expect(PairState(SQ34, 0.5)) == pytest.approx(0.5, abs=1e-14)

    def test_bounds(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            a2 = rng.uniform(0, 1)
            phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
            s = PairState(math.sqrt(a2) * phase, math.sqrt(1 - a2))
            assert -1.0 <= sigma_expect(s) <= 1.0

    def test_rejects_unnormalized(self):
        with pytest.raises(InvalidStateError):
            sigma_expect(PairState(1.0, 1e-2))


class TestFixedPoints:
    @pytest.mark.parametrize("state", [PairState(1.0, 0.0), PairState(0.0, 1.0)])
    @pytest.mark.parametrize("xi", [-1.0, -0.3, 0.0, 0.7, 1.0])
    def test_deterministic_exact(self, state, xi):
        out = step_deterministic(state, xi, ModelParams())
        assert out.alpha == state.alpha and out.beta == state.beta

    @pytest.mark.parametrize("state", [PairState(1.0, 0.0), PairState(0.0, 1.0)])
    @pytest.mark.parametrize("dw", [-0.1, 0.0, 0.02])
    def test_white_exact(self, state, dw):
        out = step_white(state, dw, ModelParams())
        assert out.alpha == state.alpha and out.beta == state.beta

    def test_equal_superposition_zero_noise_is_stationary(self):
        # J<s> + G xi = 0 there, an (unstable) equilibrium
        state = PairState(SQ12, SQ12)
        out = step_deterministic(state, 0.0, ModelParams())
        assert out.alpha == state.alpha and out.beta == state.beta


class TestStepDeterministic:
    def test_one_step_matches_reference(self):
        assert reference_alpha2(0.5, 0.5, [1e-3])[0] == pytest.approx(
            ORACLE_ONE_STEP, abs=1e-12)
        out = step_deterministic(PairState(SQ12, SQ12), 0.5, ModelParams(dt=1e-3))
        assert out.alpha2 == pytest.approx(ORACLE_ONE_STEP, abs=1e-12)
        assert out.alpha2 == pytest.approx(0.5005, abs=1e-6)

    def test_norm_invariant_after_step(self):
        rng = np.random.default_rng(11)
        params = ModelParams(dt=1e-3)
        for _ in range(100):
            a2 = rng.uniform(0.01, 0.99)
            state = PairState.from_alpha2(a2)
            out = step_deterministic(state, rng.uniform(-1, 1), params)
            assert abs(out.norm2 - 1.0) <= 1e-12

    @pytest.mark.parametrize("dt", [1e-2, 1e-3])
    def test_renormalization_correction_within_dt2(self, dt):
        from collapse_lab.dynamics import _rk4_amplitudes

        _, _, dev = _rk4_amplitudes(complex(SQ34), complex(0.5), 0.8, dt, 1.0, 1.0)
        assert dev <= dt * dt

    def test_phase_is_preserved(self):
        # dynamics multiplies each amplitude by real factors only
        phi_a, phi_b = 0.9, -1.7
        state = PairState(SQ34 * np.exp(1j * phi_a), 0.5 * np.exp(1j * phi_b))
        out = step_deterministic(state, 0.4, ModelParams(dt=1e-3))
        assert np.angle(out.alpha) == pytest.approx(phi_a, abs=1e-12)
        assert np.angle(out.beta) == pytest.approx(phi_b, abs=1e-12)
        assert abs(out.norm2 - 1.0) <= 1e-12

    def test_real_input_stays_real(self):
        out = step_deterministic(PairState(SQ34, 0.5), 0.3, ModelParams(dt=1e-3))
        assert complex(out.alpha).imag == 0.0
        assert complex(out.beta).imag == 0.0


class TestStepWhite:
    def test_norm_invariant_after_step(self):
        rng = np.random.default_rng(12)
        params = ModelParams(dt=1e-3)
        for _ in range(200):
            state = PairState.from_alpha2(rng.uniform(0.01, 0.99))
            out = step_white(state, rng.normal(0, math.sqrt(params.dt)), params)
            assert abs(out.norm2 - 1.0) <= 1e-12

    def test_moves_toward_pointer_states(self):
        # positive increment amplifies the |00> weight, negative the |11> weight
        state = PairState(SQ12, SQ12)
        up = step_white(state, +0.05, ModelParams(dt=1e-3))
        down = step_white(state, -0.05, ModelParams(dt=1e-3))
        assert up.alpha2 > 0.5 > down.alpha2

    def test_collapse_rate_scales_drift(self):
        state = PairState(SQ34, 0.5)
        slow = step_white(state, 0.01, ModelParams(dt=1e-3, collapse_rate=0.25))
        fast = step_white(state, 0.01, ModelParams(dt=1e-3, collapse_rate=4.0))
        assert abs(fast.alpha2 - state.alpha2) > abs(slow.alpha2 - state.alpha2)


class TestModelParams:
    def test_g_defaults_to_j(self):
        p = ModelParams(J=2.5)
        assert p.G == 2.5 and p.collapse_rate == 2.5

    @pytest.mark.parametrize("kw", [
        {"J": 0.0}, {"J": -1.0}, {"G": -0.1}, {"dt": 0.0},
        {"collapse_rate": -1.0}, {"hamiltonian_off": False},
    ])
    def test_rejects_invalid(self, kw):
        with pytest.raises(ValueError):
            ModelParams(**kw)


class TestSimulateTrajectory:
    def test_basis_state_stays_put(self):
        traj = simulate_trajectory(PairState(1.0, 0.0), lambda t: 0.3,
                                   ModelParams(), 1.0)
        assert np.all(traj.alphas == 1.0) and np.all(traj.betas == 0.0)
        assert traj.outcome == Outcome.STATE_00
        assert traj.t_resolved == 0.0

    def test_frozen_xi1_monotone_collapse(self):
        traj = simulate_trajectory(PairState.from_alpha2(0.75), lambda t: 1.0,
                                   ModelParams(), 2.0)
        a2 = traj.alpha2
        assert np.all(np.diff(a2) >= -1e-15)
        for t, expect in ORACLE_XI1.items():
            i = int(round(t / 0.01))
            assert a2[i] == pytest.approx(expect, abs=1e-9)

    def test_records_on_grid(self):
        traj = simulate_trajectory(PairState.from_alpha2(0.75), lambda t: 0.2,
                                   ModelParams(), 0.5, record_every=0.05)
        assert len(traj.times) == 11
        assert traj.times[0] == 0.0 and traj.times[-1] == pytest.approx(0.5)
        assert np.all(np.abs(np.diff(traj.times) - 0.05) < 1e-12)

    def test_white_fixed_point_trajectory(self):
        rng = np.random.default_rng(3)
        incr = rng.normal(0, math.sqrt(1e-3), 1000)
        traj = simulate_trajectory(PairState(0.0, 1.0), lambda t: incr[int(round(t / 1e-3))],
                                   ModelParams(), 1.0, white_noise=True)
        assert np.all(traj.betas == 1.0)
        assert traj.outcome == Outcome.STATE_11

    def test_unresolved_at_unstable_equilibrium(self):
        # xi = -<s>(0) never moves, so the run ends unclassified
        traj = simulate_trajectory(PairState.from_alpha2(0.75), lambda t: -0.5,
                                   ModelParams(), 1.0)
        assert traj.outcome == Outcome.UNRESOLVED
        assert traj.t_resolved is None

    def test_max_norm_correction_small(self):
        traj = simulate_trajectory(PairState.from_alpha2(0.75), lambda t: 0.9,
                                   ModelParams(), 1.0)
        assert traj.max_norm_correction <= 1e-6

    def test_instability_error_names_step(self):
        with pytest.raises(IntegrationFailureError) as err:
            simulate_trajectory(PairState.from_alpha2(0.75), lambda t: 1.0,
                                ModelParams(dt=5.0), 50.0, record_every=5.0)
        assert err.value.step_index >= 0
        assert "step" in str(err.value)

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            simulate_trajectory(PairState(1.0, 0.0), lambda t: 0.0,
                                ModelParams(dt=1e-3), 1.0, record_every=0.0015)
        with pytest.raises(ValueError):
            simulate_trajectory(PairState(1.0, 0.0), lambda t: 0.0,
                                ModelParams(), -1.0)

    def test_noise_values_recorded(self):
        traj = simulate_trajectory(PairState.from_alpha2(0.75), lambda t: 0.25,
                                   ModelParams(), 0.1)
        assert np.all(traj.noise_values == 0.25)
        assert len(traj.noise_values) == 100


class TestPairState:
    def test_from_alpha2_bounds(self):
        with pytest.raises(InvalidStateError):
            PairState.from_alpha2(1.5)

    def test_coherence_of_real_state(self):
        s = PairState.from_alpha2(0.75)
        assert s.coherence() == pytest.approx(SQ34 * 0.5, abs=1e-15)

    def test_renormalized(self):
        s = PairState(2.0, 0.0).renormalized()
        assert s.alpha == 1.0 and s.beta == 0.0
