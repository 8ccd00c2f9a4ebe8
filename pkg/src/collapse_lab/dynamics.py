"""Two-level pair state and its time steppers.

The simulated object is an entangled pair restricted to the span of
{|00>, |11>}, written psi = alpha|00> + beta|11>.  With the Hamiltonian
switched off, the reduction dynamics closes on the two amplitudes:

    d alpha/dt = (J<s> + G xi) (1 - <s>) alpha
    d beta/dt  = (J<s> + G xi) (-1 - <s>) beta

where <s> = |alpha|^2 - |beta|^2 is the Pauli-z expectation in this
basis and xi is an externally supplied noise value.  Two steppers are
provided:

* ``step_deterministic`` -- classical RK4 for a noise value held fixed
  across the step (frozen or piecewise-constant correlated noise).
* ``step_white`` -- Euler-Maruyama step of the norm-preserving
  white-noise unraveling with collapse rate ``lam``:
      d psi = [ sqrt(lam) (s_op - <s>) dW - lam/2 (s_op - <s>)^2 dt ] psi
  under which E[|alpha|^2] is a martingale.

Both steppers renormalize after the update and treat the basis states
as exact fixed points.  All functions here are pure; randomness enters
only through explicitly passed noise values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

# A trajectory is declared collapsed once |alpha|^2 leaves this band.
COLLAPSE_THRESHOLD = 1e-9

# Tolerances for state validation and integration sanity.
NORM_ATOL_INPUT = 1e-6      # accepted input deviation of |alpha|^2+|beta|^2 from 1
NORM_ATOL_INVARIANT = 1e-12  # guaranteed after every public operation
# Per-step renormalization beyond these aborts the run.  The RK4 stepper
# keeps the norm to O(dt^2) and better, so 1e-3 flags genuine blowup; an
# Ito step legitimately renormalizes by O(dt) with Gaussian tails, so
# only an O(1) deviation (or a non-finite one) is pathological there.
NORM_STEP_FAILURE = 1e-3
NORM_STEP_FAILURE_WHITE = 0.5


class InvalidStateError(ValueError):
    """Raised when a pair state violates normalization."""


class IntegrationFailureError(RuntimeError):
    """Raised when a step's renormalization correction exceeds the stability bound."""

    def __init__(self, step_index: int, norm_deviation: float, bound: float = NORM_STEP_FAILURE):
        self.step_index = step_index
        self.norm_deviation = norm_deviation
        super().__init__(
            f"integration unstable at step {step_index}: "
            f"|norm - 1| = {norm_deviation:.3e} exceeds {bound:.0e}"
        )


class Outcome(str, Enum):
    """Terminal classification of a trajectory."""

    STATE_00 = "00"
    STATE_11 = "11"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class PairState:
    """Normalized amplitudes of |00> and |11>.

    Amplitudes are complex so ensemble coherences E[alpha * conj(beta)]
    are represented honestly, although the stock scenarios start from
    real non-negative amplitudes.
    """

    alpha: complex
    beta: complex

    @classmethod
    def from_alpha2(cls, alpha2: float) -> "PairState":
        """State with real non-negative amplitudes and |alpha|^2 = ``alpha2``."""
        if not 0.0 <= alpha2 <= 1.0:
            raise InvalidStateError(f"alpha2 must lie in [0, 1], got {alpha2}")
        return cls(math.sqrt(alpha2), math.sqrt(1.0 - alpha2))

    @property
    def alpha2(self) -> float:
        a = complex(self.alpha)
        return a.real * a.real + a.imag * a.imag

    @property
    def beta2(self) -> float:
        b = complex(self.beta)
        return b.real * b.real + b.imag * b.imag

    @property
    def norm2(self) -> float:
        return self.alpha2 + self.beta2

    def coherence(self) -> complex:
        """alpha * conj(beta), the pure-state off-diagonal element <00|rho|11>."""
        return complex(self.alpha) * complex(self.beta).conjugate()

    def validate(self, atol: float = NORM_ATOL_INPUT) -> None:
        dev = abs(self.norm2 - 1.0)
        if not dev <= atol:  # also catches NaN
            raise InvalidStateError(f"state not normalized: |norm^2 - 1| = {dev:.3e}")

    def renormalized(self) -> "PairState":
        n = math.sqrt(self.norm2)
        if n == 0.0 or not math.isfinite(n):
            raise InvalidStateError(f"cannot renormalize state with norm {n}")
        inv = 1.0 / n
        return PairState(self.alpha * inv, self.beta * inv)


@dataclass(frozen=True)
class ModelParams:
    """Coupling constants and step size of the reduction dynamics.

    ``G`` defaults to ``J``; that relation is what produces Born-rule
    statistics at late times, so it is the stock configuration.
    ``collapse_rate`` is the white-noise rate ``lam`` and defaults to
    ``J`` as well (the mapping from correlated-noise parameters to a
    white-noise rate is a modeling knob, not a derived quantity).
    ``dt`` defaults to 1e-3/J, resolving the collapse timescale 1/J.
    """

    J: float = 1.0
    G: float | None = None
    dt: float | None = None
    hamiltonian_off: bool = True
    collapse_rate: float | None = None

    def __post_init__(self):
        if not self.J > 0:
            raise ValueError(f"J must be positive, got {self.J}")
        if self.G is None:
            object.__setattr__(self, "G", self.J)
        if self.collapse_rate is None:
            object.__setattr__(self, "collapse_rate", self.J)
        if self.dt is None:
            object.__setattr__(self, "dt", 1e-3 / self.J)
        if not self.G >= 0:
            raise ValueError(f"G must be non-negative, got {self.G}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.collapse_rate >= 0:
            raise ValueError(f"collapse_rate must be non-negative, got {self.collapse_rate}")
        if not self.hamiltonian_off:
            raise ValueError("only hamiltonian_off=True dynamics is implemented")


def sigma_expect(state: PairState) -> float:
    """Pauli-z expectation |alpha|^2 - |beta|^2 of a normalized state."""
    state.validate()
    return state.alpha2 - state.beta2


def _rk4_amplitudes(a: complex, b: complex, xi: float, dt: float, J: float, G: float):
    """One RK4 step of the closed amplitude ODEs with xi fixed.

    Mirrors the compiled ensemble kernel expression for expression,
    so real-amplitude inputs reproduce it bit for bit.  Returns the
    renormalized amplitudes and the pre-renormalization norm deviation.
    """
    a2 = a.real * a.real + a.imag * a.imag
    b2 = b.real * b.real + b.imag * b.imag
    nn = a2 + b2
    s = (a2 - b2) / nn
    f = J * s + G * xi
    k1a = f * (1.0 - s) * a
    k1b = -f * (1.0 + s) * b

    at = a + 0.5 * dt * k1a
    bt = b + 0.5 * dt * k1b
    a2 = at.real * at.real + at.imag * at.imag
    b2 = bt.real * bt.real + bt.imag * bt.imag
    nn = a2 + b2
    s = (a2 - b2) / nn
    f = J * s + G * xi
    k2a = f * (1.0 - s) * at
    k2b = -f * (1.0 + s) * bt

    at = a + 0.5 * dt * k2a
    bt = b + 0.5 * dt * k2b
    a2 = at.real * at.real + at.imag * at.imag
    b2 = bt.real * bt.real + bt.imag * bt.imag
    nn = a2 + b2
    s = (a2 - b2) / nn
    f = J * s + G * xi
    k3a = f * (1.0 - s) * at
    k3b = -f * (1.0 + s) * bt

    at = a + dt * k3a
    bt = b + dt * k3b
    a2 = at.real * at.real + at.imag * at.imag
    b2 = bt.real * bt.real + bt.imag * bt.imag
    nn = a2 + b2
    s = (a2 - b2) / nn
    f = J * s + G * xi
    k4a = f * (1.0 - s) * at
    k4b = -f * (1.0 + s) * bt

    a = a + (dt / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    b = b + (dt / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
    a2 = a.real * a.real + a.imag * a.imag
    b2 = b.real * b.real + b.imag * b.imag
    nrm = math.sqrt(a2 + b2)
    inv = 1.0 / nrm
    return a * inv, b * inv, abs(nrm - 1.0)


def _em_amplitudes(a: complex, b: complex, dw: float, dt: float, lam: float):
    """One Euler-Maruyama step of the white-noise unraveling; see module docstring."""
    a2 = a.real * a.real + a.imag * a.imag
    b2 = b.real * b.real + b.imag * b.imag
    nn = a2 + b2
    s = (a2 - b2) / nn
    sq = math.sqrt(lam)
    u = sq * (1.0 - s)
    v = sq * (1.0 + s)
    a = a * (1.0 + u * dw - 0.5 * u * u * dt)
    b = b * (1.0 - v * dw - 0.5 * v * v * dt)
    a2 = a.real * a.real + a.imag * a.imag
    b2 = b.real * b.real + b.imag * b.imag
    nrm = math.sqrt(a2 + b2)
    inv = 1.0 / nrm
    return a * inv, b * inv, abs(nrm - 1.0)


def _absorb(a: complex, b: complex):
    """Clamp to the nearest basis state once past the collapse threshold."""
    a2 = a.real * a.real + a.imag * a.imag
    if a2 >= 1.0 - COLLAPSE_THRESHOLD:
        return complex(1.0), complex(0.0), 1
    if a2 <= COLLAPSE_THRESHOLD:
        return complex(0.0), complex(1.0), 2
    return a, b, 0


def step_deterministic(state: PairState, xi: float, params: ModelParams) -> PairState:
    """Advance one RK4 step with the noise value held fixed."""
    state.validate()
    a, b, _ = _rk4_amplitudes(
        complex(state.alpha), complex(state.beta), xi, params.dt, params.J, params.G
    )
    return PairState(a, b)


def step_white(state: PairState, dW: float, params: ModelParams) -> PairState:
    """Advance one Euler-Maruyama step; ``dW`` is a Wiener increment ~ N(0, dt)."""
    state.validate()
    a, b, _ = _em_amplitudes(
        complex(state.alpha), complex(state.beta), dW, params.dt, params.collapse_rate
    )
    return PairState(a, b)


@dataclass
class Trajectory:
    """Recorded history of a single run.

    ``times`` includes t = 0; amplitudes are stored per record point.
    ``noise_values`` holds the per-step noise realization (xi values for
    frozen/correlated driving, Wiener increments for white driving).
    """

    times: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray
    noise_values: np.ndarray
    outcome: Outcome
    t_resolved: float | None
    max_norm_correction: float
    params: ModelParams = field(repr=False, default_factory=ModelParams)

    @property
    def alpha2(self) -> np.ndarray:
        return (self.alphas * self.alphas.conjugate()).real

    def final_state(self) -> PairState:
        return PairState(complex(self.alphas[-1]), complex(self.betas[-1]))


def simulate_trajectory(
    initial: PairState,
    noise_path: Callable[[float], float],
    params: ModelParams,
    t_max: float,
    record_every: float | None = None,
    white_noise: bool = False,
) -> Trajectory:
    """Integrate one trajectory and record snapshots on a uniform grid.

    ``noise_path`` is queried once per step at the step's start time; it
    returns the noise value xi for that step (deterministic stepper) or
    the Wiener increment for that step (``white_noise=True``).  The state
    is renormalized after every step; once the collapse threshold is
    crossed the trajectory is held at the absorbing basis state.

    Raises ``IntegrationFailureError`` naming the step if a single-step
    renormalization correction exceeds 1e-3.
    """
    if not t_max > 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    initial.validate()
    dt = params.dt
    if record_every is None:
        record_every = 0.01 / params.J
    rec_stride = int(round(record_every / dt))
    if rec_stride < 1 or abs(rec_stride * dt - record_every) > 1e-9 * record_every:
        raise ValueError(
            f"record_every ({record_every}) must be an integer multiple of dt ({dt})"
        )
    n_steps = int(round(t_max / dt))
    if abs(n_steps * dt - t_max) > 1e-9 * t_max:
        raise ValueError(f"t_max ({t_max}) must be an integer multiple of dt ({dt})")
    n_rec = n_steps // rec_stride

    a = complex(initial.alpha)
    b = complex(initial.beta)
    a, b, absorbed = _absorb(a, b)
    t_resolved = 0.0 if absorbed else None

    times = np.empty(n_rec + 1)
    alphas = np.empty(n_rec + 1, dtype=np.complex128)
    betas = np.empty(n_rec + 1, dtype=np.complex128)
    noise_values = np.empty(n_steps)
    times[0] = 0.0
    alphas[0] = a
    betas[0] = b

    fail_dev = NORM_STEP_FAILURE_WHITE if white_noise else NORM_STEP_FAILURE
    max_corr = 0.0
    r = 1
    for k in range(n_steps):
        t = k * dt
        w = noise_path(t)
        noise_values[k] = w
        if not absorbed:
            if white_noise:
                a, b, dev = _em_amplitudes(a, b, w, dt, params.collapse_rate)
            else:
                a, b, dev = _rk4_amplitudes(a, b, w, dt, params.J, params.G)
            if not dev <= fail_dev:  # catches NaN as well
                raise IntegrationFailureError(k, dev, fail_dev)
            if dev > max_corr:
                max_corr = dev
            a, b, absorbed = _absorb(a, b)
            if absorbed and t_resolved is None:
                t_resolved = (k + 1) * dt
        if (k + 1) % rec_stride == 0:
            times[r] = (k + 1) * dt
            alphas[r] = a
            betas[r] = b
            r += 1

    outcome = (
        Outcome.STATE_00 if absorbed == 1
        else Outcome.STATE_11 if absorbed == 2
        else Outcome.UNRESOLVED
    )
    return Trajectory(
        times=times,
        alphas=alphas,
        betas=betas,
        noise_values=noise_values,
        outcome=outcome,
        t_resolved=t_resolved,
        max_norm_correction=max_corr,
        params=params,
    )
