"""Noise realizations driving the reduction dynamics.

Three regimes are supported:

* ``FROZEN``  -- infinite correlation time: one value per trajectory,
  drawn uniformly on [-1, 1] and held fixed for the whole run.
* ``OU``      -- finite correlation time tau: mean-reverting process
  d xi = -xi dt/tau + g0 dW, integrated by Euler-Maruyama and started
  from its stationary distribution N(0, g0^2 tau / 2).
* ``WHITE``   -- vanishing correlation time: not represented as a xi
  path at all; the white-noise stepper consumes Wiener increments
  directly (the limit is singular, so the path picture is dropped).

Every trajectory owns a private counter-based RNG substream derived
from (master seed, trajectory index), which makes ensembles
reproducible and independent of worker count and scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from ._kernels import ou_path_chunk


class NoiseKind(str, Enum):
    FROZEN = "frozen"
    OU = "ou"
    WHITE = "white"


class FrozenDist(str, Enum):
    """Distribution of the per-trajectory frozen value (supported on [-1, 1])."""

    UNIFORM_SYM = "uniform_sym"


@dataclass(frozen=True)
class NoiseSpec:
    """Selects the noise regime and its parameters."""

    kind: NoiseKind = NoiseKind.FROZEN
    tau: float | None = None
    g0: float | None = None
    frozen_dist: FrozenDist = FrozenDist.UNIFORM_SYM

    def __post_init__(self):
        if self.kind == NoiseKind.OU:
            if self.tau is None or not self.tau > 0:
                raise ValueError(f"tau must be positive for OU noise, got {self.tau}")
            if self.g0 is None or not self.g0 >= 0:
                raise ValueError(f"g0 must be non-negative for OU noise, got {self.g0}")


@dataclass
class NoisePath:
    """A realized noise sequence, one value per integration step."""

    values: np.ndarray
    seed: int

    def __len__(self) -> int:
        return len(self.values)

    def as_callable(self, dt: float) -> Callable[[float], float]:
        """Step-function view: xi(t) = values[floor(t / dt)]."""
        values = self.values

        def path(t: float) -> float:
            return float(values[int(round(t / dt))])

        return path


# Substream purposes keep different consumers of the same master seed apart.
STREAM_ENSEMBLE = 0
STREAM_SAMPLES = 1


def trajectory_rng(master_seed: int, index: int, purpose: int = STREAM_ENSEMBLE) -> np.random.Generator:
    """Counter-based substream for one trajectory.

    Philox is keyed by the master seed; the 256-bit counter is offset by
    the trajectory index (and a purpose tag) so substreams are disjoint
    regardless of how many values each trajectory consumes.
    """
    counter = (purpose << 192) + (index << 128)
    return np.random.Generator(np.random.Philox(key=master_seed, counter=counter))


def sample_frozen(rng: np.random.Generator) -> float:
    """Single frozen-noise draw, uniform on [-1, 1]."""
    return float(rng.uniform(-1.0, 1.0))


def stationary_sigma(spec: NoiseSpec) -> float:
    """Standard deviation sqrt(g0^2 tau / 2) of the stationary OU law."""
    return spec.g0 * np.sqrt(spec.tau / 2.0)


def ou_step(xi: float, spec: NoiseSpec, dW: float, dt: float) -> float:
    """One Euler-Maruyama update xi - (xi/tau) dt + g0 dW."""
    if spec.kind != NoiseKind.OU:
        raise ValueError(f"ou_step requires OU noise, got {spec.kind}")
    return xi - (xi / spec.tau) * dt + spec.g0 * dW


def frozen_path(spec: NoiseSpec, n_steps: int, dt: float, rng: np.random.Generator,
                seed: int = 0) -> NoisePath:
    """Constant path from a single frozen draw."""
    xi = sample_frozen(rng)
    return NoisePath(values=np.full(n_steps, xi), seed=seed)


def ou_path(spec: NoiseSpec, n_steps: int, dt: float, rng: np.random.Generator,
            seed: int = 0) -> NoisePath:
    """Mean-reverting path started from the stationary distribution.

    Draw order per trajectory: one normal for xi(0), then one per step.
    ``values[k]`` is the xi driving step k (the state before that
    step's update), matching repeated application of ``ou_step``.
    """
    xi0 = float(rng.standard_normal()) * stationary_sigma(spec)
    dw = rng.standard_normal(n_steps) * np.sqrt(dt)
    out = np.empty((1, n_steps))
    ou_path_chunk(np.array([xi0]), dw.reshape(1, -1), spec.tau, spec.g0, dt, out)
    return NoisePath(values=out[0], seed=seed)


def white_increments(n_steps: int, dt: float, rng: np.random.Generator,
                     seed: int = 0) -> NoisePath:
    """Wiener increments ~ N(0, dt), one per step (consumed by the white stepper)."""
    dw = rng.standard_normal(n_steps) * np.sqrt(dt)
    return NoisePath(values=dw, seed=seed)


def make_path(spec: NoiseSpec, n_steps: int, dt: float, master_seed: int, index: int,
              purpose: int = STREAM_ENSEMBLE) -> NoisePath:
    """Build the noise realization for one trajectory's substream."""
    rng = trajectory_rng(master_seed, index, purpose)
    if spec.kind == NoiseKind.FROZEN:
        return frozen_path(spec, n_steps, dt, rng, seed=master_seed)
    if spec.kind == NoiseKind.OU:
        return ou_path(spec, n_steps, dt, rng, seed=master_seed)
    return white_increments(n_steps, dt, rng, seed=master_seed)
