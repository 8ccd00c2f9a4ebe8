"""Ensemble runner: N independent trajectories -> moment time series.

The ensemble mean over trajectories defines the mixed state

    rho(t) = [[ E|alpha|^2,      E[alpha conj(beta)] ],
              [ conj(...),       E|beta|^2           ]]

together with the pre-averaged entanglement accumuland
E[-|alpha|^2 ln|alpha|^2 - |beta|^2 ln|beta|^2] and running outcome
counts.  Trajectories are statically assigned to a fixed number of
blocks (also used for jackknife error bars); each block is integrated
as a unit and reduced with pairwise summation in trajectory order, so
results are bit-identical for a fixed master seed no matter how many
workers execute the blocks.

Trajectories that hit the collapse threshold are held at the absorbing
basis state for the remaining records; basis states are exact fixed
points of both steppers, so this only skips the stiff tail.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dynamics import COLLAPSE_THRESHOLD, ModelParams
from .noise import NoiseKind, NoiseSpec, sample_frozen, trajectory_rng

DEFAULT_BLOCKS = 50
WORKERS_ENV_VAR = "COLLAPSE_LAB_WORKERS"
# Per-trajectory noise matrices are built in row slabs within this budget.
_NOISE_BUDGET_BYTES = 64 * 2**20


class EnsembleIntegrationError(RuntimeError):
    """A trajectory inside an ensemble run became numerically unstable."""

    def __init__(self, trajectory_index: int, step_index: int, master_seed: int):
        self.trajectory_index = trajectory_index
        self.step_index = step_index
        self.master_seed = master_seed
        super().__init__(
            f"trajectory {trajectory_index} (substream of master seed {master_seed}) "
            f"failed at step {step_index}: renormalization correction exceeded 1e-3"
        )


class GridLookupError(KeyError):
    """Requested time is not on the recorded grid (no interpolation)."""


@dataclass(frozen=True)
class EnsembleConfig:
    """Full description of one ensemble run."""

    n_traj: int
    initial_alpha2: float
    model: ModelParams
    noise: NoiseSpec
    t_max: float
    record_every: float
    master_seed: int
    n_blocks: int = DEFAULT_BLOCKS
    stratified_frozen: bool = False

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError(f"n_traj must be >= 1, got {self.n_traj}")
        if not 0.0 <= self.initial_alpha2 <= 1.0:
            raise ValueError(f"initial_alpha2 must lie in [0, 1], got {self.initial_alpha2}")
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if self.record_every < self.model.dt:
            raise ValueError(
                f"record_every ({self.record_every}) must be >= dt ({self.model.dt})"
            )
        if self.n_blocks < 1:
            raise ValueError(f"n_blocks must be >= 1, got {self.n_blocks}")
        if self.stratified_frozen and self.noise.kind != NoiseKind.FROZEN:
            raise ValueError("stratified_frozen only applies to frozen noise")
        # grid consistency
        self.grid_shape()

    def grid_shape(self) -> tuple[int, int]:
        """(n_steps, record_stride); raises if the grid does not divide evenly."""
        dt = self.model.dt
        stride = int(round(self.record_every / dt))
        if stride < 1 or abs(stride * dt - self.record_every) > 1e-9 * self.record_every:
            raise ValueError(
                f"record_every ({self.record_every}) must be an integer multiple "
                f"of dt ({dt})"
            )
        n_steps = int(round(self.t_max / dt))
        if n_steps < 1 or abs(n_steps * dt - self.t_max) > 1e-9 * self.t_max:
            raise ValueError(f"t_max ({self.t_max}) must be an integer multiple of dt ({dt})")
        if n_steps % stride != 0:
            raise ValueError(
                f"t_max ({self.t_max}) must be an integer multiple of "
                f"record_every ({self.record_every})"
            )
        return n_steps, stride


@dataclass(frozen=True)
class DensityMatrix2:
    """Hermitian trace-one 2x2 state; rho10 is implicitly conj(rho01).

    Convention: ``rho01`` is the <00|rho|11> element, i.e. the ensemble
    mean of alpha * conj(beta).
    """

    rho00: float
    rho11: float
    rho01: complex

    TRACE_ATOL = 1e-10
    PSD_ATOL = 1e-10

    def __post_init__(self):
        if abs(self.rho00 + self.rho11 - 1.0) > self.TRACE_ATOL:
            raise ValueError(
                f"trace must be 1 within {self.TRACE_ATOL}: got {self.rho00 + self.rho11!r}"
            )
        if self.rho00 < -self.PSD_ATOL or self.rho11 < -self.PSD_ATOL:
            raise ValueError(f"negative population: {self.rho00}, {self.rho11}")
        if abs(self.rho01) ** 2 > self.rho00 * self.rho11 + self.PSD_ATOL:
            raise ValueError(
                f"|rho01|^2 = {abs(self.rho01)**2:.3e} exceeds rho00*rho11 = "
                f"{self.rho00 * self.rho11:.3e} beyond tolerance"
            )

    @property
    def populations(self) -> tuple[float, float]:
        return self.rho00, self.rho11

    def purity(self) -> float:
        return self.rho00**2 + self.rho11**2 + 2.0 * abs(self.rho01) ** 2


@dataclass
class MomentSeries:
    """Per-block record sums on the shared time grid (t = 0 included).

    Block arrays have shape (n_blocks, n_times) and hold *sums* over the
    block's trajectories; ensemble means divide the pairwise-summed
    block totals by ``n_traj``.  Outcome counts are cumulative: a
    trajectory counts toward n00/n11 from the record at which it was
    absorbed onward.
    """

    times: np.ndarray
    block_a2: np.ndarray
    block_b2: np.ndarray
    block_coh: np.ndarray
    block_ent: np.ndarray
    block_n00: np.ndarray
    block_n11: np.ndarray
    block_sizes: np.ndarray
    config: EnsembleConfig = field(repr=False)

    @property
    def n_traj(self) -> int:
        return int(self.block_sizes.sum())

    @property
    def n_blocks(self) -> int:
        return len(self.block_sizes)

    @property
    def mean_alpha2(self) -> np.ndarray:
        return self.block_a2.sum(axis=0) / self.n_traj

    @property
    def mean_beta2(self) -> np.ndarray:
        return self.block_b2.sum(axis=0) / self.n_traj

    @property
    def coherence(self) -> np.ndarray:
        """E[alpha * conj(beta)] per recorded time (complex)."""
        return self.block_coh.sum(axis=0) / self.n_traj

    @property
    def mean_pair_entropy(self) -> np.ndarray:
        """E[-a2 ln a2 - b2 ln b2]: average entanglement of the pure members."""
        return self.block_ent.sum(axis=0) / self.n_traj

    def outcome_counts(self, index: int = -1) -> dict[str, int]:
        n00 = int(self.block_n00.sum(axis=0)[index])
        n11 = int(self.block_n11.sum(axis=0)[index])
        return {"00": n00, "11": n11, "unresolved": self.n_traj - n00 - n11}

    def time_index(self, t: float) -> int:
        hits = np.nonzero(np.abs(self.times - t) <= 1e-12 + 1e-9 * abs(t))[0]
        if len(hits) != 1:
            raise GridLookupError(
                f"t = {t} is not on the recorded grid (exact lookup only; "
                f"grid spacing {self.config.record_every})"
            )
        return int(hits[0])

    def state_bytes(self) -> bytes:
        """Canonical byte serialization, used for determinism checks."""
        parts = [self.times, self.block_a2, self.block_b2, self.block_coh,
                 self.block_ent, self.block_n00, self.block_n11, self.block_sizes]
        return b"".join(np.ascontiguousarray(p).tobytes() for p in parts)


def density_matrix_at(series: MomentSeries, t: float) -> DensityMatrix2:
    """Ensemble density matrix at an exactly recorded time."""
    i = series.time_index(t)
    return DensityMatrix2(
        rho00=float(series.mean_alpha2[i]),
        rho11=float(series.mean_beta2[i]),
        rho01=complex(series.coherence[i]),
    )


def resolve_workers(workers: int | None = None) -> int:
    """Explicit value, else COLLAPSE_LAB_WORKERS, else the CPU count."""
    if workers is not None:
        if workers < 1:
            raise ValueError(f"workers must be >= 1, got {workers}")
        return workers
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        return resolve_workers(int(env))
    return os.cpu_count() or 1


def _block_ranges(n_traj: int, n_blocks: int) -> list[tuple[int, int]]:
    """Balanced contiguous (start, size) assignment of trajectories to blocks."""
    n_blocks = min(n_blocks, n_traj)
    base, rem = divmod(n_traj, n_blocks)
    ranges = []
    start = 0
    for b in range(n_blocks):
        size = base + (1 if b < rem else 0)
        ranges.append((start, size))
        start += size
    return ranges


def _frozen_values(config: EnsembleConfig, start: int, size: int) -> np.ndarray:
    xi = np.empty(size)
    n = config.n_traj
    for i in range(size):
        rng = trajectory_rng(config.master_seed, start + i)
        if config.stratified_frozen:
            u = rng.uniform(0.0, 1.0)
            xi[i] = -1.0 + 2.0 * (start + i + u) / n
        else:
            xi[i] = sample_frozen(rng)
    return xi


def _run_block(config: EnsembleConfig, start: int, size: int):
    """Integrate one block and return its per-record sums."""
    n_steps, stride = config.grid_shape()
    n_rec = n_steps // stride
    dt = config.model.dt
    a0 = float(np.sqrt(config.initial_alpha2))
    b0 = float(np.sqrt(1.0 - config.initial_alpha2))

    rec_a2 = np.empty((size, n_rec))
    rec_b2 = np.empty((size, n_rec))
    rec_coh = np.empty((size, n_rec))
    rec_ent = np.empty((size, n_rec))
    rec_flag = np.empty((size, n_rec), dtype=np.int8)

    alpha = np.full(size, a0)
    beta = np.full(size, b0)

    kind = config.noise.kind
    if kind == NoiseKind.FROZEN:
        xi = _frozen_values(config, start, size)
        err = _kernels.rk4_frozen_chunk(
            alpha, beta, xi, dt, config.model.J, config.model.G,
            n_steps, stride, rec_a2, rec_b2, rec_coh, rec_ent, rec_flag,
        )
    else:
        # Noise matrices are built in row slabs to bound peak memory; the
        # per-trajectory substreams make the slab split irrelevant to results.
        rows = max(1, min(size, _NOISE_BUDGET_BYTES // (8 * n_steps)))
        err = (-1, -1)
        sqdt = np.sqrt(dt)
        for lo in range(0, size, rows):
            hi = min(lo + rows, size)
            m = hi - lo
            if kind == NoiseKind.WHITE:
                dw = np.empty((m, n_steps))
                for i in range(m):
                    rng = trajectory_rng(config.master_seed, start + lo + i)
                    dw[i] = rng.standard_normal(n_steps) * sqdt
                err = _kernels.em_white_chunk(
                    alpha[lo:hi], beta[lo:hi], dw, dt, config.model.collapse_rate,
                    n_steps, stride, rec_a2[lo:hi], rec_b2[lo:hi],
                    rec_coh[lo:hi], rec_ent[lo:hi], rec_flag[lo:hi],
                )
            else:  # OU
                sigma = config.noise.g0 * np.sqrt(config.noise.tau / 2.0)
                xi0 = np.empty(m)
                dw = np.empty((m, n_steps))
                for i in range(m):
                    rng = trajectory_rng(config.master_seed, start + lo + i)
                    xi0[i] = rng.standard_normal() * sigma
                    dw[i] = rng.standard_normal(n_steps) * sqdt
                xi_path = np.empty((m, n_steps))
                _kernels.ou_path_chunk(xi0, dw, config.noise.tau, config.noise.g0, dt, xi_path)
                err = _kernels.rk4_path_chunk(
                    alpha[lo:hi], beta[lo:hi], xi_path, dt, config.model.J, config.model.G,
                    n_steps, stride, rec_a2[lo:hi], rec_b2[lo:hi],
                    rec_coh[lo:hi], rec_ent[lo:hi], rec_flag[lo:hi],
                )
            if err[0] >= 0:
                err = (err[0] + lo, err[1])
                break
    if err[0] >= 0:
        raise EnsembleIntegrationError(start + err[0], err[1], config.master_seed)

    # t = 0 record, after the same initial-threshold clamp the kernels apply.
    a_init, b_init = a0, b0
    flag0 = 0
    if a0 * a0 >= 1.0 - COLLAPSE_THRESHOLD:
        a_init, b_init, flag0 = 1.0, 0.0, 1
    elif a0 * a0 <= COLLAPSE_THRESHOLD:
        a_init, b_init, flag0 = 0.0, 1.0, 2
    a2_0 = np.full(size, a_init * a_init)
    b2_0 = np.full(size, b_init * b_init)
    coh_0 = np.full(size, a_init * b_init)
    e0 = 0.0
    if a2_0[0] > 0.0:
        e0 -= a2_0[0] * np.log(a2_0[0])
    if b2_0[0] > 0.0:
        e0 -= b2_0[0] * np.log(b2_0[0])
    ent_0 = np.full(size, e0)

    def _with_t0(first, rest):
        return np.concatenate(([first], rest))

    sum_a2 = _with_t0(a2_0.sum(), rec_a2.sum(axis=0))
    sum_b2 = _with_t0(b2_0.sum(), rec_b2.sum(axis=0))
    sum_coh = _with_t0(coh_0.sum(), rec_coh.sum(axis=0))
    sum_ent = _with_t0(ent_0.sum(), rec_ent.sum(axis=0))
    n00 = _with_t0(size if flag0 == 1 else 0, (rec_flag == 1).sum(axis=0)).astype(np.int64)
    n11 = _with_t0(size if flag0 == 2 else 0, (rec_flag == 2).sum(axis=0)).astype(np.int64)
    return sum_a2, sum_b2, sum_coh, sum_ent, n00, n11


def _run_block_star(args):
    return _run_block(*args)


def run_ensemble(config: EnsembleConfig, workers: int | None = None) -> MomentSeries:
    """Integrate all trajectories and accumulate the moment series.

    The result is bit-identical for a fixed master seed regardless of
    ``workers``; parallelism only distributes whole blocks.
    """
    n_steps, stride = config.grid_shape()
    n_rec = n_steps // stride
    times = np.arange(n_rec + 1) * (stride * config.model.dt)
    ranges = _block_ranges(config.n_traj, config.n_blocks)
    n_blocks = len(ranges)

    block_a2 = np.empty((n_blocks, n_rec + 1))
    block_b2 = np.empty((n_blocks, n_rec + 1))
    block_coh = np.empty((n_blocks, n_rec + 1), dtype=np.complex128)
    block_ent = np.empty((n_blocks, n_rec + 1))
    block_n00 = np.empty((n_blocks, n_rec + 1), dtype=np.int64)
    block_n11 = np.empty((n_blocks, n_rec + 1), dtype=np.int64)

    n_workers = min(resolve_workers(workers), n_blocks)
    if n_workers <= 1:
        results = map(_run_block_star, [(config, s, z) for s, z in ranges])
        for b, res in enumerate(results):
            block_a2[b], block_b2[b], block_coh[b], block_ent[b], block_n00[b], block_n11[b] = res
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futures = [pool.submit(_run_block, config, s, z) for s, z in ranges]
            for b, fut in enumerate(futures):
                res = fut.result()
                block_a2[b], block_b2[b], block_coh[b], block_ent[b], block_n00[b], block_n11[b] = res

    return MomentSeries(
        times=times,
        block_a2=block_a2,
        block_b2=block_b2,
        block_coh=block_coh,
        block_ent=block_ent,
        block_n00=block_n00,
        block_n11=block_n11,
        block_sizes=np.array([z for _, z in ranges], dtype=np.int64),
        config=config,
    )
