"""Entropy and entanglement observables of the reduction ensemble.

Three inequivalent entropies are tracked, all in nats (k_B = 1):

* ``s_td``      -- Von Neumann entropy -Tr(rho ln rho) of the ensemble
  density matrix: the thermodynamic entropy actually contained in the
  ensemble.  Computed from the closed-form eigenvalues
      x_pm = 1/2 +/- 1/2 sqrt((rho00 - rho11)^2 + 4 |rho01|^2).
* ``s_ent_avg`` -- mean over trajectories of the bipartite entanglement
  entropy -a2 ln a2 - b2 ln b2 of each pure member (average of
  entropies, never the entropy of the averaged state).
* ``s_td_int``  -- entropy obtainable by an instantaneous projective
  measurement at time t, i.e. the binary entropy of E[|alpha|^2]
  (the coherence is wiped by the projection).

An analytic pure-dephasing reference with the same populations but an
exponentially decaying coherence is provided for comparison: its local
observables match a white-noise reduction run while its per-state
entanglement never decays.

Error bars on any derived series come from a delete-one-block jackknife
over the ensemble's trajectory blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .dynamics import PairState
from .ensemble import DensityMatrix2, MomentSeries

LN2 = math.log(2.0)

EIGENVALUE_ATOL = 1e-10
POPULATION_ATOL = 1e-10


class InvalidDensityMatrixError(ValueError):
    """Eigenvalue or population outside [0, 1] beyond tolerance."""


def _xlogx(p: float) -> float:
    """p ln p with the 0 ln 0 = 0 convention."""
    return p * math.log(p) if p > 0.0 else 0.0


def binary_entropy(p: float) -> float:
    """-p ln p - (1-p) ln(1-p) in nats, for p in [0, 1]."""
    return -_xlogx(p) - _xlogx(1.0 - p)


def _checked_prob(x: float, what: str, atol: float) -> float:
    if x < -atol or x > 1.0 + atol:
        raise InvalidDensityMatrixError(f"{what} = {x!r} outside [0, 1] beyond {atol}")
    return min(max(x, 0.0), 1.0)


def von_neumann_entropy(rho: DensityMatrix2) -> float:
    """-Tr(rho ln rho) from the closed-form 2x2 spectrum."""
    gap = math.hypot(rho.rho00 - rho.rho11, 2.0 * abs(rho.rho01))
    x_plus = _checked_prob(0.5 + 0.5 * gap, "eigenvalue", EIGENVALUE_ATOL)
    x_minus = _checked_prob(0.5 - 0.5 * gap, "eigenvalue", EIGENVALUE_ATOL)
    return -_xlogx(x_plus) - _xlogx(x_minus)


def entanglement_entropy(state: PairState) -> float:
    """Reduced Von Neumann entropy of one pure pair state.

    Tracing out either side of alpha|00> + beta|11> leaves the diagonal
    state diag(|alpha|^2, |beta|^2), so this is the binary entropy of
    |alpha|^2.
    """
    state.validate()
    return -_xlogx(state.alpha2) - _xlogx(state.beta2)


def avg_entanglement(states: Iterable[PairState]) -> float:
    """Arithmetic mean of ``entanglement_entropy`` over a snapshot."""
    values = np.array([entanglement_entropy(s) for s in states])
    if values.size == 0:
        raise ValueError("snapshot must be non-empty")
    return float(values.mean())


def interrupt_entropy(populations: Sequence[float]) -> float:
    """Entropy after an instantaneous projection onto the classical basis.

    Equals the Von Neumann entropy of the dephased (zero-coherence)
    density matrix with the same populations.
    """
    p00, p11 = populations
    if abs(p00 + p11 - 1.0) > POPULATION_ATOL:
        raise InvalidDensityMatrixError(
            f"populations must sum to 1 within {POPULATION_ATOL}: got {p00 + p11!r}"
        )
    p00 = _checked_prob(p00, "population", POPULATION_ATOL)
    return binary_entropy(p00)


@dataclass(frozen=True)
class EntropyRecord:
    """All entropy observables at one recorded time (units of 1/J; nats)."""

    t: float
    s_td: float
    s_ent_avg: float
    s_sum: float
    s_td_int: float

    def __post_init__(self):
        for name in ("s_td", "s_ent_avg", "s_td_int"):
            v = getattr(self, name)
            if not -1e-12 <= v <= LN2 + 1e-9:
                raise ValueError(f"{name} = {v!r} outside [0, ln 2]")


class SeriesMoments(NamedTuple):
    """Ensemble means entering the entropy observables."""

    a2: np.ndarray
    b2: np.ndarray
    coh: np.ndarray
    ent: np.ndarray


def _moments(series: MomentSeries) -> SeriesMoments:
    return SeriesMoments(
        a2=series.mean_alpha2,
        b2=series.mean_beta2,
        coh=series.coherence,
        ent=series.mean_pair_entropy,
    )


def _h2_array(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, 0.0, 1.0)
    q = 1.0 - p
    out = np.zeros_like(p)
    m = p > 0
    out[m] -= p[m] * np.log(p[m])
    m = q > 0
    out[m] -= q[m] * np.log(q[m])
    return out


def s_td_curve(m: SeriesMoments) -> np.ndarray:
    gap = np.hypot(m.a2 - m.b2, 2.0 * np.abs(m.coh))
    return _h2_array(0.5 + 0.5 * gap)


def s_ent_avg_curve(m: SeriesMoments) -> np.ndarray:
    return m.ent


def s_sum_curve(m: SeriesMoments) -> np.ndarray:
    return s_td_curve(m) + s_ent_avg_curve(m)


def s_td_int_curve(m: SeriesMoments) -> np.ndarray:
    return _h2_array(m.a2)


def mean_alpha2_curve(m: SeriesMoments) -> np.ndarray:
    return m.a2


def entropy_series(series: MomentSeries) -> list[EntropyRecord]:
    """One EntropyRecord per recorded time, times in units of 1/J."""
    m = _moments(series)
    s_td = s_td_curve(m)
    s_ent = s_ent_avg_curve(m)
    s_int = s_td_int_curve(m)
    J = series.config.model.J
    out = []
    for i, t in enumerate(series.times):
        try:
            out.append(EntropyRecord(
                t=float(t * J),
                s_td=float(s_td[i]),
                s_ent_avg=float(s_ent[i]),
                s_sum=float(s_td[i]) + float(s_ent[i]),
                s_td_int=float(s_int[i]),
            ))
        except ValueError as exc:
            raise ValueError(f"invalid entropy record at time index {i} (t={t})") from exc
    return out


def jackknife_se(series: MomentSeries,
                 statistic: Callable[[SeriesMoments], np.ndarray]) -> np.ndarray:
    """Delete-one-block jackknife standard error of a derived curve.

    ``statistic`` maps ensemble means to an array (any shape); the SE is
    estimated from its spread over the leave-one-block-out replicates.
    Entropies are nonlinear in the moments, so this is preferred over
    naive error propagation.
    """
    B = series.n_blocks
    if B < 2:
        raise ValueError("jackknife requires at least 2 blocks")
    n = series.n_traj
    tot_a2 = series.block_a2.sum(axis=0)
    tot_b2 = series.block_b2.sum(axis=0)
    tot_coh = series.block_coh.sum(axis=0)
    tot_ent = series.block_ent.sum(axis=0)
    thetas = []
    for b in range(B):
        m = n - int(series.block_sizes[b])
        lo = SeriesMoments(
            a2=(tot_a2 - series.block_a2[b]) / m,
            b2=(tot_b2 - series.block_b2[b]) / m,
            coh=(tot_coh - series.block_coh[b]) / m,
            ent=(tot_ent - series.block_ent[b]) / m,
        )
        thetas.append(statistic(lo))
    thetas = np.asarray(thetas)
    mean = thetas.mean(axis=0)
    return np.sqrt((B - 1) / B * ((thetas - mean) ** 2).sum(axis=0))


@dataclass
class EntropyErrors:
    """Jackknife standard errors for the standard entropy curves."""

    se_s_td: np.ndarray
    se_s_ent_avg: np.ndarray
    se_s_sum: np.ndarray
    se_s_td_int: np.ndarray
    se_mean_alpha2: np.ndarray


def entropy_errors(series: MomentSeries) -> EntropyErrors:
    return EntropyErrors(
        se_s_td=jackknife_se(series, s_td_curve),
        se_s_ent_avg=jackknife_se(series, s_ent_avg_curve),
        se_s_sum=jackknife_se(series, s_sum_curve),
        se_s_td_int=jackknife_se(series, s_td_int_curve),
        se_mean_alpha2=jackknife_se(series, mean_alpha2_curve),
    )


class DecayShape(str, Enum):
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class DephasingParams:
    """Environment-overlap decay of the pure-dephasing reference."""

    gamma: float
    decay_shape: DecayShape = DecayShape.EXPONENTIAL

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")


def dephasing_reference(
    alpha0_sq: float,
    params: DephasingParams,
    times: np.ndarray,
) -> list[tuple[DensityMatrix2, EntropyRecord]]:
    """Analytic dephasing evolution on the given time grid.

    The environment never touches the qubits: populations stay at
    (alpha0_sq, 1 - alpha0_sq) and the coherence decays as
    sqrt(alpha0_sq (1 - alpha0_sq)) exp(-gamma t).  Each member state
    stays pure and entangled, so the reported average entanglement is
    the constant initial value, and the locally obtainable entropy is
    constant as well; only ``s_td`` grows as the coherence dies.
    """
    if not 0.0 <= alpha0_sq <= 1.0:
        raise ValueError(f"alpha0_sq must lie in [0, 1], got {alpha0_sq}")
    p = alpha0_sq
    coh0 = math.sqrt(p * (1.0 - p))
    s_ent = binary_entropy(p)
    out = []
    for t in np.asarray(times, dtype=float):
        rho = DensityMatrix2(rho00=p, rho11=1.0 - p,
                             rho01=coh0 * math.exp(-params.gamma * t))
        s_td = von_neumann_entropy(rho)
        out.append((rho, EntropyRecord(
            t=float(t),
            s_td=s_td,
            s_ent_avg=s_ent,
            s_sum=s_td + s_ent,
            s_td_int=binary_entropy(p),
        )))
    return out
