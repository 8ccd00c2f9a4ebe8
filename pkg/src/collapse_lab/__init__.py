"""Monte Carlo lab for objective quantum state reduction of a qubit pair."""

__version__ = "0.1.0"

from .analysis import (
    DephasingParams,
    EntropyRecord,
    avg_entanglement,
    binary_entropy,
    dephasing_reference,
    entanglement_entropy,
    entropy_series,
    interrupt_entropy,
    von_neumann_entropy,
)
from .dynamics import (
    ModelParams,
    Outcome,
    PairState,
    Trajectory,
    sigma_expect,
    simulate_trajectory,
    step_deterministic,
    step_white,
)
from .ensemble import (
    DensityMatrix2,
    EnsembleConfig,
    MomentSeries,
    density_matrix_at,
    run_ensemble,
)
from .noise import NoiseKind, NoisePath, NoiseSpec, ou_step, sample_frozen

__all__ = [
    "__version__",
    "DephasingParams", "EntropyRecord", "avg_entanglement", "binary_entropy",
    "dephasing_reference", "entanglement_entropy", "entropy_series",
    "interrupt_entropy", "von_neumann_entropy",
    "ModelParams", "Outcome", "PairState", "Trajectory", "sigma_expect",
    "simulate_trajectory", "step_deterministic", "step_white",
    "DensityMatrix2", "EnsembleConfig", "MomentSeries", "density_matrix_at",
    "run_ensemble",
    "NoiseKind", "NoisePath", "NoiseSpec", "ou_step", "sample_frozen",
]
