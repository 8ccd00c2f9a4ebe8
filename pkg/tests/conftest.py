import pytest

from collapse_lab.dynamics import ModelParams
from collapse_lab.ensemble import EnsembleConfig, run_ensemble
from collapse_lab.noise import NoiseKind, NoiseSpec


def small_config(kind=NoiseKind.FROZEN, n_traj=300, t_max=0.5, record_every=0.05,
                 seed=424242, alpha0=0.75, n_blocks=6, tau=1.0, g0=1.0,
                 **model_kw) -> EnsembleConfig:
    return EnsembleConfig(
        n_traj=n_traj,
        initial_alpha2=alpha0,
        model=ModelParams(**model_kw),
        noise=NoiseSpec(kind=kind, tau=tau, g0=g0) if kind == NoiseKind.OU
        else NoiseSpec(kind=kind),
        t_max=t_max,
        record_every=record_every,
        master_seed=seed,
        n_blocks=n_blocks,
    )


@pytest.fixture(scope="session")
def frozen_series_small():
    return run_ensemble(small_config(NoiseKind.FROZEN))


@pytest.fixture(scope="session")
def white_series_small():
    return run_ensemble(small_config(NoiseKind.WHITE))


@pytest.fixture(autouse=True)
def _no_worker_env(monkeypatch):
    monkeypatch.delenv("COLLAPSE_LAB_WORKERS", raising=False)
