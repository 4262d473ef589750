import numpy as np
import pytest

from vibrochain.chain import ChainConfig


@pytest.fixture(scope="session")
def fig1_cfg() -> ChainConfig:
    return ChainConfig(
        n_sites=6,
        omega=[0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        g=[0.5, 0.5, 1.5, 0.5, 0.5, 0.5],
        hopping=0.1,
        sink_rate=0.2,
        beta0=0.0,
        gamma=1.1e5,
        nbar=5.0,
    )


@pytest.fixture(scope="session")
def fig6_cfg(fig1_cfg) -> ChainConfig:
    from dataclasses import replace

    return replace(fig1_cfg, g=np.array([0.0, 0.0, 0.03, 0.0, 0.0, 0.0]))


@pytest.fixture(scope="session")
def fig4_cfg(fig1_cfg) -> ChainConfig:
    from dataclasses import replace

    return replace(fig1_cfg, gamma=1100.0, beta0=0.65)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (m + m.conj().T)
