import numpy as np
import pytest

from uwbjio.signal_model import SystemConfig, build_matrices, derive_dimensions, generate_spreading_codes


def complex_randn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def small_model(rng, k=2, ts=4.0, tc=1.0, ttau=0.5, t_ds=3.0, energies=None):
    """A tiny but fully structured model instance for oracle-style tests."""
    cfg = SystemConfig(K=k, Ts=ts, Tc=tc, Ttau=ttau, T_DS=t_ds, snr_db=20.0,
                       energies=energies or (1.0,) * k)
    dims = derive_dimensions(cfg)
    codes = generate_spreading_codes(k, cfg.N_c, rng)
    channels = []
    for _ in range(k):
        h = complex_randn(rng, dims.L)
        channels.append(h / np.linalg.norm(h))
    mats = build_matrices(cfg, dims, codes, channels)
    return cfg, dims, codes, channels, mats
