import numpy as np
import pytest
from scipy.stats import spearmanr

from uwbjio.channel import (
    ChannelRealization,
    SvParams,
    generate_sv_channel,
    load_channel,
    normalize_channel,
    save_channel,
)
from uwbjio.signal_model import ConfigError, SystemConfig, derive_dimensions


def _cfg(t_ds=10.0):
    return SystemConfig(K=1, Ts=12.0, Tc=0.375, Ttau=0.125, T_DS=t_ds, snr_db=20.0)


class TestNormalize:
    def test_three_four(self):
        out = normalize_channel(np.array([3.0, 4.0, 0.0j]))
        np.testing.assert_allclose(out, [0.6, 0.8, 0.0], atol=1e-15)

    def test_idempotent(self):
        h = np.array([0.6, 0.8j])
        np.testing.assert_allclose(normalize_channel(normalize_channel(h)), normalize_channel(h))

    def test_unit_norm(self):
        rng = np.random.default_rng(3)
        h = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        assert np.linalg.norm(normalize_channel(h)) == pytest.approx(1.0, abs=1e-12)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            normalize_channel(np.zeros(4))


class TestGenerate:
    def test_single_ray_is_unit_first_tap(self):
        cfg = _cfg()
        dims = derive_dimensions(cfg)
        ch = generate_sv_channel(SvParams(Lc=1, Lr=1), cfg, dims, rng=5)
        assert abs(abs(ch.taps[0]) - 1.0) < 1e-12
        assert np.all(ch.taps[1:] == 0)

    def test_unit_energy(self):
        cfg = _cfg()
        dims = derive_dimensions(cfg)
        for seed in range(5):
            ch = generate_sv_channel(SvParams(), cfg, dims, rng=seed)
            assert np.linalg.norm(ch.taps) == pytest.approx(1.0, abs=1e-12)
            assert len(ch.taps) == dims.L

    def test_deterministic_per_seed(self):
        cfg = _cfg()
        dims = derive_dimensions(cfg)
        a = generate_sv_channel(SvParams(), cfg, dims, rng=42)
        b = generate_sv_channel(SvParams(), cfg, dims, rng=42)
        np.testing.assert_array_equal(a.taps, b.taps)

    def test_mean_profile_decays(self):
        # binned mean energy correlates negatively with delay over many draws
        cfg = _cfg()
        dims = derive_dimensions(cfg)
        params = SvParams(Lc=3, Lr=20)
        rng = np.random.default_rng(11)
        acc = np.zeros(dims.L)
        n_draws = 10_000
        for _ in range(n_draws):
            acc += np.abs(generate_sv_channel(params, cfg, dims, rng).taps) ** 2
        mean_energy = acc / n_draws
        rho, _ = spearmanr(np.arange(dims.L), mean_energy)
        assert rho < 0

    def test_param_validation(self):
        with pytest.raises(ConfigError):
            SvParams(Lc=0)
        with pytest.raises(ConfigError):
            SvParams(ray_decay=-1.0)


class TestTapFileRoundTrip:
    def test_save_load(self, tmp_path):
        rng = np.random.default_rng(9)
        taps = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        path = tmp_path / "taps.txt"
        save_channel(path, ChannelRealization(taps=taps, ttau=0.125))
        back = load_channel(path)
        assert back.ttau == 0.125
        np.testing.assert_array_equal(back.taps, taps)

    def test_load_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# nothing\n")
        with pytest.raises(ValueError):
            load_channel(path)
