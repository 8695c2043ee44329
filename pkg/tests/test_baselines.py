import itertools

import numpy as np
import pytest

from uwbjio.baselines import RakeMrc, rake_mrc
from uwbjio.channel import SvParams, generate_sv_channel
from uwbjio.signal_model import (
    SystemConfig,
    assemble_received,
    build_matrices,
    derive_dimensions,
    generate_spreading_codes,
)

from conftest import complex_randn


class TestRakeMrc:
    def test_matched_direction(self, rng):
        p = complex_randn(rng, 8)
        y, bhat = rake_mrc(p, p)
        assert y == pytest.approx(float(np.vdot(p, p).real))
        assert bhat == 1
        y, bhat = rake_mrc(-p, p)
        assert bhat == -1

    def test_scale_invariant_decision(self, rng):
        p = complex_randn(rng, 8)
        r = complex_randn(rng, 8)
        _, b1 = rake_mrc(r, p)
        _, b2 = rake_mrc(3.7 * r, p)
        assert b1 == b2

    def test_zero_signature_rejected(self, rng):
        with pytest.raises(ValueError):
            rake_mrc(complex_randn(rng, 4), np.zeros(4, dtype=complex))

    def test_noise_free_single_user_error_free(self):
        # desk-scale channel, true signature, exhaustive neighbour symbols
        cfg = SystemConfig(K=1, Ts=12.0, Tc=0.375, Ttau=0.125, T_DS=10.0, snr_db=20.0)
        dims = derive_dimensions(cfg)
        rng = np.random.default_rng(2024)
        codes = generate_spreading_codes(1, cfg.N_c, rng)
        taps = generate_sv_channel(SvParams(), cfg, dims, rng).taps
        mats = build_matrices(cfg, dims, codes, [taps])
        rx = RakeMrc()
        for combo in itertools.product([-1.0, 1.0], repeat=2 * dims.G + 1):
            window = np.asarray(combo)[None, :]
            r = assemble_received(mats, window, 0.0)
            _, bhat = rx.step(r, mats.p[0])
            assert bhat == int(combo[dims.G])
