import numpy as np
import pytest

from uwbjio.signal_model import (
    ConfigError,
    NbiConfig,
    SystemConfig,
    assemble_received,
    build_matrices,
    derive_dimensions,
    generate_spreading_codes,
    jammer_power,
    nbi_window,
    noise_variance,
    oracle_received_convolution,
    sample_nbi,
    sign_decision,
)

from conftest import complex_randn, small_model


def desk_config(k=7):
    return SystemConfig(K=k, Ts=12.0, Tc=0.375, Ttau=0.125, T_DS=10.0, snr_db=20.0)


class TestDimensions:
    def test_desk_scenario(self):
        cfg = desk_config()
        dims = derive_dimensions(cfg)
        assert cfg.N_c == 32
        assert dims.M == 59
        assert dims.L == 80
        assert dims.M_H == 175
        assert dims.G == 1

    def test_two_symbol_isi_reach(self):
        cfg = SystemConfig(K=1, Ts=4.0, Tc=1.0, Ttau=0.5, T_DS=8.0, snr_db=10.0)
        assert derive_dimensions(cfg).G == 2

    @pytest.mark.parametrize(
        "kw",
        [
            dict(Ts=12.0, Tc=0.5, Ttau=0.125),   # Ts/Tc = 24 ok but Tc/Ttau = 4 ok; use bad ones below
            dict(Ts=12.0, Tc=0.7, Ttau=0.125),   # Ts/Tc not integer
            dict(Ts=12.0, Tc=0.375, Ttau=0.11),  # Tc/Ttau not integer
        ],
    )
    def test_non_integer_ratios_rejected(self, kw):
        base = dict(K=1, T_DS=10.0, snr_db=20.0)
        base.update(kw)
        if kw["Tc"] == 0.5:  # this one is actually consistent
            SystemConfig(**base)
            return
        with pytest.raises(ConfigError):
            SystemConfig(**base)

    def test_bad_energies(self):
        with pytest.raises(ConfigError):
            SystemConfig(K=2, Ts=4, Tc=1, Ttau=0.5, T_DS=2, snr_db=0, energies=(1.0,))


class TestSpreadingCodes:
    def test_shapes_and_alphabet(self, rng):
        codes = generate_spreading_codes(3, 32, rng)
        assert len(codes) == 3
        for c in codes:
            assert c.shape == (32,)
            assert set(np.unique(c)) <= {-1.0, 1.0}

    def test_deterministic_for_seed(self):
        a = generate_spreading_codes(2, 16, 99)
        b = generate_spreading_codes(2, 16, 99)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_rejects_empty(self):
        with pytest.raises(ConfigError):
            generate_spreading_codes(0, 8, 1)


class TestBuildMatrices:
    def test_unit_impulse_channel(self, rng):
        cfg = SystemConfig(K=1, Ts=4, Tc=1, Ttau=0.5, T_DS=2, snr_db=0)
        dims = derive_dimensions(cfg)
        codes = generate_spreading_codes(1, cfg.N_c, rng)
        h = np.zeros(dims.L, dtype=complex)
        h[0] = 1.0
        mats = build_matrices(cfg, dims, codes, [h])
        np.testing.assert_allclose(mats.p[0], mats.P_r @ mats.S_e[0][:, 0], atol=1e-14)

    def test_toeplitz_first_columns(self, rng):
        cfg, dims, codes, channels, mats = small_model(rng)
        s_e = mats.P_t @ codes[0]
        np.testing.assert_allclose(mats.S_e[0][: dims.ns, 0], s_e, atol=1e-14)
        np.testing.assert_allclose(mats.H[0][: dims.L, 0], channels[0], atol=1e-14)
        # convolution commutes: S_e h == H P_t s
        np.testing.assert_allclose(mats.S_e[0] @ channels[0], mats.H[0] @ s_e, atol=1e-12)

    def test_triangular_row_dimension(self, rng):
        # L=3, ns=8: upper partition for g=1 occupies rho = L-1 = 2 rows
        cfg = SystemConfig(K=1, Ts=4, Tc=1, Ttau=0.5, T_DS=1.5, snr_db=0)
        dims = derive_dimensions(cfg)
        assert (dims.L, dims.ns) == (3, 8)
        codes = generate_spreading_codes(1, cfg.N_c, rng)
        h = complex_randn(rng, dims.L)
        mats = build_matrices(cfg, dims, codes, [h])
        hm = mats.H_minus[0, 0]
        rows = np.flatnonzero(np.abs(hm).sum(axis=1))
        assert rows.max() + 1 == dims.L - 1 == 2

    def test_partition_entries_match_index_formula(self, rng):
        # H^{(-g)}[q, j] = h[q + g*ns - j], H^{(+g)}[q, j] = h[q - g*ns - j],
        # zero outside 0..L-1: holds on both case-split branches
        for t_ds, ts in [(1.5, 4.0), (3.0, 2.0)]:  # rho <= ns and rho > ns
            cfg = SystemConfig(K=1, Ts=ts, Tc=1.0, Ttau=0.5, T_DS=t_ds, snr_db=0)
            dims = derive_dimensions(cfg)
            codes = generate_spreading_codes(1, cfg.N_c, rng)
            h = complex_randn(rng, dims.L)
            mats = build_matrices(cfg, dims, codes, [h])
            for g in range(1, dims.G + 1):
                for q in range(dims.M_H):
                    for j in range(dims.ns):
                        lm = q + g * dims.ns - j
                        lp = q - g * dims.ns - j
                        want_m = h[lm] if 0 <= lm < dims.L else 0.0
                        want_p = h[lp] if 0 <= lp < dims.L else 0.0
                        assert mats.H_minus[0, g - 1][q, j] == pytest.approx(want_m)
                        assert mats.H_plus[0, g - 1][q, j] == pytest.approx(want_p)

    def test_partitions_absent_when_overlap_gone(self, rng):
        # L = 5, ns = 4 -> G = 2 but rho_2 = 0: the second-neighbour matrices vanish
        cfg = SystemConfig(K=1, Ts=2.0, Tc=1.0, Ttau=0.5, T_DS=2.5, snr_db=0)
        dims = derive_dimensions(cfg)
        assert (dims.L, dims.ns, dims.G) == (5, 4, 2)
        codes = generate_spreading_codes(1, cfg.N_c, rng)
        mats = build_matrices(cfg, dims, codes, [complex_randn(rng, dims.L)])
        assert np.all(mats.H_minus[0, 1] == 0)
        assert np.all(mats.H_plus[0, 1] == 0)

    def test_dimension_mismatch_rejected(self, rng):
        cfg = SystemConfig(K=1, Ts=4, Tc=1, Ttau=0.5, T_DS=2, snr_db=0)
        dims = derive_dimensions(cfg)
        codes = generate_spreading_codes(1, cfg.N_c, rng)
        with pytest.raises(ConfigError):
            build_matrices(cfg, dims, codes, [np.ones(dims.L + 1, dtype=complex)])


class TestAssembleReceived:
    def test_single_term(self, rng):
        cfg, dims, codes, channels, mats = small_model(rng, k=1)
        window = np.zeros((1, 2 * dims.G + 1))
        window[0, dims.G] = 1.0
        r = assemble_received(mats, window, 0.0)
        np.testing.assert_allclose(r, mats.p[0], atol=1e-14)
        window[0, dims.G] = -1.0
        np.testing.assert_allclose(assemble_received(mats, window, 0.0), -mats.p[0], atol=1e-14)

    def test_window_shape_checked(self, rng):
        cfg, dims, codes, channels, mats = small_model(rng, k=1)
        with pytest.raises(ConfigError):
            assemble_received(mats, np.ones((1, 2 * dims.G)), 0.0)

    def test_linear_superposition(self, rng):
        cfg, dims, codes, channels, mats = small_model(rng, k=2)
        w1 = rng.integers(0, 2, (2, 2 * dims.G + 1)) * 2.0 - 1.0
        w2 = rng.integers(0, 2, (2, 2 * dims.G + 1)) * 2.0 - 1.0
        r_sum = assemble_received(mats, w1 + w2, 0.0)
        r_parts = assemble_received(mats, w1, 0.0) + assemble_received(mats, w2, 0.0)
        np.testing.assert_allclose(r_sum, r_parts, atol=1e-12)

    def test_matches_convolution_oracle_both_branches(self):
        # random small instances; cover both triangular-partition branches
        rng = np.random.default_rng(777)
        branch_a = branch_b = 0
        geometries = [
            (4.0, 1.0, 0.5, 3.0),   # ns=8,  L=6:  rho_1=5  <= ns
            (2.0, 1.0, 0.5, 3.0),   # ns=4,  L=6:  rho_1=5  >  ns (split)
            (2.0, 0.5, 0.25, 1.5),  # ns=8,  L=6, nc=2
            (4.0, 0.5, 0.5, 2.0),   # N_c=8, L=4
            (3.0, 1.0, 0.25, 1.25), # ns=12, L=5, nc=4
        ]
        for trial in range(100):
            ts, tc, ttau, t_ds = geometries[trial % len(geometries)]
            k = int(rng.integers(1, 4))
            cfg = SystemConfig(K=k, Ts=ts, Tc=tc, Ttau=ttau, T_DS=t_ds, snr_db=0,
                               energies=tuple(rng.uniform(0.5, 2.0, k)))
            dims = derive_dimensions(cfg)
            assert cfg.N_c <= 8 and dims.L <= 6 and dims.G <= 2
            for g in range(1, dims.G + 1):
                rho = dims.L - (g - 1) * dims.ns - 1
                if rho > dims.ns:
                    branch_a += 1
                elif rho > 0:
                    branch_b += 1
            codes = generate_spreading_codes(k, cfg.N_c, rng)
            channels = [complex_randn(rng, dims.L) for _ in range(k)]
            mats = build_matrices(cfg, dims, codes, channels)
            n_sym = 2 * dims.G + 1
            stream = rng.integers(0, 2, (k, n_sym)) * 2.0 - 1.0
            i = dims.G
            window = stream[:, i - dims.G : i + dims.G + 1]
            got = assemble_received(mats, window, 0.0)
            want = oracle_received_convolution(cfg, dims, codes, channels, stream, i)
            assert np.max(np.abs(got - want)) <= 1e-10
        assert branch_a > 0 and branch_b > 0

    def test_oracle_zero_channel(self, rng):
        cfg = SystemConfig(K=1, Ts=4, Tc=1, Ttau=0.5, T_DS=2, snr_db=0)
        dims = derive_dimensions(cfg)
        codes = generate_spreading_codes(1, cfg.N_c, rng)
        stream = np.ones((1, 3))
        r = oracle_received_convolution(cfg, dims, codes, [np.zeros(dims.L)], stream, 1)
        np.testing.assert_array_equal(r, np.zeros(dims.M, dtype=complex))

    def test_noise_variance_definitions(self, rng):
        cfg, dims, codes, channels, mats = small_model(rng, k=1)
        sig = noise_variance(cfg, mats.p[0], "signature")
        assert sig == pytest.approx(
            float(np.vdot(mats.p[0], mats.p[0]).real) * 10 ** (-cfg.snr_db / 10))
        assert noise_variance(cfg, mats.p[0], "energy") == pytest.approx(10 ** (-cfg.snr_db / 10))
        with pytest.raises(ConfigError):
            noise_variance(cfg, mats.p[0], "bogus")


class TestNbi:
    def test_unit_sample_at_zero_phase(self):
        nbi = NbiConfig(sir_db=0.0, f_d=23.0, theta_j=0.0)
        assert sample_nbi(nbi, 0.0, 1.0) == pytest.approx(1.0 + 0.0j)

    def test_constant_modulus(self):
        nbi = NbiConfig(sir_db=7.0, f_d=23.0, theta_j=0.4)
        pj = jammer_power(nbi, 1.3)
        for t in np.linspace(0.0, 100.0, 17):
            assert abs(sample_nbi(nbi, t, 1.3)) ** 2 == pytest.approx(pj)

    def test_per_chip_phase_increment(self):
        cfg = SystemConfig(K=1, Ts=12.0, Tc=0.375, Ttau=0.125, T_DS=10.0, snr_db=20.0,
                           nbi=NbiConfig(sir_db=0.0, f_d=23.0, theta_j=0.1))
        dims = derive_dimensions(cfg)
        w = nbi_window(cfg.nbi, cfg, dims, i=0)
        inc = np.angle(w[1:] / w[:-1])
        np.testing.assert_allclose(inc, 2 * np.pi * 23.0 * 1e-3 * 0.375, atol=1e-12)


class TestSignDecision:
    def test_cases(self):
        assert sign_decision(0.7 - 0.1j) == 1
        assert sign_decision(-0.2 + 0.9j) == -1
        assert sign_decision(0.0 + 1.0j) == 1
