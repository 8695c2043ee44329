import numpy as np
import pytest

from uwbjio.jio_rls import JioRls, JioRlsConfig
from uwbjio.rank_adapt import (
    RankAdaptConfig,
    RankAdaptiveJioRls,
    select_rank,
    truncated_outputs,
    update_costs,
)

from conftest import complex_randn


class TestCostMachinery:
    def test_perfect_outputs_zero_cost(self, rng):
        y = np.exp(1j * rng.uniform(0, 2 * np.pi, 6))  # |y_D| = 1 for all D
        costs = update_costs(np.zeros(4), y, lambda_d=0.0, d_min=3)
        np.testing.assert_allclose(costs, 0.0, atol=1e-15)

    def test_recursion_matches_direct_sum(self, rng):
        lam, d_min, d_max = 0.9, 2, 5
        costs = np.zeros(d_max - d_min + 1)
        history = []
        for _ in range(25):
            y = complex_randn(rng, d_max)
            history.append(y)
            costs = update_costs(costs, y, lam, d_min)
        direct = np.zeros_like(costs)
        for j, y in enumerate(history):
            term = (np.abs(y[d_min - 1 :]) ** 2 - 1.0) ** 2
            direct += lam ** (len(history) - 1 - j) * term
        np.testing.assert_allclose(costs, direct, atol=1e-10)

    def test_truncation_identity_at_full_rank(self, rng):
        t_mat = complex_randn(rng, 8, 4)
        w = complex_randn(rng, 4)
        r = complex_randn(rng, 8)
        ys = truncated_outputs(t_mat, w, r)
        assert ys[-1] == pytest.approx(complex(np.vdot(w, t_mat.conj().T @ r)), abs=1e-12)

    def test_select_rank_tie_breaks(self):
        assert select_rank(np.array([0.5, 0.3, 0.3]), d_min=3) == 4
        assert select_rank(np.array([0.7]), d_min=3) == 3
        assert select_rank(np.array([0.2, 0.2, 0.2]), d_min=3) == 3

    def test_config_validation(self):
        with pytest.raises(ValueError):
            RankAdaptConfig(D_min=5, D_max=3)


def drive(rx, rng, p, n, m):
    outs = []
    for _ in range(n):
        b = 1.0 if rng.random() < 0.5 else -1.0
        r = 2.0 * p * b + 0.1 * complex_randn(rng, m)
        outs.append(rx.step(r, p_hat=p))
    return outs


class TestRankAdaptiveReceiver:
    def test_opt_rank_stays_in_window(self, rng):
        m = 12
        p = complex_randn(rng, m)
        p /= np.linalg.norm(p)
        rx = RankAdaptiveJioRls(m, JioRlsConfig(D=6, alpha=0.99, v=0.5),
                                RankAdaptConfig(D_min=2, D_max=6, lambda_D=0.99))
        drive(rx, rng, p, 80, m)
        assert all(2 <= d <= 6 for d in rx.d_opt_trace)
        tested = np.arange(2, 7)
        assert rx.costs[rx.d_opt - 2] == pytest.approx(float(np.min(rx.costs)))
        assert len(rx.costs) == len(tested)

    def test_degenerate_window_matches_fixed_rank(self, rng):
        m, d = 10, 4
        p = complex_randn(rng, m)
        p /= np.linalg.norm(p)
        cfg = JioRlsConfig(D=d, alpha=0.99, v=0.5)
        fixed = JioRls(m, cfg)
        auto = RankAdaptiveJioRls(m, cfg, RankAdaptConfig(D_min=d, D_max=d, lambda_D=0.99))
        inner_rng1 = np.random.default_rng(55)
        inner_rng2 = np.random.default_rng(55)
        outs_fixed = drive(fixed, inner_rng1, p, 60, m)
        outs_auto = drive(auto, inner_rng2, p, 60, m)
        for (yf, bf), (ya, ba) in zip(outs_fixed, outs_auto):
            assert bf == ba
            assert yf == pytest.approx(ya, abs=1e-12)
        np.testing.assert_array_equal(fixed.t_mat, auto.inner.t_mat)
        np.testing.assert_array_equal(fixed.w, auto.inner.w)
