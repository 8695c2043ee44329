import os

import numpy as np
import pytest

import uwbjio.harness as harness
from uwbjio.cli import cli_main
from uwbjio.configio import parse_config
from uwbjio.harness import (
    AlgoSpec,
    ExperimentConfig,
    aggregate_point,
    run_cells,
    run_experiment,
    run_trial,
    synthesize_stream,
    trial_seed,
)
from uwbjio.signal_model import ConfigError, SystemConfig


def tiny_system(k=2, snr_db=16.0):
    # small but structurally complete: ns=8, nc=2, N_c=4, L=6, G=1
    # energy 4.0 keeps the stock v=0.5 receivers inside the convexity region
    return SystemConfig(K=k, Ts=4.0, Tc=1.0, Ttau=0.5, T_DS=3.0, snr_db=snr_db,
                        energies=(4.0,) * k)


def tiny_experiment(mode="convergence", axis="symbols", algos=None, **kw):
    defaults = dict(
        scenario="tiny",
        mode=mode,
        system=tiny_system(),
        algorithms=tuple(algos or [AlgoSpec("rake", "rake"), AlgoSpec("jio_rls", "jio_rls")]),
        axis=axis,
        trials=3,
        symbols=60,
        settle=30,
        master_seed=7,
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


class TestTrial:
    def test_deterministic_per_seed(self):
        cfg = tiny_experiment()
        a = run_trial(cfg, 0, 1)
        b = run_trial(cfg, 0, 1)
        assert a.stream_hash == b.stream_hash
        for name in ("rake", "jio_rls"):
            np.testing.assert_array_equal(a.err[name], b.err[name])

    def test_different_trials_different_streams(self):
        cfg = tiny_experiment()
        assert run_trial(cfg, 0, 0).stream_hash != run_trial(cfg, 0, 1).stream_hash

    def test_identical_stream_across_algorithm_lists(self):
        base = tiny_experiment()
        solo = tiny_experiment(algos=[AlgoSpec("rake", "rake")])
        assert run_trial(base, 0, 2).stream_hash == run_trial(solo, 0, 2).stream_hash

    def test_noise_free_single_user_rake_error_free(self):
        cfg = tiny_experiment(
            system=SystemConfig(K=1, Ts=4.0, Tc=1.0, Ttau=0.5, T_DS=3.0, snr_db=300.0),
            algos=[AlgoSpec("rake", "rake", {"bce": "genie"})],
        )
        res = run_trial(cfg, 0, 0)
        assert res.err["rake"].sum() == 0

    def test_divergence_flagged_and_excluded(self, monkeypatch):
        cfg = tiny_experiment(algos=[AlgoSpec("rake", "rake", {"bce": "genie"})])

        def bad_rake(self, r, p_hat):
            return complex(np.nan, 0.0), 1

        monkeypatch.setattr(harness.RakeMrc, "step", bad_rake)
        res = run_trial(cfg, 0, 0)
        assert res.diverged["rake"]
        assert res.err["rake"] is None
        rows, _ = aggregate_point(cfg, 0, [res])
        assert all(r.trials == 0 for r in rows if r.algorithm == "rake")

    def test_ry_estimator_needs_rls(self):
        cfg = tiny_experiment(algos=[AlgoSpec("bad", "rake", {"bce": "ry"})])
        with pytest.raises(ConfigError):
            run_trial(cfg, 0, 0)

    def test_coded_payload_round_trip_high_snr(self):
        cfg = tiny_experiment(
            system=tiny_system(k=1, snr_db=300.0),
            algos=[AlgoSpec("rake", "rake", {"bce": "genie"})],
            coding=True, symbols=80, settle=20,
        )
        res = run_trial(cfg, 0, 0)
        errors, bits = res.coded["rake"]
        assert bits > 0
        assert errors == 0


class TestSeeding:
    def test_trial_seeds_order_independent(self):
        s1 = trial_seed(9, 0, 3).generate_state(4)
        s2 = trial_seed(9, 0, 3).generate_state(4)
        np.testing.assert_array_equal(s1, s2)
        assert not np.array_equal(trial_seed(9, 0, 3).generate_state(4),
                                  trial_seed(9, 1, 3).generate_state(4))

    def test_synthesize_stream_shapes(self):
        cfg = tiny_experiment()
        rng = np.random.default_rng(trial_seed(7, 0, 0))
        received, bstream, mats, noise_var, message = synthesize_stream(cfg, rng)
        assert received.shape == (60, mats.dims.M)
        assert bstream.shape == (2, 60 + 2 * mats.dims.G)
        assert message is None
        assert np.all(bstream[:, 0] == 0) and np.all(bstream[:, -1] == 0)


class TestAggregation:
    def test_mean_of_per_trial_ber(self):
        cfg = tiny_experiment(mode="sweep", axis="snr_db", sweep_values=(16.0,))
        results = [run_trial(cfg, 0, t) for t in range(cfg.trials)]
        rows, _ = aggregate_point(cfg, 16.0, results)
        for name in ("rake", "jio_rls"):
            per_trial = [float(np.mean(r.err[name][cfg.settle:])) for r in results]
            row = [r for r in rows if r.algorithm == name and r.metric == "ber_uncoded"][0]
            assert abs(row.value - float(np.mean(per_trial))) <= 1e-12
            assert row.trials == cfg.trials

    def test_empty_algorithms_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(scenario="x", mode="convergence", system=tiny_system(),
                             algorithms=(), trials=1, symbols=10, settle=5,
                             master_seed=1)

    def test_sweep_without_values_rejected(self):
        with pytest.raises(ConfigError):
            tiny_experiment(mode="sweep", axis="snr_db")


class TestRunExperiment:
    def test_csv_deterministic_across_worker_counts(self, tmp_path, monkeypatch):
        cfg = tiny_experiment()
        monkeypatch.setenv("UWBJIO_THREADS", "1")
        run_experiment(cfg, str(tmp_path / "a"))
        monkeypatch.setenv("UWBJIO_THREADS", "2")
        run_experiment(cfg, str(tmp_path / "b"))
        a = (tmp_path / "a" / "tiny_convergence.csv").read_bytes()
        b = (tmp_path / "b" / "tiny_convergence.csv").read_bytes()
        assert a == b

    def test_rerun_overwrites_identically(self, tmp_path, monkeypatch):
        monkeypatch.delenv("UWBJIO_THREADS", raising=False)
        cfg = tiny_experiment(mode="sweep", axis="snr_db", sweep_values=(12.0, 16.0),
                              raw_output=True)
        paths1 = run_experiment(cfg, str(tmp_path))
        first = [open(p, "rb").read() for p in paths1]
        paths2 = run_experiment(cfg, str(tmp_path))
        second = [open(p, "rb").read() for p in paths2]
        assert paths1 == paths2
        assert first == second

    def test_csv_schema(self, tmp_path, monkeypatch):
        monkeypatch.delenv("UWBJIO_THREADS", raising=False)
        cfg = tiny_experiment(mode="sweep", axis="snr_db", sweep_values=(12.0,),
                              raw_output=True, coding=True, symbols=80, settle=20)
        paths = run_experiment(cfg, str(tmp_path))
        agg_lines = open(paths[0], encoding="utf-8").read().splitlines()
        assert agg_lines[0] == "experiment,algorithm,axis,axis_value,metric,value,trials,symbols"
        metrics = {line.split(",")[4] for line in agg_lines[1:]}
        assert {"ber_uncoded", "sinr_db", "ber_coded"} <= metrics
        raw_lines = open(paths[1], encoding="utf-8").read().splitlines()
        assert raw_lines[0] == "experiment,algorithm,trial,symbol_index,metric,value"

    def test_channel_mse_mode(self, tmp_path, monkeypatch):
        monkeypatch.delenv("UWBJIO_THREADS", raising=False)
        cfg = tiny_experiment(mode="channel_mse",
                              algos=[AlgoSpec("bce_power", "rake", {"bce": "power"})])
        paths = run_experiment(cfg, str(tmp_path))
        lines = open(paths[0], encoding="utf-8").read().splitlines()
        assert any(",channel_mse," in line for line in lines[1:])

    def test_workers_parallel_results_match_serial(self, monkeypatch):
        cfg = tiny_experiment(trials=4)
        serial = run_cells(cfg, 0, workers=1)
        parallel = run_cells(cfg, 0, workers=2)
        for a, b in zip(serial, parallel):
            assert a.stream_hash == b.stream_hash
            np.testing.assert_array_equal(a.err["jio_rls"], b.err["jio_rls"])


CONFIG_TEXT = """
[experiment]
scenario = parsed
trials = 2
symbols = 40
settle = 20
seed = 11
coding = off

[system]
users = 2
Ts = 4
Tc = 1
Ttau = 0.5
T_DS = 3
snr_db = 14

[sweep]
values = 10 14

[algo rake]
bce = power

[algo jio_rls fast]
D = 2
alpha = 0.995
"""


class TestConfigParsing:
    def test_parse_and_run(self, tmp_path, monkeypatch):
        monkeypatch.delenv("UWBJIO_THREADS", raising=False)
        path = tmp_path / "exp.cfg"
        path.write_text(CONFIG_TEXT)
        cfg = parse_config(str(path), "sweep", "snr_db")
        assert cfg.scenario == "parsed"
        assert cfg.trials == 2
        assert cfg.sweep_values == (10.0, 14.0)
        names = [a.name for a in cfg.algorithms]
        assert names == ["rake", "fast"]
        assert cfg.algorithms[1].params["D"] == 2
        run_experiment(cfg, str(tmp_path / "out"))

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            parse_config("/nonexistent/x.cfg", "convergence", "symbols")


class TestCli:
    def test_missing_config_exits_2(self, capsys):
        assert cli_main(["convergence"]) == 2

    def test_unknown_flag_exits_2(self, capsys):
        assert cli_main(["convergence", "--bogus"]) == 2

    def test_no_command_exits_2(self, capsys):
        assert cli_main([]) == 2

    def test_certify_convexity_nonconvex(self, capsys):
        assert cli_main(["certify-convexity", "--e1", "1", "--v", "0.5"]) == 0
        out = capsys.readouterr().out
        assert "0.25" in out and "not certified" in out

    def test_certify_convexity_convex(self, capsys):
        assert cli_main(["certify-convexity", "--e1", "3", "--v", "1.0"]) == 0
        out = capsys.readouterr().out
        assert "positive definite" in out

    def test_end_to_end_run(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("UWBJIO_THREADS", raising=False)
        path = tmp_path / "exp.cfg"
        path.write_text(CONFIG_TEXT)
        code = cli_main(["sweep-snr", "--config", str(path), "--trials", "1",
                         "--seed", "3", "--out", str(tmp_path / "res"),
                         "--algo", "rake"])
        assert code == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert out and out[0].endswith("parsed_snr_db.csv")
        assert os.path.isfile(out[0])

    def test_bad_algo_filter_exits_2(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(CONFIG_TEXT)
        assert cli_main(["sweep-snr", "--config", str(path), "--algo", "nope"]) == 2
