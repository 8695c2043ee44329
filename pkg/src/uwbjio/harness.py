"""Seeded Monte Carlo experiments over the receiver zoo, with CSV output.

An experiment is a grid of (axis value, trial) cells.  Every trial draws one
channel and one set of spreading codes, synthesizes the full received-sample
stream once, and runs every configured algorithm over that identical stream.
Per-trial seeds are derived from the master seed and the cell coordinates, so
results are bit-identical for a fixed (config, seed) regardless of how many
worker processes execute the trials.

Outputs are two CSV schemas:

* aggregated -- ``experiment,algorithm,axis,axis_value,metric,value,trials,symbols``
  (one metric per row; values are trial means)
* raw        -- ``experiment,algorithm,trial,symbol_index,metric,value``
  (per-symbol series where they exist, ``symbol_index = -1`` for per-trial
  scalars)

Decisions are counted against the transmitted bits after removing the blind
estimates' phase ambiguity with the first-tap reference (metric-side only;
the receivers always run on raw estimates).  The worker count is capped by
the ``UWBJIO_THREADS`` environment variable (unset -> 1, ``0`` -> auto).
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import hashlib
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import coding
from .analysis import channel_mse, interference_signatures, phase_offset, sinr
from .baselines import RakeMrc
from .blind_channel import (
    GenieEstimator,
    LeakageSgEstimator,
    PowerMethodEstimator,
    RyPowerEstimator,
)
from .channel import SvParams, generate_sv_channel
from .coding import CodeConfig
from .jio_nsg import FullRankNsg, JioNsg, JioNsgConfig
from .jio_rls import FullRankRls, JioRls, JioRlsConfig
from .rank_adapt import RankAdaptConfig, RankAdaptiveJioRls
from .signal_model import (
    ConfigError,
    NbiConfig,
    SystemConfig,
    build_matrices,
    derive_dimensions,
    generate_spreading_codes,
    noise_variance,
    sign_decision,
)

ALGO_KINDS = ("rake", "fr_nsg", "fr_rls", "jio_nsg", "jio_rls", "jio_rls_auto")

_ALGO_DEFAULTS: dict[str, dict] = {
    "rake": dict(bce="power"),
    "fr_nsg": dict(v=1.0, mu_w0=0.025, bce="leakage"),
    "fr_rls": dict(alpha=0.9998, delta=10.0, v=1.0, dbar_form="paper", bce="ry"),
    "jio_nsg": dict(D=4, c_max=3, v=1.0, mu_t0=0.075, mu_w0=0.005, bce="leakage"),
    "jio_rls": dict(
        D=3, alpha=0.9998, delta=10.0, v=0.5, w_clamp=1e-4, dbar_form="paper", bce="ry"
    ),
    "jio_rls_auto": dict(
        D_min=3, D_max=8, lambda_D=0.998, alpha=0.9998, delta=10.0, v=0.5,
        w_clamp=1e-4, dbar_form="paper", bce="ry",
    ),
}

_BCE_DEFAULTS = dict(
    bce_m=3, bce_alpha=0.9998, bce_delta=10.0, bce_leak=0.9998, bce_mu_scale=0.5,
    bce_refresh_head=500, bce_refresh_every=10,
)


@dataclass(frozen=True)
class AlgoSpec:
    """One algorithm instance in an experiment (name shows up in the CSV)."""

    name: str
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ALGO_KINDS:
            raise ConfigError(f"unknown algorithm kind {self.kind!r}")
        merged = dict(_BCE_DEFAULTS)
        merged.update(_ALGO_DEFAULTS[self.kind])
        merged.update(self.params)
        object.__setattr__(self, "params", merged)


def default_algorithms() -> list[AlgoSpec]:
    return [AlgoSpec(k, k) for k in ("rake", "fr_nsg", "fr_rls", "jio_nsg", "jio_rls")]


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    mode: str  # convergence | sweep | channel_mse
    system: SystemConfig
    sv: SvParams = SvParams()
    algorithms: tuple[AlgoSpec, ...] = ()
    axis: str = "symbols"
    sweep_values: tuple = ()
    trials: int = 50
    symbols: int = 1500
    settle: int = 1000
    coding: bool = False
    code: CodeConfig = CodeConfig()
    master_seed: int = 1
    snr_ref: str = "signature"
    raw_output: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trial count must be >= 1")
        if not self.algorithms:
            raise ConfigError("empty algorithm list")
        if self.mode not in ("convergence", "sweep", "channel_mse"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.mode == "sweep" and not self.sweep_values:
            raise ConfigError(f"sweep over {self.axis!r} needs sweep values")
        if not 0 <= self.settle < self.symbols:
            raise ConfigError("need 0 <= settle < symbols")


def trial_seed(master_seed: int, axis_index: int, trial: int) -> np.random.SeedSequence:
    """Deterministic, order-independent per-cell seed derivation."""
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(axis_index, trial))


def _apply_axis(cfg: ExperimentConfig, value) -> ExperimentConfig:
    """Specialize the experiment for one sweep-axis value."""
    if cfg.mode != "sweep":
        return cfg
    sysc = cfg.system
    if cfg.axis == "snr_db":
        sysc = dataclasses.replace(sysc, snr_db=float(value))
        return dataclasses.replace(cfg, system=sysc)
    if cfg.axis == "users":
        k = int(value)
        sysc = dataclasses.replace(sysc, K=k, energies=(1.0,) * k)
        return dataclasses.replace(cfg, system=sysc)
    if cfg.axis == "sir_db":
        nbi = sysc.nbi if sysc.nbi is not None else NbiConfig(sir_db=float(value))
        nbi = dataclasses.replace(nbi, sir_db=float(value))
        return dataclasses.replace(cfg, system=dataclasses.replace(sysc, nbi=nbi))
    if cfg.axis == "rank":
        algos = []
        for spec in cfg.algorithms:
            params = dict(spec.params)
            if spec.kind in ("jio_nsg", "jio_rls"):
                params["D"] = int(value)
            algos.append(AlgoSpec(spec.name, spec.kind, params))
        return dataclasses.replace(cfg, algorithms=tuple(algos))
    raise ConfigError(f"unknown sweep axis {cfg.axis!r}")


def _build_receiver(spec: AlgoSpec, m_dim: int):
    p = spec.params
    if spec.kind == "rake":
        return RakeMrc()
    if spec.kind == "fr_nsg":
        return FullRankNsg(m_dim, v=p["v"], mu_w0=p["mu_w0"])
    if spec.kind == "fr_rls":
        return FullRankRls(m_dim, alpha=p["alpha"], delta=p["delta"], v=p["v"],
                           dbar_form=p["dbar_form"])
    if spec.kind == "jio_nsg":
        return JioNsg(m_dim, JioNsgConfig(D=p["D"], c_max=p["c_max"], v=p["v"],
                                          mu_t0=p["mu_t0"], mu_w0=p["mu_w0"]))
    if spec.kind == "jio_rls":
        return JioRls(m_dim, JioRlsConfig(D=p["D"], alpha=p["alpha"], delta=p["delta"],
                                          v=p["v"], w_clamp=p["w_clamp"],
                                          dbar_form=p["dbar_form"]))
    if spec.kind == "jio_rls_auto":
        rls = JioRlsConfig(D=p["D_max"], alpha=p["alpha"], delta=p["delta"], v=p["v"],
                           w_clamp=p["w_clamp"], dbar_form=p["dbar_form"])
        return RankAdaptiveJioRls(m_dim, rls, RankAdaptConfig(
            D_min=p["D_min"], D_max=p["D_max"], lambda_D=p["lambda_D"]))
    raise ConfigError(f"unknown algorithm kind {spec.kind!r}")


def _build_estimator(spec: AlgoSpec, pr_se: np.ndarray, p_true: np.ndarray, h_true: np.ndarray):
    p = spec.params
    kind = p["bce"]
    if kind == "genie":
        return GenieEstimator(p_true, h_true)
    if kind == "power":
        return PowerMethodEstimator(pr_se, delta=p["bce_delta"], alpha=p["bce_alpha"],
                                    m=p["bce_m"], refresh_head=p["bce_refresh_head"],
                                    refresh_every=p["bce_refresh_every"])
    if kind == "leakage":
        return LeakageSgEstimator(pr_se, leak=p["bce_leak"], mu_scale=p["bce_mu_scale"],
                                  m=p["bce_m"], refresh_head=p["bce_refresh_head"],
                                  refresh_every=p["bce_refresh_every"])
    if kind == "ry":
        return RyPowerEstimator(pr_se, m=p["bce_m"], refresh_head=p["bce_refresh_head"],
                                refresh_every=p["bce_refresh_every"])
    raise ConfigError(f"unknown channel estimator {kind!r}")


@dataclass
class TrialResult:
    trial: int
    stream_hash: str
    n_symbols: int
    err: dict = field(default_factory=dict)       # algo -> uint8 array or None
    mse: dict = field(default_factory=dict)       # algo -> float array
    sinr_db: dict = field(default_factory=dict)   # algo -> float
    coded: dict = field(default_factory=dict)     # algo -> (errors, bits) or None
    diverged: dict = field(default_factory=dict)  # algo -> bool


def synthesize_stream(
    cfg: ExperimentConfig, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, object, float, np.ndarray]:
    """Draw one trial's channel, codes, symbols and received-sample stream.

    Returns (received (n, M), padded symbol stream (K, n+2G), matrices,
    noise variance, message bits for the coded payload or None).
    """
    sysc = cfg.system
    dims = derive_dimensions(sysc)
    codes = generate_spreading_codes(sysc.K, sysc.N_c, rng)
    channels = [generate_sv_channel(cfg.sv, sysc, dims, rng).taps for _ in range(sysc.K)]
    mats = build_matrices(sysc, dims, codes, channels)
    noise_var = noise_variance(sysc, mats.p[0], cfg.snr_ref)

    n, g = cfg.symbols, dims.G
    bstream = np.zeros((sysc.K, n + 2 * g))
    bstream[:, g : g + n] = rng.integers(0, 2, size=(sysc.K, n)) * 2.0 - 1.0
    message = None
    if cfg.coding:
        budget = n - cfg.settle
        msg_len = coding.max_message_bits(cfg.code, budget)
        if msg_len < 1:
            raise ConfigError("coded payload does not fit after the settle window")
        message = rng.integers(0, 2, size=msg_len).astype(np.uint8)
        coded_bits = coding.encode(message, cfg.code)
        bstream[0, g + cfg.settle : g + cfg.settle + coded_bits.size] = \
            coding.bits_to_symbols(coded_bits)

    received = np.zeros((n, dims.M), dtype=complex)
    idx = np.arange(n)
    for k in range(sysc.K):
        amp = math.sqrt(sysc.energies[k])
        received += amp * np.outer(bstream[k, g + idx], mats.p[k])
        for gg in range(1, g + 1):
            received += amp * np.outer(bstream[k, g + idx - gg], mats.isi_minus[k, gg - 1])
            received += amp * np.outer(bstream[k, g + idx + gg], mats.isi_plus[k, gg - 1])
    if noise_var > 0.0:
        scale = math.sqrt(noise_var / 2.0)
        received += scale * (rng.standard_normal((n, dims.M))
                             + 1j * rng.standard_normal((n, dims.M)))
    if sysc.nbi is not None:
        theta = sysc.nbi.theta_j
        if theta is None:
            theta = float(rng.uniform(0.0, np.pi))
        t = (idx[:, None] * sysc.N_c + np.arange(dims.M)[None, :]) * sysc.Tc
        phase = 2.0 * np.pi * sysc.nbi.f_d * 1e-3 * t + theta
        received += math.sqrt(sysc.energies[0] * 10.0 ** (-sysc.nbi.sir_db / 10.0)) \
            * np.exp(1j * phase)
    return received, bstream, mats, noise_var, message


def _effective_filter(rx, est) -> np.ndarray:
    if isinstance(rx, RakeMrc):
        return np.asarray(est.p_hat, dtype=complex).copy()
    if isinstance(rx, (FullRankNsg, FullRankRls)):
        return rx.w.copy()
    if isinstance(rx, RankAdaptiveJioRls):
        d = rx.d_opt
        return rx.inner.t_mat[:, :d] @ rx.inner.w[:d]
    return rx.t_mat @ rx.w


def run_trial(cfg: ExperimentConfig, axis_index: int, trial: int) -> TrialResult:
    """One full Monte Carlo trial: identical stream, every algorithm."""
    rng = np.random.default_rng(trial_seed(cfg.master_seed, axis_index, trial))
    received, bstream, mats, noise_var, message = synthesize_stream(cfg, rng)
    sysc, dims = cfg.system, mats.dims
    n, g = cfg.symbols, dims.G
    b_true = bstream[0, g : g + n]
    pr_se = mats.P_r @ mats.S_e[0]
    h_true = _true_channel(mats)
    int_sigs, int_energies = interference_signatures(mats)

    result = TrialResult(trial=trial, stream_hash=hashlib.sha256(received.tobytes()).hexdigest(),
                         n_symbols=n)
    want_sinr = cfg.mode == "sweep"
    want_mse = cfg.mode == "channel_mse"

    for spec in cfg.algorithms:
        rx = _build_receiver(spec, dims.M)
        est = _build_estimator(spec, pr_se, mats.p[0], h_true)
        uses_ry_hook = spec.params["bce"] == "ry"
        if uses_ry_hook and not isinstance(rx, (JioRls, FullRankRls, RankAdaptiveJioRls)):
            raise ConfigError(
                f"algorithm {spec.name!r}: the 'ry' estimator needs an RLS receiver")
        err = np.zeros(n, dtype=np.uint8)
        soft = np.zeros(n) if cfg.coding else None
        mse = np.zeros(n) if want_mse else None
        theta = 0.0
        seen_version = -1
        diverged = False
        for i in range(n):
            r = received[i]
            try:
                if uses_ry_hook:
                    y, _ = rx.step(r, bce=est)
                else:
                    if hasattr(est, "update"):
                        est.update(r)
                    y, _ = rx.step(r, est.p_hat)
            except Exception:
                diverged = True
                break
            if not (np.isfinite(y.real) and np.isfinite(y.imag)):
                diverged = True
                break
            if est.version != seen_version:
                theta = phase_offset(est.h_hat, h_true) if hasattr(est, "h_hat") else 0.0
                seen_version = est.version
            y_corr = y * complex(math.cos(theta), math.sin(theta))
            err[i] = 1 if sign_decision(y_corr) != int(b_true[i]) else 0
            if soft is not None:
                soft[i] = y_corr.real
            if mse is not None:
                mse[i] = channel_mse(est.h_hat, h_true) if hasattr(est, "h_hat") else 0.0
        result.diverged[spec.name] = diverged
        result.err[spec.name] = None if diverged else err
        if mse is not None and not diverged:
            result.mse[spec.name] = mse
        if want_sinr and not diverged:
            f = _effective_filter(rx, est)
            result.sinr_db[spec.name] = sinr(
                f[:, None], np.ones(1, dtype=complex), mats.p[0], sysc.energies[0],
                int_sigs, int_energies, noise_var)
        if cfg.coding and not diverged and message is not None:
            n_coded = coding.punctured_length(cfg.code, message.size + cfg.code.constraint_length - 1)
            window = soft[cfg.settle : cfg.settle + n_coded]
            decoded = coding.viterbi_decode(window, cfg.code)
            result.coded[spec.name] = (int(np.sum(decoded != message)), int(message.size))
    return result


def _true_channel(mats) -> np.ndarray:
    """Recover the desired user's taps from its channel Toeplitz matrix."""
    return mats.H[0][: mats.dims.L, 0].copy()


def _trial_cell(args):
    cfg, axis_index, trial = args
    return run_trial(cfg, axis_index, trial)


def resolve_workers() -> int:
    """Worker count from UWBJIO_THREADS (unset -> 1, 0 -> all cores)."""
    raw = os.environ.get("UWBJIO_THREADS", "").strip()
    if not raw:
        return 1
    n = int(raw)
    if n == 0:
        return os.cpu_count() or 1
    return max(1, n)


def run_cells(cfg: ExperimentConfig, axis_index: int, workers: int) -> list[TrialResult]:
    """All trials of one grid point, in trial order regardless of scheduling."""
    cells = [(cfg, axis_index, t) for t in range(cfg.trials)]
    if workers <= 1 or cfg.trials == 1:
        return [run_trial(cfg, axis_index, t) for t in range(cfg.trials)]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_trial_cell, cells))
    return results


@dataclass(frozen=True)
class MetricSeries:
    """One aggregated CSV row."""

    experiment: str
    algorithm: str
    axis: str
    axis_value: object
    metric: str
    value: float
    trials: int
    symbols: int


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def aggregate_point(
    cfg: ExperimentConfig, axis_value, results: list[TrialResult]
) -> tuple[list[MetricSeries], list[tuple]]:
    """Reduce one grid point's trials to aggregated and raw rows."""
    agg: list[MetricSeries] = []
    raw: list[tuple] = []
    n = cfg.symbols
    for spec in cfg.algorithms:
        name = spec.name
        errs = [r.err[name] for r in results if not r.diverged[name]]
        valid = len(errs)

        def add(metric: str, value: float, axis=cfg.axis, axis_value=axis_value):
            agg.append(MetricSeries(cfg.scenario, name, axis, axis_value, metric,
                                    value, valid, n))

        if cfg.mode == "convergence":
            if valid:
                mean_err = np.mean(np.stack(errs), axis=0)
                for i in range(n):
                    add("ber_uncoded", float(mean_err[i]), axis="symbols", axis_value=i)
            if cfg.raw_output:
                for r in results:
                    if not r.diverged[name]:
                        for i in range(n):
                            raw.append((cfg.scenario, name, r.trial, i, "ber_uncoded",
                                        _fmt(int(r.err[name][i]))))
        elif cfg.mode == "channel_mse":
            series = [r.mse[name] for r in results
                      if not r.diverged[name] and name in r.mse]
            if series:
                mean_mse = np.mean(np.stack(series), axis=0)
                for i in range(n):
                    add("channel_mse", float(mean_mse[i]), axis="symbols", axis_value=i)
            if cfg.raw_output:
                for r in results:
                    if name in r.mse:
                        for i in range(n):
                            raw.append((cfg.scenario, name, r.trial, i, "channel_mse",
                                        _fmt(float(r.mse[name][i]))))
        else:  # sweep
            if valid:
                per_trial_ber = [float(np.mean(e[cfg.settle:])) for e in errs]
                add("ber_uncoded", float(np.mean(per_trial_ber)))
                sinrs = [r.sinr_db[name] for r in results
                         if not r.diverged[name] and name in r.sinr_db]
                if sinrs:
                    add("sinr_db", float(np.mean(sinrs)))
                if cfg.coding:
                    coded = [r.coded[name] for r in results
                             if not r.diverged[name] and name in r.coded]
                    if coded:
                        per_trial = [e / b for e, b in coded]
                        add("ber_coded", float(np.mean(per_trial)))
            if cfg.raw_output:
                for r in results:
                    if not r.diverged[name]:
                        ber = float(np.mean(r.err[name][cfg.settle:]))
                        raw.append((cfg.scenario, name, r.trial, -1, "ber_uncoded", _fmt(ber)))
    return agg, raw


AGGREGATED_HEADER = "experiment,algorithm,axis,axis_value,metric,value,trials,symbols"
RAW_HEADER = "experiment,algorithm,trial,symbol_index,metric,value"


def write_aggregated_csv(path: str, rows: list[MetricSeries]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(AGGREGATED_HEADER + "\n")
        for r in rows:
            f.write(",".join([
                r.experiment, r.algorithm, r.axis, _fmt(r.axis_value), r.metric,
                _fmt(r.value), str(r.trials), str(r.symbols),
            ]) + "\n")


def write_raw_csv(path: str, rows: list[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(RAW_HEADER + "\n")
        for row in rows:
            f.write(",".join(str(x) for x in row) + "\n")


def run_experiment(cfg: ExperimentConfig, out_dir: str) -> list[str]:
    """Run the full grid and write CSVs; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    workers = resolve_workers()
    if cfg.mode == "sweep":
        points = list(enumerate(cfg.sweep_values))
    else:
        points = [(0, None)]
    agg_rows: list[MetricSeries] = []
    raw_rows: list[tuple] = []
    for axis_index, value in points:
        point_cfg = _apply_axis(cfg, value)
        results = run_cells(point_cfg, axis_index, workers)
        a, r = aggregate_point(point_cfg, value if value is not None else 0, results)
        agg_rows.extend(a)
        raw_rows.extend(r)
    tag = cfg.axis if cfg.mode == "sweep" else cfg.mode
    paths = [os.path.join(out_dir, f"{cfg.scenario}_{tag}.csv")]
    write_aggregated_csv(paths[0], agg_rows)
    if cfg.raw_output:
        raw_path = os.path.join(out_dir, f"{cfg.scenario}_{tag}_raw.csv")
        write_raw_csv(raw_path, raw_rows)
        paths.append(raw_path)
    return paths
