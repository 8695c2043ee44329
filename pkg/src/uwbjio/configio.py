"""Experiment configuration files: flat key=value text with [section] headers.

Sections:

  [experiment]   scenario, trials, symbols, settle, coding, seed, snr_ref, raw
  [system]       users, Ts, Tc, Ttau, T_DS, snr_db, rolloff, energies
  [nbi]          sir_db, f_d, theta          (optional; enables the jammer)
  [channel]      clusters, rays, cluster_rate, ray_rate, cluster_decay, ray_decay
  [code]         generators (octal), constraint_length
  [sweep]        values                      (whitespace-separated numbers)
  [algo KIND]    or [algo KIND LABEL]        one per algorithm; keys override
                 the per-kind defaults (D, c_max, v, mu_t0, mu_w0, alpha,
                 delta, w_clamp, dbar_form, D_min, D_max, lambda_D, bce,
                 bce_m, bce_alpha, bce_delta, bce_leak, bce_mu_scale,
                 bce_refresh_head, bce_refresh_every)

Unlisted sections/keys fall back to the documented defaults.  `#` starts a
comment.
"""

from __future__ import annotations

import configparser
import os

from .channel import SvParams
from .coding import CodeConfig
from .harness import AlgoSpec, ExperimentConfig, default_algorithms
from .signal_model import ConfigError, NbiConfig, SystemConfig

_INT_KEYS = {
    "D", "c_max", "D_min", "D_max", "bce_m", "bce_refresh_head",
    "bce_refresh_every", "constraint_length",
}
_STR_KEYS = {"dbar_form", "bce"}
# configparser lowercases option names; restore the canonical spelling
_KEY_ALIASES = {"d": "D", "d_min": "D_min", "d_max": "D_max", "lambda_d": "lambda_D"}


def _algo_value(key: str, raw: str):
    if key in _STR_KEYS:
        return raw.strip()
    if key in _INT_KEYS:
        return int(raw)
    return float(raw)


def parse_config(path: str, mode: str, axis: str) -> ExperimentConfig:
    """Load an experiment configuration for the given run mode."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    exp = cp["experiment"] if cp.has_section("experiment") else {}
    sys_sec = cp["system"] if cp.has_section("system") else {}

    nbi = None
    if cp.has_section("nbi"):
        sec = cp["nbi"]
        nbi = NbiConfig(
            sir_db=float(sec.get("sir_db", "10")),
            f_d=float(sec.get("f_d", "23")),
            theta_j=float(sec["theta"]) if "theta" in sec else None,
        )

    k = int(sys_sec.get("users", "7"))
    energies_raw = sys_sec.get("energies", "").split()
    if energies_raw and len(energies_raw) == 1:
        energies = (float(energies_raw[0]),) * k
    elif energies_raw:
        energies = tuple(float(e) for e in energies_raw)
    else:
        # default per-user symbol energy 4.0: the stock constraint constant
        # v = 0.5 then sits on the convexity boundary E1 v^2 = 1
        energies = (4.0,) * k
    system = SystemConfig(
        K=k,
        Ts=float(sys_sec.get("ts", "12")),
        Tc=float(sys_sec.get("tc", "0.375")),
        Ttau=float(sys_sec.get("ttau", "0.125")),
        T_DS=float(sys_sec.get("t_ds", "10")),
        snr_db=float(sys_sec.get("snr_db", "20")),
        energies=energies,
        rolloff=float(sys_sec.get("rolloff", "0.5")),
        nbi=nbi,
    )

    sv = SvParams()
    if cp.has_section("channel"):
        sec = cp["channel"]
        sv = SvParams(
            Lc=int(sec.get("clusters", str(sv.Lc))),
            Lr=int(sec.get("rays", str(sv.Lr))),
            cluster_rate=float(sec.get("cluster_rate", str(sv.cluster_rate))),
            ray_rate=float(sec.get("ray_rate", str(sv.ray_rate))),
            cluster_decay=float(sec.get("cluster_decay", str(sv.cluster_decay))),
            ray_decay=float(sec.get("ray_decay", str(sv.ray_decay))),
        )

    code = CodeConfig()
    if cp.has_section("code"):
        sec = cp["code"]
        gens = sec.get("generators", "7 5 5").split()
        code = CodeConfig(
            generators=tuple(int(g, 8) for g in gens),
            constraint_length=int(sec.get("constraint_length", "3")),
        )

    algos = []
    for section in cp.sections():
        parts = section.split()
        if parts[0] != "algo":
            continue
        if len(parts) not in (2, 3):
            raise ConfigError(f"bad algorithm section [{section}]")
        kind = parts[1]
        name = parts[2] if len(parts) == 3 else kind
        params = {}
        for key, raw in cp[section].items():
            key = _KEY_ALIASES.get(key, key)
            params[key] = _algo_value(key, raw)
        algos.append(AlgoSpec(name, kind, params))
    if not algos:
        algos = default_algorithms()

    sweep_values: tuple = ()
    if cp.has_section("sweep"):
        values = cp["sweep"].get("values", "").split()
        caster = int if axis in ("users", "rank") else float
        sweep_values = tuple(caster(v) for v in values)

    try:
        return ExperimentConfig(
            scenario=exp.get("scenario", os.path.splitext(os.path.basename(path))[0]),
            mode=mode,
            system=system,
            sv=sv,
            algorithms=tuple(algos),
            axis=axis,
            sweep_values=sweep_values,
            trials=int(exp.get("trials", "50")),
            symbols=int(exp.get("symbols", "1500")),
            settle=int(exp.get("settle", "1000")),
            coding=str(exp.get("coding", "off")).strip().lower() in ("on", "true", "yes", "1"),
            code=code,
            master_seed=int(exp.get("seed", "1")),
            snr_ref=exp.get("snr_ref", "signature").strip(),
            raw_output=str(exp.get("raw", "off")).strip().lower() in ("on", "true", "yes", "1"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
