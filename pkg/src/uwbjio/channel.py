"""Clustered dense-multipath channel generation.

Channels follow a Saleh-Valenzuela structure: clusters arrive as a Poisson
process of rate ``cluster_rate``, rays inside a cluster as a Poisson process
of rate ``ray_rate``, and the mean ray power decays exponentially with both
the cluster start and the in-cluster delay.  Ray gains are Rayleigh in
magnitude with uniform phase.  Arrivals are binned to the nearest tap of the
``Ttau`` grid and the realization is normalized to unit energy; the channel
is held constant over a whole transmission.

The default rates and decays are residential-indoor-like; because the
simulated delay spread is short, the decay constants are rescaled (see
`generate_sv_channel`) so that at least 99% of the nominal power profile
falls inside ``T_DS``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal_model import ConfigError, DimensionSet, SystemConfig


@dataclass(frozen=True)
class SvParams:
    """Cluster/ray arrival and decay parameters (rates in 1/ns, decays in ns)."""

    Lc: int = 3
    Lr: int = 50
    cluster_rate: float = 0.047
    ray_rate: float = 1.54
    cluster_decay: float = 22.61
    ray_decay: float = 12.53
    rng_seed: int | None = None

    def __post_init__(self):
        if self.Lc < 1 or self.Lr < 1 or self.Lc * self.Lr < 1:
            raise ConfigError("need at least one cluster and one ray")
        if min(self.cluster_rate, self.ray_rate, self.cluster_decay, self.ray_decay) <= 0:
            raise ConfigError("rates and decay constants must be positive")


@dataclass(frozen=True)
class ChannelRealization:
    """Discrete CIR: ``taps[l]`` is the complex gain at delay ``l * ttau``."""

    taps: np.ndarray
    ttau: float


def normalize_channel(h: np.ndarray) -> np.ndarray:
    """Scale to unit norm, preserving direction."""
    h = np.asarray(h, dtype=complex)
    norm = np.linalg.norm(h)
    if norm == 0.0:
        raise ValueError("cannot normalize a zero channel")
    return h / norm


_MAX_RETRIES = 32


def generate_sv_channel(
    params: SvParams,
    cfg: SystemConfig,
    dims: DimensionSet,
    rng: np.random.Generator | int | None = None,
) -> ChannelRealization:
    """Draw one unit-energy channel realization on the ``Ttau`` tap grid.

    The first cluster and the first ray of every cluster arrive at offset 0;
    later arrivals have exponential gaps.  Arrivals binned past ``T_DS`` are
    discarded.  If a draw ends up with no in-window energy (possible only for
    pathological parameters) it is retried a bounded number of times.
    """
    if dims.L < 1:
        raise ConfigError("need at least one channel tap")
    if rng is None:
        rng = np.random.default_rng(params.rng_seed)
    elif not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)

    # shrink the decay profile so ~99% of exp(-t/decay) mass sits inside T_DS
    scale = min(1.0, (cfg.T_DS / np.log(100.0)) / params.cluster_decay)
    gamma_c = params.cluster_decay * scale
    gamma_r = params.ray_decay * scale

    for _ in range(_MAX_RETRIES):
        taps = np.zeros(dims.L, dtype=complex)
        t_cluster = 0.0
        got_energy = False
        for u in range(params.Lc):
            if u > 0:
                t_cluster += rng.exponential(1.0 / params.cluster_rate)
            t_ray = 0.0
            for v in range(params.Lr):
                if v > 0:
                    t_ray += rng.exponential(1.0 / params.ray_rate)
                t = t_cluster + t_ray
                l = int(round(t / cfg.Ttau))
                mean_power = np.exp(-t_cluster / gamma_c) * np.exp(-t_ray / gamma_r)
                magnitude = rng.rayleigh(np.sqrt(mean_power / 2.0))
                phase = rng.uniform(0.0, 2.0 * np.pi)
                if l >= dims.L:
                    continue  # beyond the delay spread
                taps[l] += magnitude * np.exp(1j * phase)
                got_energy = True
        if got_energy and np.linalg.norm(taps) > 0.0:
            return ChannelRealization(taps=normalize_channel(taps), ttau=cfg.Ttau)
    raise RuntimeError(
        f"no multipath energy inside T_DS={cfg.T_DS}ns after {_MAX_RETRIES} draws"
    )


def save_channel(path, ch: ChannelRealization) -> None:
    """Write taps as text, one 're im' pair per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# ttau {float(ch.ttau)!r}\n")
        for tap in ch.taps:
            f.write(f"{float(tap.real)!r} {float(tap.imag)!r}\n")


def load_channel(path) -> ChannelRealization:
    """Read taps written by `save_channel`."""
    ttau = None
    taps = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "ttau":
                    ttau = float(parts[1])
                continue
            re_s, im_s = line.split()
            taps.append(complex(float(re_s), float(im_s)))
    if ttau is None or not taps:
        raise ValueError(f"{path} is not a channel tap file")
    return ChannelRealization(taps=np.asarray(taps, dtype=complex), ttau=ttau)
