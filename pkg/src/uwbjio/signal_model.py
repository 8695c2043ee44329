"""Chip-rate discrete signal model for a multiuser BPSK DS-UWB uplink.

Each user spreads BPSK symbols with a random binary code (``N_c`` chips per
symbol), shapes chips with a root-raised-cosine pulse of one chip width, and
transmits over a dense multipath channel of ``L`` resolvable components at
resolution ``Ttau``.  The receiver chip-match-filters and samples at the chip
rate, collecting ``M`` observation samples per symbol.  Everything here is
expressed at the ``Ttau`` sample grid through a small set of structured
matrices:

* ``P_t``  -- pulse shaping, (Ts/Ttau, N_c)
* ``P_r``  -- matched filter + chip-rate sampling, (M, M_H)
* ``S_e,k``-- code-waveform Toeplitz matrix, (M_H, L), one per user
* ``H_k``  -- channel Toeplitz matrix, (M_H, Ts/Ttau), one per user

so that the in-window observation is ``r(i) = sum_k sqrt(E_k) P_r S_e,k h_k
b_k(i) + isi + noise`` with the intersymbol term assembled from triangular
partitions of the channel matrix for the ``2G`` overlapping neighbours.

A brute-force time-domain oracle (`oracle_received_convolution`) realizes the
same observation by direct convolution and chip integration, independent of
the Toeplitz machinery; the test suite holds the two routes together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    """Raised when system parameters are inconsistent (non-integer ratios,
    non-positive durations/energies, shape mismatches)."""


def _exact_int_ratio(num: float, den: float, what: str) -> int:
    ratio = num / den
    nearest = round(ratio)
    if nearest < 1 or abs(ratio - nearest) > 1e-9:
        raise ConfigError(f"{what} = {num}/{den} = {ratio} is not a positive integer")
    return int(nearest)


def _ceil_int(x: float) -> int:
    # guard against float dust pushing an exact integer ratio over the edge
    return int(math.ceil(x - 1e-9))


@dataclass(frozen=True)
class NbiConfig:
    """Single-tone narrowband interferer.

    ``sir_db`` is the desired-user signal-to-interference ratio; the jammer
    power is ``P_j = E_1 * 10**(-sir_db/10)``.  ``f_d`` is the offset of the
    tone from the UWB carrier in MHz.  ``theta_j`` is the tone phase in rad;
    leave ``None`` to have the harness draw it uniformly on [0, pi) per trial.
    """

    sir_db: float
    f_d: float = 23.0
    theta_j: float | None = None


@dataclass(frozen=True)
class SystemConfig:
    """Physical and system parameters.  All durations in ns.

    ``energies`` holds one transmit energy per user (user 0 is the desired
    user).  ``snr_db`` is referenced to the desired user's effective
    signature energy, see `noise_variance`.
    """

    K: int
    Ts: float
    Tc: float
    Ttau: float
    T_DS: float
    snr_db: float
    energies: tuple[float, ...] = ()
    rolloff: float = 0.5
    nbi: NbiConfig | None = None

    def __post_init__(self):
        if self.K < 1:
            raise ConfigError(f"user count K={self.K} must be >= 1")
        if min(self.Ts, self.Tc, self.Ttau) <= 0 or self.T_DS <= 0:
            raise ConfigError("durations Ts, Tc, Ttau, T_DS must be positive")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ConfigError(f"rolloff {self.rolloff} outside [0, 1]")
        if not self.energies:
            object.__setattr__(self, "energies", (1.0,) * self.K)
        if len(self.energies) != self.K:
            raise ConfigError(
                f"{len(self.energies)} energies given for K={self.K} users"
            )
        if min(self.energies) <= 0:
            raise ConfigError("all user energies must be positive")
        # validate the integer ratios early
        _exact_int_ratio(self.Ts, self.Tc, "Ts/Tc")
        _exact_int_ratio(self.Ts, self.Ttau, "Ts/Ttau")
        _exact_int_ratio(self.Tc, self.Ttau, "Tc/Ttau")

    @property
    def N_c(self) -> int:
        """Spreading gain (chips per symbol)."""
        return _exact_int_ratio(self.Ts, self.Tc, "Ts/Tc")


@dataclass(frozen=True)
class DimensionSet:
    """Derived model dimensions.

    ``M``   observation samples per symbol (chip rate)
    ``L``   resolvable multipath components
    ``M_H`` padded channel-output length at the Ttau grid, Ts/Ttau + L - 1
    ``G``   one-sided ISI reach in symbols, ceil(T_DS/Ts)
    ``ns``  samples per symbol at the Ttau grid (Ts/Ttau)
    ``nc``  samples per chip at the Ttau grid (Tc/Ttau)
    """

    M: int
    L: int
    M_H: int
    G: int
    ns: int
    nc: int


def derive_dimensions(cfg: SystemConfig) -> DimensionSet:
    """Compute all model dimensions from the system configuration."""
    ns = _exact_int_ratio(cfg.Ts, cfg.Ttau, "Ts/Ttau")
    nc = _exact_int_ratio(cfg.Tc, cfg.Ttau, "Tc/Ttau")
    M = _ceil_int((cfg.Ts + cfg.T_DS - cfg.Ttau) / cfg.Tc)
    L = _ceil_int(cfg.T_DS / cfg.Ttau)
    return DimensionSet(M=M, L=L, M_H=ns + L - 1, G=_ceil_int(cfg.T_DS / cfg.Ts), ns=ns, nc=nc)


def generate_spreading_codes(
    k: int, n_c: int, rng: int | np.random.Generator
) -> list[np.ndarray]:
    """Draw ``k`` random antipodal spreading codes of length ``n_c``.

    Deterministic for a fixed seed / generator state.
    """
    if k < 1 or n_c < 1:
        raise ConfigError("need k >= 1 users and n_c >= 1 chips")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    return [rng.integers(0, 2, size=n_c).astype(float) * 2.0 - 1.0 for _ in range(k)]


def root_raised_cosine(t: np.ndarray, period: float, beta: float) -> np.ndarray:
    """RRC pulse values at times ``t`` for symbol period ``period``.

    The two removable singularities (t = 0 and t = +-period/(4 beta)) are
    evaluated by their limits.
    """
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    x = t / period
    if beta == 0.0:
        out = np.sinc(x)
        return out
    at_zero = np.abs(t) < 1e-12 * period
    sing = np.abs(np.abs(x) - 1.0 / (4.0 * beta)) < 1e-12
    safe = ~(at_zero | sing)
    xs = x[safe]
    num = np.sin(np.pi * xs * (1.0 - beta)) + 4.0 * beta * xs * np.cos(
        np.pi * xs * (1.0 + beta)
    )
    den = np.pi * xs * (1.0 - (4.0 * beta * xs) ** 2)
    out[safe] = num / den
    out[at_zero] = 1.0 - beta + 4.0 * beta / np.pi
    out[sing] = (beta / np.sqrt(2.0)) * (
        (1.0 + 2.0 / np.pi) * np.sin(np.pi / (4.0 * beta))
        + (1.0 - 2.0 / np.pi) * np.cos(np.pi / (4.0 * beta))
    )
    return out


def chip_pulse(nc: int, rolloff: float) -> np.ndarray:
    """Unit-energy transmit pulse sampled at the Ttau grid over one chip.

    The pulse is an RRC of one chip width truncated to the chip, sampled on
    the symmetric grid (q - (nc-1)/2) * Ttau for q = 0..nc-1.
    """
    offsets = (np.arange(nc) - (nc - 1) / 2.0) / nc  # in units of Tc
    p = root_raised_cosine(offsets, 1.0, rolloff)
    return p / np.linalg.norm(p)


@dataclass
class SignalModelMatrices:
    """All per-realization model matrices (one user per leading index)."""

    cfg: SystemConfig
    dims: DimensionSet
    P_t: np.ndarray                 # (ns, N_c)
    P_r: np.ndarray                 # (M, M_H)
    codes: list[np.ndarray]         # K codes, each (N_c,)
    S_e: np.ndarray                 # (K, M_H, L)
    H: np.ndarray                   # (K, M_H, ns)
    H_minus: np.ndarray             # (K, G, M_H, ns) for symbols i-g
    H_plus: np.ndarray              # (K, G, M_H, ns) for symbols i+g
    p: np.ndarray                   # (K, M) effective signatures
    isi_minus: np.ndarray = field(default=None)  # (K, G, M) signatures of b(i-g)
    isi_plus: np.ndarray = field(default=None)   # (K, G, M) signatures of b(i+g)


def build_pulse_matrices(cfg: SystemConfig, dims: DimensionSet) -> tuple[np.ndarray, np.ndarray]:
    """Construct (P_t, P_r) for the configured pulse.

    The transmit pulse is scaled so one whole symbol waveform (N_c chips of
    +-1) has unit energy, making each user's E_k the true per-symbol
    transmission energy.  The receive matched filter keeps a unit-norm pulse
    per chip so the noise variance per observation sample is preserved.
    """
    pulse = chip_pulse(dims.nc, cfg.rolloff)
    P_t = np.zeros((dims.ns, cfg.N_c))
    for j in range(cfg.N_c):
        P_t[j * dims.nc : (j + 1) * dims.nc, j] = pulse / math.sqrt(cfg.N_c)
    # receive matched filter: conjugate time reverse, integrated per chip
    pr = np.conj(pulse[::-1])
    P_r = np.zeros((dims.M, dims.M_H))
    for m in range(dims.M):
        lo = m * dims.nc
        hi = min(lo + dims.nc, dims.M_H)
        if lo >= dims.M_H:
            break
        P_r[m, lo:hi] = pr[: hi - lo]
    return P_t, P_r


def _triangular_partition(h: np.ndarray, ns: int, g: int, L: int, M_H: int, side: str) -> np.ndarray:
    """One ISI channel matrix H^{(-g)} (side='past') or H^{(+g)} ('future').

    The nonzero content is a triangular matrix of row dimension
    rho = L - (g-1)*ns - 1; when rho exceeds ns only ns of its columns
    survive (trailing ones for the past block, leading ones for the future
    block).  Non-positive rho means the neighbour does not overlap the
    observation window and the matrix is identically zero.
    """
    out = np.zeros((M_H, ns), dtype=complex)
    rho = L - (g - 1) * ns - 1
    if rho <= 0:
        return out
    a = np.arange(rho)
    if side == "past":
        # upper triangular, h[L-1] on the diagonal, decreasing to the right
        tri = np.zeros((rho, rho), dtype=complex)
        cols = a[None, :] - a[:, None]
        mask = cols >= 0
        tri[mask] = h[L - 1 - cols[mask]]
        block = tri[:, rho - ns :] if rho > ns else tri
        out[:rho, ns - block.shape[1] :] = block
    elif side == "future":
        # lower triangular, h[0] on the diagonal, increasing downward
        tri = np.zeros((rho, rho), dtype=complex)
        rows = a[:, None] - a[None, :]
        mask = rows >= 0
        tri[mask] = h[rows[mask]]
        block = tri[:, :ns] if rho > ns else tri
        out[M_H - rho :, : block.shape[1]] = block
    else:
        raise ValueError(f"unknown side {side!r}")
    return out


def build_matrices(
    cfg: SystemConfig,
    dims: DimensionSet,
    codes: list[np.ndarray],
    channels: list[np.ndarray],
) -> SignalModelMatrices:
    """Assemble all structured matrices for one channel/code realization.

    ``channels`` holds one complex tap vector of length ``dims.L`` per user.
    """
    if len(codes) != cfg.K or len(channels) != cfg.K:
        raise ConfigError("need one code and one channel per user")
    for k, (s, h) in enumerate(zip(codes, channels)):
        if len(s) != cfg.N_c:
            raise ConfigError(f"code {k} has {len(s)} chips, expected {cfg.N_c}")
        if len(h) != dims.L:
            raise ConfigError(f"channel {k} has {len(h)} taps, expected {dims.L}")

    P_t, P_r = build_pulse_matrices(cfg, dims)
    K, ns, L, M_H, G = cfg.K, dims.ns, dims.L, dims.M_H, dims.G
    S_e = np.zeros((K, M_H, L), dtype=complex)
    H = np.zeros((K, M_H, ns), dtype=complex)
    H_minus = np.zeros((K, G, M_H, ns), dtype=complex)
    H_plus = np.zeros((K, G, M_H, ns), dtype=complex)
    p = np.zeros((K, dims.M), dtype=complex)
    isi_minus = np.zeros((K, G, dims.M), dtype=complex)
    isi_plus = np.zeros((K, G, dims.M), dtype=complex)

    for k in range(K):
        h = np.asarray(channels[k], dtype=complex)
        s_e = P_t @ codes[k]  # (ns,)
        for j in range(L):
            S_e[k, j : j + ns, j] = s_e
        for j in range(ns):
            H[k, j : j + L, j] = h
        p[k] = P_r @ (S_e[k] @ h)
        for g in range(1, G + 1):
            H_minus[k, g - 1] = _triangular_partition(h, ns, g, L, M_H, "past")
            H_plus[k, g - 1] = _triangular_partition(h, ns, g, L, M_H, "future")
            isi_minus[k, g - 1] = P_r @ (H_minus[k, g - 1] @ s_e)
            isi_plus[k, g - 1] = P_r @ (H_plus[k, g - 1] @ s_e)

    return SignalModelMatrices(
        cfg=cfg, dims=dims, P_t=P_t, P_r=P_r, codes=list(codes), S_e=S_e, H=H,
        H_minus=H_minus, H_plus=H_plus, p=p, isi_minus=isi_minus, isi_plus=isi_plus,
    )


def complex_awgn(m: int, variance: float, rng: np.random.Generator) -> np.ndarray:
    """Circularly symmetric complex Gaussian vector with total variance
    ``variance`` per component."""
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(m) + 1j * rng.standard_normal(m))


def assemble_received(
    mats: SignalModelMatrices,
    window: np.ndarray,
    noise_var: float,
    rng: np.random.Generator | None = None,
    nbi: np.ndarray | None = None,
) -> np.ndarray:
    """One observation vector from a per-user symbol window.

    ``window`` has shape (K, 2G+1); column G holds the in-window symbols
    b_k(i), column G-g holds b_k(i-g) and column G+g holds b_k(i+g).
    ``nbi``, when given, is a precomputed length-M interference vector (see
    `nbi_window`).
    """
    cfg, dims = mats.cfg, mats.dims
    window = np.asarray(window, dtype=float)
    if window.shape != (cfg.K, 2 * dims.G + 1):
        raise ConfigError(
            f"symbol window has shape {window.shape}, expected {(cfg.K, 2 * dims.G + 1)}"
        )
    r = np.zeros(dims.M, dtype=complex)
    for k in range(cfg.K):
        amp = math.sqrt(cfg.energies[k])
        r += amp * window[k, dims.G] * mats.p[k]
        for g in range(1, dims.G + 1):
            r += amp * window[k, dims.G - g] * mats.isi_minus[k, g - 1]
            r += amp * window[k, dims.G + g] * mats.isi_plus[k, g - 1]
    if noise_var > 0.0:
        if rng is None:
            raise ConfigError("noise_var > 0 requires an rng")
        r += complex_awgn(dims.M, noise_var, rng)
    if nbi is not None:
        r += nbi
    return r


def oracle_received_convolution(
    cfg: SystemConfig,
    dims: DimensionSet,
    codes: list[np.ndarray],
    channels: list[np.ndarray],
    symbol_stream: np.ndarray,
    i: int,
) -> np.ndarray:
    """Noise-free observation vector by direct time-domain convolution.

    ``symbol_stream`` has shape (K, n) and is indexed absolutely; entries
    i-G .. i+G must exist.  The transmit waveform is laid out chip by chip on
    the Ttau grid, convolved with each channel, and chip-integrated with the
    receive pulse -- no Toeplitz matrices involved.
    """
    ns, nc, G, L, M_H = dims.ns, dims.nc, dims.G, dims.L, dims.M_H
    if i - G < 0 or i + G >= symbol_stream.shape[1]:
        raise ConfigError("symbol stream does not cover indices i-G..i+G")
    pulse = chip_pulse(nc, cfg.rolloff)
    tx_pulse = pulse / math.sqrt(cfg.N_c)  # unit energy per symbol waveform
    span = (2 * G + 1) * ns
    z = np.zeros(span + L - 1, dtype=complex)
    for k in range(cfg.K):
        u = np.zeros(span)
        for neighbour in range(i - G, i + G + 1):
            base = (neighbour - (i - G)) * ns
            b = symbol_stream[k, neighbour]
            for j in range(cfg.N_c):
                u[base + j * nc : base + (j + 1) * nc] += b * codes[k][j] * tx_pulse
        z += math.sqrt(cfg.energies[k]) * np.convolve(u, np.asarray(channels[k], dtype=complex))
    win = z[G * ns : G * ns + M_H]
    pr = np.conj(pulse[::-1])
    r = np.zeros(dims.M, dtype=complex)
    for m in range(dims.M):
        lo = m * nc
        hi = min(lo + nc, M_H)
        if lo >= M_H:
            break
        r[m] = pr[: hi - lo] @ win[lo:hi]
    return r


def jammer_power(nbi: NbiConfig, e1: float) -> float:
    return e1 * 10.0 ** (-nbi.sir_db / 10.0)


def sample_nbi(nbi: NbiConfig, t_ns: float, e1: float, theta: float | None = None) -> complex:
    """Single-tone interferer sample at absolute time ``t_ns`` (ns).

    ``f_d`` is interpreted in MHz, so the phase advances by
    2*pi*f_d*1e-3 radians per ns.
    """
    theta = nbi.theta_j if theta is None else theta
    if theta is None:
        raise ConfigError("NBI phase theta_j not set")
    phase = 2.0 * math.pi * nbi.f_d * 1e-3 * t_ns + theta
    return math.sqrt(jammer_power(nbi, e1)) * complex(math.cos(phase), math.sin(phase))


def nbi_window(
    nbi: NbiConfig, cfg: SystemConfig, dims: DimensionSet, i: int, theta: float | None = None
) -> np.ndarray:
    """Length-M vector of tone samples on symbol i's chip-rate grid."""
    theta = nbi.theta_j if theta is None else theta
    if theta is None:
        raise ConfigError("NBI phase theta_j not set")
    t = (i * cfg.N_c + np.arange(dims.M)) * cfg.Tc
    phase = 2.0 * math.pi * nbi.f_d * 1e-3 * t + theta
    return math.sqrt(jammer_power(nbi, cfg.energies[0])) * np.exp(1j * phase)


def sign_decision(y: complex) -> int:
    """BPSK decision on the real part; Re(y) = 0 decides +1."""
    return 1 if y.real >= 0.0 else -1


def noise_variance(cfg: SystemConfig, p1: np.ndarray, snr_ref: str = "signature") -> float:
    """Per-sample complex noise variance realizing ``cfg.snr_db``.

    ``snr_ref='signature'`` references the SNR to the received signature
    energy E_1*||p_1||^2 (default); ``'energy'`` references it to the
    transmit energy E_1 alone.
    """
    if snr_ref == "signature":
        ref = cfg.energies[0] * float(np.vdot(p1, p1).real)
    elif snr_ref == "energy":
        ref = cfg.energies[0]
    else:
        raise ConfigError(f"unknown snr_ref {snr_ref!r}")
    return ref * 10.0 ** (-cfg.snr_db / 10.0)
