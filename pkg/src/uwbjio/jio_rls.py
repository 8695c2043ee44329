"""Joint iterative RLS receiver with column-wise transform updates.

The transform ``T = [t_1 .. t_D]`` is adapted one column at a time against an
exponentially weighted constant-modulus least-squares cost, using a single
shared output-weighted covariance ``R_y = sum_j a^(i-j) |y(j)|^2 r(j) r(j)^H``
in place of the per-column weighting (whose exact inverse would cost a full
recursion per column).  Both ``R_y^-1`` and the reduced-dimension ``R_T^-1``
are tracked with rank-1 inversion-lemma updates.  Each column is normalized
after its update; the filter solve that follows restores the constraint
``w^H T^H p = v`` exactly.

One joint iteration per symbol suffices for this version.  `FullRankRls` is
the same filter solve with the transform pinned to the identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal_model import sign_decision

_TOL = 1e-12


class AdaptationError(RuntimeError):
    """Raised when a solve is impossible (degenerate quadratic forms)."""


# pre/adapt flag bits reported by the kernels
FLAG_RY_SKIPPED = 1
FLAG_RT_SKIPPED = 2
FLAG_COLUMN_CLAMPED = 4
FLAG_COLUMN_ZERO = 8


@dataclass(frozen=True)
class JioRlsConfig:
    """Rank, forgetting factor, init constant, constraint value and guards.

    ``dbar_form`` selects the cross-correlation recursion:
    'paper' accumulates d(i) = d(i-1) + alpha*rbar*conj(y), 'conventional'
    uses the exponentially weighted d(i) = alpha*d(i-1) + rbar*conj(y).
    """

    D: int = 3
    alpha: float = 0.9998
    delta: float = 10.0
    v: float = 0.5
    w_clamp: float = 1e-4
    dbar_form: str = "paper"

    def __post_init__(self):
        if self.dbar_form not in ("paper", "conventional"):
            raise ValueError(f"unknown dbar_form {self.dbar_form!r}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("forgetting factor must be in (0, 1]")


def update_ry_inverse(
    ry_inv: np.ndarray, r: np.ndarray, y: complex, alpha: float
) -> tuple[np.ndarray, bool]:
    """Inversion-lemma update of the output-weighted covariance inverse.

    Tracks ``R_y(i) = alpha R_y(i-1) + |y|^2 r r^H`` through the rank-1
    vector ``y r``.  Returns (new inverse, skipped-flag).
    """
    u = y * r
    kappa = ry_inv @ u
    den = alpha + np.vdot(u, kappa)
    if abs(den) < 1e-12:
        return ry_inv.copy(), True
    return (ry_inv - (1.0 / den) * np.outer(kappa, kappa.conj())) / alpha, False


def update_rt_inverse(
    rt_inv: np.ndarray, rbar: np.ndarray, y: complex, alpha: float
) -> tuple[np.ndarray, bool]:
    """Same recursion at reduced dimension, over the projected signal."""
    return update_ry_inverse(rt_inv, rbar, y, alpha)


def update_vr(
    vr_d: np.ndarray,
    r: np.ndarray,
    rbar: np.ndarray,
    y: complex,
    w: np.ndarray,
    d: int,
    alpha: float,
) -> np.ndarray:
    """Exponentially weighted gradient accumulator for column ``d``.

    v_{r,d}(i) = alpha v_{r,d}(i-1)
                 + conj(w_d) r (e * rbar_e^H w - w_d conj(rbar_d))

    with ``rbar_e`` the projected signal with element d zeroed and
    ``e = |y|^2 - 1``.
    """
    e = abs(y) ** 2 - 1.0
    re_w = complex(np.vdot(rbar, w)) - rbar[d].conjugate() * w[d]  # rbar_e^H w
    inner = e * re_w - w[d] * rbar[d].conjugate()
    return alpha * vr_d + w[d].conjugate() * inner * r


def update_column(
    t_mat: np.ndarray,
    w: np.ndarray,
    d: int,
    ry_inv: np.ndarray,
    vr_d: np.ndarray,
    p: np.ndarray,
    v: float,
) -> np.ndarray:
    """Solve column ``d`` of the transform (pre-normalization).

    The Lagrange multiplier is chosen so that, with the other columns held
    fixed, the constraint ``w^H T^H p = v`` holds exactly for the returned
    (un-normalized) column.
    """
    q = ry_inv @ p
    prp = complex(np.vdot(p, q))
    if abs(prp) < _TOL:
        raise AdaptationError("p^H R_y^-1 p ~ 0: column solve impossible")
    wd = w[d]
    wd2 = abs(wd) ** 2
    tp = t_mat.conj().T @ p
    w_pd = complex(np.vdot(w, tp)) - wd.conjugate() * tp[d]  # w^H p_d (elem d zeroed)
    v_rp = complex(np.vdot(vr_d, q))  # v_r^H R_y^-1 p
    lam_half = ((wd.conjugate() * v_rp + (v - w_pd) * wd2) / (-wd2 * prp)).conjugate()
    g = ry_inv @ vr_d
    return -(lam_half * wd.conjugate() * q + g) / wd2


def update_filter_rls(
    t_mat: np.ndarray,
    rt_inv: np.ndarray,
    d_bar: np.ndarray,
    p: np.ndarray,
    v: float,
) -> np.ndarray:
    """Constrained LS filter solve; constraint exact on return."""
    tp = t_mat.conj().T @ p
    z = rt_inv @ tp
    den = complex(np.vdot(tp, z))  # p^H T R_T^-1 T^H p
    if abs(den) < _TOL:
        raise AdaptationError("p^H T R_T^-1 T^H p ~ 0: filter solve impossible")
    lam_half = ((complex(np.vdot(d_bar, z)) - v) / den).conjugate()
    return rt_inv @ d_bar - lam_half * z


def update_filter_rls_fullrank(
    ry_inv: np.ndarray, d_bar: np.ndarray, p: np.ndarray, v: float
) -> np.ndarray:
    """Filter solve with the transform pinned to the identity (D = M)."""
    z = ry_inv @ p
    den = complex(np.vdot(p, z))
    if abs(den) < _TOL:
        raise AdaptationError("p^H R^-1 p ~ 0: filter solve impossible")
    lam_half = ((complex(np.vdot(d_bar, z)) - v) / den).conjugate()
    return ry_inv @ d_bar - lam_half * z


class JioRls:
    """Stateful receiver running the per-symbol RLS schedule.

    Per symbol: pre-adaptation (projected signal, output, cross-correlation
    and both inverse-covariance recursions, then the optional signature
    refresh), the column sweep d = 1..D with per-column normalization, and
    the filter solve.  The decision statistic is the pre-adaptation output.
    """

    def __init__(self, m_dim: int, cfg: JioRlsConfig = JioRlsConfig(), backend=None):
        if not 1 <= cfg.D <= m_dim:
            raise ValueError(f"rank D={cfg.D} outside 1..{m_dim}")
        self.cfg = cfg
        self.m_dim = m_dim
        d = cfg.D
        self.t_mat = np.zeros((m_dim, d), dtype=complex)
        self.t_mat[0, :] = 1.0
        self.w = np.ones(d, dtype=complex)
        self.ry_inv = np.eye(m_dim, dtype=complex) / cfg.delta
        self.rt_inv = np.eye(d, dtype=complex) / cfg.delta
        self.d_bar = np.zeros(d, dtype=complex)
        self.v_r = np.zeros((d, m_dim), dtype=complex)
        self._rbar = np.empty(d, dtype=complex)
        self.i = 0
        self.flags = 0
        if backend is None:
            from . import _backend

            backend = _backend.kernels
        self._k = backend

    def step(self, r: np.ndarray, p_hat: np.ndarray = None, bce=None) -> tuple[complex, int]:
        """Process one observation; returns (pre-adaptation output, decision).

        Pass either an explicit signature estimate ``p_hat`` or an estimator
        object ``bce`` with a ``refresh(ry_inv)`` method (called after the
        inverse-covariance updates, per the schedule).
        """
        cfg = self.cfg
        r = np.ascontiguousarray(r, dtype=complex)
        self.i += 1
        y, flags = self._k.rls_pre(
            self.t_mat, self.w, self.ry_inv, self.rt_inv, self.d_bar, self._rbar,
            r, cfg.alpha, 1 if cfg.dbar_form == "conventional" else 0,
        )
        if self.i % 100 == 0:
            self.ry_inv += self.ry_inv.conj().T
            self.ry_inv *= 0.5
            self.rt_inv += self.rt_inv.conj().T
            self.rt_inv *= 0.5
        if bce is not None:
            p_hat = bce.refresh(self.ry_inv)
        if p_hat is None:
            raise ValueError("need p_hat or bce")
        p_hat = np.ascontiguousarray(p_hat, dtype=complex)
        flags |= self._k.rls_adapt(
            self.t_mat, self.w, self.ry_inv, self.rt_inv, self.d_bar, self.v_r,
            self._rbar, y, r, p_hat, cfg.alpha, cfg.v, cfg.w_clamp,
        )
        self.flags |= flags
        return y, sign_decision(y)


class FullRankRls:
    """Constrained CM-RLS filter at full length (transform = identity)."""

    def __init__(
        self,
        m_dim: int,
        alpha: float = 0.9998,
        delta: float = 10.0,
        v: float = 1.0,
        dbar_form: str = "paper",
        backend=None,
    ):
        self.alpha = alpha
        self.v = v
        self.conventional = {"paper": 0, "conventional": 1}[dbar_form]
        self.w = np.ones(m_dim, dtype=complex)
        self.ry_inv = np.eye(m_dim, dtype=complex) / delta
        self.d_bar = np.zeros(m_dim, dtype=complex)
        self.i = 0
        self.flags = 0
        if backend is None:
            from . import _backend

            backend = _backend.kernels
        self._k = backend

    def step(self, r: np.ndarray, p_hat: np.ndarray = None, bce=None) -> tuple[complex, int]:
        r = np.ascontiguousarray(r, dtype=complex)
        self.i += 1
        y, flags = self._k.fr_rls_pre(self.w, self.ry_inv, self.d_bar, r, self.alpha, self.conventional)
        self.flags |= flags
        if self.i % 100 == 0:
            self.ry_inv += self.ry_inv.conj().T
            self.ry_inv *= 0.5
        if bce is not None:
            p_hat = bce.refresh(self.ry_inv)
        if p_hat is None:
            raise ValueError("need p_hat or bce")
        p_hat = np.ascontiguousarray(p_hat, dtype=complex)
        self._k.fr_rls_adapt(self.w, self.ry_inv, self.d_bar, p_hat, self.v)
        return y, sign_decision(y)
