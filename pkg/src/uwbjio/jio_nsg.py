"""Joint iterative NSG receiver: rank-reducing transform + short filter.

The receiver output is ``y = w^H T^H r`` with an M-by-D transform ``T`` and a
D-dimensional filter ``w``, adapted blindly to drive ``|y|`` toward 1 subject
to the linear constraint ``w^H T^H p = v`` on the (estimated) effective
signature ``p``.  Both updates use a normalized stochastic gradient whose
step size is the analytic minimizer of the instantaneous constant-modulus
cost; a closed-form Lagrange projection restores the constraint exactly after
every sub-update.

`FullRankNsg` is the same filter update with the transform pinned to the
identity (D = M), kept as a convergence baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal_model import sign_decision

_TOL = 1e-12
_Y_FLOOR = 1e-6  # |y| clamp: the (|y|-1)/|y| factor diverges at y = 0


class AdaptationError(RuntimeError):
    """Raised when an update is impossible (zero filter/signature norms)."""


@dataclass(frozen=True)
class JioNsgConfig:
    """Rank, iteration count, constraint value and step scaling factors."""

    D: int = 4
    c_max: int = 3
    v: float = 1.0
    mu_t0: float = 0.075
    mu_w0: float = 0.005


def compute_output(t_mat: np.ndarray, w: np.ndarray, r: np.ndarray) -> complex:
    """Receiver output y = w^H T^H r."""
    return complex(np.vdot(w, t_mat.conj().T @ r))


def update_transform_nsg(
    t_mat: np.ndarray,
    w: np.ndarray,
    r: np.ndarray,
    p: np.ndarray,
    v: float,
    mu_t0: float,
) -> np.ndarray:
    """One transform update at the analytic step size.

    Degenerate geometry (r parallel to p, or a vanishing filter-energy
    scale) skips the gradient term; the constraint projection always runs,
    so ``w^H T_new^H p = v`` holds exactly on return.
    """
    pn2 = float(np.vdot(p, p).real)
    if pn2 < _TOL:
        raise AdaptationError("zero signature estimate")
    w2 = float(np.vdot(w, w).real)
    if w2 < _TOL:
        raise AdaptationError("zero reduced-rank filter; constraint unreachable")
    y = compute_output(t_mat, w, r)
    pr = complex(np.vdot(p, r))  # p^H r
    a_t1 = w2 * (float(np.vdot(r, r).real) - abs(pr) ** 2 / pn2)
    resid = complex(np.vdot(t_mat.conj().T @ p, w)) - v  # p^H T w - v
    a_t3 = resid / (w2 * pn2)
    t_new = t_mat.copy()
    if a_t1 > _TOL:
        ay = max(abs(y), _Y_FLOOR)
        coef = mu_t0 * y.conjugate() * (ay - 1.0) / (ay * a_t1)
        gvec = r - (pr / pn2) * p
        t_new -= coef * np.outer(gvec, w.conj())
    t_new -= a_t3 * np.outer(p, w.conj())
    return t_new


def update_filter_nsg(
    t_mat: np.ndarray,
    w: np.ndarray,
    r: np.ndarray,
    p: np.ndarray,
    v: float,
    mu_w0: float,
) -> np.ndarray:
    """One filter update at the analytic step size; constraint exact on return."""
    tp = t_mat.conj().T @ p
    tp2 = float(np.vdot(tp, tp).real)
    if tp2 < _TOL:
        raise AdaptationError("T^H p ~ 0: constraint unsatisfiable in the subspace")
    rbar = t_mat.conj().T @ r
    y = complex(np.vdot(w, rbar))
    s = complex(np.vdot(rbar, tp))  # (T^H r)^H (T^H p)
    a_w1 = float(np.vdot(rbar, rbar).real) - abs(s) ** 2 / tp2
    a_w3 = (complex(np.vdot(w, tp)).conjugate() - v) / tp2  # (p^H T w - v)/||T^H p||^2
    w_new = w.copy()
    if a_w1 > _TOL:
        ay = max(abs(y), _Y_FLOOR)
        coef = mu_w0 * y.conjugate() * (ay - 1.0) / (ay * a_w1)
        gvec = rbar - (s.conjugate() / tp2) * tp
        w_new -= coef * gvec
    w_new -= a_w3 * tp
    return w_new


def update_filter_nsg_fullrank(
    w: np.ndarray, r: np.ndarray, p: np.ndarray, v: float, mu_w0: float
) -> np.ndarray:
    """Filter update with the transform pinned to the identity (D = M)."""
    pn2 = float(np.vdot(p, p).real)
    if pn2 < _TOL:
        raise AdaptationError("zero signature estimate")
    y = complex(np.vdot(w, r))
    s = complex(np.vdot(r, p))  # r^H p
    a_w1 = float(np.vdot(r, r).real) - abs(s) ** 2 / pn2
    a_w3 = (complex(np.vdot(w, p)).conjugate() - v) / pn2
    w_new = w.copy()
    if a_w1 > _TOL:
        ay = max(abs(y), _Y_FLOOR)
        coef = mu_w0 * y.conjugate() * (ay - 1.0) / (ay * a_w1)
        w_new -= coef * (r - (s.conjugate() / pn2) * p)
    w_new -= a_w3 * p
    return w_new


def _transform_step_raw(
    t_mat: np.ndarray, w: np.ndarray, r: np.ndarray, p: np.ndarray, v: float, mu: float
) -> np.ndarray:
    """Constrained SG transform update at an arbitrary raw step ``mu``.

    This is the un-normalized update the analytic step optimizes over; kept
    for the step-size optimality checks.
    """
    y = compute_output(t_mat, w, r)
    e = abs(y) ** 2 - 1.0
    w2 = float(np.vdot(w, w).real)
    pn2 = float(np.vdot(p, p).real)
    phtw = complex(np.vdot(t_mat.conj().T @ p, w))  # p^H T w
    pr = complex(np.vdot(p, r))
    lam_half = (phtw - mu * e * y.conjugate() * w2 * pr - v) / (mu * w2 * pn2)
    return t_mat - mu * np.outer(e * y.conjugate() * r + lam_half * p, w.conj())


def _filter_step_raw(
    t_mat: np.ndarray, w: np.ndarray, r: np.ndarray, p: np.ndarray, v: float, mu: float
) -> np.ndarray:
    """Constrained SG filter update at an arbitrary raw step ``mu``."""
    rbar = t_mat.conj().T @ r
    tp = t_mat.conj().T @ p
    tp2 = float(np.vdot(tp, tp).real)
    y = complex(np.vdot(w, rbar))
    e = abs(y) ** 2 - 1.0
    phtw = complex(np.vdot(w, tp)).conjugate()  # p^H T w
    ptt_r = complex(np.vdot(tp, rbar))  # p^H T T^H r
    lam_half = (phtw - mu * e * y.conjugate() * ptt_r - v) / (mu * tp2)
    return w - mu * e * y.conjugate() * rbar - mu * lam_half * tp


def instantaneous_cm_cost(t_mat: np.ndarray, w: np.ndarray, r: np.ndarray) -> float:
    """(|y|^2 - 1)^2 / 2 for the given state and observation."""
    y = compute_output(t_mat, w, r)
    return 0.5 * (abs(y) ** 2 - 1.0) ** 2


class JioNsg:
    """Stateful receiver running the per-symbol joint NSG schedule.

    Per symbol: the decision statistic is taken from the pre-adaptation
    output, then ``c_max`` joint iterations run, each updating the transform
    first and the filter second.
    """

    def __init__(self, m_dim: int, cfg: JioNsgConfig = JioNsgConfig(), backend=None):
        if not 1 <= cfg.D <= m_dim:
            raise ValueError(f"rank D={cfg.D} outside 1..{m_dim}")
        self.cfg = cfg
        self.m_dim = m_dim
        self.w = np.ones(cfg.D, dtype=complex)
        self.t_mat = np.zeros((m_dim, cfg.D), dtype=complex)
        self.t_mat[: cfg.D, : cfg.D] = np.eye(cfg.D)
        if backend is None:
            from . import _backend

            backend = _backend.kernels
        self._k = backend

    def step(self, r: np.ndarray, p_hat: np.ndarray) -> tuple[complex, int]:
        r = np.ascontiguousarray(r, dtype=complex)
        p_hat = np.ascontiguousarray(p_hat, dtype=complex)
        y = self._k.nsg_symbol(
            self.t_mat, self.w, r, p_hat,
            self.cfg.v, self.cfg.mu_t0, self.cfg.mu_w0, self.cfg.c_max,
        )
        return y, sign_decision(y)


class FullRankNsg:
    """Filter-only NSG baseline at full length (transform = identity)."""

    def __init__(self, m_dim: int, v: float = 1.0, mu_w0: float = 0.025, backend=None):
        self.v = v
        self.mu_w0 = mu_w0
        self.w = np.ones(m_dim, dtype=complex)
        if backend is None:
            from . import _backend

            backend = _backend.kernels
        self._k = backend

    def step(self, r: np.ndarray, p_hat: np.ndarray) -> tuple[complex, int]:
        r = np.ascontiguousarray(r, dtype=complex)
        p_hat = np.ascontiguousarray(p_hat, dtype=complex)
        y = self._k.fr_nsg_symbol(self.w, r, p_hat, self.v, self.mu_w0)
        return y, sign_decision(y)
