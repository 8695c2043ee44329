"""Blind estimation of the desired user's channel and effective signature.

All three estimators share one deflation step: with a matrix
``V = (P_r S_e)^H B (P_r S_e)`` built from some estimate ``B`` of an inverse
covariance power, the channel iterate is

    h(i) = h(i-1) - V h(i-1) / tr(V),   then normalized,

which converges to the eigenvector of ``V`` with the smallest eigenvalue.
They differ in how the inverse-power matrix is tracked:

* `PowerMethodEstimator`  -- maintains R^-1 of the raw received covariance via
  the matrix inversion lemma and forms V from R^-m (m small) each refresh.
* `LeakageSgEstimator`    -- tracks W_l ~ R^-l (P_r S_e) with a leakage
  stochastic-gradient recursion; V = (P_r S_e)^H W_m.  Cheapest.
* `RyPowerEstimator`      -- reuses the output-weighted inverse covariance
  maintained by an RLS receiver (|y|^2 tends to 1 once adapted, making it a
  usable stand-in for R^-1), so it keeps no recursion of its own.

Estimates carry an inherent phase ambiguity; `uwbjio.analysis.phase_offset`
resolves it against a reference for metric purposes only.
"""

from __future__ import annotations

import numpy as np


class EstimatorError(RuntimeError):
    """Raised when an estimator update is numerically impossible."""


def update_inverse_covariance(
    r_inv: np.ndarray, r: np.ndarray, alpha: float
) -> tuple[np.ndarray, bool]:
    """Rank-1 inverse-covariance update (matrix inversion lemma).

    Tracks the inverse of ``R(i) = alpha R(i-1) + r r^H`` (with
    ``R(0) = delta I`` supplied by the caller as ``r_inv = I/delta``).
    Returns the new inverse and a flag that is True when the update was
    skipped because the denominator ``alpha + r^H R^-1 r`` vanished.
    """
    kappa = r_inv @ r
    den = alpha + np.vdot(r, kappa)
    if abs(den) < 1e-12:
        return r_inv.copy(), True
    phi = 1.0 / den
    return (r_inv - phi * np.outer(kappa, kappa.conj())) / alpha, False


def deflation_step(v_mat: np.ndarray, h_prev: np.ndarray) -> np.ndarray:
    """Shared channel iterate: move away from V's dominant directions."""
    tr = np.trace(v_mat)
    if abs(tr) < 1e-300:
        raise EstimatorError("tr(V) ~ 0, deflation step undefined")
    h = h_prev - (v_mat @ h_prev) / tr
    norm = np.linalg.norm(h)
    if norm == 0.0:
        raise EstimatorError("deflation step annihilated the channel estimate")
    return h / norm


def power_method_channel_step(
    h_prev: np.ndarray, r_inv: np.ndarray, pr_se: np.ndarray, m: int
) -> np.ndarray:
    """Deflation step with V = (P_r S_e)^H R^-m (P_r S_e)."""
    x = pr_se
    for _ in range(m):
        x = r_inv @ x
    return deflation_step(pr_se.conj().T @ x, h_prev)


def channel_step_nsg(v_hat: np.ndarray, h_prev: np.ndarray) -> np.ndarray:
    """Deflation step on a leakage-SG V estimate (same iterate)."""
    return deflation_step(v_hat, h_prev)


def channel_step_rls(
    ry_inv: np.ndarray, h_prev: np.ndarray, pr_se: np.ndarray, m: int
) -> np.ndarray:
    """Deflation step with the output-weighted inverse covariance."""
    return power_method_channel_step(h_prev, ry_inv, pr_se, m)


def leakage_recursion(w_stack: np.ndarray, r: np.ndarray, leak: float, mu: float) -> None:
    """In-place leakage-SG recursion over the power ladder.

    ``w_stack`` has shape (m+1, M, L) with the fixed slice
    ``w_stack[0] = P_r S_e``; slices 1..m are updated in place, each feeding
    the next:

        W_l(i) = leak * W_l(i-1) + mu * (W_{l-1}(i) - r r^H W_l(i-1))
    """
    m = w_stack.shape[0] - 1
    for l in range(1, m + 1):
        proj = r.conj() @ w_stack[l]  # r^H W_l, shape (L,)
        w_stack[l] = leak * w_stack[l] + mu * (w_stack[l - 1] - np.outer(r, proj))


def leakage_sg_step(
    w_stack: np.ndarray, r: np.ndarray, leak: float, mu: float, pr_se_h: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """One leakage-SG recursion plus the V = (P_r S_e)^H W_m readout."""
    leakage_recursion(w_stack, r, leak, mu)
    return w_stack, pr_se_h @ w_stack[w_stack.shape[0] - 1]


def effective_signature_estimate(h_hat: np.ndarray, pr_se: np.ndarray) -> np.ndarray:
    """Map a channel estimate to the effective signature, p = P_r S_e h."""
    return pr_se @ h_hat


class _RefreshSchedule:
    """Dense refreshes while converging, sparse afterwards."""

    def __init__(self, head: int, every: int):
        self.head = head
        self.every = max(1, every)

    def due(self, i: int) -> bool:
        return i <= self.head or i % self.every == 0


def identifiable_init(pr_se: np.ndarray) -> np.ndarray:
    """First-tap start, projected onto the row space of P_r S_e.

    Components of the channel in the null space of P_r S_e are invisible to
    the observation (and the deflation iterate never damps them, since their
    eigenvalue is exactly zero), so the estimate is kept inside the
    identifiable subspace from the start; the iterate stays there because
    every correction lies in the row space.  Starting from the first tap
    (energy arrives at the head of the delay window) anchors the early
    signature estimate far better than a flat start on decaying channels.
    """
    n_taps = pr_se.shape[1]
    u, s, vh = np.linalg.svd(pr_se, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * s[0]))
    basis = vh[:rank].conj().T  # (L, rank), orthonormal
    e1 = np.zeros(n_taps, dtype=complex)
    e1[0] = 1.0
    h0 = basis @ (basis.conj().T @ e1)
    norm = np.linalg.norm(h0)
    if norm < 1e-12:  # degenerate geometry: fall back to a basis vector
        h0 = basis[:, 0]
        norm = 1.0
    return h0 / norm


class _EstimatorBase:
    """Common state: current h/p estimates plus a refresh counter."""

    def __init__(self, pr_se: np.ndarray, refresh_head: int, refresh_every: int):
        self.pr_se = np.ascontiguousarray(pr_se, dtype=complex)
        self.h_hat = identifiable_init(self.pr_se)
        self.p_hat = effective_signature_estimate(self.h_hat, self.pr_se)
        self._schedule = _RefreshSchedule(refresh_head, refresh_every)
        self.i = 0
        self.version = 0  # bumped whenever h_hat changes

    def _set_channel(self, h: np.ndarray) -> None:
        self.h_hat = h
        self.p_hat = effective_signature_estimate(h, self.pr_se)
        self.version += 1


class PowerMethodEstimator(_EstimatorBase):
    """Conventional blind estimator: own R^-1 recursion + inverse powers."""

    def __init__(
        self,
        pr_se: np.ndarray,
        delta: float = 10.0,
        alpha: float = 0.9998,
        m: int = 3,
        refresh_head: int = 500,
        refresh_every: int = 10,
        backend=None,
    ):
        super().__init__(pr_se, refresh_head, refresh_every)
        if backend is None:
            from . import _backend

            backend = _backend.kernels
        self._k = backend
        m_dim = self.pr_se.shape[0]
        self.r_inv = np.eye(m_dim, dtype=complex) / delta
        self.alpha = alpha
        self.m = m
        self.skipped = 0

    def update(self, r: np.ndarray) -> None:
        self.i += 1
        if self._k.rank1_inv_update(self.r_inv, np.ascontiguousarray(r, dtype=complex), self.alpha):
            self.skipped += 1
        if self.i % 100 == 0:
            self.r_inv = (self.r_inv + self.r_inv.conj().T) / 2.0
        if self._schedule.due(self.i):
            self._set_channel(power_method_channel_step(self.h_hat, self.r_inv, self.pr_se, self.m))


class LeakageSgEstimator(_EstimatorBase):
    """Leakage-SG tracker of R^-m (P_r S_e); no matrix inverse maintained.

    The step size is ``mu_scale`` divided by a running average of ||r||^2
    (an exponentially smoothed trace estimate of the received covariance).
    """

    def __init__(
        self,
        pr_se: np.ndarray,
        leak: float = 0.9998,
        mu_scale: float = 0.5,
        m: int = 3,
        refresh_head: int = 500,
        refresh_every: int = 10,
        backend=None,
    ):
        super().__init__(pr_se, refresh_head, refresh_every)
        if backend is None:
            from . import _backend

            backend = _backend.kernels
        self._k = backend
        self.w_stack = np.tile(self.pr_se, (m + 1, 1, 1))
        self.leak = leak
        self.mu_scale = mu_scale
        self.m = m
        self._pr_se_h = self.pr_se.conj().T.copy()
        self._tr_ema = 0.0

    def update(self, r: np.ndarray) -> None:
        self.i += 1
        r = np.ascontiguousarray(r, dtype=complex)
        nr2 = float(np.vdot(r, r).real)
        self._tr_ema = nr2 if self.i == 1 else self.leak * self._tr_ema + (1.0 - self.leak) * nr2
        mu = self.mu_scale / max(self._tr_ema, 1e-300)
        self._k.leakage_update(self.w_stack, r, self.leak, mu)
        if self._schedule.due(self.i):
            v_hat = self._pr_se_h @ self.w_stack[self.m]
            self._set_channel(channel_step_nsg(v_hat, self.h_hat))


class RyPowerEstimator(_EstimatorBase):
    """Signature estimator driven by an RLS receiver's R_y^-1 matrix."""

    def __init__(
        self,
        pr_se: np.ndarray,
        m: int = 3,
        refresh_head: int = 500,
        refresh_every: int = 10,
    ):
        super().__init__(pr_se, refresh_head, refresh_every)
        self.m = m

    def refresh(self, ry_inv: np.ndarray) -> np.ndarray:
        """Called by the owning receiver once per symbol, after its
        inverse-covariance update; returns the current signature estimate."""
        self.i += 1
        if self._schedule.due(self.i):
            self._set_channel(channel_step_rls(ry_inv, self.h_hat, self.pr_se, self.m))
        return self.p_hat


class GenieEstimator:
    """Fixed true signature (no estimation) -- for isolation experiments."""

    def __init__(self, p: np.ndarray, h: np.ndarray):
        self.p_hat = np.asarray(p, dtype=complex)
        self.h_hat = np.asarray(h, dtype=complex)
        self.version = 0
        self.i = 0

    def update(self, r: np.ndarray) -> None:
        self.i += 1

    def refresh(self, ry_inv: np.ndarray) -> np.ndarray:
        self.i += 1
        return self.p_hat
