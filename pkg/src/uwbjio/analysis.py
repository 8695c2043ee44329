"""Receiver quality metrics and the constant-modulus convexity certificate.

The certificate: in the noise-free model the CM cost, viewed through the
interferers' response vector, has Hessian ``2 eps eps^H + (E1 v^2 - 1) I``.
``E1 v^2 > 1`` therefore forces positive definiteness -- the smallest
eigenvalue is floored at ``E1 v^2 - 1``.
"""

from __future__ import annotations

import numpy as np

from .signal_model import SignalModelMatrices


def hessian_min_eigenvalue(eps_tilde: np.ndarray, e1: float, v: float) -> float:
    """Smallest eigenvalue of 2*eps*eps^H + (E1 v^2 - 1) I, computed numerically."""
    eps_tilde = np.atleast_1d(np.asarray(eps_tilde, dtype=complex))
    h = 2.0 * np.outer(eps_tilde, eps_tilde.conj())
    h += (e1 * v * v - 1.0) * np.eye(len(eps_tilde))
    return float(np.linalg.eigvalsh(h)[0])


def interference_signatures(mats: SignalModelMatrices) -> tuple[np.ndarray, np.ndarray]:
    """All interference signature vectors and their energies.

    Returns (sigs, energies) where each row of ``sigs`` is the signature of
    one independent unit-variance interfering symbol: the multiple-access
    signatures of users 2..K plus the 2G intersymbol signatures of every
    user including the desired one.
    """
    cfg, dims = mats.cfg, mats.dims
    sigs, energies = [], []
    for k in range(cfg.K):
        if k > 0:
            sigs.append(mats.p[k])
            energies.append(cfg.energies[k])
        for g in range(dims.G):
            sigs.append(mats.isi_minus[k, g])
            energies.append(cfg.energies[k])
            sigs.append(mats.isi_plus[k, g])
            energies.append(cfg.energies[k])
    return np.asarray(sigs), np.asarray(energies)


def sinr(
    t_mat: np.ndarray,
    w: np.ndarray,
    p1: np.ndarray,
    e1: float,
    interferer_sigs: np.ndarray,
    interferer_energies: np.ndarray,
    noise_var: float,
) -> float:
    """Output SINR in dB for a reduced-rank receiver state.

    SINR = E1 |w^H T^H p1|^2 / (w^H T^H R_in T w) with
    R_in = sum_j E_j s_j s_j^H + noise_var * I assembled from the closed-form
    interference signature set (`interference_signatures`).
    """
    f = t_mat @ w  # effective full-length receiver
    num = e1 * abs(np.vdot(f, p1)) ** 2
    den = noise_var * float(np.vdot(f, f).real)
    if len(interferer_sigs):
        proj = interferer_sigs.conj() @ f  # s_j^H f
        den += float(np.sum(np.asarray(interferer_energies) * np.abs(proj) ** 2))
    if den == 0.0:
        return float("inf")
    return 10.0 * np.log10(num / den)


def phase_offset(h_hat: np.ndarray, h: np.ndarray, tol: float = 1e-6) -> float:
    """Phase of the estimate's first significant tap relative to the truth.

    Used to strip the inherent phase ambiguity of blind estimates before
    computing estimation error or counting decisions; the receivers
    themselves run on the raw estimates.
    """
    idx = np.flatnonzero(np.abs(h) > tol)
    if len(idx) == 0:
        return 0.0
    l0 = idx[0]
    if abs(h_hat[l0]) == 0.0:
        return 0.0
    return float(np.angle(h_hat[l0]) - np.angle(h[l0]))


def channel_mse(h_hat: np.ndarray, h: np.ndarray) -> float:
    """Squared error of a channel estimate, invariant to its global phase."""
    theta = phase_offset(h_hat, h)
    diff = h_hat * np.exp(-1j * theta) - h
    return float(np.vdot(diff, diff).real)
