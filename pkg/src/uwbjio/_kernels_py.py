"""Pure-numpy twins of the compiled per-symbol kernels.

Selected automatically when the extension is missing (see `_backend`), and
used directly by the tests as the reference the compiled path must match.
All functions mutate their state arrays in place and share signatures with
`uwbjio._kernels`.
"""

from __future__ import annotations

import numpy as np

from . import blind_channel, jio_nsg, jio_rls

IS_COMPILED = False


def rank1_inv_update(r_inv: np.ndarray, u: np.ndarray, alpha: float) -> int:
    new, skipped = blind_channel.update_inverse_covariance(r_inv, u, alpha)
    r_inv[:] = new
    return 1 if skipped else 0


def leakage_update(w_stack: np.ndarray, r: np.ndarray, leak: float, mu: float) -> None:
    blind_channel.leakage_recursion(w_stack, r, leak, mu)


def nsg_symbol(
    t_mat: np.ndarray,
    w: np.ndarray,
    r: np.ndarray,
    p: np.ndarray,
    v: float,
    mu_t0: float,
    mu_w0: float,
    c_max: int,
) -> complex:
    y0 = jio_nsg.compute_output(t_mat, w, r)
    for _ in range(c_max):
        t_mat[:] = jio_nsg.update_transform_nsg(t_mat, w, r, p, v, mu_t0)
        w[:] = jio_nsg.update_filter_nsg(t_mat, w, r, p, v, mu_w0)
    return y0


def fr_nsg_symbol(w: np.ndarray, r: np.ndarray, p: np.ndarray, v: float, mu_w0: float) -> complex:
    y0 = complex(np.vdot(w, r))
    w[:] = jio_nsg.update_filter_nsg_fullrank(w, r, p, v, mu_w0)
    return y0


def rls_pre(
    t_mat: np.ndarray,
    w: np.ndarray,
    ry_inv: np.ndarray,
    rt_inv: np.ndarray,
    d_bar: np.ndarray,
    rbar_out: np.ndarray,
    r: np.ndarray,
    alpha: float,
    conventional: int,
) -> tuple[complex, int]:
    rbar_out[:] = t_mat.conj().T @ r
    y = complex(np.vdot(w, rbar_out))
    if conventional:
        d_bar *= alpha
        d_bar += rbar_out * y.conjugate()
    else:
        d_bar += alpha * rbar_out * y.conjugate()
    flags = 0
    new, skipped = jio_rls.update_ry_inverse(ry_inv, r, y, alpha)
    ry_inv[:] = new
    if skipped:
        flags |= jio_rls.FLAG_RY_SKIPPED
    new, skipped = jio_rls.update_rt_inverse(rt_inv, rbar_out, y, alpha)
    rt_inv[:] = new
    if skipped:
        flags |= jio_rls.FLAG_RT_SKIPPED
    return y, flags


def rls_adapt(
    t_mat: np.ndarray,
    w: np.ndarray,
    ry_inv: np.ndarray,
    rt_inv: np.ndarray,
    d_bar: np.ndarray,
    v_r: np.ndarray,
    rbar: np.ndarray,
    y: complex,
    r: np.ndarray,
    p: np.ndarray,
    alpha: float,
    v: float,
    w_clamp: float,
) -> int:
    flags = 0
    d_rank = t_mat.shape[1]
    for d in range(d_rank):
        v_r[d] = jio_rls.update_vr(v_r[d], r, rbar, y, w, d, alpha)
    for d in range(d_rank):
        if abs(w[d]) < w_clamp:
            flags |= jio_rls.FLAG_COLUMN_CLAMPED
            continue
        t_pre = jio_rls.update_column(t_mat, w, d, ry_inv, v_r[d], p, v)
        norm = np.linalg.norm(t_pre)
        if norm == 0.0:
            flags |= jio_rls.FLAG_COLUMN_ZERO
            continue
        t_mat[:, d] = t_pre / norm
    w[:] = jio_rls.update_filter_rls(t_mat, rt_inv, d_bar, p, v)
    return flags


def fr_rls_pre(
    w: np.ndarray,
    ry_inv: np.ndarray,
    d_bar: np.ndarray,
    r: np.ndarray,
    alpha: float,
    conventional: int,
) -> tuple[complex, int]:
    y = complex(np.vdot(w, r))
    if conventional:
        d_bar *= alpha
        d_bar += r * y.conjugate()
    else:
        d_bar += alpha * r * y.conjugate()
    new, skipped = jio_rls.update_ry_inverse(ry_inv, r, y, alpha)
    ry_inv[:] = new
    return y, jio_rls.FLAG_RY_SKIPPED if skipped else 0


def fr_rls_adapt(w: np.ndarray, ry_inv: np.ndarray, d_bar: np.ndarray, p: np.ndarray, v: float) -> int:
    w[:] = jio_rls.update_filter_rls_fullrank(ry_inv, d_bar, p, v)
    return 0
