"""Online rank selection for the RLS receiver.

A single receiver is adapted at the maximum rank ``D_max``; after each
symbol, every candidate rank ``D`` in [D_min, D_max] is scored by an
exponentially windowed a-posteriori constant-modulus cost evaluated on the
leading-D truncations of the adapted transform and filter:

    C_D(i) = lambda_D * C_D(i-1) + (|w_D^H T_D^H r(i)|^2 - 1)^2

The decision statistic for each symbol is the truncation at the currently
selected rank; the selection is refreshed after the cost update.  Adaptation
cost is that of the D_max receiver -- only the scoring is extra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jio_rls import JioRls, JioRlsConfig
from .signal_model import sign_decision


@dataclass(frozen=True)
class RankAdaptConfig:
    D_min: int = 3
    D_max: int = 8
    lambda_D: float = 0.998

    def __post_init__(self):
        if not 1 <= self.D_min <= self.D_max:
            raise ValueError(f"need 1 <= D_min <= D_max, got {self.D_min}..{self.D_max}")


def truncated_outputs(t_mat: np.ndarray, w: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Outputs y_D = w_D^H T_D^H r for every truncation rank D = 1..D_max.

    Cheap: formed as cumulative sums of conj(w_d) * (t_d^H r), so rank D_max
    reproduces the full receiver output exactly.
    """
    rbar = t_mat.conj().T @ r
    return np.cumsum(w.conj() * rbar)


def update_costs(costs: np.ndarray, y_by_rank: np.ndarray, lambda_d: float, d_min: int) -> np.ndarray:
    """One recursive cost update for the tested ranks D_min..D_max."""
    tested = y_by_rank[d_min - 1 :]
    return lambda_d * costs + (np.abs(tested) ** 2 - 1.0) ** 2


def select_rank(costs: np.ndarray, d_min: int) -> int:
    """Argmin over the tested window; ties break toward the smaller rank."""
    return d_min + int(np.argmin(costs))


class RankAdaptiveJioRls:
    """RLS receiver at D_max plus the rank-selection layer."""

    def __init__(
        self,
        m_dim: int,
        rls_cfg: JioRlsConfig = JioRlsConfig(D=8),
        ra_cfg: RankAdaptConfig = RankAdaptConfig(),
        backend=None,
    ):
        if rls_cfg.D != ra_cfg.D_max:
            rls_cfg = JioRlsConfig(
                D=ra_cfg.D_max, alpha=rls_cfg.alpha, delta=rls_cfg.delta,
                v=rls_cfg.v, w_clamp=rls_cfg.w_clamp, dbar_form=rls_cfg.dbar_form,
            )
        self.inner = JioRls(m_dim, rls_cfg, backend=backend)
        self.ra_cfg = ra_cfg
        self.costs = np.zeros(ra_cfg.D_max - ra_cfg.D_min + 1)
        self.d_opt = ra_cfg.D_min
        self.d_opt_trace: list[int] = []

    def step(self, r: np.ndarray, p_hat: np.ndarray = None, bce=None) -> tuple[complex, int]:
        """Returns (y at the currently selected rank, its decision)."""
        ra = self.ra_cfg
        r = np.ascontiguousarray(r, dtype=complex)
        y_pre = truncated_outputs(self.inner.t_mat, self.inner.w, r)
        y_out = complex(y_pre[self.d_opt - 1])
        self.inner.step(r, p_hat=p_hat, bce=bce)
        y_post = truncated_outputs(self.inner.t_mat, self.inner.w, r)
        self.costs = update_costs(self.costs, y_post, ra.lambda_D, ra.D_min)
        self.d_opt = select_rank(self.costs, ra.D_min)
        self.d_opt_trace.append(self.d_opt)
        return y_out, sign_decision(y_out)
